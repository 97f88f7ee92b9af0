"""specrd: spectral Galerkin simulator and verification harness for
stochastic reaction-diffusion dynamics on the unit cube."""

from .basis import (
    BasisError,
    SpectralBasis,
    SpectralField,
    apply_fractional,
    from_grid,
    heat_semigroup,
    lp_norm,
    random_field,
    to_grid,
)
from .ergodic import (
    InvariantEnsemble,
    IbpReport,
    compare_measures,
    ibp_check,
    invariance_check,
    moment_l2N,
    sample_invariant,
)
from .gradients import (
    CylindricalFunctional,
    GradientEstimate,
    IdentityReport,
    MeanEstimate,
    bel_gradient,
    fd_gradient,
    identity_residual,
    semigroup_apply,
)
from .kernels import BACKEND as kernel_backend
from .reaction import Polynomial, YosidaApprox
from .rng import make_rng
from .sde import (
    BlowUpError,
    ConfigError,
    Engine,
    PathSample,
    SimConfig,
    VariationalPath,
    covariance_q,
    sample_stochastic_convolution,
    simulate_path,
    simulate_variational,
)
from .suite import SuiteConfig, load_suite_config, run_suite, validate_config

__version__ = "0.1.0"
