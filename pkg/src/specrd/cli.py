"""Command line interface: simulate, sample-invariant, verify, report."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .basis import SpectralField
from .ergodic import InvariantEnsemble, sample_invariant
from .sde import ConfigError, simulate_path
from .suite import (
    default_workers,
    load_report,
    load_suite_config,
    render_csv,
    run_suite,
)

TRACE_VERSION = 1


def _add_config(p):
    p.add_argument("--config", required=True, help="YAML config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specrd",
        description="Spectral simulator and verification harness for "
        "stochastic reaction-diffusion dynamics on [0,1]^n.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one trajectory and dump a CSV trace")
    _add_config(p)
    p.add_argument("--stream", type=int, default=0, help="RNG stream id")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--with-noise", action="store_true",
                   help="append the Wiener increment columns")

    p = sub.add_parser("sample-invariant", help="build and persist an ergodic ensemble")
    _add_config(p)
    p.add_argument("--out", required=True, help="output .npz path")
    p.add_argument("--snapshots", type=int, default=1000)
    p.add_argument("--burn-in", type=float, default=None, help="time units to discard")
    p.add_argument("--thinning", type=int, default=None, help="steps between snapshots")
    p.add_argument("--stream", type=int, default=0)

    p = sub.add_parser("verify", help="run the verification suite")
    _add_config(p)
    p.add_argument("--checks", default=None,
                   help="comma-separated check names (default: config selection)")
    p.add_argument("--out", default=None, help="report directory (default: config)")
    p.add_argument("--workers", type=int, default=None,
                   help="concurrent checks (default: config or SPECRD_WORKERS)")
    p.add_argument("--format", dest="report_format", default=None,
                   choices=("json", "csv", "both"))

    p = sub.add_parser("report", help="re-render a persisted report")
    p.add_argument("--results", required=True, help="path to report.json")
    p.add_argument("--format", dest="report_format", default="csv", choices=("csv", "summary"))
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    return parser


def _load(args):
    suite = load_suite_config(args.config)
    if args.seed is not None:
        suite.sim = suite.sim.replace(seed=args.seed)
    return suite


def cmd_simulate(args) -> int:
    suite = _load(args)
    cfg = suite.sim
    path = simulate_path(cfg, SpectralField.zero(cfg.basis), stream=args.stream)
    k_labels = [
        "c_" + "_".join(str(i + 1) for i in np.unravel_index(j, cfg.basis.shape))
        for j in range(cfg.basis.size)
    ]
    lines = [
        f"# specrd trace v{TRACE_VERSION} n={cfg.n} kmax={cfg.kmax} "
        f"gamma={cfg.gamma} alpha={cfg.alpha} dt={cfg.dt} seed={cfg.seed} "
        f"stream={args.stream}"
    ]
    header = ["time"] + k_labels
    if args.with_noise:
        header += ["dw_" + lab[2:] for lab in k_labels]
    lines.append(",".join(header))
    for m, t in enumerate(path.times):
        row = [f"{t:.17g}"] + [f"{c:.17g}" for c in path.states[m].flat]
        if args.with_noise:
            dw = path.noise[m - 1] if m > 0 else np.zeros(cfg.basis.size)
            row += [f"{c:.17g}" for c in dw]
        lines.append(",".join(row))
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {len(path.times)} steps to {args.out}")
    return 0


def cmd_sample_invariant(args) -> int:
    suite = _load(args)
    ens = sample_invariant(
        suite.sim,
        burn_in=args.burn_in,
        n_snapshots=args.snapshots,
        thinning=args.thinning,
        stream=args.stream,
    )
    ens.save(args.out)
    flag = "" if ens.stationarity.ok else " (stationarity diagnostic flagged)"
    print(f"wrote {ens.size} snapshots to {args.out}{flag}")
    return 0


def cmd_verify(args) -> int:
    suite = _load(args)
    if args.checks is not None:
        suite.checks = [s.strip() for s in args.checks.split(",") if s.strip()]
        suite.__post_init__()
    if args.out is not None:
        suite.out_dir = Path(args.out)
    if args.workers is not None:
        suite.workers = max(1, args.workers)
    elif default_workers() > 1:
        suite.workers = default_workers()
    if args.report_format is not None:
        suite.report_format = args.report_format
    results, exit_code = run_suite(suite)
    for r in results:
        print(f"{r.status.upper():4s} {r.name:22s} {r.metric}={r.value:.6g} "
              f"bound={r.bound:.6g} [{r.seconds:.1f}s]")
    print(f"{len(results)} checks: "
          f"{sum(r.status == 'pass' for r in results)} pass, "
          f"{sum(r.status == 'warn' for r in results)} warn, "
          f"{sum(r.status == 'fail' for r in results)} fail")
    return exit_code


def cmd_report(args) -> int:
    data = load_report(args.results)
    if args.report_format == "csv":
        text = render_csv(data["results"])
    else:
        rows = [
            f"{r['status'].upper():4s} {r['name']:22s} {r['metric']}={r['value']}"
            for r in data["results"]
        ]
        text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "sample-invariant": cmd_sample_invariant,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
