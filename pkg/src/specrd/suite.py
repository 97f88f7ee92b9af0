"""Suite configuration, orchestration, and report output.

Configs are YAML with a version field (schema in the README).  Reports are
written as report.json (full detail) and report.csv (one row per check);
identical config + seed give byte-identical reports apart from the timing
fields.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import os
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from . import checks as checks_mod
from . import kernels
from .checks import REGISTRY, CheckResult
from .reaction import Polynomial
from .sde import ConfigError, SimConfig

REPORT_SCHEMA_VERSION = 1
CONFIG_VERSION = 1

_SIM_KEYS = {
    "n", "kmax", "gamma", "alpha", "dt", "horizon", "seed",
    "reaction", "grid_size", "newton_tol", "newton_max_iter",
}


def sim_config_from_dict(raw: dict) -> SimConfig:
    if not isinstance(raw, dict):
        raise ConfigError("sim section must be a mapping")
    unknown = set(raw) - _SIM_KEYS
    if unknown:
        raise ConfigError(f"unknown sim fields: {sorted(unknown)}")
    kwargs = dict(raw)
    reaction = kwargs.pop("reaction", None)
    if reaction:
        coeffs = [float(c) for c in reaction]
        try:
            kwargs["poly"] = Polynomial(coeffs)
        except ValueError as exc:
            raise ConfigError(f"sim.reaction: {exc}") from exc
    else:
        kwargs["poly"] = None
    try:
        return SimConfig(**kwargs)
    except ConfigError:
        raise
    except TypeError as exc:
        raise ConfigError(f"sim section: {exc}") from exc


@dataclass
class SuiteConfig:
    sim: SimConfig
    checks: list[str] = field(default_factory=lambda: list(REGISTRY))
    budgets: dict = field(default_factory=dict)
    workers: int = 1
    out_dir: Path = Path("out")
    report_format: str = "both"  # json | csv | both

    def __post_init__(self):
        for name in self.checks:
            if name not in REGISTRY:
                raise ConfigError(
                    f"unknown check {name!r}; available: {', '.join(REGISTRY)}"
                )
        for name, budget in self.budgets.items():
            if name not in REGISTRY:
                raise ConfigError(f"budget for unknown check {name!r}")
            if not isinstance(budget, dict):
                raise ConfigError(f"budget for {name!r} must be a mapping")
            for key, value in budget.items():
                if isinstance(value, (int, float)) and not isinstance(value, bool):
                    if value <= 0:
                        raise ConfigError(f"budget {name}.{key} must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.report_format not in ("json", "csv", "both"):
            raise ConfigError("format must be json, csv or both")
        self.out_dir = Path(self.out_dir)

    def describe(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "sim": self.sim.describe(),
            "checks": list(self.checks),
            "budgets": self.budgets,
        }


def default_workers() -> int:
    env = os.environ.get("SPECRD_WORKERS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"SPECRD_WORKERS must be an integer, got {env!r}")
    return 1


def load_suite_config(path) -> SuiteConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    version = raw.get("version")
    if version != CONFIG_VERSION:
        raise ConfigError(f"{path}: version must be {CONFIG_VERSION}, got {version!r}")
    if "sim" not in raw:
        raise ConfigError(f"{path}: missing required section 'sim'")
    sim = sim_config_from_dict(raw["sim"])

    selected = raw.get("checks", "all")
    if selected in ("all", None):
        names = list(REGISTRY)
    elif isinstance(selected, list):
        names = [str(s) for s in selected]
    else:
        raise ConfigError(f"{path}: checks must be 'all' or a list of names")

    output = raw.get("output", {}) or {}
    known = {"version", "sim", "checks", "budgets", "workers", "output"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")
    return SuiteConfig(
        sim=sim,
        checks=names,
        budgets=raw.get("budgets", {}) or {},
        workers=int(raw.get("workers", default_workers())),
        out_dir=Path(output.get("dir", "out")),
        report_format=str(output.get("format", "both")),
    )


def validate_config(path) -> SimConfig:
    """Parse and validate the sim section of a config file."""
    return load_suite_config(path).sim


def _run_one(name: str, cfg: SimConfig, budget: dict) -> CheckResult:
    start = time.perf_counter()
    try:
        result = REGISTRY[name](cfg, budget, checks_mod.stream_base(name))
    except Exception as exc:  # a crashing check is a failure, not an abort
        result = CheckResult(
            name=name,
            status="fail",
            regime="crash",
            statement="check raised an exception",
            metric="error",
            value=float("nan"),
            bound=float("nan"),
            stderr=None,
            detail=f"{type(exc).__name__}: {exc}",
        )
        result.measured["traceback"] = traceback.format_exc(limit=3)
    result.seconds = round(time.perf_counter() - start, 3)
    return result


def run_suite(suite: SuiteConfig, write: bool = True) -> tuple[list[CheckResult], int]:
    """Run the selected checks; exit code 0 iff none failed (warn passes)."""
    names = list(suite.checks)
    if suite.workers > 1 and len(names) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=suite.workers) as pool:
            futures = {
                name: pool.submit(_run_one, name, suite.sim, suite.budgets.get(name, {}))
                for name in names
            }
            results = [futures[name].result() for name in names]
    else:
        results = [_run_one(name, suite.sim, suite.budgets.get(name, {})) for name in names]
    # report in registry order regardless of scheduling
    order = {name: i for i, name in enumerate(REGISTRY)}
    results.sort(key=lambda r: order[r.name])
    exit_code = 0 if all(r.status != "fail" for r in results) else 1
    if write:
        write_reports(results, suite)
    return results, exit_code


def report_dict(results: list[CheckResult], suite: SuiteConfig) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kernel_backend": kernels.BACKEND,
        "config": suite.describe(),
        "results": [r.as_dict() for r in results],
        "summary": {
            "pass": sum(r.status == "pass" for r in results),
            "warn": sum(r.status == "warn" for r in results),
            "fail": sum(r.status == "fail" for r in results),
            "total_seconds": round(sum(r.seconds for r in results), 3),
        },
    }


def render_json(results: list[CheckResult], suite: SuiteConfig) -> str:
    return json.dumps(report_dict(results, suite), indent=2, sort_keys=True) + "\n"


_CSV_COLUMNS = ("name", "status", "regime", "metric", "value", "bound", "stderr", "seconds")


def render_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row["name"],
                row["status"],
                row["regime"],
                row["metric"],
                _fmt(row["value"]),
                _fmt(row["bound"]),
                _fmt(row["stderr"]),
                row["seconds"],
            ]
        )
    return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    return f"{v:.17g}"


def write_reports(results: list[CheckResult], suite: SuiteConfig) -> dict[str, Path]:
    suite.out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    if suite.report_format in ("json", "both"):
        p = suite.out_dir / "report.json"
        p.write_text(render_json(results, suite))
        paths["json"] = p
    if suite.report_format in ("csv", "both"):
        p = suite.out_dir / "report.csv"
        p.write_text(render_csv([r.as_dict() for r in results]))
        paths["csv"] = p
    return paths


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())
