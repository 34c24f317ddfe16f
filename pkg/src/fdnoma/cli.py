"""Batch front-end: parameter sweeps to CSV, plus config validation.

A sweep evaluates the requested outage methods over an inclusive grid of
one swept variable and writes one self-describing CSV: a commented
metadata preamble (tool version, config hash, seed), then one row per
grid point with one column per (user, method), Monte Carlo standard
error columns and a per-user feasibility flag.  Re-running the same
invocation reproduces the file byte for byte.

Exit codes: 0 success, 1 configuration error, 2 numeric failure,
3 invariant violation (for example a lower bound exceeding the exact
value beyond tolerance; surfaced, never clamped).
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .analytic import NumericsError, op_asymptotic, op_exact, op_lower_bound
from .baselines import BaselineConfig, hd_outage_all, oma_outage_all
from .config import (
    ConfigError,
    SystemConfig,
    config_hash,
    derive_constants,
    load_config,
    load_config_extras,
)
from .montecarlo import estimate_all_users

__all__ = ["SweepSpec", "SweepResult", "run_sweep", "validate_config", "main"]

SWEEP_VARIABLES = ("snr_db", "mu", "kappa", "d_sr")
METHODS = ("mc", "exact", "lb", "asymp", "hd", "oma")
ORDER_TOL = 1e-6  # lower bound may not exceed exact by more than this


class InvariantViolation(RuntimeError):
    """A cross-method consistency check failed on computed results."""


@dataclass(frozen=True)
class SweepSpec:
    """One swept variable, inclusive endpoints, index-based stepping."""

    variable: str
    start: float
    stop: float
    step: float
    methods: tuple[str, ...]
    users: tuple[int, ...]
    trials: int = 100_000
    seed: int = 0
    partitions: int = 1

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        if self.step <= 0:
            raise ConfigError("sweep step must be positive")
        if self.start > self.stop:
            raise ConfigError("sweep start must not exceed stop")
        if not self.methods:
            raise ConfigError("methods must not be empty")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ConfigError(f"unknown methods: {sorted(bad)}")
        if not self.users:
            raise ConfigError("users must not be empty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.partitions < 1:
            raise ConfigError("partitions must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")

    def grid(self) -> np.ndarray:
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)


@dataclass(frozen=True)
class SweepResult:
    meta: dict
    columns: tuple[str, ...]
    rows: list


def _apply_variable(cfg: SystemConfig, variable: str, value: float) -> SystemConfig:
    if variable == "snr_db":
        return replace(cfg, snr_db=float(value))
    if variable == "mu":
        return replace(cfg, li_quality_mu=float(value))
    if variable == "kappa":
        return replace(cfg, kappa_sr=float(value), kappa_ru=float(value))
    # relay placement: the user links make up the remaining distance
    return replace(cfg, d_sr=float(value), d_ru=1.0 - float(value))


def _point_row(cfg_pt, spec, asymp_reports, extras):
    dc = derive_constants(cfg_pt)
    cells = {}
    if "mc" in spec.methods:
        for est in estimate_all_users(
            cfg_pt, spec.trials, spec.seed, spec.partitions, users=spec.users
        ):
            cells[("mc", est.user)] = est.op_value
            cells[("mc_stderr", est.user)] = est.std_error
    if "hd" in spec.methods:
        bcfg = BaselineConfig(
            base=cfg_pt, mode="hd_noma", hd_thresholds=extras.get("hd_thresholds")
        )
        for est in hd_outage_all(bcfg, spec.trials, spec.seed, spec.partitions, spec.users):
            cells[("hd", est.user)] = est.op_value
    if "oma" in spec.methods:
        bcfg = BaselineConfig(
            base=cfg_pt, mode="fd_oma", oma_threshold=extras.get("oma_threshold")
        )
        for est in oma_outage_all(bcfg, spec.trials, spec.seed, spec.partitions, spec.users):
            cells[("oma", est.user)] = est.op_value
    for u in spec.users:
        if "exact" in spec.methods:
            cells[("exact", u)] = op_exact(cfg_pt, u)
        if "lb" in spec.methods:
            cells[("lb", u)] = op_lower_bound(cfg_pt, u)
        if "asymp" in spec.methods:
            report = asymp_reports[u] if asymp_reports else op_asymptotic(cfg_pt, u)
            cells[("asymp", u)] = report.probability(cfg_pt.snr_lin)
        cells[("feasible", u)] = int(dc.feasible[u - 1])
    return cells


def run_sweep(config_path, spec: SweepSpec, out_path) -> SweepResult:
    """Evaluate the sweep and write the CSV artifact.

    Grid points are independent and dispatched to a small thread pool;
    rows are gathered back in grid order, so output is deterministic.
    """
    cfg, extras = load_config_extras(config_path)
    for u in spec.users:
        if not 1 <= u <= cfg.num_users:
            raise ConfigError(f"user {u} outside 1..{cfg.num_users}")
    values = spec.grid()

    # The asymptotic report is SNR-free, so along an SNR sweep one report
    # per user serves every grid point.
    asymp_reports = None
    if "asymp" in spec.methods and spec.variable == "snr_db":
        asymp_reports = {u: op_asymptotic(cfg, u) for u in spec.users}

    points = [_apply_variable(cfg, spec.variable, v) for v in values]
    with ThreadPoolExecutor(max_workers=4) as pool:
        all_cells = list(
            pool.map(lambda c: _point_row(c, spec, asymp_reports, extras), points)
        )

    columns = ["x"]
    for u in spec.users:
        for m in spec.methods:
            columns.append(f"user{u}_{m}")
            if m == "mc":
                columns.append(f"user{u}_mc_stderr")
        columns.append(f"user{u}_feasible")

    rows = []
    for v, cells in zip(values, all_cells):
        row = [float(v)]
        for u in spec.users:
            for m in spec.methods:
                row.append(cells[(m, u)])
                if m == "mc":
                    row.append(cells[("mc_stderr", u)])
            row.append(cells[("feasible", u)])
        rows.append(row)

    meta = {
        "tool": f"fdnoma {__version__}",
        "config_hash": config_hash(cfg),
        "sweep": f"{spec.variable}={spec.start:g}:{spec.stop:g}:{spec.step:g}",
        "methods": ",".join(spec.methods),
        "users": ",".join(str(u) for u in spec.users),
        "trials": str(spec.trials),
        "seed": str(spec.seed),
        "partitions": str(spec.partitions),
    }
    result = SweepResult(meta=meta, columns=tuple(columns), rows=rows)
    _write_csv(out_path, result)

    if "exact" in spec.methods and "lb" in spec.methods:
        for v, cells in zip(values, all_cells):
            for u in spec.users:
                lb, ex = cells[("lb", u)], cells[("exact", u)]
                if lb > ex + ORDER_TOL:
                    raise InvariantViolation(
                        f"lower bound {lb:.6e} exceeds exact {ex:.6e} "
                        f"for user {u} at {spec.variable}={v:g}"
                    )
    return result


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def _write_csv(path, result: SweepResult):
    lines = [f"# {k}: {v}" for k, v in result.meta.items()]
    lines.append(",".join(result.columns))
    for row in result.rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def validate_config(config_path, stream=None) -> int:
    """Check every invariant and echo the derived constants for audit.

    Infeasible users are reported as warnings (their outage is exactly 1,
    which is a legitimate operating point, not a configuration defect).
    """
    stream = sys.stdout if stream is None else stream
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stream)
        return 1
    dc = derive_constants(cfg)
    p = lambda *a: print(*a, file=stream)
    p(f"config ok (hash {config_hash(cfg)})")
    p(f"  snr_db={cfg.snr_db:g}  snr_lin={dc.snr_lin:.6g}")
    p(
        f"  link powers: sr={dc.power_sr:.6g} (est {dc.power_sr_est:.6g})  "
        f"li={dc.power_li:.6g}"
    )
    p(
        "  distortion: rhi_mix=%.6g rhi_amp=%.6g sr_derate=%.6g noise_sr=%.6g"
        % (dc.rhi_mix, dc.rhi_amp, dc.sr_derate, dc.noise_sr)
    )
    p("  user  power  thresh  iui      ipsic    noise_ru  demand       feasible")
    for i in range(cfg.num_users):
        demand = dc.demand[i]
        p(
            f"  {i + 1:4d}  {cfg.power_coeffs[i]:.4f} {cfg.thresholds[i]:6.3f} "
            f"{dc.iui[i]:.6f} {dc.ipsic[i]:.6f} {dc.noise_ru[i]:8.5f} "
            f"{demand:<12.6g} {bool(dc.feasible[i])}"
        )
    infeasible = [i + 1 for i in range(cfg.num_users) if not dc.feasible[i]]
    if infeasible:
        p(f"warning: users {infeasible} are infeasible at this SNR (outage = 1)")
    return 0


def _parse_sweep(text: str):
    try:
        variable, rng = text.split("=", 1)
        start, stop, step = (float(v) for v in rng.split(":"))
    except ValueError as exc:
        raise ConfigError(
            "--sweep expects <var>=<start>:<stop>:<step>, "
            f"got {text!r}"
        ) from exc
    return variable.strip(), start, stop, step


def _parse_csv_list(text, cast, what):
    try:
        return tuple(cast(v.strip()) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse {what} list {text!r}") from exc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fdnoma",
        description="Outage-probability sweeps for a dual-hop NOMA "
        "full-duplex relay network.",
    )
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--sweep", help="<var>=<start>:<stop>:<step>")
    parser.add_argument("--methods", default="exact,mc", help="comma list of methods")
    parser.add_argument("--users", default="", help="comma list of user indices (default all)")
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--partitions", type=int, default=1)
    parser.add_argument("--out", help="output CSV path")
    parser.add_argument("--validate", action="store_true", help="validate config and exit")
    args = parser.parse_args(argv)

    try:
        if args.validate:
            return validate_config(args.config)
        if not args.sweep or not args.out:
            parser.error("--sweep and --out are required unless --validate is given")
        cfg = load_config(args.config)
        users = _parse_csv_list(args.users, int, "user") or tuple(
            range(1, cfg.num_users + 1)
        )
        variable, start, stop, step = _parse_sweep(args.sweep)
        spec = SweepSpec(
            variable=variable,
            start=start,
            stop=stop,
            step=step,
            methods=_parse_csv_list(args.methods, str, "method"),
            users=users,
            trials=args.trials,
            seed=args.seed,
            partitions=args.partitions,
        )
        run_sweep(args.config, spec, args.out)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericsError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
