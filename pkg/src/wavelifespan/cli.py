"""Command-line front end: bound | solve | sweep | check.

Configuration is a plain ``key = value`` file (``#`` comments) given as an
optional positional argument; command-line flags override file values.  Runs
are rng-free and write deterministic artifacts into the output directory:
``result.json`` (byte-identical across repeated runs of the same config),
``config-echo.txt``, and per-command extras (``trace.csv``, ``sweep.csv``,
``scaling.svg``, snapshots).  Wall-clock and version info go to a separate
``metadata.json`` so it never perturbs result bytes.

Exit codes: 0 success (including t_final_reached), 1 internal error,
2 validation error; ``sweep`` additionally 3 on a fail verdict and 4 when
inconclusive.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import _kernels, __version__
from .lifespan import CriticalExponentMarker, bound_from_run, theorem_exponent
from .model import ModelParams, classify, make_bump_data
from .solver import (
    RadialGrid,
    SpaceTimeBump,
    run_until_blowup,
    weak_residual,
    write_snapshot,
)
from .special import estimate_C1
from .sweep import (
    SweepPlan,
    VERDICT_FAIL,
    VERDICT_PASS,
    emit_report,
    run_critical_sweep,
    run_sweep,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_SWEEP_FAIL = 3
EXIT_SWEEP_INCONCLUSIVE = 4

CLI_MAX_DIMENSION = 5  # desk-scale cap; the library itself imposes none


class ValidationError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved configuration; every field has a deterministic default."""

    n: int = 1
    p: float = 2.0
    mu: float = 1.0
    beta: float = 2.0
    R: float = 1.0
    eps: float = 0.1
    amplitude_f: float = 0.0
    amplitude_g: float = 1.0
    support_radius: float = 1.0
    out_dir: str = ""
    dr: float = 0.0            # 0 = grid policy decides
    c_cfl: float = 0.0         # 0 = dimension default
    dt_safety: float = 0.1
    t_final: float = 0.0       # 0 = from the bound witness
    t_final_cap: float = 0.0   # 0 = none
    threshold_factor: float = 1e6
    n_samples: int = 2000
    source_on: bool = True
    backend: str = ""
    snapshot_times: tuple = ()
    snapshot_format: str = "csv"
    check_weak_residual: bool = False
    eps_values: tuple = ()
    slope_tolerance: float = 0.3
    repeat_refined: bool = True
    critical: bool = False
    dr_cap: float = 0.005
    jobs: int = 1

    def params(self) -> ModelParams:
        if not 1 <= self.n <= CLI_MAX_DIMENSION:
            raise ValidationError(
                f"n must be in 1..{CLI_MAX_DIMENSION} at the command line, got {self.n}"
            )
        try:
            return ModelParams(self.n, self.p, self.mu, self.beta, self.R, self.eps)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc

    def data(self):
        try:
            data = make_bump_data(self.support_radius, self.amplitude_f, self.amplitude_g)
            data.validate_against(self.params())
            return data
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc


_BOOL_KEYS = {"source_on", "check_weak_residual", "repeat_refined", "critical"}
_INT_KEYS = {"n", "n_samples", "jobs"}
_STR_KEYS = {"out_dir", "backend", "snapshot_format"}
_TUPLE_KEYS = {"snapshot_times", "eps_values"}
_ALL_KEYS = {f.name for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    raw = raw.strip()
    if key in _BOOL_KEYS:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValidationError(f"config key {key}: expected a boolean, got {raw!r}")
    if key in _INT_KEYS:
        return int(raw)
    if key in _STR_KEYS:
        return raw
    if key in _TUPLE_KEYS:
        return tuple(float(tok) for tok in raw.split(",") if tok.strip())
    return float(raw)


def parse_config_file(path: Path) -> dict:
    values = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValidationError(f"{path}:{lineno}: expected key = value")
        key, raw = (tok.strip() for tok in stripped.split("=", 1))
        if key not in _ALL_KEYS:
            raise ValidationError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ValidationError(f"config file not found: {path}")
        for key, value in parse_config_file(path).items():
            setattr(cfg, key, value)
    for key in _ALL_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, _coerce(key, value) if isinstance(value, str) else value)
    return cfg


def _echo_config(cfg: RunConfig, out: Path) -> None:
    lines = []
    for f in sorted(_ALL_KEYS):
        v = getattr(cfg, f)
        if isinstance(v, tuple):
            v = ",".join(repr(float(x)) for x in v)
        lines.append(f"{f} = {v}")
    (out / "config-echo.txt").write_text("\n".join(lines) + "\n")


def _write_metadata(out: Path, runtime: float) -> None:
    meta = {
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "runtime_seconds": runtime,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "backend_default": _kernels.DEFAULT_BACKEND,
        "wavelifespan": __version__,
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _write_result(out: Path, payload: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _print_regime(params: ModelParams) -> None:
    regime = classify(params)
    print(f"regime: {regime.tag} (effective dimension {regime.effective_dimension:g})")


def _resolve_t_final(cfg: RunConfig, params, data) -> tuple[float, float]:
    """(t_final, witness); witness-based with a 25% headroom unless given."""
    C1 = estimate_C1(params.n, params.R, t_max=40.0)
    witness = bound_from_run(params, data, C1).T_blowup
    if cfg.t_final > 0.0:
        return cfg.t_final, witness
    if not math.isfinite(witness):
        if cfg.t_final_cap > 0.0:
            return cfg.t_final_cap, witness
        raise ValidationError(
            "the bound witness is infinite (no finite prediction); set t_final or t_final_cap"
        )
    t_final = 1.25 * witness
    if cfg.t_final_cap > 0.0:
        t_final = min(t_final, cfg.t_final_cap)
    return t_final, witness


def cmd_bound(cfg: RunConfig) -> int:
    params = cfg.params()
    data = cfg.data()
    _print_regime(params)
    regime = classify(params)
    try:
        exponent = theorem_exponent(params)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    C1 = estimate_C1(params.n, params.R, t_max=40.0)
    bound = bound_from_run(params, data, C1)
    payload = {
        "params": {"n": params.n, "p": params.p, "mu": params.mu,
                   "beta": params.beta, "R": params.R, "eps": params.eps},
        "regime": regime.tag,
        "effective_dimension": regime.effective_dimension,
        "bound": bound.to_dict(),
        "C1": C1.to_dict(),
    }
    if isinstance(exponent, CriticalExponentMarker):
        payload["lifespan_form"] = "exp(C * eps^-(p-1))"
        payload["critical_eps_power"] = exponent.eps_power
    else:
        payload["lifespan_form"] = "C * eps^exponent"
        payload["theorem_exponent"] = exponent
    print(json.dumps(payload, indent=2, sort_keys=True))
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        _write_result(out, payload)
        _echo_config(cfg, out)
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    from .functionals import run_monitors

    params = cfg.params()
    data = cfg.data()
    _print_regime(params)
    t_final, witness = _resolve_t_final(cfg, params, data)
    dr = cfg.dr if cfg.dr > 0.0 else max(5e-5, min(0.005, t_final / 4000.0))
    grid = RadialGrid.for_horizon(params.n, dr, t_final, params.R)
    want_states = cfg.check_weak_residual or bool(cfg.snapshot_times)
    t0 = time.perf_counter()
    report, trace = run_until_blowup(
        params, data, grid, t_final,
        source_on=cfg.source_on,
        threshold_factor=cfg.threshold_factor,
        n_samples=cfg.n_samples,
        dt_safety=cfg.dt_safety,
        c_cfl=cfg.c_cfl if cfg.c_cfl > 0.0 else None,
        store_states=want_states,
        backend=cfg.backend or None,
    )
    C1 = estimate_C1(params.n, params.R, t_max=40.0)
    monitors = run_monitors(trace, C1)
    payload = {
        "params": {"n": params.n, "p": params.p, "mu": params.mu,
                   "beta": params.beta, "R": params.R, "eps": params.eps},
        "regime": classify(params).tag,
        "report": report.to_dict(),
        "T_bound_witness": witness,
        "C1": C1.to_dict(),
        "monitors": {name: {"pass_fraction": res.pass_fraction, "failures": res.failures}
                     for name, res in monitors.items()},
        "functional_heads": {
            "F1_0": trace.F1[0], "H_0": trace.H0,
            "C_f0": trace.C_f0, "C_0g": trace.C_0g,
        },
    }
    if cfg.check_weak_residual:
        phi = SpaceTimeBump(r_scale=min(t_final + params.R, grid.r_max - 4.0 * grid.dr))
        payload["weak_residual"] = weak_residual(trace, phi, params, grid)
    if report.blew_up:
        print(f"blow-up at t = {report.blow_up_time:.6g} ({report.reason})")
    else:
        print(f"no blow-up before t_final = {t_final:.6g}")
    for name, res in monitors.items():
        print(f"monitor {name}: pass fraction {res.pass_fraction:.4f}")
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        _write_result(out, payload)
        trace.to_csv(out / "trace.csv")
        _echo_config(cfg, out)
        if cfg.snapshot_times and trace.states:
            times = np.array([s.t for s in trace.states])
            for ts in cfg.snapshot_times:
                s = trace.states[int(np.argmin(np.abs(times - ts)))]
                ext = "csv" if cfg.snapshot_format == "csv" else "npy"
                write_snapshot(out / f"snapshot_t{s.t:.6f}.{ext}",
                               grid.r, s.u, s.v, cfg.snapshot_format)
        _write_metadata(out, time.perf_counter() - t0)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    if len(cfg.eps_values) == 0:
        raise ValidationError("sweep needs eps_values")
    params = cfg.params().with_eps(cfg.eps_values[0])
    _print_regime(params)
    try:
        plan = SweepPlan(
            base=params,
            eps_values=cfg.eps_values,
            amplitude_f=cfg.amplitude_f,
            amplitude_g=cfg.amplitude_g,
            support_radius=cfg.support_radius,
            slope_tolerance=cfg.slope_tolerance,
            repeat_refined=cfg.repeat_refined,
            dr_cap=cfg.dr_cap,
            dr_override=cfg.dr if cfg.dr > 0.0 else None,
            t_final_cap=cfg.t_final_cap if cfg.t_final_cap > 0.0 else None,
            n_samples=cfg.n_samples,
            dt_safety=cfg.dt_safety,
            threshold_factor=cfg.threshold_factor,
            jobs=cfg.jobs,
            backend=cfg.backend or None,
        )
        t0 = time.perf_counter()
        result = run_critical_sweep(plan) if cfg.critical else run_sweep(plan)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    if result.fitted_slope is not None:
        line = f"fitted slope {result.fitted_slope:.4f}"
        if result.theorem_slope is not None:
            line += f" vs theorem {result.theorem_slope:.4f}"
        if result.r_squared is not None:
            line += f" (R^2 = {result.r_squared:.4f})"
        print(line)
    print(f"verdict: {result.verdict}")
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        emit_report(result, out)
        _echo_config(cfg, out)
        _write_metadata(out, time.perf_counter() - t0)
    if result.verdict == VERDICT_PASS:
        return EXIT_OK
    if result.verdict == VERDICT_FAIL:
        return EXIT_SWEEP_FAIL
    return EXIT_SWEEP_INCONCLUSIVE


def shipped_config_dir() -> Path:
    return Path(__file__).resolve().parent / "configs"


def cmd_check(cfg: RunConfig) -> int:
    """Quick invariant suite over shipped demo configs; prints pass/fail lines."""
    from . import check as checkmod

    failures = checkmod.run_all(verbose=True)
    return EXIT_OK if failures == 0 else EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavelifespan",
        description="blow-up lifespan laboratory for damped wave equations "
        "with derivative nonlinearity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_config: bool = True):
        if with_config:
            p.add_argument("config", nargs="?", help="key = value config file")
        p.add_argument("--n", type=int, dest="n")
        p.add_argument("--p", type=float, dest="p")
        p.add_argument("--mu", type=float, dest="mu")
        p.add_argument("--beta", type=float, dest="beta")
        p.add_argument("--R", type=float, dest="R")
        p.add_argument("--eps", type=float, dest="eps")
        p.add_argument("--amplitude-f", type=float, dest="amplitude_f")
        p.add_argument("--amplitude-g", type=float, dest="amplitude_g")
        p.add_argument("--support-radius", type=float, dest="support_radius")
        p.add_argument("--out-dir", dest="out_dir")

    pb = sub.add_parser("bound", help="closed-form lifespan bound and exponent")
    add_common(pb)

    ps = sub.add_parser("solve", help="single run with functional trace and monitors")
    add_common(ps)
    ps.add_argument("--dr", type=float, dest="dr")
    ps.add_argument("--c-cfl", type=float, dest="c_cfl")
    ps.add_argument("--dt-safety", type=float, dest="dt_safety")
    ps.add_argument("--t-final", type=float, dest="t_final")
    ps.add_argument("--t-final-cap", type=float, dest="t_final_cap")
    ps.add_argument("--threshold-factor", type=float, dest="threshold_factor")
    ps.add_argument("--n-samples", type=int, dest="n_samples")
    ps.add_argument("--source-off", action="store_false", dest="source_on", default=None)
    ps.add_argument("--backend", dest="backend", choices=("numba", "numpy"))
    ps.add_argument("--snapshot-times", dest="snapshot_times")
    ps.add_argument("--snapshot-format", dest="snapshot_format", choices=("csv", "npy"))
    ps.add_argument("--check-weak-residual", action="store_true",
                    dest="check_weak_residual", default=None)

    pw = sub.add_parser("sweep", help="eps-sweep with scaling fit and verdict")
    add_common(pw)
    pw.add_argument("--eps-values", dest="eps_values")
    pw.add_argument("--slope-tolerance", type=float, dest="slope_tolerance")
    pw.add_argument("--no-refine", action="store_false", dest="repeat_refined", default=None)
    pw.add_argument("--critical", action="store_true", dest="critical", default=None)
    pw.add_argument("--dr", type=float, dest="dr")
    pw.add_argument("--dr-cap", type=float, dest="dr_cap")
    pw.add_argument("--t-final-cap", type=float, dest="t_final_cap")
    pw.add_argument("--dt-safety", type=float, dest="dt_safety")
    pw.add_argument("--n-samples", type=int, dest="n_samples")
    pw.add_argument("--jobs", type=int, dest="jobs")
    pw.add_argument("--backend", dest="backend", choices=("numba", "numpy"))

    pc = sub.add_parser("check", help="run the invariant suite on shipped demo configs")
    pc.set_defaults(command="check")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(RunConfig())
        cfg = resolve_config(args)
        if args.command == "bound":
            return cmd_bound(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        raise ValidationError(f"unknown command {args.command!r}")
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 1
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
