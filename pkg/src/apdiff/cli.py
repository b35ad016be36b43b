"""Command line front end.

Three subcommands:

    apdiff run --config cfg.json --out dir
    apdiff verify [--only name] [--seed n]
    apdiff norms --input f.json [--m 1.5] [--gamma 0.5] [--grid 4096] --out report.csv

Exit codes: 0 success, 2 unusable configuration, 3 solver failure (the last
good checkpoint is written when one exists), 4 verification failure.

Run outputs are deterministic: the same (config, seed) produces
byte-identical CSV files. The manifest records the config hash, toolkit
version, wall time, and a sha256 per output file. A config may carry a
"sweep" list of override blocks; entries fan out over a thread pool bounded
by APDIFF_THREADS (each sweep entry owns its own output subdirectory).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .ap_algebra import (
    FrequencyLattice,
    TrigPoly,
    VectorField,
    inner_product_alpha,
    linear_combine,
    make_lattice,
)
from .diff_group import make_diffeo
from .errors import ApDiffError, ConfigError, SchemaError, SolverError
from .geodesic_flows import (
    EulerianState,
    SolverConfig,
    burgers_solution,
    exp_lie,
    integrate_eulerian_ch,
    integrate_geodesic,
)
from .holder_norms import cm_norm, holder_seminorm, little_holder_profile, sup_norm
from .serialization import load_state, save_state, vector_field_from_modes
from .verify import CHECK_NAMES, CheckResult, format_result, run_all

_EXPERIMENTS = ("geodesic", "eulerian", "burgers", "exp-lie", "norms", "verify")
_SOLVER_KEYS = {
    "dt",
    "t_final",
    "integrator",
    "M",
    "inversion_tol",
    "inversion_max_iter",
    "eps_min",
    "energy_log_stride",
    "snapshot_stride",
}
_TRAJECTORY_HEADER = "t,energy,sup_norm_u,margin,aliased_mass,inversion_iters"


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def _as_float(obj: Dict[str, Any], key: str, default: Optional[float] = None) -> float:
    if key not in obj:
        _require(default is not None, f"missing required field {key!r}")
        return float(default)
    value = obj[key]
    _require(
        isinstance(value, (int, float)) and not isinstance(value, bool),
        f"field {key!r} must be a number",
    )
    return float(value)


def _as_int(obj: Dict[str, Any], key: str, default: Optional[int] = None) -> int:
    if key not in obj:
        _require(default is not None, f"missing required field {key!r}")
        return int(default)
    value = obj[key]
    _require(
        isinstance(value, int) and not isinstance(value, bool),
        f"field {key!r} must be an integer",
    )
    return value


def _check_keys(obj: Dict[str, Any], allowed: set, where: str):
    unknown = set(obj) - allowed
    _require(not unknown, f"unknown {where} keys: {', '.join(sorted(unknown))}")


def load_config(path: str) -> Dict[str, Any]:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    _require(isinstance(cfg, dict), "config must be a JSON object")
    return cfg


def _lattice_from_config(obj: Dict[str, Any]) -> FrequencyLattice:
    _require(isinstance(obj, dict), "lattice block must be an object")
    _check_keys(obj, {"n", "d", "omega", "K"}, "lattice")
    n = _as_int(obj, "n")
    d = _as_int(obj, "d")
    K = _as_int(obj, "K")
    omega = obj.get("omega")
    _require(
        isinstance(omega, list)
        and len(omega) == n
        and all(isinstance(row, list) and len(row) == d for row in omega),
        "lattice omega must be an n x d array of rows",
    )
    try:
        return make_lattice(np.array(omega, dtype=float), K)
    except ApDiffError as exc:
        raise ConfigError(f"unusable lattice: {exc}") from exc


def _solver_from_config(obj: Dict[str, Any], alpha: float) -> SolverConfig:
    _require(isinstance(obj, dict), "solver block must be an object")
    _check_keys(obj, _SOLVER_KEYS, "solver")
    integrator = obj.get("integrator", "rk4")
    _require(
        integrator in ("rk4", "heun"), "solver integrator must be 'rk4' or 'heun'"
    )
    M = obj.get("M")
    if M is not None:
        M = _as_int(obj, "M")
    try:
        return SolverConfig(
            alpha=alpha,
            dt=_as_float(obj, "dt", 1e-3),
            t_final=_as_float(obj, "t_final", 1.0),
            integrator=integrator,
            M=M,
            inversion_tol=_as_float(obj, "inversion_tol", 1e-13),
            inversion_max_iter=_as_int(obj, "inversion_max_iter", 100),
            eps_min=_as_float(obj, "eps_min", 1e-6),
            energy_log_stride=_as_int(obj, "energy_log_stride", 1),
            snapshot_stride=_as_int(obj, "snapshot_stride", 0),
        )
    except ApDiffError as exc:
        raise ConfigError(f"unusable solver block: {exc}") from exc


def _velocity_from_config(cfg: Dict[str, Any], lat: FrequencyLattice) -> VectorField:
    _require("initial_velocity" in cfg, "missing required field 'initial_velocity'")
    try:
        return vector_field_from_modes(lat, cfg["initial_velocity"])
    except (SchemaError, ApDiffError) as exc:
        raise ConfigError(f"unusable initial_velocity: {exc}") from exc


def _csv_cell(value) -> str:
    if isinstance(value, int):
        return repr(value)
    return repr(float(value))


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(v) for v in row) + "\n")


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(out_dir: str, config_sha: str, wall: float, extra: Optional[dict] = None):
    outputs = {}
    for name in sorted(os.listdir(out_dir)):
        full = os.path.join(out_dir, name)
        if name != "manifest.json" and os.path.isfile(full):
            outputs[name] = _sha256(full)
    manifest = {
        "config_sha256": config_sha,
        "toolkit_version": __version__,
        "wall_time_s": wall,
        "outputs": outputs,
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_failure(out_dir: str, exc: SolverError):
    checkpoint = getattr(exc, "checkpoint", None)
    if checkpoint is not None:
        save_state(checkpoint, os.path.join(out_dir, "checkpoint.json"))
    info = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("t", "t_requested", "t_blowup", "grid_min", "eps_min"):
        if hasattr(exc, attr):
            info[attr] = getattr(exc, attr)
    with open(os.path.join(out_dir, "failure.json"), "w") as fh:
        json.dump(info, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_geodesic(cfg: Dict[str, Any], out_dir: str) -> None:
    lat = _lattice_from_config(cfg.get("lattice"))
    alpha = _as_float(cfg, "alpha", 1.0)
    solver = _solver_from_config(cfg.get("solver", {}), alpha)
    u0 = _velocity_from_config(cfg, lat)
    result = integrate_geodesic(u0, solver)
    _write_csv(
        os.path.join(out_dir, "trajectory.csv"),
        _TRAJECTORY_HEADER,
        result.trajectory.rows(),
    )
    save_state(result.state, os.path.join(out_dir, "final_state.json"))


def _run_eulerian(cfg: Dict[str, Any], out_dir: str) -> None:
    lat = _lattice_from_config(cfg.get("lattice"))
    alpha = _as_float(cfg, "alpha", 1.0)
    solver = _solver_from_config(cfg.get("solver", {}), alpha)
    u0 = _velocity_from_config(cfg, lat)
    result = integrate_eulerian_ch(u0, solver)
    _write_csv(
        os.path.join(out_dir, "trajectory.csv"),
        _TRAJECTORY_HEADER,
        result.trajectory.rows(),
    )
    save_state(result.state, os.path.join(out_dir, "final_state.json"))


def _run_burgers(cfg: Dict[str, Any], out_dir: str) -> None:
    """March the characteristic solution on the solver time grid.

    Rows carry the inviscid diagnostics: L2 energy, grid sup, Jacobian
    margin of the characteristic map, and the aliased mass of the
    projected solution. The last row before 0.9 x blow-up is the
    checkpoint if the requested horizon is too long.
    """
    lat = _lattice_from_config(cfg.get("lattice"))
    alpha = _as_float(cfg, "alpha", 0.0)
    _require(alpha == 0.0, "burgers runs require alpha = 0")
    solver = _solver_from_config(cfg.get("solver", {}), alpha)
    u0 = _velocity_from_config(cfg, lat)
    M = solver.M
    n_rows = int(math.ceil(solver.t_final / solver.dt - 1e-12))
    times = [min(i * solver.dt, solver.t_final) for i in range(n_rows + 1)]
    rows: List[Tuple] = []
    last_good: Optional[EulerianState] = None
    try:
        for i, t in enumerate(times):
            if i % solver.energy_log_stride and t != solver.t_final:
                continue
            u_t = burgers_solution(u0, t, M=M)
            energy = inner_product_alpha(u_t, u_t, 0.0)
            sup_u = max(sup_norm(c, M=M) for c in u_t.components)
            margin = make_diffeo(
                linear_combine([3.0 * t], [u0]), eps_min=1e-9
            ).margin
            rows.append((t, energy, sup_u, margin, 0.0, 0))
            last_good = EulerianState(u_t, u_t, t)
    except SolverError as exc:
        if getattr(exc, "checkpoint", None) is None and last_good is not None:
            exc.checkpoint = last_good
        _write_csv(os.path.join(out_dir, "trajectory.csv"), _TRAJECTORY_HEADER, rows)
        raise
    _write_csv(os.path.join(out_dir, "trajectory.csv"), _TRAJECTORY_HEADER, rows)
    save_state(last_good, os.path.join(out_dir, "final_state.json"))


def _run_exp_lie(cfg: Dict[str, Any], out_dir: str) -> None:
    """Time-1 group exponential; the trajectory log holds the endpoint
    only (the generator's energy and sup are exact conserved values)."""
    lat = _lattice_from_config(cfg.get("lattice"))
    alpha = _as_float(cfg, "alpha", 1.0)
    solver = _solver_from_config(cfg.get("solver", {}), alpha)
    u = _velocity_from_config(cfg, lat)
    phi = exp_lie(u, solver)
    energy = inner_product_alpha(u, u, alpha)
    sup_u = max(sup_norm(c, M=solver.M) for c in u.components)
    rows = [(1.0, energy, sup_u, phi.margin, float("nan"), 0)]
    _write_csv(os.path.join(out_dir, "trajectory.csv"), _TRAJECTORY_HEADER, rows)
    save_state(phi, os.path.join(out_dir, "final_state.json"))


def _norm_rows(
    f, m: Optional[float], gamma: Optional[float], grid: int
) -> List[Tuple[str, str, int, float, str]]:
    rows = [("sup_norm", "", grid, sup_norm(f, M=grid), "")]
    if m is not None:
        rows.append(("cm_norm", repr(float(m)), grid, cm_norm(f, m, M=grid), ""))
    if gamma is not None:
        rows.append(
            ("holder_seminorm", repr(float(gamma)), grid, holder_seminorm(f, gamma, M=grid), "")
        )
        profile = little_holder_profile(f, gamma, M=grid)
        rows.append(
            ("little_holder", repr(float(gamma)), grid, profile.omegas[-1], profile.verdict)
        )
    return rows


def _load_norms_input(path: str):
    try:
        value = load_state(path)
    except OSError as exc:
        raise ConfigError(f"cannot read input {path}: {exc}") from exc
    except SchemaError as exc:
        raise ConfigError(f"unusable input {path}: {exc}") from exc
    if isinstance(value, TrigPoly):
        return value
    if isinstance(value, VectorField) and value.lattice.n == 1:
        return value.components[0]
    raise ConfigError(
        "norms input must be a trig_poly or a single-component vector_field"
    )


def _write_norms_report(path: str, rows: Sequence[Tuple]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("quantity,gamma_or_m,grid,value,verdict\n")
        for quantity, gm, grid, value, verdict in rows:
            fh.write(f"{quantity},{gm},{grid},{repr(float(value))},{verdict}\n")


def _run_norms(cfg: Dict[str, Any], out_dir: str) -> None:
    _check_keys(cfg, {"experiment", "seed", "input", "m", "gamma", "grid"}, "norms config")
    _require(isinstance(cfg.get("input"), str), "norms config needs an 'input' path")
    m = _as_float(cfg, "m") if "m" in cfg else None
    gamma = _as_float(cfg, "gamma") if "gamma" in cfg else None
    grid = _as_int(cfg, "grid", 4096)
    f = _load_norms_input(cfg["input"])
    try:
        rows = _norm_rows(f, m, gamma, grid)
    except ApDiffError as exc:
        raise ConfigError(f"norms computation rejected the inputs: {exc}") from exc
    _write_norms_report(os.path.join(out_dir, "report.csv"), rows)


def _run_verify(cfg: Dict[str, Any], out_dir: str) -> List[CheckResult]:
    only = cfg.get("only")
    if only is not None:
        _require(only in CHECK_NAMES, f"unknown check {only!r}")
    seed = _as_int(cfg, "seed", 0)
    results = run_all(seed=seed, only=only)
    report = {
        "overall": "pass" if all(r.passed for r in results) else "fail",
        "checks": [
            {
                "name": r.name,
                "status": "pass" if r.passed else "fail",
                "measured": r.measured,
                "threshold": r.threshold,
                "runtime_s": r.seconds,
                "detail": r.detail,
            }
            for r in results
        ],
    }
    with open(os.path.join(out_dir, "verification_report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return results


_RUNNERS = {
    "geodesic": _run_geodesic,
    "eulerian": _run_eulerian,
    "burgers": _run_burgers,
    "exp-lie": _run_exp_lie,
}

_TOP_KEYS = {
    "experiment",
    "lattice",
    "alpha",
    "solver",
    "initial_velocity",
    "seed",
    "sweep",
    "input",
    "m",
    "gamma",
    "grid",
    "only",
}


def _merge_config(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            inner = dict(merged[key])
            inner.update(value)
            merged[key] = inner
        else:
            merged[key] = value
    merged.pop("sweep", None)
    return merged


def _worker_count(n_jobs: int) -> int:
    env = os.environ.get("APDIFF_THREADS")
    if env is not None:
        try:
            bound = int(env)
        except ValueError as exc:
            raise ConfigError(f"APDIFF_THREADS must be an integer, got {env!r}") from exc
        _require(bound >= 1, "APDIFF_THREADS must be at least 1")
    else:
        bound = min(4, os.cpu_count() or 1)
    return max(1, min(bound, n_jobs))


def run_experiment(cfg: Dict[str, Any], out_dir: str, config_sha: str) -> int:
    """Validate and execute one experiment config; returns the exit code."""
    started = time.perf_counter()
    _require(isinstance(cfg, dict), "config must be a JSON object")
    _check_keys(cfg, _TOP_KEYS, "config")
    experiment = cfg.get("experiment")
    _require(
        experiment in _EXPERIMENTS,
        f"experiment must be one of {', '.join(_EXPERIMENTS)}",
    )
    if "seed" in cfg:
        _as_int(cfg, "seed")
    os.makedirs(out_dir, exist_ok=True)

    if "sweep" in cfg:
        return _run_sweep(cfg, out_dir, config_sha, started)

    if experiment == "verify":
        results = _run_verify(cfg, out_dir)
        for r in results:
            print(format_result(r))
        _write_manifest(out_dir, config_sha, time.perf_counter() - started)
        if not all(r.passed for r in results):
            return 4
        return 0

    try:
        if experiment == "norms":
            _run_norms(cfg, out_dir)
        else:
            _RUNNERS[experiment](cfg, out_dir)
    except SolverError as exc:
        _write_failure(out_dir, exc)
        _write_manifest(out_dir, config_sha, time.perf_counter() - started)
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    _write_manifest(out_dir, config_sha, time.perf_counter() - started)
    return 0


def _run_sweep(cfg: Dict[str, Any], out_dir: str, config_sha: str, started: float) -> int:
    sweep = cfg["sweep"]
    _require(
        isinstance(sweep, list) and all(isinstance(e, dict) for e in sweep) and sweep,
        "sweep must be a non-empty list of override objects",
    )
    entries = [_merge_config(cfg, override) for override in sweep]
    subdirs = [os.path.join(out_dir, f"sweep-{i:03d}") for i in range(len(entries))]

    def job(args) -> int:
        entry, subdir = args
        return run_experiment(entry, subdir, config_sha)

    with ThreadPoolExecutor(max_workers=_worker_count(len(entries))) as pool:
        codes = list(pool.map(job, zip(entries, subdirs)))
    _write_manifest(
        out_dir,
        config_sha,
        time.perf_counter() - started,
        extra={"sweep_exit_codes": codes},
    )
    for code in (3, 4, 2):
        if code in codes:
            return code
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    with open(args.config, "rb") as fh:
        config_sha = hashlib.sha256(fh.read()).hexdigest()
    return run_experiment(cfg, args.out, config_sha)


def _cmd_verify(args) -> int:
    if args.only is not None and args.only not in CHECK_NAMES:
        raise ConfigError(
            f"unknown check {args.only!r}; available: {', '.join(CHECK_NAMES)}"
        )
    started = time.perf_counter()
    results = run_all(seed=args.seed, only=args.only)
    for r in results:
        print(format_result(r))
    n_pass = sum(r.passed for r in results)
    wall = time.perf_counter() - started
    overall = "PASS" if n_pass == len(results) else "FAIL"
    print(f"overall: {overall} ({n_pass}/{len(results)} checks, {wall:.1f}s)")
    return 0 if n_pass == len(results) else 4


def _cmd_norms(args) -> int:
    f = _load_norms_input(args.input)
    try:
        rows = _norm_rows(f, args.m, args.gamma, args.grid)
    except ApDiffError as exc:
        raise ConfigError(f"norms computation rejected the inputs: {exc}") from exc
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    _write_norms_report(args.out, rows)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apdiff",
        description="Almost periodic diffeomorphism toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True, help="path to a JSON config")
    p_run.add_argument("--out", required=True, help="output directory")

    p_verify = sub.add_parser("verify", help="run the verification suite")
    p_verify.add_argument("--only", default=None, help="run a single named check")
    p_verify.add_argument("--seed", type=int, default=0, help="seed for random draws")

    p_norms = sub.add_parser("norms", help="norm report for a stored function")
    p_norms.add_argument("--input", required=True, help="trig_poly JSON file")
    p_norms.add_argument("--m", type=float, default=None, help="order for cm_norm")
    p_norms.add_argument("--gamma", type=float, default=None, help="Holder exponent")
    p_norms.add_argument("--grid", type=int, default=4096, help="probe grid size")
    p_norms.add_argument("--out", required=True, help="report CSV path")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "verify": _cmd_verify, "norms": _cmd_norms}[args.command]
    try:
        code = handler(args)
    except (ConfigError, SchemaError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    return code


if __name__ == "__main__":
    sys.exit(main())
