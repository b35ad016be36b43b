"""One-command verification suite.

Twelve checks reproduce the library's structural identities at desk scale
(n=1, d=2, base frequencies (1, sqrt 2), K=16, M=64, dt=1e-3 unless a check
says otherwise). Each check returns its headline measurement, threshold,
and wall time; thresholds are never adaptive. Randomized checks draw from
a seeded generator and keep amplitudes small enough that pass margins stay
above 2x across seeds.

Wall times on modest hardware can exceed the per-check targets; runtimes
are reported with each result rather than traded against tolerances.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .ap_algebra import (
    TrigPoly,
    VectorField,
    apply_A_alpha,
    inner_product_alpha,
    invert_A_alpha,
    linear_combine,
    make_lattice,
    shift,
)
from .diff_group import (
    ApDiffeo,
    compose_diffeo,
    invert_diffeo,
    make_diffeo,
    shift_diffeo,
)
from .errors import InvalidValue
from .geodesic_flows import (
    SolverConfig,
    burgers_blowup_time,
    burgers_solution,
    directional_derivative,
    eulerian_velocity,
    exp_lie,
    exp_riemannian,
    integrate_eulerian_ch,
    integrate_geodesic,
    metric_nu_alpha,
)
from .holder_norms import (
    EvaluableFunction,
    holder_seminorm,
    little_holder_profile,
)
from .torus_engine import _sample_values

__all__ = ["CheckResult", "CHECK_NAMES", "run_all", "format_result"]

_DESK_K = 16
_DESK_M = 64
_DESK_DT = 1e-3


@dataclass(frozen=True)
class CheckResult:
    index: int
    name: str
    passed: bool
    measured: float
    threshold: float
    seconds: float
    detail: str = ""


def format_result(r: CheckResult) -> str:
    status = "PASS" if r.passed else "FAIL"
    line = (
        f"[{r.index:2d}] {status} {r.name:<20s} "
        f"measured={r.measured:.3e} threshold={r.threshold:.1e} ({r.seconds:.1f}s)"
    )
    if r.detail:
        line += f" {r.detail}"
    return line


def _desk_lattice():
    return make_lattice(np.array([[1.0, math.sqrt(2.0)]]), _DESK_K)


def _kappa_lattice():
    """Base frequencies (1, 2*pi): the integer-kernel directions of the
    group exponential live on this lattice."""
    return make_lattice(np.array([[1.0, 2.0 * math.pi]]), _DESK_K)


def _desk_cfg(**kw) -> SolverConfig:
    base = dict(alpha=1.0, dt=_DESK_DT, t_final=1.0, M=_DESK_M)
    base.update(kw)
    return SolverConfig(**base)


def _desk_u0(amp: float = 0.05) -> VectorField:
    lat = _desk_lattice()
    return VectorField(
        [
            linear_combine(
                [amp, amp / 2],
                [TrigPoly.cosine(lat, (1, 0), 1.0), TrigPoly.cosine(lat, (0, 1), 1.0)],
            )
        ]
    )


def _grid_sup(vf: VectorField, M: int = _DESK_M) -> float:
    return max(
        float(np.max(np.abs(_sample_values(vf.lattice, c.coef, M))))
        for c in vf.components
    )


def _grid_sup_diff(a: VectorField, b: VectorField, M: int = _DESK_M) -> float:
    return _grid_sup(linear_combine([1.0, -1.0], [a, b]), M)


def _random_small_diffeo(
    lat, rng, n_modes: int = 4, scale: float = 0.01, max_k: Optional[int] = None
) -> ApDiffeo:
    """Random displacement with a handful of canonical modes, scaled so the
    Jacobian margin stays comfortably positive. max_k keeps the spectrum
    deep inside the box so that composition tails stay negligible."""
    if max_k is None:
        max_k = lat.K
    table: dict = {}
    while len(table) < n_modes:
        k = tuple(int(q) for q in rng.integers(-max_k, max_k + 1, size=lat.d))
        first = next((q for q in k if q != 0), 0)
        if first <= 0:
            continue
        lam = abs(float(lat.omega[0] @ np.array(k, dtype=float)))
        amp = scale * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1)) / (1.0 + lam)
        table[k] = amp
    return make_diffeo(VectorField([TrigPoly.from_modes(lat, table)]))


def _check_group_axioms(seed: int) -> Tuple[bool, float, float, str]:
    lat = _desk_lattice()
    rng = np.random.default_rng(seed)
    # Spectra within |k| <= 5 keep compositions and inverses representable
    # in the K=16 box down to third-order products.
    diffeos = [
        _random_small_diffeo(lat, rng, scale=0.002, max_k=5) for _ in range(20)
    ]
    probes = rng.uniform(-30.0, 30.0, size=(200, lat.n))
    ident = ApDiffeo.identity(lat)
    worst = 0.0

    def sup_map_diff(a: ApDiffeo, b: ApDiffeo) -> float:
        va = np.array([a.evaluate(x) for x in probes])
        vb = np.array([b.evaluate(x) for x in probes])
        return float(np.max(np.abs(va - vb)))

    for i in range(10):
        phi, psi, chi = (diffeos[(3 * i + j) % 20] for j in range(3))
        left = compose_diffeo(compose_diffeo(phi, psi, M=_DESK_M), chi, M=_DESK_M)
        right = compose_diffeo(phi, compose_diffeo(psi, chi, M=_DESK_M), M=_DESK_M)
        worst = max(worst, sup_map_diff(left, right))
    for phi in diffeos[:5]:
        worst = max(worst, sup_map_diff(compose_diffeo(phi, ident, M=_DESK_M), phi))
        worst = max(worst, sup_map_diff(compose_diffeo(ident, phi, M=_DESK_M), phi))
    for phi in diffeos:
        inv, _ = invert_diffeo(phi, tol=1e-8, M=_DESK_M)
        worst = max(worst, sup_map_diff(compose_diffeo(phi, inv, M=_DESK_M), ident))
        worst = max(worst, sup_map_diff(compose_diffeo(inv, phi, M=_DESK_M), ident))
    return worst <= 1e-7, worst, 1e-7, "20 diffeos, 200 probes"


def _check_shift_equivariance(seed: int) -> Tuple[bool, float, float, str]:
    lat = _desk_lattice()
    rng = np.random.default_rng(seed)
    phi = _random_small_diffeo(lat, rng, scale=0.004, max_k=8)
    psi = _random_small_diffeo(lat, rng, scale=0.004, max_k=8)
    composed = compose_diffeo(phi, psi, M=_DESK_M)
    worst = 0.0
    for _ in range(10):
        c = rng.uniform(-10.0, 10.0, size=lat.n)
        a = shift_diffeo(composed, c)
        b = compose_diffeo(shift_diffeo(phi, c), shift_diffeo(psi, c), M=_DESK_M)
        worst = max(worst, _grid_sup_diff(a.displacement, b.displacement))
    return worst <= 1e-9, worst, 1e-9, "10 random translations"


def _check_a_alpha(seed: int) -> Tuple[bool, float, float, str]:
    lat = _desk_lattice()
    rng = np.random.default_rng(seed)
    coef = 0.1 * (rng.standard_normal(lat.shape) + 1j * rng.standard_normal(lat.shape))
    u = TrigPoly(lat, coef)
    alpha = 1.0
    round_err = float(
        np.max(np.abs(invert_A_alpha(apply_A_alpha(u, alpha), alpha).coef - u.coef))
    )
    trans_err = 0.0
    for _ in range(5):
        c = rng.uniform(-5.0, 5.0, size=lat.n)
        a = shift(apply_A_alpha(u, alpha), c)
        b = apply_A_alpha(shift(u, c), alpha)
        trans_err = max(trans_err, float(np.max(np.abs(a.coef - b.coef))))
    ok = round_err <= 1e-13 and trans_err <= 1e-12
    return ok, round_err, 1e-13, f"translation residual {trans_err:.2e} (tol 1e-12)"


def _long_interval_mean(fns: Sequence[Callable[[np.ndarray], np.ndarray]], T: float) -> float:
    """Trapezoid mean of a pointwise product over [-T, T], chunked."""
    h = 2e-3
    count = int(round(2.0 * T / h))
    total = 0.0
    chunk = 2_000_000
    for start in range(0, count + 1, chunk):
        idx = np.arange(start, min(start + chunk, count + 1))
        x = -T + h * idx
        y = np.ones_like(x)
        for fn in fns:
            y = y * fn(x)
        w = np.where((idx == 0) | (idx == count), 0.5, 1.0)
        total += float(np.sum(y * w))
    return total * h / (2.0 * T)


def _check_inner_product(seed: int) -> Tuple[bool, float, float, str]:
    lat = _desk_lattice()
    r2 = math.sqrt(2.0)
    u = linear_combine(
        [1.0, 1.0], [TrigPoly.cosine(lat, (1, 0), 1.0), TrigPoly.cosine(lat, (0, 1), 1.0)]
    )
    v = TrigPoly.cosine(lat, (0, 1), 1.0)
    alpha = 0.5
    spectral = inner_product_alpha(u, v, alpha)

    def quad(T: float) -> float:
        uu = lambda x: np.cos(x) + np.cos(r2 * x)
        vv = lambda x: np.cos(r2 * x)
        du = lambda x: -np.sin(x) - r2 * np.sin(r2 * x)
        dv = lambda x: -r2 * np.sin(r2 * x)
        return _long_interval_mean([uu, vv], T) + alpha**2 * _long_interval_mean([du, dv], T)

    rel2 = abs(quad(1e2) - spectral) / abs(spectral)
    rel4 = abs(quad(1e4) - spectral) / abs(spectral)
    ok = rel4 <= 1e-3 and rel2 >= 5.0 * rel4
    return ok, rel4, 1e-3, f"T=1e2 rel {rel2:.2e}, decrease x{rel2 / rel4:.1f}"


def _drift(u0: VectorField, cfg: SolverConfig) -> float:
    log = integrate_geodesic(u0, cfg).trajectory
    e0 = log.energy[0]
    return max(abs(e - e0) for e in log.energy) / e0


def _check_energy(seed: int) -> Tuple[bool, float, float, str]:
    u0 = _desk_u0()
    drift = _drift(u0, _desk_cfg())
    # The dt^4 scaling is observable only where discretization error is
    # above the roundoff floor; at dt=1e-3 the drift sits at ~1e-15, so the
    # halving ratio is taken at the coarsest dt pair with a clean signal.
    d_coarse = _drift(u0, _desk_cfg(dt=0.25))
    d_half = _drift(u0, _desk_cfg(dt=0.125))
    ratio = d_coarse / d_half if d_half > 0 else math.inf
    ok = drift <= 1e-8 and 8.0 <= ratio <= 32.0
    return ok, drift, 1e-8, f"halving ratio {ratio:.1f} at dt=0.25 (drift {d_coarse:.1e})"


def _check_equivalence(seed: int) -> Tuple[bool, float, float, str]:
    u0 = _desk_u0()
    cfg = _desk_cfg()
    res = integrate_geodesic(u0, cfg)
    u_lag = eulerian_velocity(res.state, cfg)
    u_eul = integrate_eulerian_ch(u0, cfg).state.u
    sup = _grid_sup_diff(u_lag, u_eul)
    return sup <= 1e-6, sup, 1e-6, "t=1, both solvers at dt=1e-3"


def _random_field(lat, rng, n_modes: int = 3) -> VectorField:
    table: dict = {}
    while len(table) < n_modes:
        k = tuple(int(q) for q in rng.integers(-3, 4, size=lat.d))
        first = next((q for q in k if q != 0), 0)
        if first <= 0:
            continue
        table[k] = rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1)
    return VectorField([TrigPoly.from_modes(lat, table)])


def _normalized(vf: VectorField, alpha: float, target: float) -> VectorField:
    norm = math.sqrt(inner_product_alpha(vf, vf, alpha))
    return linear_combine([target / norm], [vf])


def _check_gauss_lemma(seed: int) -> Tuple[bool, float, float, str]:
    lat = _desk_lattice()
    rng = np.random.default_rng(seed)
    alpha = 1.0
    cfg = _desk_cfg()
    u = _normalized(_random_field(lat, rng), alpha, 0.05)
    exp_map = lambda w: exp_riemannian(w, cfg)
    h = 1e-3
    phi = exp_map(u)
    radial = directional_derivative(exp_map, u, u, h)
    worst = 0.0
    for _ in range(5):
        du = _normalized(_random_field(lat, rng), alpha, 1.0)
        side = directional_derivative(exp_map, u, du, h)
        # The inverse of Exp(u) carries a spectral tail outside the box at
        # the 1e-8 level, so the projected-inverse tolerance sits at 1e-6:
        # far below the 1e-3 identity tolerance, attainable at K=16.
        lhs = metric_nu_alpha(phi, radial, side, alpha, M=_DESK_M, tol=1e-6)
        rhs = inner_product_alpha(u, du, alpha)
        worst = max(worst, abs(lhs - rhs))
    return worst <= 1e-3, worst, 1e-3, "5 directions, h=dt=1e-3"


def _check_lie_kernel(seed: int) -> Tuple[bool, float, float, str]:
    lat = _kappa_lattice()
    cfg = _desk_cfg()
    c = VectorField([TrigPoly.constant(lat, 1.0)])
    exp_map = lambda w: exp_lie(w, cfg)
    h = 1e-3
    kernel_dir = VectorField([TrigPoly.cosine(lat, (0, 1), 1.0)])
    live_dir = VectorField([TrigPoly.cosine(lat, (1, 0), 1.0)])
    kernel_sup = _grid_sup(directional_derivative(exp_map, c, kernel_dir, h))
    live_sup = _grid_sup(directional_derivative(exp_map, c, live_dir, h))
    live_err = abs(live_sup - 2.0 * math.sin(0.5))
    w = VectorField(
        [
            linear_combine(
                [1.0, 0.5],
                [TrigPoly.cosine(lat, (1, 0), 1.0), TrigPoly.cosine(lat, (0, 1), 1.0)],
            )
        ]
    )
    errs = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        scaled = linear_combine([eps], [w])
        errs.append(_grid_sup_diff(exp_lie(scaled, cfg).displacement, scaled))
    slopes = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    slope = sum(slopes) / len(slopes)
    ok = kernel_sup <= 1e-4 and live_err <= 2e-3 and abs(slope - 2.0) <= 0.2
    return (
        ok,
        kernel_sup,
        1e-4,
        f"live dir err {live_err:.1e}, slope {slope:.3f}",
    )


def _check_d0exp(seed: int) -> Tuple[bool, float, float, str]:
    lat = _desk_lattice()
    cfg = _desk_cfg()
    u = _desk_u0(1.0)
    errs = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        scaled = linear_combine([eps], [u])
        errs.append(_grid_sup_diff(exp_riemannian(scaled, cfg).displacement, scaled))
    slopes = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    slope = sum(slopes) / len(slopes)
    cvec = VectorField([TrigPoly.constant(lat, 0.3)])
    const_err = _grid_sup_diff(exp_riemannian(cvec, cfg).displacement, cvec)
    ok = abs(slope - 2.0) <= 0.2 and const_err <= 1e-10
    return ok, slope, 2.0, f"slope (tol 0.2), Exp(c) err {const_err:.1e}"


def _check_burgers(seed: int) -> Tuple[bool, float, float, str]:
    lat = _desk_lattice()
    u0 = VectorField(
        [
            linear_combine(
                [0.2, 0.2],
                [TrigPoly.cosine(lat, (1, 0), 1.0), TrigPoly.cosine(lat, (0, 1), 1.0)],
            )
        ]
    )
    t_blow = burgers_blowup_time(u0, M=_DESK_M)
    t = 0.8 * t_blow
    u_char = burgers_solution(u0, t, M=_DESK_M)
    u_eul = integrate_eulerian_ch(u0, _desk_cfg(alpha=0.0, t_final=t)).state.u
    sup = _grid_sup_diff(u_char, u_eul)
    lat1 = make_lattice(np.array([[1.0]]), 8)
    t_sin = burgers_blowup_time(TrigPoly.sine(lat1, (1,), 1.0))
    blow_rel = abs(t_sin - 1.0 / 3.0) * 3.0
    ok = sup <= 1e-3 and blow_rel <= 0.02
    return ok, sup, 1e-3, f"sin x blow-up rel err {blow_rel:.1e}"


def _check_scaling(seed: int) -> Tuple[bool, float, float, str]:
    u0 = _desk_u0()
    mu = 0.5
    base = integrate_geodesic(u0, _desk_cfg(t_final=0.5)).state
    scaled = integrate_geodesic(
        linear_combine([mu], [u0]), _desk_cfg(dt=2.0 * _DESK_DT, t_final=1.0)
    ).state
    res_phi = _grid_sup_diff(base.phi.displacement, scaled.phi.displacement)
    res_v = _grid_sup_diff(linear_combine([mu], [base.v]), scaled.v)
    worst = max(res_phi, res_v)
    return worst <= 1e-8, worst, 1e-8, "mu=1/2, matched step grids"


def _check_holder(seed: int) -> Tuple[bool, float, float, str]:
    lat1 = make_lattice(np.array([[1.0]]), 8)
    s = TrigPoly.sine(lat1, (1,), 1.0)
    dense_h = np.linspace(math.pi / 4096, math.pi, 4096)
    semi = holder_seminorm(s, 0.5, M=4096, h_set=dense_h)
    oracle = 1.2038366614925036
    semi_err = abs(semi - oracle)
    prof_sin = little_holder_profile(s, 0.5, M=4096)
    w = EvaluableFunction(
        lambda x: np.sqrt(np.abs(np.sin(0.5 * x))), -math.pi, math.pi, period=2.0 * math.pi
    )
    prof_w = little_holder_profile(w, 0.5, M=4096)
    ok = (
        semi_err <= 1e-3
        and prof_sin.verdict == "vanishing"
        and prof_w.verdict == "non-vanishing"
        and min(prof_w.omegas) >= 0.70
    )
    return (
        ok,
        semi_err,
        1e-3,
        f"sin: {prof_sin.verdict}, sqrt|sin(x/2)|: {prof_w.verdict} "
        f"(omega min {min(prof_w.omegas):.3f})",
    )


CHECK_NAMES: List[str] = [
    "group_axioms",
    "shift_equivariance",
    "a_alpha",
    "inner_product",
    "energy",
    "equivalence",
    "gauss_lemma",
    "lie_kernel",
    "d0exp_riemannian",
    "burgers",
    "scaling",
    "holder",
]

_CHECK_FNS = {
    "group_axioms": _check_group_axioms,
    "shift_equivariance": _check_shift_equivariance,
    "a_alpha": _check_a_alpha,
    "inner_product": _check_inner_product,
    "energy": _check_energy,
    "equivalence": _check_equivalence,
    "gauss_lemma": _check_gauss_lemma,
    "lie_kernel": _check_lie_kernel,
    "d0exp_riemannian": _check_d0exp,
    "burgers": _check_burgers,
    "scaling": _check_scaling,
    "holder": _check_holder,
}


def run_check(name: str, seed: int = 0) -> CheckResult:
    """Run one named check with a seed offset tied to its position, so a
    full run and a --only run see identical random draws."""
    if name not in _CHECK_FNS:
        raise InvalidValue(
            f"unknown check {name!r}; available: {', '.join(CHECK_NAMES)}"
        )
    index = CHECK_NAMES.index(name) + 1
    t0 = time.perf_counter()
    passed, measured, threshold, detail = _CHECK_FNS[name](seed * 100 + index)
    seconds = time.perf_counter() - t0
    return CheckResult(index, name, passed, measured, threshold, seconds, detail)


def run_all(seed: int = 0, only: Optional[str] = None) -> List[CheckResult]:
    names = [only] if only else CHECK_NAMES
    return [run_check(name, seed) for name in names]
