"""Grid estimators for sup, Hoelder, and C^m norms, plus the vanishing
modulus diagnostic for the little Hoelder class.

Every quantity is a maximum over stated probe grids and therefore a lower
bound on the true norm; nothing extrapolates. TrigPoly inputs are probed on
the lifted torus where argument shifts are exact phase rotations, so the
difference quotients carry no interpolation error. Callable inputs are
probed on their declared interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .ap_algebra import TrigPoly, derivative
from .errors import InvalidValue, UnsupportedOrder
from .torus_engine import _check_M, _sample_values

__all__ = [
    "EvaluableFunction",
    "ModulusProfile",
    "sup_norm",
    "holder_seminorm",
    "cm_norm",
    "little_holder_profile",
    "dyadic_offsets",
]

_DEFAULT_EVAL_GRID = 4096


@dataclass(frozen=True)
class EvaluableFunction:
    """A sampled scalar function of one real variable.

    fn must accept a float ndarray and return values elementwise. Probes are
    drawn from [a, b]; when period is given, offset arguments wrap modulo
    the period instead of trimming the probe range (use b - a = period).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    a: float
    b: float
    period: Optional[float] = None

    def __post_init__(self):
        if not self.b > self.a:
            raise InvalidValue(f"need b > a, got [{self.a}, {self.b}]")
        if self.period is not None and self.period <= 0:
            raise InvalidValue("period must be positive")

    def probes(self, M: int) -> np.ndarray:
        if self.period is not None:
            return self.a + (self.b - self.a) * np.arange(M) / M
        return np.linspace(self.a, self.b, M)

    def values(self, x: np.ndarray) -> np.ndarray:
        out = np.asarray(self.fn(x), dtype=float)
        if out.shape != x.shape:
            raise InvalidValue("fn must map an array to an equal-shaped array")
        if not np.all(np.isfinite(out)):
            raise InvalidValue("fn produced non-finite values on the probe grid")
        return out


@dataclass(frozen=True)
class ModulusProfile:
    """Estimates of omega_gamma(delta) = sup over |h| < delta of the
    gamma difference quotient, on a decreasing delta list.

    verdict is "vanishing" when the profile collapses (last <= 5 percent of
    first, or identically zero), "non-vanishing" when it stays above half
    the first value, and "inconclusive" between.
    """

    gamma: float
    deltas: Tuple[float, ...]
    omegas: Tuple[float, ...]
    verdict: str


Field = Union[TrigPoly, EvaluableFunction]


def dyadic_offsets(h_max: float, levels: int = 25) -> np.ndarray:
    """The default offset set {h_max * 2^-j : j = 0..levels-1}."""
    if h_max <= 0:
        raise InvalidValue("h_max must be positive")
    return h_max * 0.5 ** np.arange(levels)


def sup_norm(f: Field, M: Optional[int] = None) -> float:
    """Grid maximum of |f|: a lower bound converging to the sup as M grows.

    TrigPoly inputs are sampled on the M^d torus grid of the lift (where the
    closure of the orbit attains the sup); callables on M interval probes.
    """
    if isinstance(f, TrigPoly):
        lat = f.lattice
        m = _check_M(lat, M if M is not None else _DEFAULT_EVAL_GRID)
        return float(np.max(np.abs(_sample_values(lat, f.coef, m))))
    m = int(M) if M is not None else _DEFAULT_EVAL_GRID
    if m < 2:
        raise InvalidValue("need at least 2 probe points")
    return float(np.max(np.abs(f.values(f.probes(m)))))


def _ratio_table_trig(f: TrigPoly, gamma: float, M: int, h_set: np.ndarray) -> np.ndarray:
    """max_x |f(x + h e_r) - f(x)| / h^gamma per offset, max over directions.

    The shifted samples come from exact phase rotation of the coefficients,
    so each entry is a true restriction maximum on the torus grid.
    """
    lat = f.lattice
    base = _sample_values(lat, f.coef, M)
    out = np.zeros(len(h_set))
    for r in range(lat.n):
        lam = lat.lam_grid(r)
        for j, h in enumerate(h_set):
            shifted = _sample_values(lat, f.coef * np.exp(1j * h * lam), M)
            diff = float(np.max(np.abs(shifted - base)))
            out[j] = max(out[j], diff / h**gamma)
    return out


def _ratio_table_eval(
    f: EvaluableFunction, gamma: float, M: int, h_set: np.ndarray
) -> np.ndarray:
    x = f.probes(M)
    base = f.values(x)
    out = np.zeros(len(h_set))
    for j, h in enumerate(h_set):
        if f.period is not None:
            xh = f.a + np.mod(x + h - f.a, f.period)
            diff = float(np.max(np.abs(f.values(xh) - base)))
        else:
            keep = x + h <= f.b
            if not np.any(keep):
                continue
            diff = float(np.max(np.abs(f.values(x[keep] + h) - base[keep])))
        out[j] = diff / h**gamma
    return out


def _ratio_table(f: Field, gamma: float, M: Optional[int], h_set) -> Tuple[np.ndarray, np.ndarray]:
    if not 0.0 < gamma < 1.0:
        raise InvalidValue(f"gamma must lie in (0, 1), got {gamma!r}")
    if isinstance(f, TrigPoly):
        m = _check_M(f.lattice, M if M is not None else _DEFAULT_EVAL_GRID)
        h_max_default = math.pi
    else:
        m = int(M) if M is not None else _DEFAULT_EVAL_GRID
        h_max_default = 0.5 * (f.b - f.a)
    hs = dyadic_offsets(h_max_default) if h_set is None else np.asarray(h_set, dtype=float)
    if hs.ndim != 1 or len(hs) == 0 or np.any(hs <= 0):
        raise InvalidValue("h_set must be a nonempty sequence of positive offsets")
    if isinstance(f, TrigPoly):
        return hs, _ratio_table_trig(f, gamma, m, hs)
    return hs, _ratio_table_eval(f, gamma, m, hs)


def holder_seminorm(
    f: Field,
    gamma: float,
    M: Optional[int] = None,
    h_set: Optional[Sequence[float]] = None,
) -> float:
    """Grid lower bound for [f]_gamma = sup |f(x+h) - f(x)| / |h|^gamma.

    The default offsets are dyadic, h_max * 2^-j for 25 levels, with h_max
    = pi for TrigPoly and half the probe interval otherwise; pass a dense
    h_set to chase sharp maximizers.
    """
    _, ratios = _ratio_table(f, gamma, M, h_set)
    return float(np.max(ratios))


def _derivative_orders(n: int, total: int):
    """All multi-indices over n axes with |beta| = total."""
    if n == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _derivative_orders(n - 1, total - first):
            yield (first,) + rest


def _derive(f: TrigPoly, beta: Sequence[int]) -> TrigPoly:
    out = f
    for axis, reps in enumerate(beta):
        for _ in range(reps):
            out = derivative(out, axis)
    return out


def cm_norm(
    f: Field,
    m: float,
    M: Optional[int] = None,
    h_set: Optional[Sequence[float]] = None,
) -> float:
    """Norm of order m: max of derivative sups for integer m, and
    |f|_k + max_{|beta| = k} [d^beta f]_gamma for m = k + gamma.

    Integer m uses the maximum (not the sum) over all orders up to m.
    Callable inputs support m < 1 only; derivatives of samples are not
    estimated (UnsupportedOrder).
    """
    if not (np.isfinite(m) and m >= 0):
        raise InvalidValue(f"order must be finite and >= 0, got {m!r}")
    k = int(math.floor(m + 1e-12))
    gamma = m - k
    if gamma < 1e-12:
        gamma = 0.0
    if isinstance(f, EvaluableFunction):
        if k >= 1:
            raise UnsupportedOrder(
                f"sampled functions support orders below 1, got {m!r}"
            )
        base = sup_norm(f, M)
        if gamma == 0.0:
            return base
        return base + holder_seminorm(f, gamma, M, h_set)
    best = 0.0
    for total in range(k + 1):
        for beta in _derivative_orders(f.lattice.n, total):
            best = max(best, sup_norm(_derive(f, beta), M))
    if gamma == 0.0:
        return best
    semi = 0.0
    for beta in _derivative_orders(f.lattice.n, k):
        semi = max(semi, holder_seminorm(_derive(f, beta), gamma, M, h_set))
    return best + semi


def little_holder_profile(
    f: Field,
    gamma: float,
    deltas: Optional[Sequence[float]] = None,
    M: Optional[int] = None,
    h_set: Optional[Sequence[float]] = None,
) -> ModulusProfile:
    """Profile of omega_gamma(delta) = max over probed h < delta of the
    difference-quotient table, on a strictly decreasing delta list.

    omega is nonincreasing as delta shrinks by construction. A function
    belongs to the little class exactly when the true modulus tends to 0;
    the verdict tags the observable trend (see ModulusProfile).
    """
    if deltas is None:
        deltas = tuple(10.0**-j for j in range(7))
    deltas = tuple(float(d) for d in deltas)
    if len(deltas) == 0 or any(d <= 0 for d in deltas):
        raise InvalidValue("deltas must be positive")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise InvalidValue("deltas must be strictly decreasing")
    if h_set is None:
        if isinstance(f, TrigPoly):
            h_max = math.pi
        else:
            h_max = 0.5 * (f.b - f.a)
        # reach comfortably below the smallest delta
        levels = max(25, int(math.ceil(math.log2(h_max / deltas[-1]))) + 3)
        h_set = dyadic_offsets(h_max, levels)
    hs, ratios = _ratio_table(f, gamma, M, h_set)
    omegas = []
    for d in deltas:
        mask = hs < d
        omegas.append(float(np.max(ratios[mask])) if np.any(mask) else 0.0)
    first, last = omegas[0], omegas[-1]
    if first == 0.0:
        verdict = "vanishing"
    elif last <= 0.05 * first:
        verdict = "vanishing"
    elif last >= 0.5 * first:
        verdict = "non-vanishing"
    else:
        verdict = "inconclusive"
    return ModulusProfile(float(gamma), deltas, tuple(omegas), verdict)
