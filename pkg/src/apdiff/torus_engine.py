"""Grid transport between frequency coefficients and the lifted torus.

Every field f(x) = F(Omega^T x) is the restriction of a function F on the
d-torus to the irrational winding line; sampling F on a uniform M^d grid
(M >= 2K + 1) makes coefficient <-> value transport exact for represented
modes. Composition with x + f(x) becomes the torus skew shift

    H(theta) = G(theta + Omega^T f~(theta)),

evaluated by direct mode summation at the shifted points, cost
O(M^d (2K + 1)^d), then projected back to the box. Truncation is never
silent: the l1 coefficient mass in the annulus K < |k|_inf <= M/2 is
reported with each grid-route result.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from .ap_algebra import (
    FrequencyLattice,
    TrigPoly,
    VectorField,
    _join_lattices,
    _embed,
)
from .errors import InvalidValue, LowerBoundViolated

__all__ = [
    "GridData",
    "CompositionReport",
    "default_grid",
    "sample_grid",
    "project_to_lattice",
    "compose",
    "pointwise_product_dealiased",
    "reciprocal",
]

_USE_NUMBA = os.environ.get("APDIFF_NO_NUMBA", "") == ""
if _USE_NUMBA:
    try:
        import numba
    except Exception:  # pragma: no cover - exercised only without numba
        _USE_NUMBA = False


def _next_fast_len(target: int) -> int:
    """Smallest 5-smooth integer >= target (a convenient FFT length)."""
    if target <= 1:
        return 1
    best = None
    p2 = 1
    while p2 < 4 * target:
        p3 = p2
        while p3 < 4 * target:
            p5 = p3
            while p5 < target:
                p5 *= 5
            if best is None or p5 < best:
                best = p5
            p3 *= 3
        p2 *= 2
    return best


def default_grid(K: int) -> int:
    """Default dealias grid, 2(2K + 1) rounded up to a fast FFT length."""
    return _next_fast_len(2 * (2 * K + 1))


@dataclass(frozen=True)
class GridData:
    """Real samples of one scalar component on the M^d torus grid."""

    lattice: FrequencyLattice
    M: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.M,) * self.lattice.d:
            raise InvalidValue(
                f"grid values shape {self.values.shape} does not match M^d for M = {self.M}"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidValue("grid values must be finite")
        self.values.flags.writeable = False


@dataclass(frozen=True)
class CompositionReport:
    """Grid-route result together with its truncated l1 mass."""

    result: Union[TrigPoly, VectorField]
    aliased_mass: float


def _check_M(lattice: FrequencyLattice, M: int) -> int:
    M = int(M)
    if M < lattice.side:
        raise InvalidValue(
            f"grid M = {M} cannot hold modes up to K = {lattice.K}; need M >= {lattice.side}"
        )
    return M


def _scatter_idx(lattice: FrequencyLattice, M: int) -> np.ndarray:
    """FFT bin of each natural box index along one axis (k mod M)."""
    return np.arange(-lattice.K, lattice.K + 1) % M


def _sample_values(lattice: FrequencyLattice, coef: np.ndarray, M: int) -> np.ndarray:
    """Real grid values of a coefficient box on the M^d torus grid."""
    idx = _scatter_idx(lattice, M)
    padded = np.zeros((M,) * lattice.d, dtype=complex)
    padded[np.ix_(*([idx] * lattice.d))] = coef
    vals = np.fft.ifftn(padded) * (M**lattice.d)
    return np.ascontiguousarray(vals.real)


def _project_values(lattice: FrequencyLattice, values: np.ndarray, M: int):
    """Window the M-grid spectrum back to the box.

    Returns (coef, aliased_mass) where aliased_mass is the l1 coefficient
    mass left outside the retained window K < |k|_inf <= M/2.
    """
    spec = np.fft.fftn(values) / (M**lattice.d)
    idx = _scatter_idx(lattice, M)
    window = spec[np.ix_(*([idx] * lattice.d))]
    mags = np.abs(spec)
    mags[np.ix_(*([idx] * lattice.d))] = 0.0
    aliased = float(np.sum(mags))
    # Hermitian projection removes roundoff dust from the real-input FFT.
    coef = 0.5 * (window + np.conj(np.flip(window)))
    return coef, aliased


_THETA_CACHE: dict = {}


def _theta_flat(d: int, M: int) -> np.ndarray:
    """Uniform torus grid angles, shape (M^d, d), C order."""
    key = (d, M)
    got = _THETA_CACHE.get(key)
    if got is None:
        ax = 2.0 * np.pi * np.arange(M) / M
        grids = np.meshgrid(*([ax] * d), indexing="ij")
        got = np.stack([g.ravel() for g in grids], axis=1)
        got.flags.writeable = False
        _THETA_CACHE[key] = got
    return got


def _shifted_angles(
    lattice: FrequencyLattice, M: int, disp_values: Sequence[np.ndarray]
) -> np.ndarray:
    """Angles theta + Omega^T f~(theta) for displacement samples f~."""
    theta = _theta_flat(lattice.d, M)
    W = np.array(theta)
    omega = lattice.omega
    for l in range(lattice.d):
        s = np.zeros(W.shape[0])
        for r in range(lattice.n):
            s += omega[r, l] * disp_values[r].ravel()
        W[:, l] += s
    return W


# Direct mode summation at arbitrary angles. The numba kernels walk the
# canonical half box once per point with unit-modulus power ladders; the
# numpy fallback is the same sum in matrix form. Summation order is fixed,
# so results are bit-deterministic per implementation.

if _USE_NUMBA:

    @numba.njit(cache=True, fastmath=True)
    def _kernel_eval_1d(cr, ci, K, w, out):
        npts = w.shape[0]
        for j in range(npts):
            c = np.cos(w[j])
            s = np.sin(w[j])
            zr = 1.0
            zi = 0.0
            tr = 0.0
            ti = 0.0
            for m in range(1, K + 1):
                zr, zi = zr * c - zi * s, zr * s + zi * c
                tr += cr[K + m] * zr - ci[K + m] * zi
                ti += cr[K + m] * zi + ci[K + m] * zr
            out[j] = cr[K] + 2.0 * tr

    @numba.njit(cache=True, fastmath=True)
    def _kernel_eval_2d(cr, ci, K, w1, w2, out):
        L = 2 * K + 1
        p2r = np.empty(L)
        p2i = np.empty(L)
        npts = w1.shape[0]
        for j in range(npts):
            c1 = np.cos(w1[j])
            s1 = np.sin(w1[j])
            c2 = np.cos(w2[j])
            s2 = np.sin(w2[j])
            p2r[K] = 1.0
            p2i[K] = 0.0
            for m in range(1, K + 1):
                p2r[K + m] = p2r[K + m - 1] * c2 - p2i[K + m - 1] * s2
                p2i[K + m] = p2r[K + m - 1] * s2 + p2i[K + m - 1] * c2
                p2r[K - m] = p2r[K + m]
                p2i[K - m] = -p2i[K + m]
            # half box: the k1 = 0 row contributes k2 = 1..K only
            tr = 0.0
            ti = 0.0
            for m in range(K + 1, L):
                tr += cr[K, m] * p2r[m] - ci[K, m] * p2i[m]
                ti += cr[K, m] * p2i[m] + ci[K, m] * p2r[m]
            z1r = 1.0
            z1i = 0.0
            for a in range(K + 1, L):
                z1r, z1i = z1r * c1 - z1i * s1, z1r * s1 + z1i * c1
                rr = 0.0
                ri = 0.0
                for m in range(L):
                    rr += cr[a, m] * p2r[m] - ci[a, m] * p2i[m]
                    ri += cr[a, m] * p2i[m] + ci[a, m] * p2r[m]
                tr += rr * z1r - ri * z1i
                ti += rr * z1i + ri * z1r
            out[j] = cr[K, K] + 2.0 * tr


def _eval_numpy(lattice: FrequencyLattice, coef: np.ndarray, W: np.ndarray) -> np.ndarray:
    k = lattice.k_flat.astype(float)
    flat = coef.ravel()
    out = np.empty(W.shape[0])
    chunk = max(1, 2_000_000 // max(1, flat.size))
    for i in range(0, W.shape[0], chunk):
        phases = np.exp(1j * (W[i : i + chunk] @ k.T))
        out[i : i + chunk] = (phases @ flat).real
    return out


def _eval_at_angles(lattice: FrequencyLattice, coef: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Sum the coefficient box at arbitrary torus angles W, shape (npts, d)."""
    if _USE_NUMBA and lattice.d in (1, 2):
        cr = np.ascontiguousarray(coef.real)
        ci = np.ascontiguousarray(coef.imag)
        out = np.empty(W.shape[0])
        if lattice.d == 1:
            _kernel_eval_1d(cr, ci, lattice.K, np.ascontiguousarray(W[:, 0]), out)
        else:
            _kernel_eval_2d(
                cr,
                ci,
                lattice.K,
                np.ascontiguousarray(W[:, 0]),
                np.ascontiguousarray(W[:, 1]),
                out,
            )
        return out
    return _eval_numpy(lattice, coef, W)


# Public operations


def sample_grid(f: TrigPoly, M: Optional[int] = None) -> GridData:
    """Sample a field on the M^d torus grid (exact for represented modes)."""
    lat = f.lattice
    M = _check_M(lat, M if M is not None else default_grid(lat.K))
    return GridData(lat, M, _sample_values(lat, f.coef, M))


def project_to_lattice(grid: GridData):
    """Project grid samples onto the coefficient box.

    Returns (poly, aliased_mass); the mass is the l1 spectrum content in the
    annulus K < |k|_inf <= M/2 that the projection discards.
    """
    coef, aliased = _project_values(grid.lattice, np.asarray(grid.values), grid.M)
    return TrigPoly(grid.lattice, coef, symmetrize=False), aliased


def compose(
    g: Union[TrigPoly, VectorField],
    f: VectorField,
    M: Optional[int] = None,
) -> CompositionReport:
    """Compose g with the map x + f(x) through the torus skew shift.

    g is evaluated by direct mode summation at the shifted grid points and
    projected back to the box; the report carries the discarded l1 mass
    (summed over components for vector g). Composition with f = 0 returns g
    unchanged with zero mass.
    """
    lat = _join_lattices(g.lattice, f.lattice)
    comps_f = [_embed(c, lat) for c in f.components]
    M = _check_M(lat, M if M is not None else default_grid(lat.K))

    if all(np.count_nonzero(c.coef) == 0 for c in comps_f):
        return CompositionReport(g, 0.0)

    disp = [_sample_values(lat, c.coef, M) for c in comps_f]
    W = _shifted_angles(lat, M, disp)

    def one(scalar: TrigPoly):
        vals = _eval_at_angles(lat, _embed(scalar, lat).coef, W).reshape((M,) * lat.d)
        coef, mass = _project_values(lat, vals, M)
        return TrigPoly(lat, coef, symmetrize=False), mass

    if isinstance(g, VectorField):
        pairs = [one(c) for c in g.components]
        return CompositionReport(
            VectorField([p for p, _ in pairs]), float(sum(m for _, m in pairs))
        )
    poly, mass = one(g)
    return CompositionReport(poly, float(mass))


def pointwise_product_dealiased(f: TrigPoly, g: TrigPoly, M: Optional[int] = None):
    """Product on the grid, projected back to the box.

    Returns (product, aliased_mass). With M >= 3K + 1 the retained window
    equals the coefficient convolution of `multiply` exactly (up to
    roundoff); the default grid satisfies this.
    """
    lat = _join_lattices(f.lattice, g.lattice)
    M = _check_M(lat, M if M is not None else default_grid(lat.K))
    vals = _sample_values(lat, _embed(f, lat).coef, M) * _sample_values(
        lat, _embed(g, lat).coef, M
    )
    coef, mass = _project_values(lat, vals, M)
    return TrigPoly(lat, coef, symmetrize=False), float(mass)


def reciprocal(f: TrigPoly, eps: float, M: Optional[int] = None):
    """Grid reciprocal 1/f projected to the box, with its residual.

    Requires min |f| > eps > 0 on the grid (raises LowerBoundViolated
    otherwise). Returns (r, residual) where residual = sup |f r - 1| on the
    grid; the caller judges whether the truncation tail is acceptable.
    """
    if not eps > 0.0:
        raise InvalidValue(f"eps must be positive, got {eps!r}")
    lat = f.lattice
    M = _check_M(lat, M if M is not None else default_grid(lat.K))
    fv = _sample_values(lat, f.coef, M)
    low = float(np.min(np.abs(fv)))
    if low <= eps:
        raise LowerBoundViolated(f"grid min |f| = {low:.3e} is not above eps = {eps:.3e}")
    coef, _ = _project_values(lat, 1.0 / fv, M)
    r = TrigPoly(lat, coef, symmetrize=False)
    residual = float(np.max(np.abs(fv * _sample_values(lat, r.coef, M) - 1.0)))
    return r, residual
