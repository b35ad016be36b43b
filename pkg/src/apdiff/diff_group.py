"""The group of near-identity maps x + f(x) with a uniform Jacobian margin.

A map phi = id + f qualifies when det(I + [d_x f]) stays above a positive
floor eps_min, checked on a dense torus grid (a lower-bound certificate, not
a proof over all of R^n; the grid density is recorded with the value).
Composition runs through the torus engine, inversion solves the fixed point

    G(eta) = -F(eta + Omega^T G(eta))

for the inverse displacement on the grid, which is the coefficient form of
g = -f o phi^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .ap_algebra import (
    FrequencyLattice,
    TrigPoly,
    VectorField,
    derivative,
    linear_combine,
    shift,
    _join_lattices,
    _embed,
)
from .errors import InvalidValue, MarginViolated, NoConvergence
from .torus_engine import (
    CompositionReport,
    compose,
    default_grid,
    _check_M,
    _eval_at_angles,
    _project_values,
    _sample_values,
    _shifted_angles,
    _theta_flat,
)

__all__ = [
    "MatrixField",
    "ApDiffeo",
    "make_diffeo",
    "jacobian",
    "compose_diffeo",
    "invert_diffeo",
    "shift_diffeo",
    "default_check_grid",
]

_MARGIN_SAFETY = 1e-9


def default_check_grid(K: int) -> int:
    """Default determinant-check grid, 4(2K + 1)."""
    return 4 * (2 * K + 1)


@dataclass(frozen=True)
class MatrixField:
    """n x n matrix of scalar fields (row-major tuple of tuples)."""

    entries: tuple

    def __post_init__(self):
        n = len(self.entries)
        for row in self.entries:
            if len(row) != n:
                raise InvalidValue("matrix field must be square")

    def __getitem__(self, rc):
        r, c = rc
        return self.entries[r][c]

    @property
    def n(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class ApDiffeo:
    """Validated map x + f(x) with margin = grid-min det - safety.

    margin certifies det(I + [d_x f]) > eps_min on the m_check grid at
    construction time; it travels with the value and is revalidated on load.
    """

    displacement: VectorField
    eps_min: float
    margin: float
    m_check: int

    @property
    def lattice(self) -> FrequencyLattice:
        return self.displacement.lattice

    def evaluate(self, x) -> np.ndarray:
        """phi(x) = x + f(x)."""
        x = np.asarray(x, dtype=float)
        return x + self.displacement.evaluate(x)

    @classmethod
    def identity(cls, lattice: FrequencyLattice, eps_min: float = 1e-6) -> "ApDiffeo":
        return make_diffeo(VectorField.zeros(lattice), eps_min=eps_min)


def _det_grid_values(f: VectorField, M: int) -> np.ndarray:
    """det(I + [d_x f]) sampled on the M^d torus grid."""
    lat = f.lattice
    n = lat.n
    if n == 1:
        fx = derivative(f.components[0], 0)
        return 1.0 + _sample_values(lat, fx.coef, M)
    # general n: sample all Jacobian entries and take pointwise determinants
    jac = np.empty((M,) * lat.d + (n, n))
    for r in range(n):
        for c in range(n):
            vals = _sample_values(lat, derivative(f.components[r], c).coef, M)
            jac[..., r, c] = vals
            if r == c:
                jac[..., r, c] += 1.0
    return np.linalg.det(jac)


def make_diffeo(
    f: VectorField,
    eps_min: float = 1e-6,
    m_check: Optional[int] = None,
) -> ApDiffeo:
    """Validate x + f(x) as a group element.

    Succeeds iff the grid minimum of det(I + [d_x f]) over the m_check^d
    torus grid exceeds eps_min; stores margin = grid-min - 1e-9. Raises
    MarginViolated otherwise.
    """
    if eps_min <= 0:
        raise InvalidValue(f"eps_min must be positive, got {eps_min!r}")
    lat = f.lattice
    m_check = _check_M(lat, m_check if m_check is not None else default_check_grid(lat.K))
    grid_min = float(np.min(_det_grid_values(f, m_check)))
    if not grid_min > eps_min:
        raise MarginViolated(grid_min, eps_min)
    return ApDiffeo(f, float(eps_min), grid_min - _MARGIN_SAFETY, m_check)


def jacobian(phi: ApDiffeo) -> MatrixField:
    """Displacement Jacobian [d_x f], entry (r, c) = df_r/dx_c, exact on the
    coefficients. The map's full Jacobian is I plus this matrix."""
    f = phi.displacement
    lat = f.lattice
    rows = []
    for r in range(lat.n):
        row = tuple(derivative(f.components[r], c) for c in range(lat.n))
        rows.append(row)
    return MatrixField(tuple(rows))


def compose_diffeo(
    phi: ApDiffeo,
    psi: ApDiffeo,
    M: Optional[int] = None,
    eps_min: Optional[float] = None,
    m_check: Optional[int] = None,
) -> ApDiffeo:
    """Group product (phi o psi)(x) = x + g(x) + f(x + g(x)).

    The new displacement is g + f o psi (truncated on the grid route) and the
    margin of the result is revalidated from scratch.
    """
    f, g = phi.displacement, psi.displacement
    report = compose(f, g, M=M)
    h = linear_combine([1.0, 1.0], [g, report.result])
    return make_diffeo(
        h,
        eps_min=eps_min if eps_min is not None else max(phi.eps_min, psi.eps_min),
        m_check=m_check,
    )


def _invert_displacement_on_grid(
    lattice: FrequencyLattice,
    coefs: Sequence[np.ndarray],
    M: int,
    tol: float,
    max_iter: int,
    warm: Optional[np.ndarray] = None,
):
    """Damped fixed-point solve for the inverse displacement samples.

    coefs are the displacement coefficient boxes of phi = id + f. Iterates
    G <- -F(eta + Omega^T G) on the M^d grid from G = warm (or -F samples),
    damping halved on residual increase, floor 0.25. Returns (G, iterations,
    residual) where G has shape (n, M^d); raises NoConvergence on failure.
    """
    n = lattice.n
    npts = M**lattice.d
    fvals = np.stack([_sample_values(lattice, c, M).ravel() for c in coefs])
    G = fvals.copy() * -1.0 if warm is None else warm.copy()
    theta = _theta_flat(lattice.d, M)
    omega = lattice.omega
    beta = 1.0
    prev_res = np.inf
    W = np.empty_like(theta)
    for it in range(1, max_iter + 1):
        W[:] = theta
        for l in range(lattice.d):
            for r in range(n):
                W[:, l] += omega[r, l] * G[r]
        target = np.empty((n, npts))
        for r in range(n):
            target[r] = -_eval_at_angles(lattice, coefs[r], W)
        res = float(np.max(np.abs(target - G)))
        if res <= tol:
            return target, it, res
        if res > prev_res and beta > 0.25:
            beta = max(0.25, beta / 2.0)
        prev_res = res
        G = (1.0 - beta) * G + beta * target
    raise NoConvergence(max_iter, prev_res)


def invert_diffeo(
    phi: ApDiffeo,
    tol: float = 1e-10,
    max_iter: int = 100,
    M: Optional[int] = None,
) -> Tuple[ApDiffeo, int]:
    """Group inverse psi with phi o psi = psi o phi = id up to tol on the grid.

    Solves the displacement fixed point on the torus grid, projects onto the
    box, then verifies both composition residuals sup |phi(psi(x)) - x| and
    sup |psi(phi(x)) - x| over the grid; NoConvergence if either exceeds tol.
    Returns (psi, iterations).
    """
    lat = phi.lattice
    M = _check_M(lat, M if M is not None else default_grid(lat.K))
    coefs = [np.asarray(c.coef) for c in phi.displacement.components]
    G, iters, _ = _invert_displacement_on_grid(lat, coefs, M, tol, max_iter)

    comps = []
    for r in range(lat.n):
        coef, _ = _project_values(lat, G[r].reshape((M,) * lat.d), M)
        comps.append(TrigPoly(lat, coef, symmetrize=False))
    g = VectorField(comps)

    # Residuals of the projected inverse, both compositions, on the grid.
    gvals = [_sample_values(lat, c.coef, M) for c in g.components]
    W = _shifted_angles(lat, M, gvals)
    res_fwd = 0.0
    for r in range(lat.n):
        fg = _eval_at_angles(lat, coefs[r], W)
        res_fwd = max(res_fwd, float(np.max(np.abs(gvals[r].ravel() + fg))))
    fvals = [_sample_values(lat, c, M) for c in coefs]
    Wf = _shifted_angles(lat, M, fvals)
    res_bwd = 0.0
    for r in range(lat.n):
        gf = _eval_at_angles(lat, g.components[r].coef, Wf)
        res_bwd = max(res_bwd, float(np.max(np.abs(fvals[r].ravel() + gf))))
    residual = max(res_fwd, res_bwd)
    if residual > tol:
        raise NoConvergence(iters, residual, f"projected inverse residual {residual:.3e} exceeds tol {tol:.3e}")

    psi = make_diffeo(g, eps_min=phi.eps_min, m_check=phi.m_check)
    return psi, iters


def shift_diffeo(phi: ApDiffeo, c) -> ApDiffeo:
    """Conjugate by translation: displacement f(. + c).

    The determinant field translates with f, so its infimum and hence the
    margin carry over exactly; no revalidation (a grid recheck would move
    the margin by the sampling error of the check grid).
    """
    f_c = shift(phi.displacement, c)
    return ApDiffeo(f_c, phi.eps_min, phi.margin, phi.m_check)
