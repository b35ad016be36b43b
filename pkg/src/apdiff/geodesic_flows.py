"""Geodesic flow of the right-invariant Sobolev-type metric, and both
exponential maps.

The Lagrangian form evolves (phi, v) with phi(t) = id + f(t) and

    d/dt phi = v,
    d/dt v   = R_phi A^{-1} B(R_{phi^{-1}} v),
    B(u)     = A[(grad u) u] - grad[A u] u - (div u I + (grad u)^T) A u,

where A = I - alpha^2 Laplace acts diagonally on coefficients. The Eulerian
form evolves the momentum m = A u by

    d/dt m = -[(grad m) u + (div u) m + (grad u)^T m].

Both integrators use classical RK4 (Heun available) on the coefficient
vector, with products dealiased on the torus grid and composition by direct
mode summation. The inner inverse phi^{-1} is recomputed at every stage,
warm started from the previous step's inverse for the same stage slot.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from .ap_algebra import (
    FrequencyLattice,
    TrigPoly,
    VectorField,
    inner_product_alpha,
    invert_A_alpha,
    linear_combine,
)
from .diff_group import (
    ApDiffeo,
    invert_diffeo,
    make_diffeo,
    _invert_displacement_on_grid,
)
from .errors import (
    BeyondBlowup,
    InvalidValue,
    MarginViolated,
    NoConvergence,
    SolverError,
    StepFailure,
)
from .torus_engine import (
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
    "SolverConfig",
    "GeodesicState",
    "EulerianState",
    "TrajectoryLog",
    "GeodesicResult",
    "EulerianResult",
    "b_alpha",
    "geodesic_rhs",
    "integrate_geodesic",
    "eulerian_velocity",
    "exp_riemannian",
    "exp_lie",
    "directional_derivative",
    "metric_nu_alpha",
    "energy",
    "integrate_eulerian_ch",
    "burgers_blowup_time",
    "blowup_time",
    "burgers_solution",
]


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping and inner-solve parameters.

    M defaults to the dealias grid 2(2K + 1) rounded to a fast FFT length;
    m_check to the denser determinant grid 4(2K + 1). energy_log_stride
    controls how often trajectory rows are recorded.
    """

    alpha: float = 1.0
    dt: float = 1e-3
    t_final: float = 1.0
    integrator: str = "rk4"
    M: Optional[int] = None
    m_check: Optional[int] = None
    eps_min: float = 1e-6
    inversion_tol: float = 1e-13
    inversion_max_iter: int = 100
    energy_log_stride: int = 1
    snapshot_stride: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise InvalidValue(f"alpha must be finite and >= 0, got {self.alpha!r}")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise InvalidValue(f"dt must be positive, got {self.dt!r}")
        if not (self.t_final >= 0 and np.isfinite(self.t_final)):
            raise InvalidValue(f"t_final must be >= 0, got {self.t_final!r}")
        if self.integrator not in ("rk4", "heun"):
            raise InvalidValue(f"integrator must be 'rk4' or 'heun', got {self.integrator!r}")
        if self.energy_log_stride < 1:
            raise InvalidValue("energy_log_stride must be >= 1")
        if self.snapshot_stride < 0:
            raise InvalidValue("snapshot_stride must be >= 0")


@dataclass(frozen=True)
class GeodesicState:
    """Lagrangian state (phi, v) at time t; v is the material velocity."""

    phi: ApDiffeo
    v: VectorField
    t: float


@dataclass(frozen=True)
class EulerianState:
    """Velocity and momentum at time t, with m = A u maintained exactly.

    The integrator advances m and recovers u = A^{-1} m, so the pair never
    drifts apart beyond roundoff.
    """

    u: VectorField
    m: VectorField
    t: float


@dataclass
class TrajectoryLog:
    """Per-step scalars in CSV column order."""

    t: List[float] = field(default_factory=list)
    energy: List[float] = field(default_factory=list)
    sup_norm_u: List[float] = field(default_factory=list)
    margin: List[float] = field(default_factory=list)
    aliased_mass: List[float] = field(default_factory=list)
    inversion_iters: List[int] = field(default_factory=list)

    COLUMNS = ("t", "energy", "sup_norm_u", "margin", "aliased_mass", "inversion_iters")

    def append(self, t, energy, sup_norm_u, margin, aliased_mass, inversion_iters):
        self.t.append(float(t))
        self.energy.append(float(energy))
        self.sup_norm_u.append(float(sup_norm_u))
        self.margin.append(float(margin))
        self.aliased_mass.append(float(aliased_mass))
        self.inversion_iters.append(int(inversion_iters))

    def rows(self):
        for i in range(len(self.t)):
            yield (
                self.t[i],
                self.energy[i],
                self.sup_norm_u[i],
                self.margin[i],
                self.aliased_mass[i],
                self.inversion_iters[i],
            )


@dataclass(frozen=True)
class GeodesicResult:
    """Final state, scalar logs, and optional state snapshots.

    snapshots holds intermediate GeodesicState values every
    cfg.snapshot_stride steps (empty when the stride is 0); the final state
    always lives in `state`.
    """

    state: GeodesicState
    trajectory: TrajectoryLog
    snapshots: Tuple[GeodesicState, ...] = ()


@dataclass(frozen=True)
class EulerianResult:
    state: EulerianState
    trajectory: TrajectoryLog
    snapshots: Tuple[EulerianState, ...] = ()


# Internal helpers on raw coefficient stacks (shape (n,) + box).


def _stack(vf: VectorField) -> np.ndarray:
    return np.stack([np.asarray(c.coef) for c in vf.components])


def _unstack(lattice: FrequencyLattice, arr: np.ndarray) -> VectorField:
    return VectorField([TrigPoly(lattice, a, symmetrize=False) for a in arr])


class _SpectralKit:
    """Cached per-run geometry: grids, multipliers, derivative symbols."""

    def __init__(self, lattice: FrequencyLattice, alpha: float, M: int):
        self.lat = lattice
        self.alpha = float(alpha)
        self.M = M
        self.mult = lattice.multiplier(alpha)
        self.dsym = [1j * lattice.lam_grid(axis) for axis in range(lattice.n)]
        self.theta = _theta_flat(lattice.d, M)

    def sample(self, coef: np.ndarray) -> np.ndarray:
        return _sample_values(self.lat, coef, self.M)

    def project(self, values: np.ndarray):
        return _project_values(self.lat, values, self.M)

    def det_min(self, F: np.ndarray) -> float:
        """Grid min of det(I + [d_x f]) for displacement coefficients F."""
        n = self.lat.n
        if n == 1:
            return float(np.min(1.0 + self.sample(F[0] * self.dsym[0])))
        shape = (self.M,) * self.lat.d
        jac = np.empty(shape + (n, n))
        for r in range(n):
            for c in range(n):
                jac[..., r, c] = self.sample(F[r] * self.dsym[c])
                if r == c:
                    jac[..., r, c] += 1.0
        return float(np.min(np.linalg.det(jac)))

    def b_alpha_hat(self, U: np.ndarray):
        """B(u) coefficients from velocity coefficients U, with grid mass.

        Every product is formed pointwise on the M grid from band-limited
        factors and projected back; the summed annulus mass is returned.
        """
        lat, n = self.lat, self.lat.n
        Mhat = U * self.mult
        u_vals = [self.sample(U[r]) for r in range(n)]
        du_vals = [[self.sample(U[r] * self.dsym[c]) for c in range(n)] for r in range(n)]
        m_vals = [self.sample(Mhat[r]) for r in range(n)]
        dm_vals = [[self.sample(Mhat[r] * self.dsym[c]) for c in range(n)] for r in range(n)]
        div_vals = du_vals[0][0].copy()
        for r in range(1, n):
            div_vals += du_vals[r][r]
        B = np.empty_like(U)
        mass = 0.0
        for r in range(n):
            t1 = np.zeros_like(u_vals[0])
            t23 = div_vals * m_vals[r]
            for c in range(n):
                t1 += du_vals[r][c] * u_vals[c]
                t23 += dm_vals[r][c] * u_vals[c] + du_vals[c][r] * m_vals[c]
            c1, m1 = self.project(t1)
            c23, m23 = self.project(t23)
            B[r] = self.mult * c1 - c23
            mass += m1 + m23
        return B, float(mass), u_vals


def b_alpha(u: VectorField, alpha: float, M: Optional[int] = None) -> VectorField:
    """Quadratic term B(u) = A[(grad u) u] - grad[A u] u - (div u I + (grad u)^T) A u.

    Products are formed on the dealias grid and projected back to the box.
    """
    lat = u.lattice
    M = _check_M(lat, M if M is not None else default_grid(lat.K))
    kit = _SpectralKit(lat, float(alpha), M)
    B, _, _ = kit.b_alpha_hat(_stack(u).astype(complex))
    return _unstack(lat, B)


class _InverseMemory:
    """Warm starts for the per-stage inverse displacement."""

    def __init__(self, slots: int):
        self.hist = [[] for _ in range(slots)]

    def warm(self, slot: int) -> Optional[np.ndarray]:
        h = self.hist[slot]
        if len(h) == 4:
            return 4.0 * (h[0] + h[2]) - 6.0 * h[1] - h[3]
        if len(h) == 3:
            return 3.0 * (h[0] - h[1]) + h[2]
        if len(h) == 2:
            return 2.0 * h[0] - h[1]
        if len(h) == 1:
            return h[0].copy()
        return None

    def push(self, slot: int, G: np.ndarray):
        h = self.hist[slot]
        h.insert(0, G)
        del h[4:]


def _geodesic_stage(kit: _SpectralKit, cfg: SolverConfig, F, V, memory, slot, t):
    """One right-hand-side evaluation; returns (dV, diagnostics)."""
    lat = kit.lat
    det_min = kit.det_min(F)
    if not det_min > cfg.eps_min:
        raise MarginViolated(det_min, cfg.eps_min)
    warm = memory.warm(slot) if memory is not None else None
    G, iters, _ = _invert_displacement_on_grid(
        lat,
        list(F),
        kit.M,
        cfg.inversion_tol,
        cfg.inversion_max_iter,
        warm=warm,
    )
    if memory is not None:
        memory.push(slot, G)
    shape = (kit.M,) * lat.d
    Wpsi = _shifted_angles(lat, kit.M, [G[r].reshape(shape) for r in range(lat.n)])
    U = np.empty_like(V)
    mass = 0.0
    for r in range(lat.n):
        vals = _eval_at_angles(lat, V[r], Wpsi).reshape(shape)
        U[r], m_r = kit.project(vals)
        mass += m_r
    Bhat, mass_b, u_vals = kit.b_alpha_hat(U)
    What = Bhat / kit.mult
    Wphi = _shifted_angles(lat, kit.M, [kit.sample(F[r]) for r in range(lat.n)])
    dV = np.empty_like(V)
    for r in range(lat.n):
        vals = _eval_at_angles(lat, What[r], Wphi).reshape(shape)
        dV[r], m_r = kit.project(vals)
        mass += m_r
    mass += mass_b
    sup_u = max(float(np.max(np.abs(uv))) for uv in u_vals)
    energy_val = float(np.sum(kit.mult * (U * np.conj(U)).sum(axis=0)).real)
    diag = {
        "iters": iters,
        "mass": float(mass),
        "margin": det_min - 1e-9,
        "sup_u": sup_u,
        "energy": energy_val,
        "U": U,
    }
    return dV, diag


def _time_grid(dt: float, t_final: float):
    """Number of steps and the (possibly shorter) last step.

    Uniform steps whenever t_final is an integer multiple of dt up to
    rounding; otherwise the final step is shortened to land on t_final.
    """
    if t_final == 0.0:
        return 0, dt
    n_round = int(round(t_final / dt))
    if n_round > 0 and abs(n_round * dt - t_final) <= 1e-9 * max(1.0, t_final):
        return n_round, dt
    n_whole = int(math.floor(t_final / dt))
    rem = t_final - n_whole * dt
    if rem > 1e-12 * max(1.0, t_final):
        return n_whole + 1, rem
    return n_whole, dt


def _geo_checkpoint(lat, cfg, F, V, t):
    """Build the state for a failure checkpoint; None if it cannot be
    represented as a diffeomorphism any more."""
    try:
        phi = make_diffeo(_unstack(lat, F), eps_min=cfg.eps_min, m_check=cfg.m_check)
    except SolverError:
        return None
    return GeodesicState(phi, _unstack(lat, V), t)


def integrate_geodesic(u0: VectorField, cfg: SolverConfig) -> GeodesicResult:
    """Integrate the Lagrangian system from phi = id, v = u0.

    Returns the final state and a trajectory log (t, energy, sup |u|,
    margin, aliased mass, inversion iterations per step). Raises StepFailure
    when a stage loses the Jacobian margin or the inner inverse stalls.
    """
    if cfg.alpha == 0.0:
        warnings.warn(
            "alpha = 0 geodesic integration: conservation and equivalence "
            "guarantees assume alpha > 0",
            stacklevel=2,
        )
    lat = u0.lattice
    M = _check_M(lat, cfg.M if cfg.M is not None else default_grid(lat.K))
    kit = _SpectralKit(lat, cfg.alpha, M)
    memory = _InverseMemory(4 if cfg.integrator == "rk4" else 2)
    F = np.zeros((lat.n,) + lat.shape, dtype=complex)
    V = _stack(u0).astype(complex)
    log = TrajectoryLog()
    snapshots = []
    n_steps, last_dt = _time_grid(cfg.dt, cfg.t_final)
    t = 0.0
    pending_iters = 0
    prev_F, prev_V, prev_t = F, V, 0.0
    for step in range(n_steps + 1):
        final = step == n_steps
        dt = last_dt if step == n_steps - 1 else cfg.dt
        try:
            dV1, diag = _geodesic_stage(kit, cfg, F, V, memory, 0, t)
        except SolverError as exc:
            err = StepFailure(t, str(exc))
            err.checkpoint = _geo_checkpoint(lat, cfg, prev_F, prev_V, prev_t)
            raise err from exc
        prev_F, prev_V, prev_t = F, V, t
        if step % cfg.energy_log_stride == 0 or final:
            log.append(
                t, diag["energy"], diag["sup_u"], diag["margin"], diag["mass"], pending_iters
            )
        if cfg.snapshot_stride and step % cfg.snapshot_stride == 0 and not final:
            snapshots.append(
                GeodesicState(
                    make_diffeo(_unstack(lat, F), eps_min=cfg.eps_min, m_check=cfg.m_check),
                    _unstack(lat, V),
                    t,
                )
            )
        if final:
            break
        try:
            if cfg.integrator == "rk4":
                k1F, k1V = V, dV1
                dV2, d2 = _geodesic_stage(
                    kit, cfg, F + 0.5 * dt * k1F, V + 0.5 * dt * k1V, memory, 1, t + 0.5 * dt
                )
                k2F, k2V = V + 0.5 * dt * k1V, dV2
                dV3, d3 = _geodesic_stage(
                    kit, cfg, F + 0.5 * dt * k2F, V + 0.5 * dt * k2V, memory, 2, t + 0.5 * dt
                )
                k3F, k3V = V + 0.5 * dt * k2V, dV3
                dV4, d4 = _geodesic_stage(
                    kit, cfg, F + dt * k3F, V + dt * k3V, memory, 3, t + dt
                )
                k4F, k4V = V + dt * k3V, dV4
                F = F + (dt / 6.0) * (k1F + 2.0 * k2F + 2.0 * k3F + k4F)
                V = V + (dt / 6.0) * (k1V + 2.0 * k2V + 2.0 * k3V + k4V)
                pending_iters = diag["iters"] + d2["iters"] + d3["iters"] + d4["iters"]
            else:
                k1F, k1V = V, dV1
                dV2, d2 = _geodesic_stage(
                    kit, cfg, F + dt * k1F, V + dt * k1V, memory, 1, t + dt
                )
                F = F + 0.5 * dt * (k1F + (V + dt * k1V))
                V = V + 0.5 * dt * (k1V + dV2)
                pending_iters = diag["iters"] + d2["iters"]
        except SolverError as exc:
            err = StepFailure(t, str(exc))
            err.checkpoint = _geo_checkpoint(lat, cfg, F, V, t)
            raise err from exc
        t += dt
    phi = make_diffeo(_unstack(lat, F), eps_min=cfg.eps_min, m_check=cfg.m_check)
    state = GeodesicState(phi, _unstack(lat, V), cfg.t_final)
    return GeodesicResult(state, log, tuple(snapshots))


def geodesic_rhs(state: GeodesicState, cfg: SolverConfig):
    """(d/dt phi, d/dt v) at a state: (v, R_phi A^{-1} B(R_{phi^{-1}} v))."""
    lat = state.phi.lattice
    M = _check_M(lat, cfg.M if cfg.M is not None else default_grid(lat.K))
    kit = _SpectralKit(lat, cfg.alpha, M)
    F = _stack(state.phi.displacement).astype(complex)
    V = _stack(state.v).astype(complex)
    dV, _ = _geodesic_stage(kit, cfg, F, V, None, 0, state.t)
    return state.v, _unstack(lat, dV)


def eulerian_velocity(state: GeodesicState, cfg: SolverConfig) -> VectorField:
    """u = v o phi^{-1}, the right-translated velocity of a Lagrangian state."""
    psi, _ = invert_diffeo(
        state.phi, tol=max(cfg.inversion_tol, 1e-13), max_iter=cfg.inversion_max_iter, M=cfg.M
    )
    return compose(state.v, psi.displacement, M=cfg.M).result


def exp_riemannian(u0: VectorField, cfg: SolverConfig) -> ApDiffeo:
    """Riemannian exponential: time-1 flow of the geodesic with phi(0) = id."""
    if cfg.alpha <= 0:
        raise InvalidValue("the Riemannian exponential requires alpha > 0")
    result = integrate_geodesic(u0, replace(cfg, t_final=1.0))
    return result.state.phi


def exp_lie(u: VectorField, cfg: SolverConfig) -> ApDiffeo:
    """Lie-group exponential: time-1 flow of d/dt phi = u o phi."""
    lat = u.lattice
    M = _check_M(lat, cfg.M if cfg.M is not None else default_grid(lat.K))
    kit = _SpectralKit(lat, cfg.alpha, M)
    U = _stack(u).astype(complex)
    shape = (M,) * lat.d

    def rhs(F: np.ndarray, t: float) -> np.ndarray:
        det_min = kit.det_min(F)
        if not det_min > cfg.eps_min:
            raise MarginViolated(det_min, cfg.eps_min)
        W = _shifted_angles(lat, M, [kit.sample(F[r]) for r in range(lat.n)])
        out = np.empty_like(F)
        for r in range(lat.n):
            vals = _eval_at_angles(lat, U[r], W).reshape(shape)
            out[r], _ = kit.project(vals)
        return out

    F = np.zeros((lat.n,) + lat.shape, dtype=complex)
    n_steps, last_dt = _time_grid(cfg.dt, 1.0)
    t = 0.0
    for step in range(n_steps):
        dt = last_dt if step == n_steps - 1 else cfg.dt
        try:
            k1 = rhs(F, t)
            if cfg.integrator == "rk4":
                k2 = rhs(F + 0.5 * dt * k1, t + 0.5 * dt)
                k3 = rhs(F + 0.5 * dt * k2, t + 0.5 * dt)
                k4 = rhs(F + dt * k3, t + dt)
                F = F + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            else:
                k2 = rhs(F + dt * k1, t + dt)
                F = F + 0.5 * dt * (k1 + k2)
        except SolverError as exc:
            err = StepFailure(t, str(exc))
            err.checkpoint = _geo_checkpoint(lat, cfg, F, _stack(u).astype(complex), t)
            raise err from exc
        t += dt
    return make_diffeo(_unstack(lat, F), eps_min=cfg.eps_min, m_check=cfg.m_check)


def directional_derivative(
    map_fn: Callable[[VectorField], ApDiffeo],
    u: VectorField,
    du: VectorField,
    h: float = 1e-3,
) -> VectorField:
    """Central-difference derivative of a map into the group.

    Returns (map(u + h du).displacement - map(u - h du).displacement) / 2h.
    """
    if h <= 0:
        raise InvalidValue("h must be positive")
    plus = map_fn(linear_combine([1.0, h], [u, du]))
    minus = map_fn(linear_combine([1.0, -h], [u, du]))
    return linear_combine(
        [0.5 / h, -0.5 / h], [plus.displacement, minus.displacement]
    )


def metric_nu_alpha(
    phi: ApDiffeo,
    xi: VectorField,
    eta: VectorField,
    alpha: float,
    M: Optional[int] = None,
    tol: float = 1e-12,
) -> float:
    """Right-invariant metric nu_alpha(phi)(xi, eta) = <xi o phi^{-1}, eta o phi^{-1}>."""
    if alpha <= 0:
        raise InvalidValue("the right-invariant metric requires alpha > 0")
    psi, _ = invert_diffeo(phi, tol=tol, M=M)
    a = compose(xi, psi.displacement, M=M).result
    b = compose(eta, psi.displacement, M=M).result
    return inner_product_alpha(a, b, alpha)


def energy(state: GeodesicState, alpha: float, M: Optional[int] = None) -> float:
    """Kinetic energy nu_alpha(phi)(v, v) of a Lagrangian state."""
    return metric_nu_alpha(state.phi, state.v, state.v, alpha, M=M)


def integrate_eulerian_ch(u0: VectorField, cfg: SolverConfig) -> EulerianResult:
    """Integrate the momentum form m_t = -[(grad m) u + (div u) m + (grad u)^T m].

    Admits alpha = 0 (then m = u); a gradient guard sup |grad u| > 1/(10 dt)
    aborts the run near a steepening breakdown.
    """
    lat = u0.lattice
    M = _check_M(lat, cfg.M if cfg.M is not None else default_grid(lat.K))
    kit = _SpectralKit(lat, cfg.alpha, M)
    n = lat.n
    grad_cap = 1.0 / (10.0 * cfg.dt)

    def rhs(Mc: np.ndarray, t: float):
        U = Mc / kit.mult
        u_vals = [kit.sample(U[r]) for r in range(n)]
        du_vals = [[kit.sample(U[r] * kit.dsym[c]) for c in range(n)] for r in range(n)]
        sup_grad = max(float(np.max(np.abs(g))) for row in du_vals for g in row)
        if sup_grad > grad_cap:
            raise StepFailure(
                t, f"gradient magnitude {sup_grad:.3e} exceeds guard {grad_cap:.3e}"
            )
        m_vals = [kit.sample(Mc[r]) for r in range(n)]
        dm_vals = [[kit.sample(Mc[r] * kit.dsym[c]) for c in range(n)] for r in range(n)]
        div_vals = du_vals[0][0].copy()
        for r in range(1, n):
            div_vals += du_vals[r][r]
        out = np.empty_like(Mc)
        mass = 0.0
        for r in range(n):
            acc = div_vals * m_vals[r]
            for c in range(n):
                acc += dm_vals[r][c] * u_vals[c] + du_vals[c][r] * m_vals[c]
            coef, m_r = kit.project(acc)
            out[r] = -coef
            mass += m_r
        diag = {
            "sup_u": max(float(np.max(np.abs(v))) for v in u_vals),
            "energy": float(np.sum(kit.mult * (U * np.conj(U)).sum(axis=0)).real),
            "mass": float(mass),
        }
        return out, diag

    def checkpoint_at(Mc_good: np.ndarray, t_good: float) -> EulerianState:
        return EulerianState(
            _unstack(lat, Mc_good / kit.mult), _unstack(lat, Mc_good), t_good
        )

    Mc = (_stack(u0) * kit.mult).astype(complex)
    log = TrajectoryLog()
    snapshots = []
    n_steps, last_dt = _time_grid(cfg.dt, cfg.t_final)
    t = 0.0
    prev_Mc, prev_t = Mc, 0.0
    for step in range(n_steps + 1):
        final = step == n_steps
        try:
            k1, diag = rhs(Mc, t)
        except StepFailure as exc:
            exc.checkpoint = checkpoint_at(prev_Mc, prev_t)
            raise
        prev_Mc, prev_t = Mc, t
        if step % cfg.energy_log_stride == 0 or final:
            log.append(t, diag["energy"], diag["sup_u"], float("nan"), diag["mass"], 0)
        if cfg.snapshot_stride and step % cfg.snapshot_stride == 0 and not final:
            snapshots.append(
                EulerianState(_unstack(lat, Mc / kit.mult), _unstack(lat, Mc), t)
            )
        if final:
            break
        dt = last_dt if step == n_steps - 1 else cfg.dt
        try:
            if cfg.integrator == "rk4":
                k2, _ = rhs(Mc + 0.5 * dt * k1, t + 0.5 * dt)
                k3, _ = rhs(Mc + 0.5 * dt * k2, t + 0.5 * dt)
                k4, _ = rhs(Mc + dt * k3, t + dt)
                Mc = Mc + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            else:
                k2, _ = rhs(Mc + dt * k1, t + dt)
                Mc = Mc + 0.5 * dt * (k1 + k2)
        except StepFailure as exc:
            exc.checkpoint = checkpoint_at(Mc, t)
            raise
        t += dt
    m = _unstack(lat, Mc)
    u = _unstack(lat, Mc / kit.mult)
    return EulerianResult(EulerianState(u, m, cfg.t_final), log, tuple(snapshots))


def _as_vector(u0: Union[TrigPoly, VectorField]) -> VectorField:
    if isinstance(u0, VectorField):
        return u0
    if u0.lattice.n != 1:
        raise InvalidValue("a scalar initial datum needs a one-dimensional range")
    return VectorField([u0])


def burgers_blowup_time(u0: Union[TrigPoly, VectorField], M: Optional[int] = None) -> float:
    """Breakdown time 1/rho0 with rho0 = -min(0, inf 3 du0): inf on the grid."""
    u = _as_vector(u0)
    lat = u.lattice
    if lat.n != 1:
        raise InvalidValue("the dispersionless solution is one-dimensional")
    M = _check_M(lat, M if M is not None else 4 * lat.side)
    slope = _sample_values(lat, np.asarray(u.components[0].coef) * (1j * lat.lam_grid(0)), M)
    rho0 = -min(0.0, 3.0 * float(np.min(slope)))
    return math.inf if rho0 == 0.0 else 1.0 / rho0


def burgers_solution(
    u0: Union[TrigPoly, VectorField],
    t: float,
    M: Optional[int] = None,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> Union[TrigPoly, VectorField]:
    """Characteristics solution u(t) = u0 o psi(t)^{-1}, psi = id + 3 t u0.

    Valid for t at most 90 percent of the breakdown time (BeyondBlowup
    otherwise). Exact up to truncation while the characteristics stay
    invertible. Near the validity boundary the inverse contracts slowly,
    hence the generous iteration cap.
    """
    u = _as_vector(u0)
    t_blow = burgers_blowup_time(u, M=M)
    if not t <= 0.9 * t_blow:
        raise BeyondBlowup(t, t_blow)
    if t == 0.0:
        return u0
    lat = u.lattice
    M = _check_M(lat, M if M is not None else default_grid(lat.K))
    disp = linear_combine([3.0 * t], [u])
    make_diffeo(disp, eps_min=1e-9)
    # The inverse characteristic map develops a long spectral tail as t
    # approaches the validity boundary, so compose on its grid samples
    # rather than through a projected inverse.
    coefs = [np.asarray(c.coef) for c in disp.components]
    G, _, _ = _invert_displacement_on_grid(lat, coefs, M, tol, max_iter)
    shape = (M,) * lat.d
    W = _shifted_angles(lat, M, [G[r].reshape(shape) for r in range(lat.n)])
    comps = []
    for r in range(lat.n):
        vals = _eval_at_angles(lat, np.asarray(u.components[r].coef), W).reshape(shape)
        coef, _ = _project_values(lat, vals, M)
        comps.append(TrigPoly(lat, coef, symmetrize=False))
    out = VectorField(comps)
    return out if isinstance(u0, VectorField) else out.components[0]


blowup_time = burgers_blowup_time
