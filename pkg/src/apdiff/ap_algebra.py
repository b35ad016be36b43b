"""Real trigonometric polynomials on a finitely generated frequency module.

A scalar field is stored as

    f(x) = sum_k  c_k exp(i <Omega k, x>),   k integer, |k|_inf <= K,

with x in R^n, Omega a real n x d base matrix and c_{-k} = conj(c_k), so
every represented function is real valued. Coefficients live on the full
integer box in a dense complex array; the canonical half of the box (first
nonzero entry of k positive, plus k = 0 with a real coefficient) is what
gets serialized and counted. Values are immutable and all operations are
pure functions, so results are deterministic for fixed inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import InvalidLattice, InvalidValue, LatticeMismatch

__all__ = [
    "FrequencyLattice",
    "TrigPoly",
    "VectorField",
    "MetricParams",
    "make_lattice",
    "linear_combine",
    "multiply",
    "derivative",
    "shift",
    "bohr_mean",
    "inner_product_alpha",
    "apply_A_alpha",
    "invert_A_alpha",
    "evaluate",
]


class FrequencyLattice:
    """Frequency module Lambda(k) = Omega k truncated to |k|_inf <= K.

    Omega is an n x d real matrix whose columns are assumed rationally
    independent (a documented contract, not checked numerically: equality
    of distinct frequencies cannot be decided in floating point). K >= 0
    bounds the integer box. Lattices compare equal when (n, d, K) match and
    Omega agrees bit-exactly.
    """

    __slots__ = ("_omega", "_K", "_cache")

    def __init__(self, omega, K: int):
        omega = np.asarray(omega, dtype=float)
        if omega.ndim != 2:
            raise InvalidLattice(f"omega must be a 2-d matrix, got shape {omega.shape}")
        if omega.size == 0:
            raise InvalidLattice("omega must have at least one row and one column")
        if not np.all(np.isfinite(omega)):
            raise InvalidLattice("omega entries must be finite")
        if int(K) != K or K < 0:
            raise InvalidLattice(f"K must be a nonnegative integer, got {K!r}")
        self._omega = omega.copy()
        self._omega.flags.writeable = False
        self._K = int(K)
        self._cache: dict = {}

    @property
    def omega(self) -> np.ndarray:
        return self._omega

    @property
    def K(self) -> int:
        return self._K

    @property
    def n(self) -> int:
        return self._omega.shape[0]

    @property
    def d(self) -> int:
        return self._omega.shape[1]

    @property
    def side(self) -> int:
        """Points per axis of the integer box, 2K + 1."""
        return 2 * self._K + 1

    @property
    def shape(self) -> tuple:
        return (self.side,) * self.d

    @property
    def mode_count(self) -> int:
        return self.side**self.d

    @property
    def half_count(self) -> int:
        """Number of canonical modes, (mode_count + 1) // 2."""
        return (self.mode_count + 1) // 2

    def compatible(self, other: "FrequencyLattice") -> bool:
        """True when (n, d, Omega) agree bit-exactly (K may differ)."""
        return (
            self.n == other.n
            and self.d == other.d
            and self._omega.tobytes() == other._omega.tobytes()
        )

    def __eq__(self, other):
        if not isinstance(other, FrequencyLattice):
            return NotImplemented
        return self._K == other._K and self.compatible(other)

    def __hash__(self):
        return hash((self._K, self.n, self.d, self._omega.tobytes()))

    def __repr__(self):
        return f"FrequencyLattice(n={self.n}, d={self.d}, K={self.K})"

    # Cached geometry. Arrays are marked read-only before caching.

    def _cached(self, key, builder):
        try:
            return self._cache[key]
        except KeyError:
            value = builder()
            if isinstance(value, np.ndarray):
                value.flags.writeable = False
            self._cache[key] = value
            return value

    @property
    def k_flat(self) -> np.ndarray:
        """Integer modes, shape (mode_count, d), C order of the box."""

        def build():
            ax = np.arange(-self._K, self._K + 1)
            grids = np.meshgrid(*([ax] * self.d), indexing="ij")
            return np.stack([g.ravel() for g in grids], axis=1)

        return self._cached("k_flat", build)

    @property
    def lam_flat(self) -> np.ndarray:
        """Frequencies Lambda(k) = Omega k, shape (mode_count, n)."""
        return self._cached("lam_flat", lambda: self.k_flat @ self._omega.T)

    def lam_grid(self, axis: int) -> np.ndarray:
        """Component axis of Lambda(k) as a full-box array."""
        if not 0 <= axis < self.n:
            raise InvalidValue(f"derivative axis {axis} outside range(0, {self.n})")
        return self._cached(
            ("lam_grid", axis),
            lambda: self.lam_flat[:, axis].reshape(self.shape),
        )

    @property
    def lamsq_grid(self) -> np.ndarray:
        """|Lambda(k)|^2 on the full box."""
        return self._cached(
            "lamsq",
            lambda: np.sum(self.lam_flat**2, axis=1).reshape(self.shape),
        )

    def multiplier(self, alpha: float) -> np.ndarray:
        """Diagonal symbol 1 + alpha^2 |Lambda(k)|^2 of I - alpha^2 Laplace."""
        return self._cached(
            ("mult", float(alpha)),
            lambda: 1.0 + float(alpha) ** 2 * self.lamsq_grid,
        )

    @property
    def half_mask_flat(self) -> np.ndarray:
        """Boolean mask of canonical modes (first nonzero entry of k positive)."""

        def build():
            k = self.k_flat
            mask = np.zeros(k.shape[0], dtype=bool)
            undecided = np.ones(k.shape[0], dtype=bool)
            for axis in range(self.d):
                col = k[:, axis]
                mask |= undecided & (col > 0)
                undecided &= col == 0
            return mask

        return self._cached("half_mask", build)

    @property
    def center_index(self) -> tuple:
        """Box index of k = 0."""
        return (self._K,) * self.d


def make_lattice(omega, K: int) -> FrequencyLattice:
    """Build the truncated frequency module for base matrix Omega and cutoff K."""
    return FrequencyLattice(omega, K)


def _symmetrized(coef: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian subspace c_{-k} = conj(c_k)."""
    sym = 0.5 * (coef + np.conj(np.flip(coef)))
    return sym


class TrigPoly:
    """Immutable real trigonometric polynomial on a :class:`FrequencyLattice`."""

    __slots__ = ("lattice", "coef")

    def __init__(self, lattice: FrequencyLattice, coef, symmetrize: bool = True):
        coef = np.asarray(coef, dtype=complex)
        if coef.shape != lattice.shape:
            raise InvalidValue(
                f"coefficient array shape {coef.shape} does not match lattice box {lattice.shape}"
            )
        if not np.all(np.isfinite(coef)):
            raise InvalidValue("coefficients must be finite")
        if symmetrize:
            coef = _symmetrized(coef)
        else:
            coef = coef.copy()
        coef.flags.writeable = False
        self.lattice = lattice
        self.coef = coef

    # Constructors

    @classmethod
    def zeros(cls, lattice: FrequencyLattice) -> "TrigPoly":
        return cls(lattice, np.zeros(lattice.shape, dtype=complex), symmetrize=False)

    @classmethod
    def constant(cls, lattice: FrequencyLattice, value: float) -> "TrigPoly":
        coef = np.zeros(lattice.shape, dtype=complex)
        coef[lattice.center_index] = float(value)
        return cls(lattice, coef, symmetrize=False)

    @classmethod
    def from_modes(
        cls, lattice: FrequencyLattice, modes: Mapping[tuple, complex]
    ) -> "TrigPoly":
        """Build from canonical half-box modes {k: c_k}.

        Keys must be canonical (first nonzero entry positive, or k = 0 with a
        real coefficient); the mirrored conjugate entries are filled in.
        """
        coef = np.zeros(lattice.shape, dtype=complex)
        K = lattice.K
        for k, c in modes.items():
            k = tuple(int(q) for q in k)
            if len(k) != lattice.d:
                raise InvalidValue(f"mode {k} has length {len(k)}, expected d = {lattice.d}")
            if any(abs(q) > K for q in k):
                raise InvalidValue(f"mode {k} outside |k|_inf <= {K}")
            first = next((q for q in k if q != 0), 0)
            if first < 0:
                raise InvalidValue(f"mode {k} is not canonical (first nonzero entry negative)")
            c = complex(c)
            if first == 0:
                if c.imag != 0.0:
                    raise InvalidValue("k = 0 coefficient must be real")
                coef[lattice.center_index] = c.real
                continue
            idx = tuple(q + K for q in k)
            midx = tuple(-q + K for q in k)
            coef[idx] = c
            coef[midx] = np.conj(c)
        return cls(lattice, coef, symmetrize=False)

    @classmethod
    def cosine(cls, lattice: FrequencyLattice, k: Sequence[int], amplitude: float = 1.0) -> "TrigPoly":
        """amplitude * cos(<Lambda(k), x>) for a canonical mode k."""
        return cls.from_modes(lattice, {tuple(k): amplitude / 2.0})

    @classmethod
    def sine(cls, lattice: FrequencyLattice, k: Sequence[int], amplitude: float = 1.0) -> "TrigPoly":
        """amplitude * sin(<Lambda(k), x>) for a canonical mode k."""
        return cls.from_modes(lattice, {tuple(k): amplitude / 2j})

    # Introspection

    def half_modes(self) -> Iterator[tuple]:
        """Yield (k, c_k) over canonical modes with c_k != 0, in C order."""
        mask = self.lattice.half_mask_flat
        flat = self.coef.ravel()
        kf = self.lattice.k_flat
        center_flat = np.ravel_multi_index(self.lattice.center_index, self.lattice.shape)
        c0 = flat[center_flat]
        if c0 != 0:
            yield (0,) * self.lattice.d, complex(c0)
        for i in np.flatnonzero(mask):
            c = flat[i]
            if c != 0:
                yield tuple(int(q) for q in kf[i]), complex(c)

    def l1(self) -> float:
        """Coefficient l1 mass, sum_k |c_k| over the full box."""
        return float(np.sum(np.abs(self.coef)))

    def evaluate(self, x) -> Union[float, np.ndarray]:
        """Point evaluation by direct summation over all modes.

        x is a point of R^n (shape (n,)) or a batch (N, n). The full complex
        sum is taken in fixed mode order and the real part returned; the
        imaginary part is zero up to roundoff by Hermitian symmetry.
        """
        lat = self.lattice
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        if pts.shape[-1] != lat.n:
            raise InvalidValue(f"points have dimension {pts.shape[-1]}, expected n = {lat.n}")
        phases = np.exp(1j * (pts @ lat.lam_flat.T))
        vals = (phases @ self.coef.ravel()).real
        return float(vals[0]) if single else vals

    # Arithmetic sugar (thin wrappers over the module-level operations)

    def __add__(self, other):
        if isinstance(other, TrigPoly):
            return linear_combine([1.0, 1.0], [self, other])
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, TrigPoly):
            return linear_combine([1.0, -1.0], [self, other])
        return NotImplemented

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float)):
            return linear_combine([float(scalar)], [self])
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return linear_combine([-1.0], [self])

    def __repr__(self):
        nz = int(np.count_nonzero(self.coef))
        return f"TrigPoly({self.lattice!r}, nonzero={nz}, l1={self.l1():.3e})"


class VectorField:
    """Tuple of n scalar components representing a field R^n -> R^n."""

    __slots__ = ("lattice", "components")

    def __init__(self, components: Sequence[TrigPoly]):
        components = tuple(components)
        if not components:
            raise InvalidValue("a vector field needs at least one component")
        lat = components[0].lattice
        for c in components[1:]:
            if c.lattice != lat:
                raise LatticeMismatch("vector field components live on different lattices")
        if len(components) != lat.n:
            raise InvalidValue(
                f"vector field needs n = {lat.n} components, got {len(components)}"
            )
        self.lattice = lat
        self.components = components

    @classmethod
    def zeros(cls, lattice: FrequencyLattice) -> "VectorField":
        return cls([TrigPoly.zeros(lattice) for _ in range(lattice.n)])

    def evaluate(self, x) -> np.ndarray:
        """Point evaluation, shape (n,) for a single point or (N, n) for a batch."""
        vals = [c.evaluate(x) for c in self.components]
        x = np.asarray(x)
        if x.ndim == 1:
            return np.array(vals)
        return np.stack(vals, axis=-1)

    def l1(self) -> float:
        return float(sum(c.l1() for c in self.components))

    def __add__(self, other):
        if isinstance(other, VectorField):
            return linear_combine([1.0, 1.0], [self, other])
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, VectorField):
            return linear_combine([1.0, -1.0], [self, other])
        return NotImplemented

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float)):
            return linear_combine([float(scalar)], [self])
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return linear_combine([-1.0], [self])

    def __repr__(self):
        return f"VectorField(n={len(self.components)}, {self.lattice!r})"


@dataclass(frozen=True)
class MetricParams:
    """Metric parameter bundle; alpha >= 0 scales the gradient term."""

    alpha: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise InvalidValue(f"alpha must be finite and >= 0, got {self.alpha!r}")


Field = Union[TrigPoly, VectorField]


def _embed(poly: TrigPoly, lattice: FrequencyLattice) -> TrigPoly:
    """Zero-pad coefficients of `poly` into a larger-K box on the same module."""
    if poly.lattice.K == lattice.K:
        return poly
    coef = np.zeros(lattice.shape, dtype=complex)
    K, Ks = lattice.K, poly.lattice.K
    sl = tuple(slice(K - Ks, K + Ks + 1) for _ in range(lattice.d))
    coef[sl] = poly.coef
    return TrigPoly(lattice, coef, symmetrize=False)


def _join_lattices(a: FrequencyLattice, b: FrequencyLattice) -> FrequencyLattice:
    """Common lattice for a binary operation; (n, d, Omega) must agree."""
    if not a.compatible(b):
        raise LatticeMismatch("operands use different (n, d, omega)")
    if a.K == b.K:
        return a
    return a if a.K > b.K else b


def linear_combine(scalars: Sequence[float], values: Sequence[Field]) -> Field:
    """Real linear combination sum_j scalars[j] * values[j].

    All values must share (n, d, Omega); mixed cutoffs embed into the larger
    box. TrigPoly and VectorField inputs must not be mixed.
    """
    if len(scalars) != len(values) or not values:
        raise InvalidValue("need equally many scalars and values, at least one each")
    if isinstance(values[0], VectorField):
        if not all(isinstance(v, VectorField) for v in values):
            raise InvalidValue("cannot combine scalar and vector values")
        comps = [
            linear_combine(scalars, [v.components[i] for v in values])
            for i in range(values[0].lattice.n)
        ]
        return VectorField(comps)
    if not all(isinstance(v, TrigPoly) for v in values):
        raise InvalidValue("cannot combine scalar and vector values")
    lat = values[0].lattice
    for v in values[1:]:
        lat = _join_lattices(lat, v.lattice)
    acc = np.zeros(lat.shape, dtype=complex)
    for s, v in zip(scalars, values):
        acc += float(s) * _embed(v, lat).coef
    return TrigPoly(lat, acc, symmetrize=False)


def multiply(f: TrigPoly, g: TrigPoly) -> tuple:
    """Product by coefficient convolution, truncated back to the box.

    Returns (product, discarded_mass): indices with |k|_inf > K are dropped
    and their total l1 coefficient mass is reported alongside the result.
    """
    lat = _join_lattices(f.lattice, g.lattice)
    f, g = _embed(f, lat), _embed(g, lat)
    L = lat.side
    d = lat.d
    # Convolve by shift-and-add over the sparser factor's nonzero modes. The
    # full convolution lives on a (2L-1)^d buffer centered at index 2K.
    if np.count_nonzero(g.coef) > np.count_nonzero(f.coef):
        f, g = g, f
    buf = np.zeros((2 * L - 1,) * d, dtype=complex)
    nz = np.argwhere(g.coef != 0)
    for idx in nz:
        sl = tuple(slice(int(i), int(i) + L) for i in idx)
        buf[sl] += g.coef[tuple(idx)] * f.coef
    window = tuple(slice(lat.K, lat.K + L) for _ in range(d))
    result = buf[window].copy()
    discarded = float(np.sum(np.abs(buf)) - np.sum(np.abs(result)))
    return TrigPoly(lat, result), discarded


def derivative(f: Field, axis: int) -> Field:
    """Partial derivative along the given coordinate of R^n (0-based axis)."""
    if isinstance(f, VectorField):
        return VectorField([derivative(c, axis) for c in f.components])
    lam = f.lattice.lam_grid(axis)
    return TrigPoly(f.lattice, f.coef * (1j * lam), symmetrize=False)


def shift(f: Field, c) -> Field:
    """Translate the argument: (S_c f)(x) = f(x + c) via exact phases."""
    if isinstance(f, VectorField):
        return VectorField([shift(comp, c) for comp in f.components])
    lat = f.lattice
    c = np.asarray(c, dtype=float).reshape(lat.n)
    phase_exp = np.zeros(lat.shape, dtype=float)
    for axis in range(lat.n):
        phase_exp = phase_exp + lat.lam_grid(axis) * c[axis]
    return TrigPoly(lat, f.coef * np.exp(1j * phase_exp), symmetrize=False)


def bohr_mean(f: Field):
    """Mean value of the field, its k = 0 coefficient."""
    if isinstance(f, VectorField):
        return np.array([bohr_mean(c) for c in f.components])
    return float(f.coef[f.lattice.center_index].real)


def inner_product_alpha(u: Field, v: Field, alpha: float) -> float:
    """Spectral inner product sum_k (1 + alpha^2 |Lambda(k)|^2) u_k conj(v_k).

    Agrees with the mean of (u, v) + alpha^2 (grad u, grad v) over growing
    symmetric boxes. Vector fields sum over components.
    """
    if isinstance(u, VectorField) != isinstance(v, VectorField):
        raise InvalidValue("cannot pair a scalar with a vector field")
    if isinstance(u, VectorField):
        return float(
            sum(
                inner_product_alpha(a, b, alpha)
                for a, b in zip(u.components, v.components)
            )
        )
    lat = _join_lattices(u.lattice, v.lattice)
    u, v = _embed(u, lat), _embed(v, lat)
    mult = lat.multiplier(alpha)
    return float(np.sum(mult * u.coef * np.conj(v.coef)).real)


def apply_A_alpha(u: Field, alpha: float) -> Field:
    """Apply I - alpha^2 Laplace through its diagonal symbol."""
    if isinstance(u, VectorField):
        return VectorField([apply_A_alpha(c, alpha) for c in u.components])
    return TrigPoly(u.lattice, u.coef * u.lattice.multiplier(alpha), symmetrize=False)


def invert_A_alpha(u: Field, alpha: float) -> Field:
    """Invert I - alpha^2 Laplace; exact round trip with apply_A_alpha."""
    if isinstance(u, VectorField):
        return VectorField([invert_A_alpha(c, alpha) for c in u.components])
    return TrigPoly(u.lattice, u.coef / u.lattice.multiplier(alpha), symmetrize=False)


def evaluate(f: Field, x):
    """Point evaluation of a scalar or vector field (direct mode summation)."""
    return f.evaluate(x)
