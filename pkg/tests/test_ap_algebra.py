import numpy as np
import pytest

from apdiff import (
    FrequencyLattice,
    TrigPoly,
    VectorField,
    apply_A_alpha,
    bohr_mean,
    derivative,
    evaluate,
    inner_product_alpha,
    invert_A_alpha,
    linear_combine,
    make_lattice,
    multiply,
    shift,
)
from apdiff.errors import InvalidValue, LatticeMismatch

SQRT2 = np.sqrt(2.0)


def desk_lattice(K=16):
    return make_lattice([[1.0, SQRT2]], K)


def random_poly(lat, rng, scale=1.0):
    coef = np.zeros(lat.shape, dtype=complex)
    poly = TrigPoly(lat, coef)
    modes = {}
    ks = lat.k_flat[lat.half_mask_flat]
    for _ in range(6):
        k = tuple(int(q) for q in ks[rng.integers(0, len(ks))])
        modes[k] = scale * (rng.standard_normal() + 1j * rng.standard_normal())
    modes[(0,) * lat.d] = scale * rng.standard_normal()
    return TrigPoly.from_modes(lat, modes)


def test_lattice_basic_counts():
    lat = desk_lattice()
    assert lat.n == 1 and lat.d == 2
    assert lat.side == 33
    assert lat.mode_count == 33 * 33
    assert lat.half_count == (33 * 33 - 1) // 2 + 1
    assert lat.k_flat.shape == (33 * 33, 2)


def test_lattice_rejects_bad_input():
    with pytest.raises(Exception):
        make_lattice([[1.0, SQRT2]], -1)
    with pytest.raises(Exception):
        make_lattice([[np.inf, 1.0]], 4)


def test_from_modes_rejects_non_canonical():
    lat = desk_lattice(4)
    with pytest.raises(InvalidValue):
        TrigPoly.from_modes(lat, {(-1, 0): 1.0})
    with pytest.raises(InvalidValue):
        TrigPoly.from_modes(lat, {(0, -2): 1.0})
    with pytest.raises(InvalidValue):
        TrigPoly.from_modes(lat, {(0, 0): 1.0 + 0.5j})
    with pytest.raises(InvalidValue):
        TrigPoly.from_modes(lat, {(5, 0): 1.0})


def test_evaluate_pinned_values():
    lat = desk_lattice()
    cos_x = TrigPoly.cosine(lat, (1, 0))
    assert abs(float(evaluate(cos_x, [0.0])) - 1.0) < 1e-14

    two_plus = TrigPoly.from_modes(lat, {(0, 0): 2.0, (1, 0): 0.5})
    assert abs(float(evaluate(two_plus, [np.pi])) - 1.0) < 1e-14

    pair = TrigPoly.from_modes(lat, {(1, 0): 0.5, (0, 1): 0.5})
    assert abs(float(evaluate(pair, [1.0])) - 0.696246) < 1e-6
    assert abs(float(evaluate(pair, [1.0])) - (np.cos(1.0) + np.cos(SQRT2))) < 1e-14


def test_evaluate_matches_dense_mode_sum(rng):
    """Independent evaluation route: loop over every box mode explicitly."""
    lat = desk_lattice(5)
    f = random_poly(lat, rng)
    xs = rng.uniform(-20.0, 20.0, size=8)
    lam = lat.lam_flat
    coef = f.coef.reshape(-1)
    for x in xs:
        direct = np.real(np.sum(coef * np.exp(1j * lam[:, 0] * x)))
        assert abs(float(evaluate(f, [x])) - direct) < 1e-12


def test_evaluate_is_real_valued(rng):
    lat = desk_lattice(6)
    f = random_poly(lat, rng)
    vals = evaluate(f, rng.uniform(-5, 5, size=(10, 1)))
    assert np.isrealobj(vals)


def test_multiply_cosine_product_formula():
    lat = desk_lattice()
    a = TrigPoly.cosine(lat, (1, 0))
    b = TrigPoly.cosine(lat, (0, 1))
    prod, lost = multiply(a, b)
    assert lost == 0.0
    expected = TrigPoly.from_modes(lat, {(1, 1): 0.25, (1, -1): 0.25})
    assert np.max(np.abs(prod.coef - expected.coef)) < 1e-15


def test_multiply_matches_dict_convolution(rng):
    """Dual route: fold the full coefficient boxes by hand."""
    lat = desk_lattice(3)
    for _ in range(5):
        f = random_poly(lat, rng)
        g = random_poly(lat, rng)
        prod, lost = multiply(f, g)

        acc = {}
        K = lat.K
        ks = lat.k_flat
        cf = f.coef.reshape(-1)
        cg = g.coef.reshape(-1)
        for i in range(len(ks)):
            if cf[i] == 0:
                continue
            for j in range(len(ks)):
                if cg[j] == 0:
                    continue
                k = tuple(ks[i] + ks[j])
                acc[k] = acc.get(k, 0.0) + cf[i] * cg[j]
        inside = np.zeros(lat.shape, dtype=complex)
        outside = 0.0
        for k, c in acc.items():
            if max(abs(q) for q in k) <= K:
                inside[tuple(q + K for q in k)] = c
            else:
                outside += abs(c)
        assert np.max(np.abs(prod.coef - inside)) < 1e-12
        assert abs(lost - outside) < 1e-12


def test_derivative_of_pure_modes():
    lat = desk_lattice()
    sin_x = TrigPoly.sine(lat, (1, 0))
    cos_x = TrigPoly.cosine(lat, (1, 0))
    d = derivative(sin_x, 0)
    assert np.max(np.abs(d.coef - cos_x.coef)) < 1e-15

    cos_r2 = TrigPoly.cosine(lat, (0, 1))
    d2 = derivative(cos_r2, 0)
    expected = TrigPoly.sine(lat, (0, 1), amplitude=-SQRT2)
    assert np.max(np.abs(d2.coef - expected.coef)) < 1e-15


def test_derivative_matches_finite_difference(rng):
    lat = desk_lattice(6)
    f = random_poly(lat, rng, scale=0.3)
    df = derivative(f, 0)
    h = 1e-6
    for x in rng.uniform(-3, 3, size=6):
        fd = (float(evaluate(f, [x + h])) - float(evaluate(f, [x - h]))) / (2 * h)
        assert abs(float(evaluate(df, [x])) - fd) < 1e-6


def test_shift_is_translation(rng):
    lat = desk_lattice(6)
    f = random_poly(lat, rng)
    c = [0.7]
    g = shift(f, c)
    for x in rng.uniform(-5, 5, size=8):
        assert abs(float(evaluate(g, [x])) - float(evaluate(f, [x + 0.7]))) < 1e-12


def test_shift_homomorphism(rng):
    lat = desk_lattice(6)
    f = random_poly(lat, rng)
    g = random_poly(lat, rng)
    c = [1.3]
    lhs = shift(linear_combine([1.0, 1.0], [f, g]), c)
    rhs = linear_combine([1.0, 1.0], [shift(f, c), shift(g, c)])
    assert np.max(np.abs(lhs.coef - rhs.coef)) < 1e-14

    back = shift(shift(f, c), [-0.7 - 0.6])
    assert np.max(np.abs(back.coef - f.coef)) < 1e-13

    same = shift(f, [0.0])
    assert np.array_equal(same.coef, f.coef)


def test_A_alpha_pinned_and_roundtrip(rng):
    lat = desk_lattice()
    cos_x = TrigPoly.cosine(lat, (1, 0))
    assert np.max(np.abs(apply_A_alpha(cos_x, 1.0).coef - 2.0 * cos_x.coef)) < 1e-15

    const = TrigPoly.constant(lat, 3.5)
    assert np.array_equal(apply_A_alpha(const, 1.0).coef, const.coef)

    f = random_poly(lat, rng)
    assert np.array_equal(apply_A_alpha(f, 0.0).coef, f.coef)

    for alpha in (0.3, 1.0, 2.0):
        back = invert_A_alpha(apply_A_alpha(f, alpha), alpha)
        assert np.max(np.abs(back.coef - f.coef)) < 1e-13


def test_A_alpha_commutes_with_translation(rng):
    lat = desk_lattice(8)
    f = random_poly(lat, rng)
    c = [2.1]
    lhs = apply_A_alpha(shift(f, c), 1.0)
    rhs = shift(apply_A_alpha(f, 1.0), c)
    assert np.max(np.abs(lhs.coef - rhs.coef)) < 1e-12


def _interval_mean(fn, T, h=2e-3):
    """Trapezoid quadrature of (1/2T) int_{-T}^{T} fn, chunked to bound memory."""
    total = 0.0
    edge = 0.0
    chunk = 500000
    n = int(round(2 * T / h))
    x0 = -T
    done = 0
    while done < n + 1:
        m = min(chunk, n + 1 - done)
        xs = x0 + (done + np.arange(m)) * h
        vals = fn(xs)
        total += np.sum(vals)
        if done == 0:
            edge += 0.5 * vals[0]
        if done + m == n + 1:
            edge += 0.5 * vals[-1]
        done += m
    return (total - edge) * h / (2 * T)


def test_bohr_mean_against_long_interval_average():
    lat = desk_lattice()
    f = TrigPoly.from_modes(lat, {(0, 0): 2.0, (1, 0): 0.5, (0, 1): 0.5})
    assert abs(bohr_mean(f) - 2.0) < 1e-15

    closure = lambda x: 2.0 + np.cos(x) + np.cos(SQRT2 * x)
    assert abs(float(evaluate(f, [0.31])) - closure(np.array([0.31]))[0]) < 1e-14

    errs = []
    for T in (1e2, 1e3, 1e4):
        errs.append(abs(_interval_mean(closure, T) - 2.0))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_inner_product_frozen_value():
    # u = cos x + cos(sqrt2 x), v = cos(sqrt2 x), alpha = 1/2:
    # the shared pair of conjugate modes contributes 2*(1+0.25*2)*(1/4) = 3/4.
    lat = desk_lattice()
    u = TrigPoly.from_modes(lat, {(1, 0): 0.5, (0, 1): 0.5})
    v = TrigPoly.cosine(lat, (0, 1))
    assert abs(inner_product_alpha(u, v, 0.5) - 0.75) < 1e-15


def test_inner_product_symmetry_and_bilinearity(rng):
    lat = desk_lattice(5)
    u = random_poly(lat, rng)
    v = random_poly(lat, rng)
    w = random_poly(lat, rng)
    alpha = 0.7
    a, b = 1.7, -0.4
    s_uv = inner_product_alpha(u, v, alpha)
    assert abs(s_uv - inner_product_alpha(v, u, alpha)) < 1e-12
    lin = inner_product_alpha(linear_combine([a, b], [u, w]), v, alpha)
    assert abs(lin - (a * s_uv + b * inner_product_alpha(w, v, alpha))) < 1e-10


def test_inner_product_norm_ordering(rng):
    lat = desk_lattice(5)
    for _ in range(10):
        u = random_poly(lat, rng)
        q_alpha = inner_product_alpha(u, u, 1.0)
        q_zero = inner_product_alpha(u, u, 0.0)
        assert q_alpha >= q_zero >= 0.0
        assert abs(q_zero - np.sum(np.abs(u.coef) ** 2)) < 1e-12


def test_leibniz_through_the_truncated_box(rng):
    # The derivative is a diagonal multiplier, so it commutes with the box
    # projection and the product rule survives truncation exactly.
    lat = desk_lattice(3)
    for _ in range(5):
        f = random_poly(lat, rng)
        g = random_poly(lat, rng)
        lhs = derivative(multiply(f, g)[0], 0)
        rhs = linear_combine(
            [1.0, 1.0],
            [multiply(derivative(f, 0), g)[0], multiply(f, derivative(g, 0))[0]],
        )
        assert np.max(np.abs(lhs.coef - rhs.coef)) < 1e-11


def test_mixed_resolution_operands_promote(rng):
    lat_small = desk_lattice(4)
    lat_big = desk_lattice(8)
    f = random_poly(lat_small, rng)
    g = random_poly(lat_big, rng)
    h = linear_combine([1.0, 1.0], [f, g])
    assert h.lattice.K == 8
    x = [0.37]
    assert abs(float(evaluate(h, x)) - float(evaluate(f, x)) - float(evaluate(g, x))) < 1e-13

    prod, _ = multiply(f, g)
    assert prod.lattice.K == 8


def test_incompatible_lattices_rejected(rng):
    a = make_lattice([[1.0, SQRT2]], 4)
    b = make_lattice([[1.0, np.sqrt(3.0)]], 4)
    f = random_poly(a, rng)
    g = random_poly(b, rng)
    with pytest.raises(LatticeMismatch):
        multiply(f, g)


def test_vector_field_evaluate_and_arithmetic(rng):
    lat = desk_lattice(4)
    u = VectorField([random_poly(lat, rng)])
    v = VectorField([random_poly(lat, rng)])
    w = u + v * 2.0 - u
    x = np.array([0.9])
    want = 2.0 * v.components[0].evaluate(x)
    assert np.max(np.abs(w.evaluate(x) - want)) < 1e-13
    assert w.lattice is not None
