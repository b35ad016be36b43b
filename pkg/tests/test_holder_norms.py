import numpy as np
import pytest

from apdiff import (
    EvaluableFunction,
    TrigPoly,
    cm_norm,
    derivative,
    dyadic_offsets,
    holder_seminorm,
    little_holder_profile,
    make_lattice,
    sup_norm,
)
from apdiff.errors import InvalidValue, UnsupportedOrder

SQRT2 = np.sqrt(2.0)


def line_lattice(K=8):
    return make_lattice([[1.0]], K)


def test_sup_norm_basics():
    lat = line_lattice()
    assert sup_norm(TrigPoly.cosine(lat, (1,))) == pytest.approx(1.0, abs=1e-12)
    assert sup_norm(TrigPoly.zeros(lat)) == 0.0
    assert sup_norm(TrigPoly.constant(lat, -3.0)) == pytest.approx(3.0, abs=1e-14)


def test_sup_norm_quasi_periodic_lower_bound():
    # 2 + cos x + cos(sqrt2 x) has supremum 4, approached but never attained;
    # a 2^12 grid on the torus lift must already see 3.99.
    lat = make_lattice([[1.0, SQRT2]], 16)
    f = TrigPoly.from_modes(lat, {(0, 0): 2.0, (1, 0): 0.5, (0, 1): 0.5})
    val = sup_norm(f, M=2**12)
    assert 3.99 <= val <= 4.0


def test_dyadic_offsets_shape():
    hs = dyadic_offsets(np.pi)
    assert len(hs) == 25
    assert hs[0] == np.pi
    assert np.allclose(hs[:-1] / hs[1:], 2.0)
    with pytest.raises(InvalidValue):
        dyadic_offsets(0.0)


def test_seminorm_of_constant_vanishes():
    lat = line_lattice()
    assert holder_seminorm(TrigPoly.constant(lat, 4.2), 0.5) == 0.0


def test_sine_half_seminorm_dense_oracle():
    # Frozen from a dense independent scan of sup |sin(x+h)-sin(x)| / sqrt h:
    # the maximizer sits at interior h, so dyadic offsets undershoot and a
    # dense h grid is needed to reproduce it.
    lat = line_lattice()
    s = TrigPoly.sine(lat, (1,))
    dense = np.linspace(np.pi / 4096, np.pi, 4096)
    val = holder_seminorm(s, 0.5, M=4096, h_set=dense)
    assert abs(val - 1.2038366614925036) < 1e-3
    assert holder_seminorm(s, 0.5) <= val + 1e-12


def test_power_cusp_seminorm_reaches_one():
    for gamma in (0.3, 0.5, 0.8):
        f = EvaluableFunction(lambda x, g=gamma: np.abs(x) ** g, -1.0, 1.0)
        val = holder_seminorm(f, gamma, M=2001)
        assert val >= 1.0 - 1e-12


def test_seminorm_sanity_bound(rng):
    lat = line_lattice(6)
    hs = dyadic_offsets(np.pi, levels=12)
    for _ in range(5):
        modes = {(0,): rng.standard_normal()}
        for k in range(1, 5):
            modes[(k,)] = rng.standard_normal() + 1j * rng.standard_normal()
        f = TrigPoly.from_modes(lat, modes)
        bound = 2.0 * sup_norm(f) / float(np.min(hs)) ** 0.5
        assert holder_seminorm(f, 0.5, h_set=hs) <= bound + 1e-9


def test_cm_norm_integer_orders():
    lat = line_lattice()
    c = TrigPoly.cosine(lat, (1,))
    assert cm_norm(c, 0) == pytest.approx(1.0, abs=1e-12)
    assert cm_norm(c, 2) == pytest.approx(1.0, abs=1e-12)
    assert cm_norm(TrigPoly.constant(lat, 7.0), 3) == pytest.approx(7.0, abs=1e-14)

    two = TrigPoly.cosine(lat, (2,))
    # second derivative scales by 4, and the max over orders picks it up
    assert cm_norm(two, 2) == pytest.approx(4.0, abs=1e-10)


def test_cm_norm_fractional_route():
    lat = line_lattice()
    s = TrigPoly.sine(lat, (1,))
    hs = dyadic_offsets(np.pi, levels=20)
    whole = cm_norm(s, 1.5, h_set=hs)
    parts = max(sup_norm(s), sup_norm(derivative(s, 0))) + holder_seminorm(
        derivative(s, 0), 0.5, h_set=hs
    )
    assert abs(whole - parts) < 1e-12


def test_cm_norm_rejects_derivatives_of_samples():
    f = EvaluableFunction(lambda x: np.abs(x), -1.0, 1.0)
    with pytest.raises(UnsupportedOrder):
        cm_norm(f, 2)
    with pytest.raises(InvalidValue):
        cm_norm(EvaluableFunction(lambda x: x, 0.0, 1.0), -1.0)


def test_little_holder_profiles():
    lat = line_lattice()
    s = TrigPoly.sine(lat, (1,))
    prof = little_holder_profile(s, 0.5, M=4096)
    assert prof.verdict == "vanishing"
    assert all(a >= b for a, b in zip(prof.omegas, prof.omegas[1:]))

    w = EvaluableFunction(
        lambda x: np.sqrt(np.abs(np.sin(0.5 * x))), -np.pi, np.pi, period=2 * np.pi
    )
    prof_w = little_holder_profile(w, 0.5, M=4096)
    assert prof_w.verdict == "non-vanishing"
    assert min(prof_w.omegas) >= 0.70


def test_little_holder_rejects_bad_deltas():
    lat = line_lattice()
    s = TrigPoly.sine(lat, (1,))
    with pytest.raises(InvalidValue):
        little_holder_profile(s, 0.5, deltas=[1e-1, 1e-1])
    with pytest.raises(InvalidValue):
        little_holder_profile(s, 0.5, deltas=[])
