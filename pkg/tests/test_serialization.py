import json

import numpy as np
import pytest

from apdiff import (
    ApDiffeo,
    EulerianState,
    GeodesicState,
    TrigPoly,
    VectorField,
    apply_A_alpha,
    load_state,
    make_diffeo,
    make_lattice,
    save_state,
    vector_field_from_modes,
)
from apdiff.errors import SchemaError

SQRT2 = np.sqrt(2.0)


def desk_lattice(K=8):
    return make_lattice([[1.0, SQRT2]], K)


def random_poly(lat, rng):
    modes = {(0,) * lat.d: rng.standard_normal()}
    ks = lat.k_flat[lat.half_mask_flat]
    for _ in range(5):
        k = tuple(int(q) for q in ks[rng.integers(0, len(ks))])
        if any(k):
            modes[k] = rng.standard_normal() + 1j * rng.standard_normal()
    return TrigPoly.from_modes(lat, modes)


def test_trig_poly_roundtrip_is_bit_exact(tmp_path, rng):
    lat = desk_lattice()
    f = random_poly(lat, rng)
    p = tmp_path / "poly.json"
    save_state(f, str(p))
    g = load_state(str(p))
    assert np.array_equal(f.coef, g.coef)
    assert g.lattice == lat


def test_vector_field_roundtrip(tmp_path, rng):
    lat = desk_lattice()
    u = VectorField([random_poly(lat, rng)])
    p = tmp_path / "field.json"
    save_state(u, str(p))
    v = load_state(str(p))
    assert np.array_equal(u.components[0].coef, v.components[0].coef)


def test_resave_is_byte_identical(tmp_path, rng):
    lat = desk_lattice()
    f = random_poly(lat, rng)
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    save_state(f, str(p1))
    save_state(load_state(str(p1)), str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_diffeo_roundtrip_keeps_margin(tmp_path):
    lat = desk_lattice()
    phi = make_diffeo(VectorField([TrigPoly.sine(lat, (1, 0), amplitude=0.3)]))
    p = tmp_path / "phi.json"
    save_state(phi, str(p))
    psi = load_state(str(p))
    assert isinstance(psi, ApDiffeo)
    assert psi.margin == phi.margin
    assert psi.eps_min == phi.eps_min
    assert np.array_equal(
        psi.displacement.components[0].coef, phi.displacement.components[0].coef
    )


def test_states_roundtrip(tmp_path):
    lat = desk_lattice()
    phi = make_diffeo(VectorField([TrigPoly.sine(lat, (1, 0), amplitude=0.2)]))
    v = VectorField([TrigPoly.cosine(lat, (0, 1), amplitude=0.1)])
    gs = GeodesicState(phi, v, 0.75)
    p = tmp_path / "gs.json"
    save_state(gs, str(p))
    back = load_state(str(p))
    assert back.t == 0.75
    assert np.array_equal(back.v.components[0].coef, v.components[0].coef)

    u = VectorField([TrigPoly.cosine(lat, (1, 0), amplitude=0.05)])
    es = EulerianState(u, apply_A_alpha(u, 1.0), 0.25)
    q = tmp_path / "es.json"
    save_state(es, str(q))
    back2 = load_state(str(q))
    assert back2.t == 0.25
    assert np.array_equal(back2.m.components[0].coef, es.m.components[0].coef)


def _write(tmp_path, obj):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(obj))
    return str(p)


def _poly_obj(**overrides):
    obj = {
        "format": 1,
        "kind": "trig_poly",
        "n": 1,
        "d": 1,
        "K": 3,
        "omega": [[1.0]],
        "modes": [{"k": [1], "re": 0.5, "im": 0.0}],
    }
    obj.update(overrides)
    return obj


def test_loader_rejects_unknown_kind(tmp_path):
    with pytest.raises(SchemaError):
        load_state(_write(tmp_path, _poly_obj(kind="mystery")))


def test_loader_rejects_wrong_format(tmp_path):
    with pytest.raises(SchemaError):
        load_state(_write(tmp_path, _poly_obj(format=2)))


def test_loader_rejects_non_canonical_mode(tmp_path):
    bad = _poly_obj(modes=[{"k": [-1], "re": 0.5, "im": 0.0}])
    with pytest.raises(SchemaError):
        load_state(_write(tmp_path, bad))


def test_loader_rejects_duplicate_mode(tmp_path):
    bad = _poly_obj(
        modes=[{"k": [1], "re": 0.5, "im": 0.0}, {"k": [1], "re": 0.1, "im": 0.0}]
    )
    with pytest.raises(SchemaError):
        load_state(_write(tmp_path, bad))


def test_loader_rejects_complex_mean(tmp_path):
    bad = _poly_obj(modes=[{"k": [0], "re": 1.0, "im": 0.5}])
    with pytest.raises(SchemaError):
        load_state(_write(tmp_path, bad))


def test_loader_rejects_out_of_box_mode(tmp_path):
    bad = _poly_obj(modes=[{"k": [7], "re": 0.5, "im": 0.0}])
    with pytest.raises(SchemaError):
        load_state(_write(tmp_path, bad))


def test_loader_rejects_invalid_json(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(SchemaError):
        load_state(str(p))


def test_stale_margin_is_rejected_small_drift_tolerated(tmp_path):
    lat = desk_lattice()
    phi = make_diffeo(VectorField([TrigPoly.sine(lat, (1, 0), amplitude=0.3)]))
    p = tmp_path / "phi.json"
    save_state(phi, str(p))
    obj = json.loads(p.read_text())

    obj_bad = dict(obj)
    obj_bad["margin"] = obj["margin"] + 0.05
    with pytest.raises(SchemaError):
        load_state(_write(tmp_path, obj_bad))

    obj_ok = dict(obj)
    obj_ok["margin"] = obj["margin"] + 1e-8
    psi = load_state(_write(tmp_path, obj_ok))
    assert abs(psi.margin - phi.margin) < 1e-6


def test_vector_field_from_modes_validates():
    lat = desk_lattice(3)
    u = vector_field_from_modes(lat, [[{"k": [1, 0], "re": 0.0, "im": -0.5}]])
    want = TrigPoly.sine(lat, (1, 0))
    assert np.array_equal(u.components[0].coef, want.coef)
    with pytest.raises(SchemaError):
        vector_field_from_modes(lat, [])
