"""Lossless JSON persistence for fields, group elements, and solver states.

Coefficients are stored as canonical half-box mode lists ({"k": [...],
"re": ..., "im": ...}) in lexicographic key order; the mirrored conjugate
half is implied. Floats ride on Python's shortest-roundtrip decimal
encoding, so save/load round trips are bit-exact. Loading revalidates
every structural invariant and the stored diffeomorphism margin.
"""

from __future__ import annotations

import json
import math
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from .ap_algebra import FrequencyLattice, TrigPoly, VectorField, make_lattice
from .diff_group import ApDiffeo, make_diffeo
from .errors import SchemaError
from .geodesic_flows import EulerianState, GeodesicState

__all__ = [
    "to_obj",
    "from_obj",
    "save_state",
    "load_state",
    "vector_field_from_modes",
]

_FORMAT = 1

Value = Union[TrigPoly, VectorField, ApDiffeo, GeodesicState, EulerianState]


def _require(cond: bool, message: str):
    if not cond:
        raise SchemaError(message)


def _get(obj: Dict[str, Any], key: str, kind: str):
    _require(isinstance(obj, dict), f"{kind}: expected a JSON object")
    _require(key in obj, f"{kind}: missing field {key!r}")
    return obj[key]


def _as_float(value, where: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), f"{where}: expected a number")
    value = float(value)
    _require(math.isfinite(value), f"{where}: must be finite")
    return value


def _modes_to_list(poly: TrigPoly) -> List[Dict[str, Any]]:
    items = sorted(poly.half_modes(), key=lambda kc: kc[0])
    return [
        {"k": list(k), "re": c.real, "im": c.imag}
        for k, c in items
    ]


def _modes_from_list(lattice: FrequencyLattice, modes, kind: str) -> TrigPoly:
    _require(isinstance(modes, list), f"{kind}: modes must be a list")
    seen = set()
    table = {}
    for entry in modes:
        k_raw = _get(entry, "k", kind)
        _require(
            isinstance(k_raw, list) and len(k_raw) == lattice.d
            and all(isinstance(q, int) and not isinstance(q, bool) for q in k_raw),
            f"{kind}: mode key must be a list of {lattice.d} integers",
        )
        k = tuple(k_raw)
        _require(all(abs(q) <= lattice.K for q in k), f"{kind}: mode {k} outside the box |k|_inf <= {lattice.K}")
        first = next((q for q in k if q != 0), 0)
        _require(first >= 0, f"{kind}: mode {k} is not canonical")
        _require(k not in seen, f"{kind}: duplicate mode {k}")
        seen.add(k)
        re = _as_float(_get(entry, "re", kind), f"{kind} mode {k} re")
        im = _as_float(_get(entry, "im", kind), f"{kind} mode {k} im")
        if first == 0:
            _require(im == 0.0, f"{kind}: the k = 0 coefficient must have im = 0")
        table[k] = complex(re, im)
    return TrigPoly.from_modes(lattice, table)


def _lattice_to_obj(lattice: FrequencyLattice) -> Dict[str, Any]:
    return {
        "n": lattice.n,
        "d": lattice.d,
        "omega": [[float(w) for w in row] for row in lattice.omega],
        "K": lattice.K,
    }


def _lattice_from_obj(obj: Dict[str, Any], kind: str) -> FrequencyLattice:
    n = _get(obj, "n", kind)
    d = _get(obj, "d", kind)
    K = _get(obj, "K", kind)
    _require(isinstance(n, int) and n >= 1, f"{kind}: n must be a positive integer")
    _require(isinstance(d, int) and d >= 1, f"{kind}: d must be a positive integer")
    _require(isinstance(K, int) and K >= 0, f"{kind}: K must be a nonnegative integer")
    rows = _get(obj, "omega", kind)
    _require(
        isinstance(rows, list) and len(rows) == n
        and all(isinstance(r, list) and len(r) == d for r in rows),
        f"{kind}: omega must be an {n} x {d} array",
    )
    omega = np.array(
        [[_as_float(w, f"{kind} omega") for w in row] for row in rows], dtype=float
    )
    return make_lattice(omega, K)


def _poly_to_obj(poly: TrigPoly) -> Dict[str, Any]:
    obj = {"format": _FORMAT, "kind": "trig_poly"}
    obj.update(_lattice_to_obj(poly.lattice))
    obj["modes"] = _modes_to_list(poly)
    return obj


def _poly_from_obj(obj: Dict[str, Any]) -> TrigPoly:
    lattice = _lattice_from_obj(obj, "trig_poly")
    return _modes_from_list(lattice, _get(obj, "modes", "trig_poly"), "trig_poly")


def _vf_to_obj(vf: VectorField) -> Dict[str, Any]:
    obj = {"format": _FORMAT, "kind": "vector_field"}
    obj.update(_lattice_to_obj(vf.lattice))
    obj["components"] = [_modes_to_list(c) for c in vf.components]
    return obj


def _vf_from_obj(obj: Dict[str, Any]) -> VectorField:
    lattice = _lattice_from_obj(obj, "vector_field")
    comps = _get(obj, "components", "vector_field")
    _require(
        isinstance(comps, list) and len(comps) == lattice.n,
        f"vector_field: expected {lattice.n} components",
    )
    return VectorField(
        [_modes_from_list(lattice, c, f"component {i}") for i, c in enumerate(comps)]
    )


def vector_field_from_modes(lattice: FrequencyLattice, component_modes: Sequence) -> VectorField:
    """Build a VectorField from per-component canonical mode lists.

    Accepts the same mode entries as the JSON schema; used by config files
    that share one lattice block across several fields.
    """
    _require(
        isinstance(component_modes, (list, tuple)) and len(component_modes) == lattice.n,
        f"initial velocity needs {lattice.n} component mode lists",
    )
    return VectorField(
        [
            _modes_from_list(lattice, list(modes), f"component {i}")
            for i, modes in enumerate(component_modes)
        ]
    )


def _diffeo_to_obj(phi: ApDiffeo) -> Dict[str, Any]:
    obj = {"format": _FORMAT, "kind": "ap_diffeo"}
    obj.update(_lattice_to_obj(phi.lattice))
    obj["displacement"] = [_modes_to_list(c) for c in phi.displacement.components]
    obj["eps_min"] = phi.eps_min
    obj["margin"] = phi.margin
    obj["m_check"] = phi.m_check
    return obj


def _diffeo_from_obj(obj: Dict[str, Any]) -> ApDiffeo:
    lattice = _lattice_from_obj(obj, "ap_diffeo")
    comps = _get(obj, "displacement", "ap_diffeo")
    _require(
        isinstance(comps, list) and len(comps) == lattice.n,
        f"ap_diffeo: expected {lattice.n} displacement components",
    )
    f = VectorField(
        [_modes_from_list(lattice, c, f"displacement {i}") for i, c in enumerate(comps)]
    )
    eps_min = _as_float(_get(obj, "eps_min", "ap_diffeo"), "ap_diffeo eps_min")
    stored_margin = _as_float(_get(obj, "margin", "ap_diffeo"), "ap_diffeo margin")
    m_check = _get(obj, "m_check", "ap_diffeo")
    _require(
        isinstance(m_check, int) and m_check >= 1,
        "ap_diffeo: m_check must be a positive integer",
    )
    phi = make_diffeo(f, eps_min=eps_min, m_check=m_check)
    if abs(phi.margin - stored_margin) > 1e-6:
        raise SchemaError(
            f"ap_diffeo: stored margin {stored_margin!r} is stale; "
            f"revalidation finds {phi.margin!r}"
        )
    return ApDiffeo(displacement=f, eps_min=eps_min, margin=stored_margin, m_check=m_check)


def _geostate_to_obj(state: GeodesicState) -> Dict[str, Any]:
    return {
        "format": _FORMAT,
        "kind": "geodesic_state",
        "t": float(state.t),
        "phi": _diffeo_to_obj(state.phi),
        "v": _vf_to_obj(state.v),
    }


def _geostate_from_obj(obj: Dict[str, Any]) -> GeodesicState:
    t = _as_float(_get(obj, "t", "geodesic_state"), "geodesic_state t")
    phi = _diffeo_from_obj(_get(obj, "phi", "geodesic_state"))
    v = _vf_from_obj(_get(obj, "v", "geodesic_state"))
    _require(
        phi.lattice.compatible(v.lattice) and phi.lattice.K == v.lattice.K,
        "geodesic_state: phi and v must share one lattice",
    )
    return GeodesicState(phi, v, t)


def _eulstate_to_obj(state: EulerianState) -> Dict[str, Any]:
    return {
        "format": _FORMAT,
        "kind": "eulerian_state",
        "t": float(state.t),
        "u": _vf_to_obj(state.u),
        "m": _vf_to_obj(state.m),
    }


def _eulstate_from_obj(obj: Dict[str, Any]) -> EulerianState:
    t = _as_float(_get(obj, "t", "eulerian_state"), "eulerian_state t")
    u = _vf_from_obj(_get(obj, "u", "eulerian_state"))
    m = _vf_from_obj(_get(obj, "m", "eulerian_state"))
    _require(
        u.lattice.compatible(m.lattice) and u.lattice.K == m.lattice.K,
        "eulerian_state: u and m must share one lattice",
    )
    return EulerianState(u, m, t)


def to_obj(value: Value) -> Dict[str, Any]:
    """JSON-ready dictionary for any persistable value."""
    if isinstance(value, TrigPoly):
        return _poly_to_obj(value)
    if isinstance(value, VectorField):
        return _vf_to_obj(value)
    if isinstance(value, ApDiffeo):
        return _diffeo_to_obj(value)
    if isinstance(value, GeodesicState):
        return _geostate_to_obj(value)
    if isinstance(value, EulerianState):
        return _eulstate_to_obj(value)
    raise SchemaError(f"cannot serialize values of type {type(value).__name__}")


_LOADERS = {
    "trig_poly": _poly_from_obj,
    "vector_field": _vf_from_obj,
    "ap_diffeo": _diffeo_from_obj,
    "geodesic_state": _geostate_from_obj,
    "eulerian_state": _eulstate_from_obj,
}


def from_obj(obj: Dict[str, Any]) -> Value:
    """Rebuild a value from its dictionary form, revalidating invariants."""
    _require(isinstance(obj, dict), "expected a JSON object")
    kind = obj.get("kind")
    _require(kind in _LOADERS, f"unknown kind {kind!r}")
    fmt = obj.get("format", _FORMAT)
    _require(fmt == _FORMAT, f"unsupported format {fmt!r}")
    return _LOADERS[kind](obj)


def save_state(value: Value, path: str):
    """Write a value as indented JSON (stable key order, lossless floats)."""
    with open(path, "w") as fh:
        json.dump(to_obj(value), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def load_state(path: str) -> Value:
    """Load and revalidate a value written by save_state."""
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON in {path}: {exc}") from exc
    return from_obj(obj)
