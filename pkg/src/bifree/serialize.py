"""JSON schemas and CSV writers for the command-line pipelines.

All emitted JSON uses sorted keys and shortest-round-trip floats; CSV cells
carry 17 significant digits.  Identical inputs therefore produce
byte-identical reports.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .biconv import BiConvRep, bi_free_convolve
from .idlaw import CharTriplet, LevyMeasure, RadialPart
from .limits import TriangularArray, make_array
from .measure import AtomicMeasure2D, Matrix2, PlanarMeasure
from .stable import StableSpec
from .transforms import GridDensity

CSV_FMT = "%.17g"


class SchemaError(ValueError):
    """Input file violates a documented schema."""


def _need(obj: dict, key: str, kind=None):
    if key not in obj:
        raise SchemaError(f"missing key {key!r}")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise SchemaError(f"key {key!r} has wrong type {type(val).__name__}")
    return val


def _vec2(x) -> tuple[float, float]:
    if not (isinstance(x, (list, tuple)) and len(x) == 2):
        raise SchemaError(f"expected a 2-vector, got {x!r}")
    return float(x[0]), float(x[1])


# -- measures ----------------------------------------------------------------


def measure_to_dict(m: PlanarMeasure) -> dict:
    return {"atoms": [{"x": [float(p[0]), float(p[1])], "w": float(w)} for p, w in m.atoms()]}


def measure_from_dict(obj: dict) -> PlanarMeasure:
    atoms = _need(obj, "atoms", list)
    if not atoms:
        raise SchemaError("measure needs at least one atom")
    parsed = []
    for a in atoms:
        if not isinstance(a, dict):
            raise SchemaError("atom entries must be objects")
        x = _vec2(_need(a, "x"))
        w = _need(a, "w", (int, float))
        if w <= 0:
            raise SchemaError(f"atom weight {w} must be positive")
        parsed.append((x, float(w)))
    try:
        return PlanarMeasure(parsed)
    except ValueError as e:
        raise SchemaError(str(e)) from e


# -- triplets ----------------------------------------------------------------


def triplet_to_dict(t: CharTriplet) -> dict:
    tau: dict[str, Any] = {
        "atoms": [{"x": [float(p[0]), float(p[1])], "m": float(m)} for p, m in t.tau.atoms.atoms()]
    }
    if t.tau.radial is not None:
        rp = t.tau.radial
        tau["radial"] = {
            "alpha": rp.alpha,
            "theta": [{"angle": a, "m": m} for a, m in rp.rays],
            "r_min": rp.r_min,
            "r_max": None if math.isinf(rp.r_max) else rp.r_max,
        }
    return {
        "v": [t.v[0], t.v[1]],
        "A": [[t.A.a, t.A.c], [t.A.c, t.A.b]],
        "tau": tau,
    }


def triplet_from_dict(obj: dict) -> CharTriplet:
    v = _vec2(_need(obj, "v"))
    A_rows = _need(obj, "A", list)
    if len(A_rows) != 2 or any(len(r) != 2 for r in A_rows):
        raise SchemaError("A must be a 2x2 matrix")
    if abs(float(A_rows[0][1]) - float(A_rows[1][0])) > 1e-12:
        raise SchemaError("A must be symmetric")
    A = Matrix2(float(A_rows[0][0]), float(A_rows[0][1]), float(A_rows[1][1]))
    tau_obj = _need(obj, "tau", dict)
    atoms = [
        (_vec2(_need(a, "x")), float(_need(a, "m", (int, float))))
        for a in tau_obj.get("atoms", [])
    ]
    radial = None
    if tau_obj.get("radial") is not None:
        r = tau_obj["radial"]
        rays = tuple(
            (float(_need(e, "angle", (int, float))), float(_need(e, "m", (int, float))))
            for e in _need(r, "theta", list)
        )
        r_max = r.get("r_max")
        radial = RadialPart(
            alpha=float(_need(r, "alpha", (int, float))),
            rays=rays,
            r_min=float(r.get("r_min", 0.0)),
            r_max=math.inf if r_max is None else float(r_max),
        )
    try:
        return CharTriplet(v, A, LevyMeasure(AtomicMeasure2D(atoms), radial))
    except ValueError as e:
        raise SchemaError(str(e)) from e


# -- stable specs ------------------------------------------------------------


def stable_spec_from_dict(obj: dict) -> StableSpec:
    alpha = float(_need(obj, "alpha", (int, float)))
    theta = tuple(
        (float(_need(e, "angle", (int, float))), float(_need(e, "m", (int, float))))
        for e in obj.get("theta", [])
    )
    v = _vec2(obj.get("v", [0.0, 0.0]))
    A = None
    if obj.get("gaussian_A") is not None:
        rows = obj["gaussian_A"]
        A = Matrix2(float(rows[0][0]), float(rows[0][1]), float(rows[1][1]))
    try:
        return StableSpec(alpha=alpha, theta=theta, v=v, gaussian_a=A)
    except ValueError as e:
        raise SchemaError(str(e)) from e


def stable_spec_to_dict(spec: StableSpec) -> dict:
    out: dict[str, Any] = {
        "alpha": spec.alpha,
        "theta": [{"angle": a, "m": m} for a, m in spec.theta],
        "v": list(spec.v),
    }
    if spec.gaussian_a is not None:
        A = spec.gaussian_a
        out["gaussian_A"] = [[A.a, A.c], [A.c, A.b]]
    return out


# -- arrays ------------------------------------------------------------------


def array_to_dict(arr: TriangularArray) -> dict:
    return {
        "L": arr.L,
        "rows": [
            {"measures": [measure_to_dict(m) for m in row], "shift": list(shift)}
            for row, shift in zip(arr.rows, arr.shifts)
        ],
    }


def array_from_dict(obj: dict) -> TriangularArray:
    rows_obj = _need(obj, "rows", list)
    rows = []
    shifts = []
    for r in rows_obj:
        ms = [measure_from_dict(m) for m in _need(r, "measures", list)]
        rows.append(ms)
        shifts.append(_vec2(r.get("shift", [0.0, 0.0])))
    try:
        return make_array(rows, shifts, L=float(obj.get("L", 1.0)))
    except ValueError as e:
        raise SchemaError(str(e)) from e


# -- convolution reps --------------------------------------------------------


def rep_to_dict(rep: BiConvRep) -> dict:
    terms = []
    for t in rep.terms:
        if isinstance(t, PlanarMeasure):
            terms.append({"measure": measure_to_dict(t)})
        else:
            terms.append({"triplet": triplet_to_dict(t)})
    return {"terms": terms, "shift": list(rep.shift)}


def rep_from_dict(obj: dict) -> BiConvRep:
    items = []
    for t in _need(obj, "terms", list):
        if "measure" in t:
            items.append(measure_from_dict(t["measure"]))
        elif "triplet" in t:
            items.append(triplet_from_dict(t["triplet"]))
        else:
            raise SchemaError("rep terms must contain 'measure' or 'triplet'")
    return bi_free_convolve(items, shift=_vec2(obj.get("shift", [0.0, 0.0])))


# -- probes ------------------------------------------------------------------


def probes_from_dict(obj) -> list[tuple[complex, complex]]:
    if not isinstance(obj, list) or not obj:
        raise SchemaError("probes file must hold a nonempty list")
    out = []
    for e in obj:
        z = _vec2(_need(e, "z"))
        w = _vec2(_need(e, "w"))
        out.append((complex(*z), complex(*w)))
    return out


# -- files -------------------------------------------------------------------


def load_json(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaError(f"cannot read JSON from {path}: {e}") from e


def dump_json(path: str | Path, payload: Any) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_grid_csv(path: str | Path, grid: GridDensity) -> None:
    """Two axis header rows, then the value matrix row-major over s."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("s_axis," + ",".join(CSV_FMT % v for v in grid.s_axis) + "\n")
        fh.write("t_axis," + ",".join(CSV_FMT % v for v in grid.t_axis) + "\n")
        for i in range(len(grid.s_axis)):
            fh.write(",".join(CSV_FMT % v for v in grid.values[i]) + "\n")


def write_table_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = [CSV_FMT % v if isinstance(v, (int, float, np.floating)) else str(v) for v in row]
            fh.write(",".join(cells) + "\n")
