"""JSON state files and report serialization.

Pure state:    {"dims": [...], "labels": [...], "amplitudes": [[re, im], ...]}
Density:       {"dims": [...], "labels": [...], "matrix": [[[re, im], ...], ...]}

``labels`` is optional on input. Floats are written with ``repr``, which is
the shortest string that round-trips to the same double.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .schmidt import DecompositionTree, Node, SeparableDecohered
from .states import DensityMatrix, PureState, State, SubsystemLayout


class StateFileError(ValueError):
    """State document is malformed."""


def _pairs(values: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(values, dtype=complex).ravel()]


def _complex(pairs, where: str) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise StateFileError(f"{where}: expected [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def state_to_dict(s: State) -> dict:
    out = {"dims": list(s.layout.dims), "labels": list(s.layout.labels)}
    if isinstance(s, PureState):
        out["amplitudes"] = _pairs(s.amplitudes)
    else:
        out["matrix"] = [_pairs(row) for row in s.matrix]
    return out


def state_from_dict(doc: dict) -> State:
    if not isinstance(doc, dict) or "dims" not in doc:
        raise StateFileError("state document needs a 'dims' field")
    try:
        dims = [int(d) for d in doc["dims"]]
        layout = SubsystemLayout.from_dims(dims, doc.get("labels"))
    except (TypeError, ValueError) as exc:
        raise StateFileError(f"bad layout: {exc}") from exc
    try:
        if "amplitudes" in doc:
            return PureState(layout, _complex(doc["amplitudes"], "amplitudes"))
        if "matrix" in doc:
            return DensityMatrix(layout, _complex(doc["matrix"], "matrix"))
    except (TypeError, ValueError) as exc:
        raise StateFileError(str(exc)) from exc
    raise StateFileError("state document needs 'amplitudes' or 'matrix'")


def load_state(path: str | Path) -> State:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFileError(f"invalid JSON: {exc}") from exc
    return state_from_dict(doc)


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2)


def save_state(s: State, path: str | Path) -> None:
    Path(path).write_text(dumps(state_to_dict(s)) + "\n")


def _node_to_dict(node: Node) -> dict:
    if node.is_final:
        return {
            "party": list(node.parties),
            "branches": [{"weight": b.weight, "kets": [_pairs(k) for k in b.kets]} for b in node.branches],
        }
    return {
        "party": node.parties[0],
        "branches": [{"weight": b.weight, "ket": _pairs(b.kets[0]), "children": _node_to_dict(b.child)}
                     for b in node.branches],
    }


def tree_to_dict(tree: DecompositionTree) -> dict:
    return {
        "ordering": list(tree.ordering),
        "renormalization_residual": tree.renormalization_residual,
        "root": _node_to_dict(tree.root),
    }


def separable_to_dict(sigma: SeparableDecohered) -> dict:
    return {
        "labels": list(sigma.layout.labels),
        "weights": [float(w) for w in sigma.weights],
        "kets": [[_pairs(k) for k in term] for term in sigma.kets],
    }


def to_jsonable(obj):
    """Recursively convert numpy values, dataclasses and non-finite floats."""
    if isinstance(obj, DecompositionTree):
        return tree_to_dict(obj)
    if isinstance(obj, SeparableDecohered):
        return separable_to_dict(obj)
    if isinstance(obj, (PureState, DensityMatrix)):
        return state_to_dict(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj
