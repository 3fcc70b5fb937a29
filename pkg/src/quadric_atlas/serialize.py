"""JSON interchange: instance files, path files, avoid sets, run reports.

Everything is UTF-8 JSON with dense row-major arrays.  Floats are written
with Python's shortest round-trip representation (up to 17 significant
digits), so gen -> parse -> serialize is byte-identical.
"""

from __future__ import annotations

import dataclasses
import json
from typing import Any

import numpy as np

from ._defaults import SYM_TOL
from .errors import InputError
from .forms import FormSpace
from .solver import AvoidSet

TOOL_NAME = "quadric-atlas"


def jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays and dataclasses to JSON types."""
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def dumps(document: Any) -> str:
    return json.dumps(jsonable(document), indent=2) + "\n"


def space_to_document(space: FormSpace, meta: dict | None = None) -> dict:
    return {
        "n": space.dim_v,
        "k": space.dim_w,
        "basis": [mat.tolist() for mat in space.stack],
        "meta": meta or {},
    }


def space_from_document(doc: dict) -> tuple[FormSpace, dict]:
    """Parse an instance document into a validated FormSpace."""
    try:
        n = int(doc["n"])
        k = int(doc["k"])
        basis = doc["basis"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed instance document: {exc}") from exc
    stack = np.asarray(basis, dtype=np.float64)
    if stack.shape != (k, n, n):
        raise InputError(
            f"instance basis has shape {stack.shape}, expected ({k}, {n}, {n})"
        )
    asym = np.abs(stack - stack.transpose(0, 2, 1)).max() if stack.size else 0.0
    if asym > SYM_TOL * (1.0 + (np.abs(stack).max() if stack.size else 0.0)):
        raise InputError(f"instance basis not symmetric (defect {asym:.3e})")
    space = FormSpace(stack)
    space.require_independent()
    return space, dict(doc.get("meta") or {})


def path_to_document(knots, meta: dict | None = None) -> dict:
    return {
        "knots": [np.asarray(k, dtype=np.float64).tolist() for k in knots],
        "meta": meta or {},
    }


def path_knots_from_document(doc: dict) -> list[np.ndarray]:
    try:
        knots = doc["knots"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed path document: {exc}") from exc
    if not isinstance(knots, list) or not knots:
        raise InputError("path document needs a nonempty 'knots' list")
    return [np.asarray(k, dtype=np.float64) for k in knots]


def avoid_from_document(doc: dict) -> AvoidSet:
    try:
        clearance = float(doc["clearance"])
        subspaces = doc["subspaces"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed avoid document: {exc}") from exc
    arrays = tuple(np.asarray(s, dtype=np.float64) for s in subspaces)
    return AvoidSet(arrays, clearance)


def run_report(command, seed, results: dict, timings: dict, version: str) -> dict:
    """Assemble a machine-readable run report.

    Timings live in their own key so determinism checks can compare the
    rest of the payload byte for byte.
    """
    return {
        "tool": TOOL_NAME,
        "version": version,
        "command": list(command),
        "seed": seed,
        "results": jsonable(results),
        "timings": jsonable(timings),
    }
