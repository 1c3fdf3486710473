"""JSON/CSV serialization for MPS files, reports and traces."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math

import numpy as np

from .errors import DomainError
from .mps import MatrixProductState

__all__ = ["InputError", "load_mps", "loads_mps", "dump_mps", "to_jsonable", "dumps_json", "csv_text", "digest"]


class InputError(DomainError):
    """Malformed input file."""


def _complex_grid(obj, what):
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{what}: expected nested lists of [re, im] pairs") from exc
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise InputError(f"{what}: complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def loads_mps(text: str) -> MatrixProductState:
    """Parse ``{"d", "D", "tensors": [p][row][col] -> [re, im], "boundary"?}``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("MPS file must hold a JSON object")
    missing = {"d", "D", "tensors"} - doc.keys()
    if missing:
        raise InputError(f"MPS file lacks keys: {sorted(missing)}")
    d, D = doc["d"], doc["D"]
    if not (isinstance(d, int) and isinstance(D, int) and d >= 1 and D >= 1):
        raise InputError("'d' and 'D' must be positive integers")
    tensors = _complex_grid(doc["tensors"], "tensors")
    if tensors.shape != (d, D, D):
        raise InputError(f"tensors have shape {tensors.shape}, expected {(d, D, D)}")
    boundary = None
    if doc.get("boundary") is not None:
        boundary = _complex_grid(doc["boundary"], "boundary")
        if boundary.shape != (D, D):
            raise InputError(f"boundary has shape {boundary.shape}, expected {(D, D)}")
    try:
        return MatrixProductState(tensors, boundary)
    except DomainError as exc:
        raise InputError(str(exc)) from exc


def load_mps(path) -> MatrixProductState:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return loads_mps(text)


def _pairs(a):
    a = np.asarray(a)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def dump_mps(mps: MatrixProductState) -> dict:
    doc = {"d": mps.d, "D": mps.D, "tensors": _pairs(mps.tensors)}
    if not np.allclose(mps.boundary, np.eye(mps.D), atol=0):
        doc["boundary"] = _pairs(mps.boundary)
    return doc


def to_jsonable(obj):
    """Plain-JSON view: complex -> [re, im], inf -> "inf", nan -> null."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def digest(payload) -> str:
    if isinstance(payload, str):
        payload = payload.encode("utf-8")
    return hashlib.sha256(payload).hexdigest()
