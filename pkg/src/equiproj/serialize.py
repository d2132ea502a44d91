"""JSON encodings for matrices and projections."""
from __future__ import annotations

import json

import numpy as np

from .projections import DEFAULT_TOL, Projection, make_projection


class SchemaError(ValueError):
    pass


def matrix_to_json(M) -> dict:
    """{"field": "R"|"C", "rows", "cols", "entries"}; complex entries are [re, im] pairs."""
    M = np.asarray(M)
    if M.ndim != 2:
        raise SchemaError(f"expected a 2-d matrix, got shape {M.shape}")
    if np.iscomplexobj(M):
        entries = [[[float(z.real), float(z.imag)] for z in row] for row in M]
        fld = "C"
    else:
        entries = [[float(x) for x in row] for row in M]
        fld = "R"
    return {"field": fld, "rows": int(M.shape[0]), "cols": int(M.shape[1]), "entries": entries}


def matrix_from_json(doc) -> np.ndarray:
    if isinstance(doc, list):
        doc = {"field": "R", "entries": doc}
    try:
        fld = doc.get("field", "R")
        raw = doc["entries"]
        if fld == "C":
            M = np.array([[complex(re, im) for re, im in row] for row in raw], dtype=complex)
        elif fld == "R":
            M = np.array(raw, dtype=float)
        else:
            raise SchemaError(f"unknown field {fld!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed matrix: {exc}") from exc
    if M.ndim != 2:
        raise SchemaError(f"matrix entries must be a rectangular 2-d list, got shape {M.shape}")
    for key, n in (("rows", M.shape[0]), ("cols", M.shape[1])):
        if key in doc and int(doc[key]) != n:
            raise SchemaError(f"declared {key}={doc[key]} but entries have {n}")
    return M


def projection_to_json(P: Projection) -> dict:
    doc = matrix_to_json(P.matrix)
    doc.update(rank=P.rank, tol=P.tol)
    return doc


def projection_from_json(doc) -> Projection:
    M = matrix_from_json(doc)
    P = make_projection(M, float(doc.get("tol", DEFAULT_TOL)) if isinstance(doc, dict) else DEFAULT_TOL)
    if isinstance(doc, dict) and "rank" in doc and int(doc["rank"]) != P.rank:
        raise SchemaError(f"declared rank {doc['rank']} but trace gives {P.rank}")
    return P


def _numpy_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def dumps(doc, pretty: bool = False) -> str:
    return json.dumps(doc, indent=2 if pretty else None, sort_keys=True, default=_numpy_default)
