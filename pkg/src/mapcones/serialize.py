"""JSON documents for maps, generators, idempotent pairs and verdicts.

Complex numbers are written as ``[re, im]``; matrices as nested row-major
lists of those. On input a bare real number is accepted for a complex entry.

Map:        ``{"n": 2, "rep": "choi"|"tensor"|"natural"|"kraus"|"family", "data": ...}``
Generator:  any map document, or ``{"n": 2, "kind": "gksl", "H": M, "V": [M, ...]}``,
            or ``{"n": 2, "kind": "dmatrix", "D": M}`` (Gell-Mann basis, ``B_1 = I/sqrt(n)``).
Pair:       ``{"T0": map, "S": map}``.
"""

import json

import numpy as np

from mapcones.errors import DimensionError, SchemaError
from mapcones.superop import OrthonormalBasis, SuperOp, standard_map

MAP_REPS = ("choi", "tensor", "natural", "kraus", "family")


def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(M):
    M = np.asarray(M, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _decode_entry(x, where):
    if isinstance(x, bool):
        raise SchemaError(f"{where}: boolean is not a number")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(x[0], x[1])
    raise SchemaError(f"{where}: expected a number or [re, im], got {x!r}")


def decode_matrix(obj, where="matrix"):
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise SchemaError(f"{where}: expected a nonempty list of rows")
    width = len(obj[0])
    if any(len(r) != width for r in obj):
        raise SchemaError(f"{where}: rows have unequal length")
    return np.array(
        [[_decode_entry(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(obj)],
        dtype=np.complex128,
    )


def _require(doc, key, where):
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected a JSON object")
    if key not in doc:
        raise SchemaError(f"{where}: missing key {key!r}")
    return doc[key]


def _dim(doc, where):
    n = _require(doc, "n", where)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise SchemaError(f"{where}: 'n' must be a positive integer")
    return n


def _square(M, size, where):
    if M.shape != (size, size):
        raise DimensionError(f"{where}: expected shape {(size, size)}, got {M.shape}")
    return M


def family_from_json(doc, where="map"):
    from mapcones.family4 import FamilyParams

    n = _dim(doc, where)
    data = _require(doc, "data", where)
    if not (isinstance(data, list) and len(data) == 4 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in data
    )):
        raise SchemaError(f"{where}: family data must be [alpha, beta, gamma, delta]")
    return FamilyParams(*(float(x) for x in data), n=n)


def map_from_json(doc, where="map"):
    n = _dim(doc, where)
    rep = _require(doc, "rep", where)
    if rep not in MAP_REPS:
        raise SchemaError(f"{where}: unknown rep {rep!r}; expected one of {MAP_REPS}")
    if rep == "family":
        return family_from_json(doc, where).to_superop()
    data = _require(doc, "data", where)
    if rep == "kraus":
        if not isinstance(data, list) or not data:
            raise SchemaError(f"{where}: kraus data must be a nonempty list of matrices")
        ops = [_square(decode_matrix(L, f"{where}.data[{i}]"), n, where) for i, L in enumerate(data)]
        return SuperOp(n, "kraus", ops)
    M = _square(decode_matrix(data, f"{where}.data"), n * n, where)
    return SuperOp(n, rep, M)


def map_to_json(S, rep="choi"):
    if rep == "kraus":
        return {"n": S.n, "rep": "kraus", "data": [encode_matrix(L) for L in S.kraus]}
    return {"n": S.n, "rep": rep, "data": encode_matrix(getattr(S, rep))}


def gksl_from_json(doc, where="generator"):
    from mapcones.generators import GKSLData

    n = _dim(doc, where)
    H = _square(decode_matrix(_require(doc, "H", where), f"{where}.H"), n, where)
    V = doc.get("V", [])
    if not isinstance(V, list):
        raise SchemaError(f"{where}: 'V' must be a list of matrices")
    Vs = tuple(_square(decode_matrix(v, f"{where}.V[{i}]"), n, where) for i, v in enumerate(V))
    return GKSLData(H, Vs)


def gksl_to_json(g):
    return {"n": g.n, "kind": "gksl", "H": encode_matrix(g.H), "V": [encode_matrix(v) for v in g.V]}


def generator_from_json(doc, where="generator"):
    """Return ``(SuperOp, FamilyParams or None)``."""
    from mapcones.generators import DMatrix, build_gksl, from_dmatrix

    if isinstance(doc, dict) and "kind" in doc:
        kind = doc["kind"]
        if kind == "gksl":
            return build_gksl(gksl_from_json(doc, where)), None
        if kind == "dmatrix":
            n = _dim(doc, where)
            D = _square(decode_matrix(_require(doc, "D", where), f"{where}.D"), n * n, where)
            return from_dmatrix(DMatrix(OrthonormalBasis(n), D)), None
        raise SchemaError(f"{where}: unknown generator kind {kind!r}")
    if isinstance(doc, dict) and doc.get("rep") == "family":
        p = family_from_json(doc, where)
        return p.to_superop(), p
    return map_from_json(doc, where), None


def pair_from_json(doc, where="pair"):
    from mapcones.generators import IdempotentPair

    T0 = map_from_json(_require(doc, "T0", where), f"{where}.T0")
    S = map_from_json(_require(doc, "S", where), f"{where}.S")
    return IdempotentPair(T0, S)


def named_or_map(item, n):
    """A standard map name (``Id``, ``P``, ``D``, ``T``) or a parsed map document."""
    if isinstance(item, str):
        return standard_map(item, n)
    return map_from_json(item, "idempotent")


def loads(text, where="input"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{where}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
