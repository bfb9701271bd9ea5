"""JSON system specification files.

Layout::

    {
      "name": "sl2_ex_ii",
      "algebra": {"dim": 3, "basis_names": ["X", "Y", "Z"],
                  "structure": [[i, j, k, value], ...]},          # i < j, sparse
      "derivation": {"kind": "matrix", "matrix": [[...], ...]}
                  | {"kind": "inner", "inner_element": [...]},
      "control_fields": [[...], ...],
      "range": "unrestricted" | {"restricted": [[lo, hi], ...]},
      "group": {"factors": [{"type": "translation", "size": 2, "name": "R2"},
                            {"type": "matrix", "size": 2, "embedding": [[flat 2x2], ...],
                             "checks": ["unit_det"], "name": "SL(2,R)"}],
                "declarations": [{"factor": "SL(2,R)", "finite_center": true}],
                "simply_connected_hint": null},
      "realization_derivation": ["inner"]
    }

Errors carry a JSON path such as ``$.algebra.structure[3]``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .algebra import LieAlgebra, ad, validate_jacobi
from .errors import InvalidInput, ParseError, ValidationFailed
from .simulator import DERIVATION_KINDS, GroupRealization, MatrixFactor, TranslationFactor
from .system import ControlRange, ControlSystem, FiniteCenterDeclaration, GroupMeta


@dataclass(frozen=True, eq=False)
class LoadedSpec:
    system: ControlSystem
    realization: GroupRealization
    inner_element: np.ndarray | None
    digest: str


def _need(obj, key, path, kind=None):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", path)
    if key not in obj:
        raise ParseError(f"missing key {key!r}", path)
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise ParseError(f"expected {getattr(kind, '__name__', kind)}", f"{path}.{key}")
    return val


def _array(val, shape, path) -> np.ndarray:
    try:
        arr = np.array(val, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("expected numbers", path) from None
    if arr.shape != shape:
        raise ParseError(f"expected shape {shape}, got {arr.shape}", path)
    if not np.all(np.isfinite(arr)):
        raise ParseError("non-finite value", path)
    return arr


def _parse_algebra(doc) -> LieAlgebra:
    p = "$.algebra"
    alg = _need(doc, "algebra", "$", dict)
    d = _need(alg, "dim", p, int)
    if d < 1:
        raise ParseError("dim must be positive", f"{p}.dim")
    names = alg.get("basis_names") or [f"e{i + 1}" for i in range(d)]
    if len(names) != d or not all(isinstance(n, str) for n in names):
        raise ParseError(f"expected {d} basis names", f"{p}.basis_names")
    c = np.zeros((d, d, d))
    seen = set()
    for n, entry in enumerate(_need(alg, "structure", p, list)):
        q = f"{p}.structure[{n}]"
        if not isinstance(entry, list) or len(entry) != 4:
            raise ParseError("expected [i, j, k, value]", q)
        i, j, k, v = entry
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in (i, j, k)):
            raise ParseError("indices must be integers", q)
        if not all(0 <= x < d for x in (i, j, k)):
            raise ParseError(f"index out of range for dim {d}", q)
        if not i < j:
            raise ParseError(f"entries must satisfy i < j (antisymmetry is implied), got i={i}, j={j}", q)
        if (i, j, k) in seen:
            raise ParseError(f"duplicate entry for ({i}, {j}, {k})", q)
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not np.isfinite(v):
            raise ParseError("value must be a finite number", q)
        seen.add((i, j, k))
        c[i, j, k] = v
    return LieAlgebra(c, tuple(names))


def _parse_derivation(doc, a: LieAlgebra):
    p = "$.derivation"
    der = _need(doc, "derivation", "$", dict)
    kind = _need(der, "kind", p, str)
    if kind == "matrix":
        return _array(_need(der, "matrix", p), (a.dim, a.dim), f"{p}.matrix"), None
    if kind == "inner":
        y = _array(_need(der, "inner_element", p), (a.dim,), f"{p}.inner_element")
        return ad(a, y), y
    raise ParseError(f"kind must be 'matrix' or 'inner', got {kind!r}", f"{p}.kind")


def _parse_range(doc, m: int) -> ControlRange:
    val = doc.get("range", "unrestricted")
    if val == "unrestricted":
        return ControlRange()
    if isinstance(val, dict) and "restricted" in val:
        b = _array(val["restricted"], (m, 2), "$.range.restricted")
        try:
            return ControlRange(b)
        except InvalidInput as e:
            raise ParseError(str(e), "$.range.restricted") from None
    raise ParseError("expected 'unrestricted' or {'restricted': [[lo, hi], ...]}", "$.range")


def _parse_group(doc):
    p = "$.group"
    grp = _need(doc, "group", "$", dict)
    factors = []
    for n, f in enumerate(_need(grp, "factors", p, list)):
        q = f"{p}.factors[{n}]"
        typ = _need(f, "type", q, str)
        size = _need(f, "size", q, int)
        name = f.get("name")
        if typ == "translation":
            factors.append(TranslationFactor(size, name or f"R{size}"))
        elif typ == "matrix":
            emb = _need(f, "embedding", q, list)
            mats = _array(emb, (len(emb), size * size), f"{q}.embedding").reshape(-1, size, size)
            try:
                factors.append(MatrixFactor(mats, tuple(f.get("checks", ())), name or f"G{n}"))
            except InvalidInput as e:
                raise ParseError(str(e), q) from None
        else:
            raise ParseError(f"type must be 'translation' or 'matrix', got {typ!r}", f"{q}.type")
    decls = []
    for n, d in enumerate(grp.get("declarations", [])):
        q = f"{p}.declarations[{n}]"
        decls.append(FiniteCenterDeclaration(_need(d, "factor", q, str), bool(_need(d, "finite_center", q, bool))))
    meta = GroupMeta(
        simply_connected_hint=grp.get("simply_connected_hint"),
        finite_center_declarations=tuple(decls),
    )
    return factors, meta


def digest(text: str | bytes) -> str:
    if isinstance(text, str):
        text = text.encode()
    return hashlib.sha256(text).hexdigest()


def parse_spec(doc: dict, raw: str | None = None, tol_alg: float | None = None) -> LoadedSpec:
    """Build the system and realization; raises ParseError, ValidationFailed or UnsupportedRealization."""
    if not isinstance(doc, dict):
        raise ParseError("expected an object", "$")
    a = _parse_algebra(doc)
    jac = validate_jacobi(a) if tol_alg is None else validate_jacobi(a, tol_alg)
    if not jac.passed:
        raise ValidationFailed("structure constants violate the Jacobi identity", {"jacobi": jac.residual})
    der, inner = _parse_derivation(doc, a)
    fields = _need(doc, "control_fields", "$", list)
    if not fields:
        raise ParseError("at least one control field is required", "$.control_fields")
    b = _array(fields, (len(fields), a.dim), "$.control_fields")
    rng = _parse_range(doc, b.shape[0])
    factors, meta = _parse_group(doc)
    sys = ControlSystem(a, der, b, rng, meta, name=str(doc.get("name", "")))
    kinds = doc.get("realization_derivation")
    if kinds is not None:
        if not isinstance(kinds, list) or len(kinds) != len(factors):
            raise ParseError(f"expected one kind per factor ({len(factors)})", "$.realization_derivation")
        for n, k in enumerate(kinds):
            if k not in DERIVATION_KINDS:
                raise ParseError(f"unknown kind {k!r}", f"$.realization_derivation[{n}]")
    try:
        real = GroupRealization(a, factors, der, kinds)
    except InvalidInput as e:
        raise ParseError(str(e), "$.group") from None
    text = raw if raw is not None else json.dumps(doc, sort_keys=True)
    return LoadedSpec(sys, real, inner, digest(text))


def load_spec(path: str | Path, tol_alg: float | None = None) -> LoadedSpec:
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from None
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    return parse_spec(doc, raw, tol_alg)


def to_document(sys: ControlSystem, r: GroupRealization, inner_element=None) -> dict:
    """Canonical document: sorted sparse structure entries, plain lists everywhere."""
    a = sys.algebra
    if inner_element is not None:
        der = {"kind": "inner", "inner_element": np.asarray(inner_element, float).tolist()}
    else:
        der = {"kind": "matrix", "matrix": sys.derivation.tolist()}
    factors = []
    for f in r.factors:
        if isinstance(f, TranslationFactor):
            factors.append({"type": "translation", "size": f.dim, "name": f.name})
        else:
            factors.append({
                "type": "matrix",
                "size": f.size,
                "embedding": f.embedding.reshape(f.algebra_dim, -1).tolist(),
                "checks": list(f.checks),
                "name": f.name,
            })
    meta = sys.group_meta
    return {
        "name": sys.name,
        "algebra": {"dim": a.dim, "basis_names": list(a.basis_names), "structure": a.entries()},
        "derivation": der,
        "control_fields": sys.control_fields.tolist(),
        "range": sys.control_range.to_json(),
        "group": {
            "factors": factors,
            "declarations": [
                {"factor": d.factor, "finite_center": d.finite_center} for d in meta.finite_center_declarations
            ],
            "simply_connected_hint": meta.simply_connected_hint,
        },
        "realization_derivation": list(r.kinds),
    }


def dump_spec(spec: LoadedSpec) -> dict:
    return to_document(spec.system, spec.realization, spec.inner_element)


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with lists of scalars kept on one line."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict) and obj:
        items = [f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list) and any(isinstance(x, (list, dict)) for x in obj):
        return "[\n" + ",\n".join(pad + dumps(x, indent, _level + 1) for x in obj) + "\n" + end + "]"
    return json.dumps(obj)


def write_spec(path: str | Path, doc: dict) -> None:
    Path(path).write_text(dumps(doc) + "\n")


__all__ = [
    "LoadedSpec",
    "digest",
    "dump_spec",
    "load_spec",
    "parse_spec",
    "to_document",
    "write_spec",
]
