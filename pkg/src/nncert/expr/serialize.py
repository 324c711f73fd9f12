"""JSON wire format of :class:`EvalProgram` (the certificate IR).

Floats are written with 17 significant digits so binary64 values round-trip
exactly; the output is byte-deterministic for a given program.
"""
from __future__ import annotations

import json
import math

from ..errors import FormatError
from .program import NODE_KINDS, Chart, EvalProgram, Node

FORMAT = "nncert-ir"
VERSION = 1


def _fmt_float(v):
    if not math.isfinite(v):
        raise ValueError(f"non-finite float {v!r} cannot be serialized")
    s = "%.17g" % v
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def dumps(obj, indent=None, _level=0):
    """json.dumps look-alike writing floats with 17 significant digits."""
    pad = "" if indent is None else "\n" + " " * (indent * (_level + 1))
    end = "" if indent is None else "\n" + " " * (indent * _level)
    sep = ", " if indent is None else ","
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isinf(obj):
            return "null"
        return _fmt_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # numeric rows stay on one line
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in obj):
            return "[" + ", ".join(dumps(x) for x in obj) + "]"
        items = [pad + dumps(x, indent, _level + 1) for x in obj]
        return "[" + sep.join(items) + end + "]"
    if hasattr(obj, "tolist"):
        return dumps(obj.tolist(), indent, _level)
    if hasattr(obj, "item"):
        return dumps(obj.item(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def program_to_dict(p: EvalProgram):
    return {
        "format": FORMAT,
        "version": VERSION,
        "dimension": p.dimension,
        "charts": [
            {
                "id": c.id,
                "base": list(c.base),
                "matrix": [list(r) for r in c.matrix],
                "components": list(c.components),
                "max_iter": c.max_iter,
                "tol": c.tol,
                "radius": None if math.isinf(c.radius) else c.radius,
                "meta": c.meta,
            }
            for c in p.charts
        ],
        "nodes": [
            {"id": n.id, "kind": n.kind, "args": list(n.args), "payload": dict(sorted(n.payload.items()))}
            for n in p.nodes
        ],
        "roots": p.roots,
        "meta": p.meta,
    }


def serialize(p: EvalProgram, indent=1) -> bytes:
    return (dumps(program_to_dict(p), indent) + "\n").encode("utf-8")


def deserialize(data) -> EvalProgram:
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"payload is not UTF-8: {exc}") from None
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed payload: {exc}") from None
    return program_from_dict(data)


def _req(d, key, typ, where):
    if not isinstance(d, dict) or key not in d:
        raise FormatError(f"{where}: missing field {key!r}")
    v = d[key]
    if typ is not None and not isinstance(v, typ) or isinstance(v, bool) and typ is not bool:
        raise FormatError(f"{where}: field {key!r} has wrong type")
    return v


def program_from_dict(d) -> EvalProgram:
    if not isinstance(d, dict):
        raise FormatError("payload is not a JSON object")
    if d.get("format", FORMAT) != FORMAT:
        raise FormatError(f"unknown format {d.get('format')!r}")
    version = d.get("version")
    if version != VERSION:
        raise FormatError(f"version mismatch: expected {VERSION}, got {version!r}")
    dim = _req(d, "dimension", int, "program")
    if dim < 1:
        raise FormatError("dimension must be positive")
    raw_nodes = _req(d, "nodes", list, "program")
    raw_charts = d.get("charts", [])
    if not isinstance(raw_charts, list):
        raise FormatError("charts must be a list")
    n_nodes = len(raw_nodes)

    charts = []
    for i, c in enumerate(raw_charts):
        where = f"chart {i}"
        if _req(c, "id", int, where) != i:
            raise FormatError(f"{where}: id out of sequence")
        base = _req(c, "base", list, where)
        matrix = _req(c, "matrix", list, where)
        comps = _req(c, "components", list, where)
        if len(matrix) != len(base) or any(not isinstance(r, list) or len(r) != len(base) for r in matrix):
            raise FormatError(f"{where}: matrix shape mismatch")
        if len(comps) != len(base) or any(not isinstance(k, int) or not 0 <= k < n_nodes for k in comps):
            raise FormatError(f"{where}: bad component references")
        radius = c.get("radius")
        charts.append(Chart(
            i, tuple(float(v) for v in base), tuple(tuple(float(v) for v in r) for r in matrix),
            tuple(comps), int(c.get("max_iter", 50)), float(c.get("tol", 1e-12)),
            math.inf if radius is None else float(radius), dict(c.get("meta", {})),
        ))

    nodes = []
    for i, raw in enumerate(raw_nodes):
        where = f"node {i}"
        if _req(raw, "id", int, where) != i:
            raise FormatError(f"{where}: id out of sequence")
        kind = _req(raw, "kind", str, where)
        if kind not in NODE_KINDS:
            raise FormatError(f"{where}: unknown node kind {kind!r}")
        args = _req(raw, "args", list, where)
        if any(not isinstance(a, int) or isinstance(a, bool) or not 0 <= a < i for a in args):
            raise FormatError(f"{where}: argument references a missing or later node")
        payload = raw.get("payload", {})
        if not isinstance(payload, dict):
            raise FormatError(f"{where}: payload must be an object")
        for key in NODE_KINDS[kind]:
            if key not in payload:
                raise FormatError(f"{where}: payload missing {key!r}")
        bodies = []
        if kind == "quadrature":
            bodies = payload["body"]
        elif kind == "jet-of":
            bodies = [payload["body"]]
        if any(not isinstance(b, int) or not 0 <= b < i for b in bodies):
            raise FormatError(f"{where}: body references a missing or later node")
        if kind == "chart-inverse" and not 0 <= payload["chart"] < len(charts):
            raise FormatError(f"{where}: unknown chart {payload['chart']}")
        nodes.append(Node(i, kind, tuple(args), payload))

    roots = d.get("roots", {})
    _check_roots(roots, n_nodes)
    return EvalProgram(dim, tuple(nodes), tuple(charts), roots, dict(d.get("meta", {})))


def _check_roots(r, n_nodes):
    if isinstance(r, dict):
        for v in r.values():
            _check_roots(v, n_nodes)
    elif isinstance(r, list):
        for v in r:
            _check_roots(v, n_nodes)
    elif isinstance(r, int) and not isinstance(r, bool):
        if not 0 <= r < n_nodes:
            raise FormatError(f"root references missing node {r} (node table truncated?)")
    else:
        raise FormatError("roots must be node ids, lists or objects")
