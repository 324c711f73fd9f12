"""Problem data: objective, constraints, verification box and file loading."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction

import numpy as np

from .errors import ParseError
from .expr import Builder, evaluate_jet_many, evaluate_many, parse, to_string
from .expr.ast import Const, make_binop


@dataclass(frozen=True)
class Box:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("box bounds differ in length")
        if any(not lo < hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("box requires lower < upper componentwise")

    @classmethod
    def cube(cls, n, half_width):
        return cls((-float(half_width),) * n, (float(half_width),) * n)

    @property
    def dimension(self):
        return len(self.lower)

    @property
    def diameter(self):
        return float(np.linalg.norm(np.subtract(self.upper, self.lower)))

    def contains(self, X, tol=0.0):
        X = np.atleast_2d(X)
        return np.all((X >= np.asarray(self.lower) - tol) & (X <= np.asarray(self.upper) + tol), axis=1)

    def to_json(self):
        return {"lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class Problem:
    """min f subject to g_i >= 0, h_j = 0, examined on ``box``."""

    n: int
    f: object
    g: tuple = ()
    h: tuple = ()
    box: Box = None
    names: tuple = None

    @classmethod
    def from_strings(cls, n, f, g=(), h=(), box=None, names=None):
        if box is None:
            box = Box.cube(n, 1.0)
        elif not isinstance(box, Box):
            box = Box(tuple(map(float, box[0])), tuple(map(float, box[1])))
        return cls(
            n,
            parse(f, n, names),
            tuple(parse(s, n, names) for s in g),
            tuple(parse(s, n, names) for s in h),
            box,
            tuple(names) if names else None,
        )

    @property
    def l(self):
        return len(self.g)

    @property
    def m(self):
        return len(self.h)

    def shifted(self, f_star):
        """Same problem with objective f - f_star."""
        if not f_star:
            return self
        f = make_binop("-", self.f, Const(Fraction(float(f_star))))
        return Problem(self.n, f, self.g, self.h, self.box, self.names)

    @cached_property
    def _compiled(self):
        b = Builder(self.n)
        xs = b.vars(self.n)
        f = b.expr(self.f, xs)
        g = [b.expr(e, xs) for e in self.g]
        h = [b.expr(e, xs) for e in self.h]
        return b.build({"f": f, "g": g, "h": h}), [f] + g + h

    @property
    def program(self):
        return self._compiled[0]

    def values(self, X):
        """(f, G, H) with shapes (N,), (l, N), (m, N)."""
        program, roots = self._compiled
        V = evaluate_many(program, roots, X)
        return V[0], V[1:1 + self.l], V[1 + self.l:]

    def jets(self, x, order=2):
        """Jets at one point: lists of (value, gradient, hessian) for f, g, h."""
        program, roots = self._compiled
        v, g, h = evaluate_jet_many(program, roots, np.asarray(x, dtype=float)[None, :], order)
        out = [(float(v[k, 0]), g[k, 0], h[k, 0]) for k in range(len(roots))]
        return out[0], out[1:1 + self.l], out[1 + self.l:]

    def strings(self):
        s = lambda e: to_string(e, self.names)  # noqa: E731
        return {"objective": s(self.f), "inequalities": [s(e) for e in self.g],
                "equalities": [s(e) for e in self.h]}

    def feasibility(self, X, tol=1e-8):
        """Boolean mask of points of X lying in S (within tol)."""
        _, G, H = self.values(X)
        ok = np.ones(np.atleast_2d(X).shape[0], dtype=bool)
        if self.l:
            ok &= np.all(G >= -tol, axis=0)
        if self.m:
            ok &= np.all(np.abs(H) <= tol, axis=0)
        return ok


@dataclass
class ProblemOptions:
    tolerances: dict = field(default_factory=dict)
    quad_order: int = 32
    budget: int = 256
    zeros: list = None
    f_star: float = None


def load_problem(source):
    """Read a problem file (path, JSON text or dict) into (Problem, ProblemOptions)."""
    if isinstance(source, dict):
        d = source
    else:
        text = source
        if not isinstance(source, str) or not source.lstrip().startswith("{"):
            try:
                with open(source, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ParseError(f"cannot read problem file: {exc.strerror}") from None
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"problem file is not valid JSON: {exc.msg}", exc.pos) from None
    try:
        n = int(d["dimension"])
        names = d.get("variables")
        if names is not None and (len(names) != n or any(not isinstance(v, str) for v in names)):
            raise ParseError("variables must list one name per dimension")
        box = d.get("box")
        if box is None:
            raise ParseError("problem file needs a box")
        try:
            box = Box(tuple(map(float, box["lower"])), tuple(map(float, box["upper"])))
        except ValueError as exc:
            raise ParseError(f"invalid box: {exc}") from None
        if box.dimension != n:
            raise ParseError("box dimension does not match")
        problem = Problem.from_strings(n, d["objective"], d.get("inequalities", []), d.get("equalities", []),
                                       box, names)
    except KeyError as exc:
        raise ParseError(f"problem file missing field {exc.args[0]!r}") from None
    o = d.get("options", {}) or {}
    opts = ProblemOptions(
        tolerances=dict(o.get("tolerances", {})),
        quad_order=int(o.get("quad_order", 32)),
        budget=int(o.get("budget", 256)),
        zeros=[list(map(float, z)) for z in o["zeros"]] if o.get("zeros") is not None else None,
        f_star=None if o.get("f_star") is None else float(o["f_star"]),
    )
    if opts.zeros is not None and any(len(z) != n for z in opts.zeros):
        raise ParseError("asserted zeros have the wrong dimension")
    return problem, opts
