"""Evaluation graphs (the certificate IR) and their batched evaluator.

A program is a flat, topologically ordered node table.  Nodes evaluate in an
*environment*: a tuple of input scalars plus a batch size.  ``var`` nodes read
the environment, so a subgraph is reusable in any scope.  Three node kinds open
a fresh scope for a body subgraph named in their payload:

``quadrature``     body evaluated at (scaled args..., s) for Gauss-Legendre s in [0, 1]
``jet-of``         body evaluated with identity-seeded jets at the args
``chart-inverse``  chart component roots evaluated during the Newton solve

Every node produces a tuple of scalars; most kinds produce one.  When a node
takes "args", the outputs of all arg nodes are concatenated into one vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ChartError, DerivativeOrderError, DomainError, FormatError
from . import jet as J
from .ast import BinOp, Call, Const, Expr, Neg, Pow, Var
from .jet import Jet, Jet2
from .quadrature import gauss_legendre_01

# kind -> required payload keys
NODE_KINDS = {
    "const": ("value",),
    "var": ("index",),
    "add": (),
    "sub": (),
    "mul": (),
    "div": (),
    "neg": (),
    "sum": (),
    "pow": ("exponent",),
    "sin": (),
    "cos": (),
    "exp": (),
    "log": (),
    "sqrt": (),
    "affine": ("matrix", "offset"),
    "select": ("index",),
    "quadrature": ("body", "scaled", "order"),
    "chart-inverse": ("chart",),
    "jet-of": ("body", "order"),
    "cholesky-column": ("dim", "row", "col"),
    "sqrt-positive": ("margin",),
    "squared": (),
    "ramp-power": ("exponent",),
    "guarded-mul": (),
}


def _freeze(v):
    if isinstance(v, (list, tuple)):
        return tuple(_freeze(x) for x in v)
    if isinstance(v, float) and v != v:
        return ("nan",)
    return v


@dataclass(frozen=True)
class Node:
    id: int
    kind: str
    args: tuple
    payload: dict = field(default_factory=dict, compare=True)

    def __getitem__(self, key):
        return self.payload[key]


@dataclass(frozen=True)
class Chart:
    """Straightening chart x -> (tangent coords, active g, h).

    ``components`` are node ids evaluated in an n-dimensional x environment.
    Newton's initial guess for Phi(x) = t is ``base + matrix @ t``.
    """

    id: int
    base: tuple
    matrix: tuple
    components: tuple
    max_iter: int = 50
    tol: float = 1e-12
    radius: float = math.inf
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self):
        return len(self.base)


@dataclass(frozen=True)
class EvalProgram:
    dimension: int
    nodes: tuple
    charts: tuple = ()
    roots: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    _plans: dict = field(default_factory=dict, compare=False, repr=False)

    def root(self, name):
        return self.roots[name]

    def evaluate(self, root, X):
        return evaluate(self, root, X)

    def jet(self, root, X, order=2):
        return evaluate_jet(self, root, X, order)

    def plan(self, nid):
        """Node ids needed (in order) to evaluate ``nid`` in its own scope."""
        plan = self._plans.get(nid)
        if plan is None:
            seen = set()
            stack = [nid]
            while stack:
                k = stack.pop()
                if k in seen:
                    continue
                seen.add(k)
                node = self.nodes[k]
                args = node.args[:1] if node.kind == "guarded-mul" else node.args
                stack.extend(args)
            plan = sorted(seen)
            self._plans[nid] = plan
        return plan


# ---------------------------------------------------------------------------
# builder


class Builder:
    """Hash-consing constructor for :class:`EvalProgram` node tables."""

    def __init__(self, dimension, program=None):
        self.dimension = dimension
        self.nodes = []
        self.charts = []
        self._index = {}
        self.width = {}
        if program is not None:
            self.charts = list(program.charts)
            for node in program.nodes:
                self._intern(node.kind, node.args, node.payload)

    # -- core ---------------------------------------------------------
    def _intern(self, kind, args, payload):
        key = (kind, tuple(args), _freeze(sorted(payload.items())))
        nid = self._index.get(key)
        if nid is None:
            nid = len(self.nodes)
            self.nodes.append(Node(nid, kind, tuple(args), dict(payload)))
            self._index[key] = nid
            self.width[nid] = self._infer_width(kind, args, payload)
        return nid

    def _infer_width(self, kind, args, payload):
        if kind == "affine":
            return len(payload["matrix"])
        if kind == "quadrature":
            return len(payload["body"])
        if kind == "chart-inverse":
            return len(self.charts[payload["chart"]].base)
        if kind == "jet-of":
            p = sum(self.width[a] for a in args)
            return 1 + p + (p * p if payload["order"] >= 2 else 0)
        return 1

    def node(self, kind, args=(), **payload):
        for a in args:
            if not 0 <= a < len(self.nodes):
                raise ValueError(f"dangling node reference {a}")
        return self._intern(kind, args, payload)

    def const(self, v):
        return self.node("const", value=float(v))

    def var(self, i):
        return self.node("var", index=int(i))

    def vars(self, count):
        return [self.var(i) for i in range(count)]

    def _const_value(self, nid):
        node = self.nodes[nid]
        return node.payload["value"] if node.kind == "const" else None

    # -- arithmetic with constant folding ------------------------------
    def add(self, a, b):
        x, y = self._const_value(a), self._const_value(b)
        if x is not None and y is not None:
            return self.const(x + y)
        return self.node("add", (a, b))

    def sub(self, a, b):
        x, y = self._const_value(a), self._const_value(b)
        if x is not None and y is not None:
            return self.const(x - y)
        return self.node("sub", (a, b))

    def mul(self, a, b):
        x, y = self._const_value(a), self._const_value(b)
        if x is not None and y is not None:
            return self.const(x * y)
        return self.node("mul", (a, b))

    def div(self, a, b):
        x, y = self._const_value(a), self._const_value(b)
        if x is not None and y is not None and y != 0.0:
            return self.const(x / y)
        return self.node("div", (a, b))

    def neg(self, a):
        x = self._const_value(a)
        if x is not None:
            return self.const(-x)
        return self.node("neg", (a,))

    def pow(self, a, e):
        x = self._const_value(a)
        if x is not None:
            return self.const(x ** int(e))
        return self.node("pow", (a,), exponent=int(e))

    def func(self, name, a):
        return self.node(name, (a,))

    def sum(self, ids):
        ids = list(ids)
        if not ids:
            return self.const(0.0)
        if len(ids) == 1:
            return ids[0]
        return self.node("sum", tuple(ids))

    def squared(self, a):
        return self.node("squared", (a,))

    def sqrt_positive(self, a, margin):
        return self.node("sqrt-positive", (a,), margin=float(margin))

    def ramp_power(self, a, e):
        return self.node("ramp-power", (a,), exponent=int(e))

    def guarded_mul(self, w, a):
        return self.node("guarded-mul", (w, a))

    def select(self, a, i):
        if self.width[a] == 1 and i == 0:
            return a
        return self.node("select", (a,), index=int(i))

    def affine(self, args, matrix, offset):
        matrix = [[float(v) for v in row] for row in np.atleast_2d(matrix)]
        offset = [float(v) for v in offset]
        return self.node("affine", tuple(args), matrix=matrix, offset=offset)

    def affine_scalars(self, args, matrix, offset):
        a = self.affine(args, matrix, offset)
        return [self.select(a, i) for i in range(len(offset))]

    def quadrature(self, args, body, scaled, order):
        return self.node(
            "quadrature", tuple(args), body=[int(b) for b in body],
            scaled=[int(s) for s in scaled], order=int(order),
        )

    def jet_of(self, args, body, order):
        return self.node("jet-of", tuple(args), body=int(body), order=int(order))

    def chart_inverse(self, chart_id, args):
        return self.node("chart-inverse", tuple(args), chart=int(chart_id))

    def cholesky_column(self, matrix_node, dim, row, col):
        return self.node("cholesky-column", (matrix_node,), dim=int(dim), row=int(row), col=int(col))

    def add_chart(self, base, matrix, components, max_iter=50, tol=1e-12, radius=math.inf, meta=None):
        cid = len(self.charts)
        chart = Chart(
            cid,
            tuple(float(v) for v in base),
            tuple(tuple(float(v) for v in row) for row in matrix),
            tuple(int(c) for c in components),
            int(max_iter), float(tol), float(radius), dict(meta or {}),
        )
        self.charts.append(chart)
        return cid

    def set_chart_radius(self, cid, radius):
        c = self.charts[cid]
        self.charts[cid] = Chart(c.id, c.base, c.matrix, c.components, c.max_iter, c.tol, float(radius), c.meta)

    # -- composition ------------------------------------------------------
    def expr(self, e: Expr, inputs):
        """Inline an AST with variable i bound to node ``inputs[i]``."""
        memo = {}

        def go(e):
            key = id(e)
            if key in memo:
                return memo[key]
            if isinstance(e, Const):
                out = self.const(float(e.value))
            elif isinstance(e, Var):
                out = inputs[e.index]
            elif isinstance(e, BinOp):
                a, b = go(e.left), go(e.right)
                out = {"+": self.add, "-": self.sub, "*": self.mul, "/": self.div}[e.op](a, b)
            elif isinstance(e, Neg):
                out = self.neg(go(e.arg))
            elif isinstance(e, Pow):
                out = self.pow(go(e.base), e.exponent)
            elif isinstance(e, Call):
                out = self.func(e.func, go(e.arg))
            else:
                raise TypeError(f"not an expression: {e!r}")
            memo[key] = out
            return out

        return go(e)

    def substitute(self, root, inputs):
        """Copy the scope of ``root`` with ``var i`` replaced by ``inputs[i]``."""
        memo = {}
        order = self._scope(root)
        for k in order:
            node = self.nodes[k]
            if node.kind == "var":
                memo[k] = inputs[node.payload["index"]]
                continue
            args = tuple(memo[a] for a in node.args)
            if node.kind == "const":
                memo[k] = k
            else:
                memo[k] = self._intern(node.kind, args, node.payload)
        return memo[root]

    def _scope(self, root):
        seen = set()
        stack = [root]
        while stack:
            k = stack.pop()
            if k in seen:
                continue
            seen.add(k)
            stack.extend(self.nodes[k].args)
        return sorted(seen)

    def build(self, roots=None, meta=None):
        return EvalProgram(self.dimension, tuple(self.nodes), tuple(self.charts), dict(roots or {}), dict(meta or {}))


def compile_exprs(exprs, n):
    """Program over x1..xn whose roots ``0..len(exprs)-1`` are the given ASTs."""
    b = Builder(n)
    xs = b.vars(n)
    ids = [b.expr(e, xs) for e in exprs]
    return b.build({"exprs": ids}), ids


# ---------------------------------------------------------------------------
# evaluator


class _Env:
    __slots__ = ("program", "inputs", "size", "memo")

    def __init__(self, program, inputs, size):
        self.program = program
        self.inputs = inputs
        self.size = size
        self.memo = {}

    def eval(self, nid):
        out = self.memo.get(nid)
        if out is not None:
            return out
        nodes = self.program.nodes
        for k in self.program.plan(nid):
            if k not in self.memo:
                node = nodes[k]
                self.memo[k] = _EVAL[node.kind](self, node)
        return self.memo[nid]

    def scalar(self, nid):
        out = self.eval(nid)
        if len(out) != 1:
            raise FormatError(f"node {nid} is vector-valued where a scalar is required")
        return out[0]

    def flat(self, args):
        out = []
        for a in args:
            out.extend(self.eval(a))
        return out


def _ev_const(env, node):
    return (np.full(env.size, float(node["value"])),)


def _ev_var(env, node):
    i = node["index"]
    if i >= len(env.inputs):
        raise FormatError(f"variable index {i} outside environment of size {len(env.inputs)}")
    return (env.inputs[i],)


def _binary(fn):
    def ev(env, node):
        a, b = node.args
        return (fn(env.scalar(a), env.scalar(b)),)

    return ev


def _unary(fn):
    def ev(env, node):
        return (fn(env.scalar(node.args[0])),)

    return ev


def _ev_sum(env, node):
    vals = [env.scalar(a) for a in node.args]
    out = vals[0]
    for v in vals[1:]:
        out = out + v
    return (out,)


def _ev_pow(env, node):
    return (J.power(env.scalar(node.args[0]), node["exponent"]),)


def _ev_ramp(env, node):
    return (J.ramp_power(env.scalar(node.args[0]), node["exponent"]),)


def _ev_affine(env, node):
    xs = env.flat(node.args)
    return tuple(J.lincomb(row, xs, off) for row, off in zip(node["matrix"], node["offset"]))


def _ev_select(env, node):
    out = env.flat(node.args)
    return (out[node["index"]],)


def _ev_quadrature(env, node):
    xs = env.flat(node.args)
    q = node["order"]
    s, w = gauss_legendre_01(q)
    n = env.size
    s_rep = np.repeat(s, n)
    scaled = set(node["scaled"])
    inputs = []
    for i, x in enumerate(xs):
        xt = J.tile(x, q)
        if i in scaled:
            xt = xt * s_rep if not isinstance(xt, Jet) else xt.scale(s_rep)
        inputs.append(xt)
    inputs.append(s_rep)
    inner = _Env(env.program, inputs, n * q)
    out = []
    for b in node["body"]:
        y = inner.scalar(b)
        if isinstance(y, Jet):
            val = w @ y.val.reshape(q, n)
            grad = np.tensordot(w, y.grad.reshape(q, n, -1), axes=1)
            hess = None
            if y.hess is not None:
                p = y.grad.shape[1]
                hess = np.tensordot(w, y.hess.reshape(q, n, p, p), axes=1)
            out.append(Jet(val, grad, hess))
        else:
            out.append(w @ np.broadcast_to(y, (n * q,)).reshape(q, n))
    return tuple(out)


def _ev_jet_of(env, node):
    xs = env.flat(node.args)
    if any(isinstance(x, Jet) for x in xs):
        raise DerivativeOrderError("jet-of node inside a jet evaluation needs derivatives of order > 2")
    order = node["order"]
    p = len(xs)
    X = np.stack(xs, axis=1) if xs else np.zeros((env.size, 0))
    seeds = Jet.variables(X, order)
    inner = _Env(env.program, seeds, env.size)
    y = inner.scalar(node["body"])
    val, grad, hess = J.unpack(y, p, order)
    out = [val] + [grad[:, i] for i in range(p)]
    if order >= 2:
        out += [hess[:, i, j] for i in range(p) for j in range(p)]
    return tuple(out)


def _ev_cholesky(env, node):
    key = ("chol", node.args[0])
    L = env.memo.get(key)
    if L is None:
        d = node["dim"]
        m = env.eval(node.args[0])
        if len(m) != d * d:
            raise FormatError("cholesky-column matrix has wrong width")
        L = cholesky([[m[i * d + j] for j in range(d)] for i in range(d)])
        env.memo[key] = L
    r, c = node["row"], node["col"]
    if c > r:
        return (np.zeros(env.size),)
    return (L[r][c],)


def cholesky(H):
    """Lower Cholesky factor of a symmetric matrix of batched scalars."""
    d = len(H)
    L = [[None] * d for _ in range(d)]
    for j in range(d):
        acc = H[j][j]
        for k in range(j):
            acc = acc - L[j][k] * L[j][k]
        try:
            L[j][j] = J.sqrt_positive(acc)
        except DomainError:
            raise DomainError("matrix not positive definite in cholesky-column") from None
        for i in range(j + 1, d):
            acc = H[i][j]
            for k in range(j):
                acc = acc - L[i][k] * L[j][k]
            L[i][j] = acc / L[j][j]
    return L


def _ev_guarded(env, node):
    w = env.scalar(node.args[0])
    wv = J.value(w)
    mask = wv != 0.0
    if mask.all():
        a = env.scalar(node.args[1])
        return (w * a,)
    if not mask.any():
        return (w * 0.0,)
    # guarded products sharing a weight share one restricted environment
    key = ("guard", node.args[0])
    cached = env.memo.get(key)
    if cached is None:
        idx = np.nonzero(mask)[0]
        cached = (idx, _Env(env.program, [J.take(x, idx) for x in env.inputs], idx.size))
        env.memo[key] = cached
    idx, sub = cached
    a_sub = sub.scalar(node.args[1])
    if isinstance(a_sub, Jet):
        p = a_sub.nvars
        full = Jet(np.zeros(env.size), np.zeros((env.size, p)),
                   None if a_sub.hess is None else np.zeros((env.size, p, p)))
        full.val[idx] = a_sub.val
        full.grad[idx] = a_sub.grad
        if full.hess is not None:
            full.hess[idx] = a_sub.hess
    else:
        full = np.zeros(env.size)
        full[idx] = a_sub
    return (w * full,)


def _ev_chart_inverse(env, node):
    chart = env.program.charts[node["chart"]]
    ts = env.flat(node.args)
    n = chart.dimension
    if len(ts) != n:
        raise FormatError("chart-inverse argument width mismatch")
    T = np.stack([J.value(t) for t in ts], axis=1)
    X = chart_solve(env.program, chart, T)
    if not any(isinstance(t, Jet) for t in ts):
        return tuple(X[:, i] for i in range(n))
    order = min(t.order for t in ts if isinstance(t, Jet))
    p = next(t.nvars for t in ts if isinstance(t, Jet))
    comps = _chart_jets(env.program, chart, X, order)
    Jm = np.stack([c.grad for c in comps], axis=1)  # (N, n, n)
    tg = np.stack([J.unpack(t, p, order)[1] for t in ts], axis=1)  # (N, n, p)
    xg = np.linalg.solve(Jm, tg)
    xh = None
    if order >= 2:
        Hphi = np.stack([c.hess for c in comps], axis=1)  # (N, n, n, n)
        th = np.stack([J.unpack(t, p, order)[2] for t in ts], axis=1)  # (N, n, p, p)
        corr = np.einsum("ncab,nap,nbq->ncpq", Hphi, xg, xg)
        N = X.shape[0]
        xh = np.linalg.solve(Jm, (th - corr).reshape(N, n, p * p)).reshape(N, n, p, p)
    return tuple(
        Jet(X[:, i].copy(), xg[:, i, :].copy(), None if xh is None else xh[:, i].copy())
        for i in range(n)
    )


def _chart_jets(program, chart, X, order):
    env = _Env(program, Jet.variables(X, order), X.shape[0])
    n = chart.dimension
    return [J.as_jet(env.scalar(c), n, order) for c in chart.components]


def chart_solve(program, chart, T):
    """Damped Newton solve of Phi(x) = t for each row of T."""
    T = np.asarray(T, dtype=float)
    N, n = T.shape
    if math.isfinite(chart.radius):
        norms = np.linalg.norm(T, axis=1)
        if np.any(norms > chart.radius * (1 + 1e-12)):
            k = int(np.argmax(norms))
            raise ChartError(f"outside chart: |t| = {norms[k]:.6g} exceeds radius {chart.radius:.6g}")
    base = np.asarray(chart.base)
    M = np.asarray(chart.matrix)
    X = base + T @ M.T
    active = np.arange(N)
    for _ in range(chart.max_iter + 1):
        if active.size == 0:
            break
        Xa, Ta = X[active], T[active]
        comps = _chart_jets(program, chart, Xa, 1)
        R = np.stack([c.val for c in comps], axis=1) - Ta
        rn = np.linalg.norm(R, axis=1)
        done = rn <= chart.tol
        if done.all():
            active = active[:0]
            break
        keep = ~done
        active, Xa, R, rn = active[keep], Xa[keep], R[keep], rn[keep]
        Jm = np.stack([c.grad for c in comps], axis=1)[keep]
        try:
            step = np.linalg.solve(Jm, R[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            raise ChartError("outside chart: singular chart Jacobian") from None
        alpha = np.ones(active.size)
        trial = Xa - step
        for _ in range(30):
            tj = _chart_jets(program, chart, trial, 1)
            tn = np.linalg.norm(np.stack([c.val for c in tj], axis=1) - T[active], axis=1)
            bad = ~(tn < rn) & (tn > chart.tol)
            if not bad.any():
                break
            alpha[bad] *= 0.5
            trial[bad] = Xa[bad] - alpha[bad, None] * step[bad]
        X[active] = trial
    if active.size:
        k = active[0]
        raise ChartError(f"outside chart: Newton did not converge at t={T[k].tolist()}")
    return X


_EVAL = {
    "const": _ev_const,
    "var": _ev_var,
    "add": _binary(lambda a, b: a + b),
    "sub": _binary(lambda a, b: a - b),
    "mul": _binary(lambda a, b: a * b),
    "div": _binary(lambda a, b: a * J.reciprocal(b)),
    "neg": _unary(lambda a: -a),
    "sum": _ev_sum,
    "pow": _ev_pow,
    "sin": _unary(J.sin),
    "cos": _unary(J.cos),
    "exp": _unary(J.exp),
    "log": _unary(J.log),
    "sqrt": _unary(J.sqrt),
    "affine": _ev_affine,
    "select": _ev_select,
    "quadrature": _ev_quadrature,
    "chart-inverse": _ev_chart_inverse,
    "jet-of": _ev_jet_of,
    "cholesky-column": _ev_cholesky,
    "sqrt-positive": _unary(J.sqrt_positive),
    "squared": _unary(lambda a: a * a),
    "ramp-power": _ev_ramp,
    "guarded-mul": _ev_guarded,
}


def _as_batch(X, n):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != n:
        raise ValueError(f"expected points of dimension {n}, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite evaluation point")
    return X, single


def evaluate(program, root, X):
    """Values of ``root`` at the rows of X; shape (N,) or (N, width)."""
    X, single = _as_batch(X, program.dimension)
    env = _Env(program, [X[:, i] for i in range(X.shape[1])], X.shape[0])
    outs = [np.broadcast_to(J.value(o), (X.shape[0],)) for o in env.eval(root)]
    res = outs[0] if len(outs) == 1 else np.stack(outs, axis=1)
    res = np.array(res, dtype=float)
    return res[0] if single else res


def evaluate_many(program, roots, X):
    """Evaluate several scalar roots sharing one environment; returns (len(roots), N)."""
    X, _ = _as_batch(X, program.dimension)
    env = _Env(program, [X[:, i] for i in range(X.shape[1])], X.shape[0])
    return np.array([np.broadcast_to(J.value(env.scalar(r)), (X.shape[0],)) for r in roots], dtype=float)


def evaluate_jet(program, root, X, order=2):
    """(values, gradients, Hessians) of a scalar root at the rows of X."""
    X, single = _as_batch(X, program.dimension)
    n = program.dimension
    env = _Env(program, Jet.variables(X, order), X.shape[0])
    val, grad, hess = J.unpack(env.scalar(root), n, order)
    val = np.broadcast_to(val, (X.shape[0],))
    if single:
        return val[0], grad[0], hess[0]
    return val, grad, hess


def eval_jet(p, x, root=None):
    """Jet2 of an Expr (or a program root) at a single point ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    if isinstance(p, Expr):
        program, ids = compile_exprs([p], x.size)
        root = ids[0]
    else:
        program = p
        if root is None:
            root = _default_root(program)
    val, grad, hess = evaluate_jet(program, root, x[None, :])
    hess = 0.5 * (hess[0] + hess[0].T)
    return Jet2(float(val[0]), grad[0].copy(), hess)


def _default_root(program):
    for v in program.roots.values():
        if isinstance(v, int):
            return v
    return len(program.nodes) - 1


__all__ = [
    "Builder", "Chart", "EvalProgram", "Node", "NODE_KINDS", "compile_exprs",
    "evaluate", "evaluate_many", "evaluate_jet", "eval_jet", "chart_solve", "cholesky",
]


def evaluate_jet_many(program, roots, X, order=2):
    """Jets of several scalar roots in one shared environment.

    Returns arrays of shape (R, N), (R, N, n), (R, N, n, n).
    """
    X, _ = _as_batch(X, program.dimension)
    n = program.dimension
    N = X.shape[0]
    env = _Env(program, Jet.variables(X, order), N)
    vals, grads, hesss = [], [], []
    for r in roots:
        v, g, h = J.unpack(env.scalar(r), n, order)
        vals.append(np.broadcast_to(v, (N,)))
        grads.append(g)
        hesss.append(h)
    return (np.array(vals).reshape(len(roots), N), np.array(grads).reshape(len(roots), N, n),
            np.array(hesss).reshape(len(roots), N, n, n))
