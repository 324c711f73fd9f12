"""Local certificate around one nondegenerate zero.

In the straightening chart t = Phi(x) = (V^T (x - x*), g_active(x), h(x)) the
objective F = f o Phi^{-1} splits as

    F(t) = A(t_tan) + sum_r t_{d+r} B_r(t_tan, t_g) + sum_j t_{d+k+j} C_j(t),

with A(u) = F(u, 0), and B, C the Hadamard quotients of F along the
constraint coordinates.  A has a nondegenerate minimum at 0, so
A(u) = u^T H(u) u with H(u) = int_0^1 (1-s) Hess A(su) ds positive definite
near 0, and theta(u) = L(u)^T u (L the lower Cholesky factor of H) gives
|theta|^2 = A.  Pulling back through Phi:

    phi_0 = |theta(w(x))|^2,  phi_i = B_i(w(x), g_act(x)),  psi_j = C_j(Phi(x)).

Composing B with theta^{-1} and then theta again cancels, so phi_i is built
directly from B without inverting theta.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChartError, ConstructionError, DerivativeOrderError, DomainError, HypothesisError
from .expr import Builder, evaluate, evaluate_many
from .expr.program import chart_solve
from .sampling import ball_samples

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LocalConfig:
    quad_order: int = 32
    max_iter: int = 50
    tol_newton: float = 1e-12
    rho0: float = None  # default: a quarter of the shortest box side
    rho_min: float = 1e-6
    rho_max: float = math.inf
    tol_resid: float = 1e-8
    tol_zero: float = 1e-8
    samples: int = 256
    seed: int = 0


@dataclass
class LocalChart:
    """Chart data in original coordinates; ``chart_id`` indexes the builder's chart table."""

    base: np.ndarray
    active: tuple
    matrix: np.ndarray  # x = base + matrix @ t to first order
    inverse: np.ndarray  # D Phi(base)
    d: int
    k: int
    m: int
    chart_id: int
    builder: Builder = field(repr=False)

    @property
    def n(self):
        return self.base.size


@dataclass
class MorseMap:
    theta: list  # d root ids over a d-dim environment
    H: int  # d*d-wide node over the same environment
    d: int


@dataclass
class LocalCertificate:
    base: np.ndarray
    radius: float
    active: tuple
    lam: np.ndarray
    nu: np.ndarray
    d: int
    program: object
    phi: list  # l+1 root ids (phi_0 first) over x
    psi: list  # m root ids over x
    sos_factors: dict  # i -> root ids whose squares sum to phi_i
    theta: list  # theta o w, root ids over x
    b_values: list  # B_r(w, g_act) over x (unsquared), one per active constraint
    H: int  # H o w over x
    chart: LocalChart = field(repr=False)
    morse: MorseMap = field(repr=False)
    margins: dict = field(default_factory=dict)
    inner: dict = field(default_factory=dict, repr=False)

    def evaluate(self, X):
        """(phi (l+1, N), psi (m, N)) at the rows of X."""
        V = evaluate_many(self.program, list(self.phi) + list(self.psi), X)
        return V[: len(self.phi)], V[len(self.phi):]

    def residual(self, problem_shifted, X):
        f, G, Hc = problem_shifted.values(X)
        phi, psi = self.evaluate(X)
        r = f - phi[0]
        if G.size:
            r = r - np.sum(phi[1:] * G, axis=0)
        if Hc.size:
            r = r - np.sum(psi * Hc, axis=0)
        return r

    def to_json(self):
        return {
            "base": self.base.tolist(),
            "radius": self.radius,
            "active": list(self.active),
            "lambda": self.lam.tolist(),
            "nu": self.nu.tolist(),
            "tangent_dimension": self.d,
            "margins": self.margins,
            "validity": "verified on samples",
        }


# ---------------------------------------------------------------------------


def build_chart(builder, problem, report, config=None):
    """Straightening chart at ``report.point``; D Phi(x*) maps ``matrix`` to the identity."""
    config = config or LocalConfig()
    if not report.regular:
        raise HypothesisError("constraint gradients are linearly dependent", "regularity", report.point)
    n = problem.n
    x0 = np.asarray(report.point, dtype=float)
    active = tuple(report.active)
    V = report.tangent_basis
    _, gj, hj = problem.jets(x0)
    A = np.array([gj[i][1] for i in active] + [hh[1] for hh in hj], dtype=float).reshape(-1, n)
    d = V.shape[1]
    if A.shape[0]:
        Aplus = A.T @ np.linalg.inv(A @ A.T)
        M = np.hstack([V, Aplus])
        Minv = np.vstack([V.T, A])
    else:
        M = V.copy()
        Minv = V.T.copy()
    if M.shape != (n, n):
        raise HypothesisError("tangent basis and constraint rows do not span R^n", "regularity", x0)

    xs = builder.vars(n)
    comps = []
    if d:
        comps += builder.affine_scalars(xs, V.T, -(V.T @ x0))
    comps += [builder.expr(problem.g[i], xs) for i in active]
    comps += [builder.expr(e, xs) for e in problem.h]
    cid = builder.add_chart(x0, M, comps, config.max_iter, config.tol_newton,
                            meta={"active": list(active), "tangent_dimension": d})
    return LocalChart(x0, active, M, Minv, d, len(active), problem.m, cid, builder)


def chart_inverse(chart, t):
    """x with Phi(x) = t, by damped Newton from x = base + matrix @ t."""
    t = np.asarray(t, dtype=float)
    single = t.ndim == 1
    T = np.atleast_2d(t)
    program = chart.builder.build()
    X = chart_solve(program, program.charts[chart.chart_id], T)
    return X[0] if single else X


def chart_forward(chart, X):
    """Phi(x) at the rows of X."""
    program = chart.builder.build()
    c = program.charts[chart.chart_id]
    return evaluate_many(program, list(c.components), np.atleast_2d(X)).T


def pulled_back_objective(builder, chart, f_expr):
    """Root of F(t) = f(Phi^{-1}(t)) over an n-dimensional t environment."""
    n = chart.n
    x = builder.chart_inverse(chart.chart_id, builder.vars(n))
    xs = [builder.select(x, i) for i in range(n)]
    return builder.expr(f_expr, xs)


def restrict(builder, root, keep, total):
    """Root of G(t_1..t_keep) = F(t_1..t_keep, 0, ..., 0) for F over ``total`` inputs."""
    zero = builder.const(0.0)
    return builder.substitute(root, builder.vars(keep) + [zero] * (total - keep))


def hadamard_split(builder, F, head, tail, order=32):
    """Quotients B_r with F(t) - F(t_head, 0) = sum_r t_{head+r} B_r(t).

    B_r(t) = int_0^1 dF/dt_{head+r}(t_head, s t_tail) ds, realised by a
    Gauss-Legendre quadrature node over a first-order jet of F.
    """
    p = head + tail
    if tail == 0:
        return []
    body_args = builder.vars(p)
    grad = builder.jet_of(body_args, F, 1)
    body = [builder.select(grad, 1 + head + r) for r in range(tail)]
    q = builder.quadrature(builder.vars(p), body, range(head, p), order)
    return [builder.select(q, r) for r in range(tail)]


def morse_factor(builder, A, d, order=32):
    """theta with |theta(u)|^2 = A(u), via H(u) = int_0^1 (1-s) Hess A(su) ds = L L^T."""
    if d == 0:
        return MorseMap([], builder.const(0.0), 0)
    u = builder.vars(d)
    s = builder.var(d)
    one_minus_s = builder.sub(builder.const(1.0), s)
    hess = builder.jet_of(u, A, 2)
    body = [builder.mul(one_minus_s, builder.select(hess, 1 + d + i * d + j))
            for i in range(d) for j in range(d)]
    H = builder.quadrature(u, body, range(d), order)
    theta = []
    for r in range(d):
        terms = [builder.mul(builder.cholesky_column(H, d, c, r), u[c]) for c in range(r, d)]
        theta.append(builder.sum(terms))
    return MorseMap(theta, H, d)


# ---------------------------------------------------------------------------


def _check_hypotheses(problem, report, config):
    if not report.passes:
        failing = report.failing_conditions()
        raise HypothesisError(
            f"hypotheses fail at {report.point.tolist()}: {', '.join(failing)}", failing[0], report.point)
    fx = problem.values(report.point[None, :])[0][0]
    if abs(fx) > config.tol_zero:
        raise HypothesisError(f"f(x*) = {fx:.3g} is not zero; subtract f* first", "zero", report.point)


def local_certificate(problem, report, config=None, builder=None):
    """Build and radius-validate the local certificate at ``report.point``.

    ``problem`` must already be shifted so that f(x*) = 0.  When ``builder`` is
    given, nodes are added to it (the global certificate shares one table).
    """
    config = config or LocalConfig()
    _check_hypotheses(problem, report, config)
    n, l, m = problem.n, problem.l, problem.m
    b = builder or Builder(n)
    chart = build_chart(b, problem, report, config)
    d, k = chart.d, chart.k
    q = config.quad_order

    F = pulled_back_objective(b, chart, problem.f)
    A = restrict(b, F, d, n)
    Fk = restrict(b, F, d + k, n)
    B = hadamard_split(b, Fk, d, k, q)
    C = hadamard_split(b, F, d + k, m, q)
    morse = morse_factor(b, A, d, q)

    xs = b.vars(n)
    w = b.affine_scalars(xs, report.tangent_basis.T, -(report.tangent_basis.T @ chart.base)) if d else []
    g_act = [b.expr(problem.g[i], xs) for i in chart.active]
    h_all = [b.expr(e, xs) for e in problem.h]
    theta_x = [b.substitute(th, w) for th in morse.theta]
    H_x = b.substitute(morse.H, w) if d else None
    b_x = [b.substitute(Br, w + g_act) for Br in B]
    psi = [b.substitute(Cj, w + g_act + h_all) for Cj in C]
    phi0 = b.sum([b.squared(th) for th in theta_x])

    parts = {"phi0": phi0, "b": b_x, "psi": psi, "theta": theta_x, "H": H_x}
    lam_active = report.lam[list(chart.active)] if k else np.zeros(0)
    eps_b = 0.5 * float(lam_active.min()) if k else math.inf
    H0 = evaluate(b.build(), H_x, chart.base[None, :])[0].reshape(d, d) if d else np.zeros((0, 0))
    eps_h = 0.5 * float(np.linalg.eigvalsh(H0)[0]) if d else math.inf
    rho, margins = estimate_radius(b, parts, problem, chart, config, eps_b, eps_h)

    # chart radius: generous bound on |Phi(x)| over the certified ball
    X = ball_samples(chart.base, rho, config.samples, config.seed)
    tmax = float(np.max(np.linalg.norm(chart_forward(chart, X), axis=1))) if len(X) else 0.0
    b.set_chart_radius(chart.chart_id, 2.0 * max(tmax, rho * np.linalg.norm(chart.inverse, 2)))

    phi = [phi0]
    sos = {0: list(theta_x)}
    sqrt_b = []
    for i in range(l):
        if i in chart.active:
            r = chart.active.index(i)
            root = b.sqrt_positive(b_x[r], margins["min_B"])
            sqrt_b.append(root)
            phi.append(b.squared(root))
            sos[i + 1] = [root]
        else:
            phi.append(b.const(0.0))
            sos[i + 1] = []
    program = b.build({"phi0": phi[0], "phi": phi[1:], "psi": psi})
    cert = LocalCertificate(
        chart.base.copy(), rho, chart.active, report.lam.copy(), report.nu.copy(), d, program,
        phi, psi, sos, theta_x, b_x, H_x, chart, morse, margins,
        inner={"F": F, "A": A, "B": B, "C": C, "sqrt_b": sqrt_b},
    )
    return cert


def _local_residual(program, parts, problem, X):
    roots = [parts["phi0"]] + parts["b"] + parts["psi"]
    V = evaluate_many(program, roots, X)
    f, G, Hc = problem.values(X)
    k = len(parts["b"])
    r = f - V[0]
    active = parts.get("active", ())
    for idx, i in enumerate(active):
        r = r - V[1 + idx] * G[i]
    for j in range(len(parts["psi"])):
        r = r - V[1 + k + j] * Hc[j]
    return r, V[1:1 + k]


def estimate_radius(builder, parts, problem, chart, config, eps_b, eps_h):
    """Largest rho in a halving sweep for which every sampled check passes."""
    program = builder.build()
    parts = dict(parts, active=chart.active)
    if config.rho0 is not None:
        rho = config.rho0
    else:
        rho = 0.25 * float(np.min(np.subtract(problem.box.upper, problem.box.lower)))
    rho = min(rho, config.rho_max)
    d = chart.d
    while rho >= config.rho_min:
        X = ball_samples(chart.base, rho, config.samples, config.seed)
        X = np.vstack([chart.base[None, :], X])
        reason = None
        try:
            r, bv = _local_residual(program, parts, problem, X)
            if d:
                Hs = evaluate(program, parts["H"], X).reshape(-1, d, d)
                min_h = float(np.min(np.linalg.eigvalsh(0.5 * (Hs + np.swapaxes(Hs, 1, 2)))[:, 0]))
            else:
                min_h = math.inf
            min_b = float(np.min(bv)) if bv.size else math.inf
            max_r = float(np.max(np.abs(r)))
            if d and min_h <= eps_h:
                reason = f"H min eigenvalue {min_h:.3g} <= {eps_h:.3g}"
            elif bv.size and min_b <= eps_b:
                reason = f"B min {min_b:.3g} <= {eps_b:.3g}"
            elif not max_r <= config.tol_resid:
                reason = f"residual {max_r:.3g} > {config.tol_resid:.3g}"
        except (ChartError, DomainError) as exc:
            reason = str(exc)
        if reason is None:
            margins = {
                "min_H_eigenvalue": min_h if math.isfinite(min_h) else None,
                "min_B": min_b if math.isfinite(min_b) else 1.0,
                "max_residual": max_r,
                "eps_H": eps_h if math.isfinite(eps_h) else None,
                "eps_B": eps_b if math.isfinite(eps_b) else None,
                "samples": int(X.shape[0]),
            }
            log.info("local radius %.4g at %s", rho, chart.base.tolist())
            return rho, margins
        log.debug("radius %.4g rejected: %s", rho, reason)
        rho *= 0.5
    raise ConstructionError(f"local radius underflow at {chart.base.tolist()}", chart.base)


__all__ = [
    "LocalConfig", "LocalChart", "MorseMap", "LocalCertificate", "build_chart", "chart_inverse",
    "chart_forward", "hadamard_split", "morse_factor", "local_certificate", "estimate_radius",
    "DerivativeOrderError",
]
