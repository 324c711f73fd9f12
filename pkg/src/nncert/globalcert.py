"""Global certificate on a box: zero enumeration, open cover, partition of unity, gluing.

Regions and their pieces (f already shifted by f_star):

* zero ball around each zero x*_k: the local certificate,
* positive region {f > delta}: phi_0 = f,
* violated inequality i, {g_i < -delta'}: phi_0 = ((f+1)/2)^2 and
  phi_i = ((f-1)/2)^2 / (-g_i), whose difference of squares is f,
* violated equality j, {|h_j| > delta''}: psi_j = f / h_j.

With bumps w_k supported in the regions and w~_k = w_k / |w|, the glued
multipliers phi_i = sum_k w~_k^2 phi_{k,i} reproduce f wherever the regions
cover.  Every summand is stored as a square (w~_k * root of the piece)^2.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .certificate import Certificate
from .errors import (ConstructionError, CoverageError, HypothesisError, InfeasiblePointError,
                     NonIsolatedZeroError)
from .expr import Builder, evaluate_jet_many, evaluate_many
from .kkt import KKTTolerances, check_kkt
from .localcert import LocalConfig, local_certificate
from .sampling import box_samples

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GlobalConfig:
    budget: int = 256  # multistart starts
    samples: int = 4096  # box samples for margins and the coverage check
    verify_samples: int = 1000
    seed: int = 0
    tol_zero: float = 1e-8
    tol_negative: float = 1e-8  # sampled f below -tol_negative refutes nonnegativity
    tol_resid: float = 1e-6
    dedup_tol: float = 1e-4  # relative to max(1, box diameter)
    smooth: int = 2  # bumps are C^smooth
    shrink: float = 0.9
    default_margin: float = 1.0
    refine: int = 8  # lowest uncovered samples polished when choosing the positive margin
    local: LocalConfig = field(default_factory=LocalConfig)
    kkt: KKTTolerances = field(default_factory=KKTTolerances)


@dataclass
class ZeroSet:
    points: np.ndarray  # (N, n)
    completeness: str  # "user-asserted" | "heuristic"
    reports: list = field(default_factory=list, repr=False)
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def to_json(self):
        return {"points": self.points.tolist(), "completeness": self.completeness, "stats": self.stats}


@dataclass
class Region:
    kind: str  # "zero-ball" | "positive" | "neg-g" | "nonzero-h"
    index: int  # zero index, constraint index, or -1
    margin: float  # radius for balls, delta otherwise
    weight: int = None  # node id of the unnormalized bump
    factors: dict = field(default_factory=dict)  # i -> square-root factor ids of phi_{k,i}
    psi: dict = field(default_factory=dict)  # j -> psi_{k,j} id
    local: object = field(default=None, repr=False)

    def to_json(self):
        out = {"kind": self.kind, "index": self.index, "margin": self.margin}
        if self.local is not None:
            out["lambda"] = self.local.lam.tolist()
            out["active"] = list(self.local.active)
            out["local_margins"] = self.local.margins
        return out


@dataclass
class GlobalCertificate:
    certificate: Certificate
    zeros: ZeroSet
    regions: list
    margins: dict
    report: dict

    @property
    def program(self):
        return self.certificate.program

    def evaluate(self, X):
        return self.certificate.evaluate(X)


# ---------------------------------------------------------------------------
# zero enumeration


class _Objective:
    """Value-and-gradient callbacks for scipy, cached per point."""

    def __init__(self, problem):
        self.problem = problem
        self.program = problem.program
        self.roots = [self.program.roots["f"]] + list(self.program.roots["g"]) + list(self.program.roots["h"])
        self._x = None

    def _eval(self, x):
        if self._x is None or not np.array_equal(x, self._x):
            v, g, _ = evaluate_jet_many(self.program, self.roots, x[None, :], order=1)
            self._x = x.copy()
            self._v, self._g = v[:, 0], g[:, 0]
        return self._v, self._g

    def f(self, x):
        return self._eval(x)[0][0]

    def df(self, x):
        return self._eval(x)[1][0]

    def constraints(self):
        l, m = self.problem.l, self.problem.m
        out = []
        for i in range(l):
            out.append({"type": "ineq", "fun": lambda x, i=i: self._eval(x)[0][1 + i],
                        "jac": lambda x, i=i: self._eval(x)[1][1 + i]})
        for j in range(m):
            out.append({"type": "eq", "fun": lambda x, j=j: self._eval(x)[0][1 + l + j],
                        "jac": lambda x, j=j: self._eval(x)[1][1 + l + j]})
        return out


def _multistart(problem, budget, seed, starts=None):
    obj = _Objective(problem)
    box = problem.box
    if starts is None:
        starts = box_samples(box.lower, box.upper, budget, seed)
    bounds = list(zip(box.lower, box.upper))
    cons = obj.constraints()
    found = []
    for x0 in starts:
        # a rough local solve is enough: Newton polishing supplies the accuracy
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                res = minimize(obj.f, x0, jac=obj.df, method="SLSQP", bounds=bounds, constraints=cons,
                               options={"maxiter": 40, "ftol": 1e-12})
        except (ArithmeticError, ValueError):
            continue
        if np.all(np.isfinite(res.x)):
            found.append(res.x)
    return np.array(found).reshape(-1, problem.n)


def _polish(problem, x, tol):
    """Newton on the KKT system with the active set frozen; falls back to ``x``."""
    x = np.asarray(x, dtype=float)
    _, G, _ = problem.values(x[None, :])
    active = [i for i in range(problem.l) if abs(G[i, 0]) <= 1e-6]
    best = x
    best_res = _kkt_residual(problem, x, active)
    for _ in range(50):
        (_, gf, Hf), gj, hj = problem.jets(best)
        rows = [gj[i][1] for i in active] + [h[1] for h in hj]
        A = np.array(rows, dtype=float).reshape(len(rows), problem.n)
        if len(rows):
            mu = np.linalg.lstsq(A.T, gf, rcond=None)[0]
        else:
            mu = np.zeros(0)
        HL = Hf - sum((mu[r] * gj[i][2] for r, i in enumerate(active)), np.zeros_like(Hf))
        HL = HL - sum((mu[len(active) + j] * hj[j][2] for j in range(problem.m)), np.zeros_like(Hf))
        c = np.array([gj[i][0] for i in active] + [h[0] for h in hj])
        r = len(rows)
        K = np.block([[HL, -A.T], [A, np.zeros((r, r))]]) if r else HL
        rhs = -np.concatenate([gf - A.T @ mu, c]) if r else -gf
        try:
            step = np.linalg.lstsq(K, rhs, rcond=None)[0][: problem.n]
        except np.linalg.LinAlgError:
            break
        cand = best + step
        try:
            res = _kkt_residual(problem, cand, active)
        except ArithmeticError:
            break
        if not res < best_res:
            break
        best, best_res = cand, res
        if res <= tol or np.linalg.norm(step) <= 1e-15 * max(1.0, np.linalg.norm(best)):
            break
    return best


def _kkt_residual(problem, x, active):
    (_, gf, _), gj, hj = problem.jets(x)
    rows = [gj[i][1] for i in active] + [h[1] for h in hj]
    c = [gj[i][0] for i in active] + [h[0] for h in hj]
    if rows:
        A = np.array(rows)
        mu = np.linalg.lstsq(A.T, gf, rcond=None)[0]
        stat = gf - A.T @ mu
    else:
        stat = gf
    return float(np.linalg.norm(np.concatenate([stat, c])))


def check_nonnegative(problem, X, tol):
    """Refuse when a feasible sample has f < -tol; returns the sampled minimum."""
    f, _, _ = problem.values(X)
    ok = problem.feasibility(X)
    if not ok.any():
        return math.inf
    fs = f[ok]
    k = int(np.argmin(fs))
    if fs[k] < -tol:
        x = X[ok][k]
        raise HypothesisError(f"f is not nonnegative on S: f({x.tolist()}) = {fs[k]:.6g}", "nonnegativity", x)
    return float(fs[k])


def estimate_minimum(problem, config=None):
    """Smallest f over the multistart solutions and feasible box samples (the f_star estimate)."""
    config = config or GlobalConfig()
    X = box_samples(problem.box.lower, problem.box.upper, config.samples, config.seed)
    best = math.inf
    f, _, _ = problem.values(X)
    ok = problem.feasibility(X)
    if ok.any():
        best = float(f[ok].min())
    for x in _multistart(problem, config.budget, config.seed):
        if problem.feasibility(x[None, :], 1e-7)[0]:
            x = _polish(problem, x, 1e-14)
            if problem.feasibility(x[None, :], 1e-10)[0]:
                best = min(best, float(problem.values(x[None, :])[0][0]))
    if not math.isfinite(best):
        raise InfeasiblePointError("no feasible point found in the box")
    return best


def find_zeros(problem, config=None, zeros=None):
    """Zeros of f on S inside the box, each checked against the hypotheses.

    ``zeros`` is a user-asserted list; otherwise multistart SLSQP from
    low-discrepancy starts, Newton polishing and deduplication.
    """
    config = config or GlobalConfig()
    box = problem.box
    X = box_samples(box.lower, box.upper, config.samples, config.seed)
    check_nonnegative(problem, X, config.tol_negative)
    scale = max(1.0, box.diameter)
    dedup = config.dedup_tol * scale
    stats = {}
    if zeros is not None:
        pts = np.asarray(zeros, dtype=float).reshape(-1, problem.n)
        completeness = "user-asserted"
        for x in pts:
            fx = problem.values(x[None, :])[0][0]
            if not problem.feasibility(x[None, :], config.kkt.feas)[0]:
                raise InfeasiblePointError(f"asserted zero {x.tolist()} is infeasible")
            if abs(fx) > config.tol_zero:
                raise HypothesisError(f"asserted zero {x.tolist()} has f = {fx:.6g}", "zero", x)
        stats = {"asserted": len(pts)}
    else:
        completeness = "heuristic"
        raw = _multistart(problem, config.budget, config.seed)
        cands = []
        for x in raw:
            if not problem.feasibility(x[None, :], 1e-7)[0]:
                continue
            fx = problem.values(x[None, :])[0][0]
            if fx < -config.tol_negative:
                raise HypothesisError(f"f is not nonnegative on S: f({x.tolist()}) = {fx:.6g}",
                                      "nonnegativity", x)
            if fx > 1e-5:
                continue
            x = _polish(problem, x, 1e-14)
            if not (box.contains(x[None, :], 1e-9)[0] and problem.feasibility(x[None, :], config.kkt.feas)[0]):
                continue
            fx = problem.values(x[None, :])[0][0]
            if fx < -config.tol_negative:
                raise HypothesisError(f"f is not nonnegative on S: f({x.tolist()}) = {fx:.6g}",
                                      "nonnegativity", x)
            if abs(fx) <= config.tol_zero:
                cands.append((abs(fx), x))
        stats = {"starts": int(config.budget), "converged": len(raw), "zero_candidates": len(cands)}
        pts = _dedup(problem, cands, dedup, config)
    pts = pts[np.lexsort(pts.T[::-1])] if len(pts) else pts
    reports = [check_kkt(problem, x, config.kkt) for x in pts]
    for x, rep in zip(pts, reports):
        if not rep.passes:
            if _non_isolated(problem, rep, config):
                raise NonIsolatedZeroError(
                    f"zero at {x.tolist()} is not isolated: f vanishes along a degenerate direction",
                    "isolation", x)
            failing = rep.failing_conditions()
            raise HypothesisError(f"zero at {x.tolist()} fails {', '.join(failing)}", failing[0], x)
    stats["zeros"] = len(pts)
    log.info("found %d zeros (%s)", len(pts), completeness)
    return ZeroSet(pts, completeness, reports, stats)


def _dedup(problem, cands, tol, config):
    cands = sorted(cands, key=lambda c: (c[0], tuple(c[1])))
    kept = []
    for _, x in cands:
        hit = None
        for k, y in enumerate(kept):
            if np.linalg.norm(x - y) <= tol:
                hit = k
                break
        if hit is None:
            kept.append(x)
            continue
        # two nearby zeros with different active sets cannot both be isolated zeros
        y = kept[hit]
        if np.linalg.norm(x - y) > 1e-9 * max(1.0, np.linalg.norm(y)) and \
                _active(problem, x, config) != _active(problem, y, config):
            raise NonIsolatedZeroError(f"zeros {y.tolist()} and {x.tolist()} cluster with distinct active sets",
                                       "isolation", y)
    return np.array(kept).reshape(-1, problem.n)


def _active(problem, x, config):
    _, G, _ = problem.values(x[None, :])
    return tuple(i for i in range(problem.l) if abs(G[i, 0]) <= config.kkt.active)


def _non_isolated(problem, report, config):
    """Probe degenerate tangent directions: f staying zero there means a zero continuum."""
    if not (report.regular and report.is_kkt) or report.sosc:
        return False
    V = report.tangent_basis
    P = V.T @ report.hessian_lagrangian @ V
    w, U = np.linalg.eigh(0.5 * (P + P.T))
    scale = problem.box.diameter
    for e in range(len(w)):
        if w[e] > config.kkt.sosc:
            continue
        v = V @ U[:, e]
        for eps in (0.01 * scale, 0.1 * scale):
            for sgn in (1.0, -1.0):
                y = report.point + sgn * eps * v
                if not problem.feasibility(y[None, :], config.kkt.feas)[0]:
                    continue
                if abs(problem.values(y[None, :])[0][0]) <= config.tol_zero:
                    return True
    return False


# ---------------------------------------------------------------------------
# cover, bumps and gluing


def bump(builder, margin, exponent):
    """max(0, margin)^exponent; C^(exponent-1) across the region boundary."""
    return builder.ramp_power(margin, exponent)


def partition_of_unity(builder, weights):
    """w_k / sqrt(sum_j w_j^2): squares sum to one wherever some weight is positive."""
    total = builder.sum([builder.squared(w) for w in weights])
    norm = builder.sqrt_positive(total, 0.0)
    return [builder.div(w, norm) for w in weights]


def _ball_margin(builder, xs, center, radius):
    """1 - |x - center|^2 / radius^2."""
    n = len(xs)
    diffs = builder.affine_scalars(xs, np.eye(n), -np.asarray(center, dtype=float))
    sq = builder.sum([builder.squared(d) for d in diffs])
    return builder.sub(builder.const(1.0), builder.mul(builder.const(1.0 / radius**2), sq))


def build_cover(problem, zeros, locals_, config=None, X=None):
    """Regions and margins; raises CoverageError with a witness if a sample is uncovered."""
    config = config or GlobalConfig()
    box = problem.box
    if X is None:
        X = box_samples(box.lower, box.upper, config.samples, config.seed)
    f, G, Hc = problem.values(X)
    feasible = problem.feasibility(X, 0.0)
    regions = []
    in_half = np.zeros(len(X), dtype=bool)
    in_ball = np.zeros(len(X), dtype=bool)
    for k, (x0, lc) in enumerate(zip(zeros.points, locals_)):
        dist = np.linalg.norm(X - x0, axis=1)
        in_half |= dist < 0.5 * lc.radius
        in_ball |= dist < config.shrink * lc.radius
        regions.append(Region("zero-ball", k, float(lc.radius), local=lc))

    rest = feasible & ~in_half
    if rest.any():
        j = int(np.argmin(np.where(rest, f, np.inf)))
        low = float(f[j])
        # refine the lowest samples locally: a zero missed by the enumeration shows up here
        order = np.argsort(np.where(rest, f, np.inf))[: min(config.refine, int(rest.sum()))]
        for x in _multistart(problem, 0, 0, X[order]):
            if not problem.feasibility(x[None, :], 1e-10)[0]:
                continue
            if any(np.linalg.norm(x - z) < 0.5 * lc.radius for z, lc in zip(zeros.points, locals_)):
                continue
            fx = float(problem.values(x[None, :])[0][0])
            if fx <= config.tol_zero:
                raise CoverageError(f"f vanishes at {x.tolist()} outside every zero ball (missed zero?)", x)
            if fx < low:
                low, j = fx, None
        if low <= config.tol_zero:
            raise CoverageError(f"f vanishes at {X[j].tolist()} outside every zero ball (missed zero?)", X[j])
        delta = 0.5 * low
    else:
        pos = f[~in_half & (f > 0)]
        delta = 0.5 * float(pos.min()) if pos.size else config.default_margin
    regions.append(Region("positive", -1, delta))

    viol = np.zeros(len(X))
    if problem.l:
        viol = np.maximum(viol, np.max(-G, axis=0))
    if problem.m:
        viol = np.maximum(viol, np.max(np.abs(Hc), axis=0))
    uncovered = ~in_ball & ~(f > delta)
    if uncovered.any():
        j = int(np.argmin(np.where(uncovered, viol, np.inf)))
        if viol[j] <= 0.0:
            raise CoverageError(f"sample {X[j].tolist()} is feasible with f = {f[j]:.3g} <= {delta:.3g} "
                                "outside every zero ball", X[j])
        delta_v = 0.5 * float(viol[j])
    else:
        bad = viol[viol > 0]
        delta_v = 0.5 * float(bad.min()) if bad.size else config.default_margin
    for i in range(problem.l):
        regions.append(Region("neg-g", i, delta_v))
    for j in range(problem.m):
        regions.append(Region("nonzero-h", j, delta_v))
    margins = {"delta_positive": delta, "delta_violation": delta_v,
               "radii": [float(lc.radius) for lc in locals_], "shrink": config.shrink}
    return regions, margins


def region_certificate(builder, problem, region, xs, f_node):
    """Fill ``region.factors`` / ``region.psi`` with the region's pieces (as node ids)."""
    b = builder
    l, m = problem.l, problem.m
    region.factors = {i: [] for i in range(l + 1)}
    region.psi = {}
    if region.kind == "zero-ball":
        lc = region.local
        region.factors[0] = list(lc.theta)
        for r, i in enumerate(lc.active):
            region.factors[i + 1] = [lc.inner["sqrt_b"][r]]
        region.psi = dict(enumerate(lc.psi))
    elif region.kind == "positive":
        region.factors[0] = [b.sqrt_positive(f_node, region.margin)]
    elif region.kind == "neg-g":
        i = region.index
        g = b.expr(problem.g[i], xs)
        half = b.const(0.5)
        region.factors[0] = [b.mul(half, b.add(f_node, b.const(1.0)))]
        inv_root = b.div(b.const(1.0), b.sqrt_positive(b.neg(g), region.margin))
        region.factors[i + 1] = [b.mul(b.mul(half, b.sub(f_node, b.const(1.0))), inv_root)]
    elif region.kind == "nonzero-h":
        j = region.index
        region.psi = {j: b.div(f_node, b.expr(problem.h[j], xs))}
    else:
        raise ValueError(f"unknown region kind {region.kind!r}")
    return region


def _region_weight(builder, problem, region, xs, f_node, config, cores):
    b = builder
    e = config.smooth + 1
    if region.kind == "zero-ball":
        mu = _ball_margin(b, xs, region.local.base, config.shrink * region.margin)
        return bump(b, mu, e)
    if region.kind == "positive":
        w = bump(b, b.sub(f_node, b.const(region.margin)), e)
    elif region.kind == "neg-g":
        g = b.expr(problem.g[region.index], xs)
        w = bump(b, b.sub(b.neg(g), b.const(region.margin)), e)
    else:
        h = b.expr(problem.h[region.index], xs)
        d = b.const(region.margin)
        w = b.add(bump(b, b.sub(h, d), e), bump(b, b.sub(b.neg(h), d), e))
    # vanish on the zero-ball cores so the local certificate is exact there
    for center, radius in cores:
        w = b.mul(w, bump(b, b.neg(_ball_margin(b, xs, center, radius)), e))
    return w


def glue(builder, problem, regions, f_star, config, extra_meta=None):
    """Squared-partition gluing of the region pieces into one certificate program."""
    b = builder
    n, l, m = problem.n, problem.l, problem.m
    xs = b.vars(n)
    f_node = b.expr(problem.f, xs)
    cores = [(r.local.base, 0.5 * r.margin) for r in regions if r.kind == "zero-ball"]
    for region in regions:
        region_certificate(b, problem, region, xs, f_node)
        region.weight = _region_weight(b, problem, region, xs, f_node, config, cores)
    wn = partition_of_unity(b, [r.weight for r in regions])
    phi, sos = [], {}
    for i in range(l + 1):
        factors = [b.guarded_mul(wn[k], s) for k, region in enumerate(regions)
                   for s in region.factors.get(i, [])]
        sos[i] = factors
        phi.append(b.sum([b.squared(t) for t in factors]) if factors else b.const(0.0))
    psi = []
    for j in range(m):
        terms = [b.guarded_mul(wn[k], b.mul(wn[k], region.psi[j]))
                 for k, region in enumerate(regions) if j in region.psi]
        psi.append(b.sum(terms) if terms else b.const(0.0))
    meta = {
        "kind": "global",
        "problem": problem.strings(),
        "dimension": n,
        "f_star": float(f_star),
        "domain": {"box": problem.box.to_json()},
        "sos": {str(i): v for i, v in sos.items()},
        "regions": [r.to_json() for r in regions],
        "validity": "verified on samples",
        "smoothness": {"bump_order": int(config.smooth), "checked": False},
    }
    meta.update(extra_meta or {})
    program = b.build({"phi": phi, "psi": psi, "weights": wn}, meta)
    return Certificate(program)


def _residual(problem, cert, X):
    f, G, Hc = problem.values(X)
    phi, psi = cert.evaluate(X)
    r = f - phi[0]
    if problem.l:
        r = r - np.sum(phi[1:] * G, axis=0)
    if problem.m:
        r = r - np.sum(psi * Hc, axis=0)
    return r


def global_certificate(problem, config=None, zeros=None, f_star=0.0):
    """Certificate of f - f_star = phi_0 + sum phi_i g_i + sum psi_j h_j on the box."""
    config = config or GlobalConfig()
    shifted = problem.shifted(f_star)
    Z = find_zeros(shifted, config, zeros)
    b = Builder(problem.n)
    locals_ = []
    for k, (x0, rep) in enumerate(zip(Z.points, Z.reports)):
        others = [np.linalg.norm(x0 - y) for y in Z.points if y is not x0 and np.any(y != x0)]
        cap = 0.5 * min(others) if others else math.inf
        lcfg = replace(config.local, rho_max=min(config.local.rho_max, cap), seed=config.seed)
        locals_.append(local_certificate(shifted, rep, lcfg, builder=b))
    X = box_samples(problem.box.lower, problem.box.upper, config.samples, config.seed)
    regions, margins = build_cover(shifted, Z, locals_, config, X)
    extra = {"zeros": Z.to_json(), "margins": margins}
    cert = glue(b, shifted, regions, f_star, config, extra)

    raw = evaluate_many(cert.program, [rg.weight for rg in regions], X)
    empty = ~np.any(raw > 0.0, axis=0)
    if empty.any():
        x = X[int(np.argmax(empty))]
        raise CoverageError(f"box sample {x.tolist()} lies in no region", x)
    W = cert.evaluate_weights(X)
    defect = float(np.max(np.abs(np.sum(W * W, axis=0) - 1.0))) if W.size else 0.0
    Xv = box_samples(problem.box.lower, problem.box.upper, config.verify_samples, config.seed + 1)
    r = _residual(shifted, cert, Xv)
    worst = int(np.argmax(np.abs(r)))
    report = {
        "zeros": Z.to_json(),
        "regions": [rg.to_json() for rg in regions],
        "margins": margins,
        "partition_defect": defect,
        "residual": {"max": float(np.abs(r[worst])), "mean": float(np.mean(np.abs(r))),
                     "argmax": Xv[worst].tolist(), "samples": int(len(Xv))},
        "completeness": Z.completeness,
        "f_star": float(f_star),
    }
    if not np.abs(r[worst]) <= config.tol_resid:
        raise ConstructionError(f"glued residual {abs(r[worst]):.3g} exceeds {config.tol_resid:.3g} at "
                                f"{Xv[worst].tolist()}", Xv[worst])
    return GlobalCertificate(cert, Z, regions, margins, report)


def local_to_certificate(problem, lc, f_star=0.0):
    """Wrap a :class:`LocalCertificate` as a serializable :class:`Certificate`."""
    meta = {
        "kind": "local",
        "problem": problem.strings(),
        "dimension": problem.n,
        "f_star": float(f_star),
        "domain": {"ball": {"center": lc.base.tolist(), "radius": float(lc.radius)}},
        "sos": {str(i): list(v) for i, v in lc.sos_factors.items()},
        "local": lc.to_json(),
        "validity": "verified on samples",
    }
    return Certificate(lc.program.__class__(lc.program.dimension, lc.program.nodes, lc.program.charts,
                                            {"phi": list(lc.phi), "psi": list(lc.psi)}, meta))
