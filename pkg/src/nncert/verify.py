"""Re-verification of certificates from their IR alone.

Nothing here touches construction state: a certificate is a deserialized
program plus metadata, and the problem is re-read from its expressions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FormatError
from .sampling import ball_samples, box_samples


@dataclass(frozen=True)
class VerifyConfig:
    samples: int = 10000
    seed: int = 0
    tol_resid: float = 1e-6
    tol_partition: float = 1e-12
    tol_sos: float = 1e-14  # sampled phi_i may dip this far below zero by rounding
    tol_complementarity: float = 1e-8
    tol_gradient: float = 1e-8
    tol_lagrangian: float = 1e-12
    tol_lagrangian_at_zero: float = 1e-10


@dataclass
class OptimalityReport:
    point: np.ndarray
    phi0_at_point: float
    complementarity: list  # phi_i(x*) g_i(x*)
    phi_at_point: list
    gradient_defect: float
    lagrangian_min: float
    lagrangian_at_point: float
    condition_i: bool
    condition_ii: bool
    condition_iii: bool

    @property
    def passes(self):
        return self.condition_i and self.condition_ii and self.condition_iii

    def failing(self):
        names = ("(i) complementarity", "(ii) gradient identity", "(iii) lagrangian minimum")
        flags = (self.condition_i, self.condition_ii, self.condition_iii)
        return [n for n, ok in zip(names, flags) if not ok]

    def to_json(self):
        return {
            "point": self.point.tolist(),
            "i": {"pass": self.condition_i, "phi0": self.phi0_at_point, "phi": self.phi_at_point,
                  "phi_times_g": self.complementarity},
            "ii": {"pass": self.condition_ii, "defect": self.gradient_defect},
            "iii": {"pass": self.condition_iii, "min_sampled": self.lagrangian_min,
                    "at_point": self.lagrangian_at_point},
            "passes": self.passes,
        }


@dataclass
class VerificationReport:
    residual_max: float
    residual_argmax: list
    residual_mean: float
    min_phi: list
    partition_defect: float
    structural_sos: bool
    samples: int
    optimality: list = field(default_factory=list)
    coverage_defect: list = None
    problem_matches: bool = True
    tolerances: dict = field(default_factory=dict)
    error: str = None

    @property
    def failures(self):
        out = []
        t = self.tolerances
        if self.error:
            out.append(self.error)
        if self.coverage_defect is not None:
            out.append("coverage")
        if self.samples and not self.residual_max <= t.get("tol_resid", 1e-6):
            out.append("residual")
        if not self.structural_sos or any(v < -t.get("tol_sos", 1e-14) for v in self.min_phi):
            out.append("sum of squares")
        if not self.partition_defect <= t.get("tol_partition", 1e-12):
            out.append("partition")
        if any(not o.passes for o in self.optimality):
            out.append("optimality")
        return out

    @property
    def passes(self):
        return not self.failures

    @property
    def exit_code(self):
        f = self.failures
        if not f:
            return 0
        if "coverage" in f or "partition" in f or self.error:
            return 4
        return 2

    def to_json(self):
        return {
            "passes": self.passes,
            "exit_code": self.exit_code,
            "failures": self.failures,
            "residual": {"max": self.residual_max, "argmax": self.residual_argmax,
                         "mean": self.residual_mean, "samples": self.samples},
            "min_phi": self.min_phi,
            "partition_defect": self.partition_defect,
            "structural_sos": self.structural_sos,
            "coverage_defect": self.coverage_defect,
            "problem_matches": self.problem_matches,
            "optimality": [o.to_json() for o in self.optimality],
            "tolerances": self.tolerances,
            "error": self.error,
        }


# ---------------------------------------------------------------------------


def _domain_check(cert, X):
    dom = cert.meta.get("domain", {})
    if "box" in dom:
        lo = np.asarray(dom["box"]["lower"], dtype=float)
        hi = np.asarray(dom["box"]["upper"], dtype=float)
        slack = 1e-12 * np.maximum(1.0, hi - lo)
        ok = np.all((X >= lo - slack) & (X <= hi + slack), axis=1)
    elif "ball" in dom:
        c = np.asarray(dom["ball"]["center"], dtype=float)
        ok = np.linalg.norm(X - c, axis=1) <= dom["ball"]["radius"] * (1 + 1e-12)
    else:
        ok = np.ones(len(X), dtype=bool)
    if not ok.all():
        x = X[int(np.argmin(ok))]
        raise DomainError(f"point {x.tolist()} is outside the certificate's validity domain")


def residual(problem, cert, X):
    """f - f_star - phi_0 - sum phi_i g_i - sum psi_j h_j at the rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    f, G, Hc = problem.values(X)
    phi, psi = cert.evaluate(X)
    r = f - cert.f_star - phi[0]
    if problem.l:
        r = r - np.sum(phi[1:] * G, axis=0)
    if problem.m:
        r = r - np.sum(psi * Hc, axis=0)
    return r, phi, psi


def eval_certificate(problem, cert, x):
    """(phi values, psi values, residual) at a single point inside the validity domain."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    _check_dimensions(problem, cert)
    _domain_check(cert, x)
    r, phi, psi = residual(problem, cert, x)
    return phi[:, 0], psi[:, 0], float(r[0])


def _check_dimensions(problem, cert):
    if cert.dimension != problem.n:
        raise FormatError(f"certificate dimension {cert.dimension} does not match problem dimension {problem.n}")
    if len(cert.phi) != problem.l + 1 or len(cert.psi) != problem.m:
        raise FormatError("certificate multiplier counts do not match the problem's constraints")


def is_structural_sos(program, root):
    """True when ``root`` is built only from squares, sums/products of such, and nonnegative constants."""
    node = program.nodes[root]
    if node.kind == "squared":
        return True
    if node.kind == "const":
        return float(node["value"]) >= 0.0
    if node.kind in ("sum", "add", "mul"):
        return all(is_structural_sos(program, a) for a in node.args)
    return False


def sos_consistent(cert):
    """Each phi_i is structurally SOS and its squares are exactly the recorded factors."""
    program = cert.program
    factors = cert.sos_factors
    for i, root in enumerate(cert.phi):
        if not is_structural_sos(program, root):
            return False
        node = program.nodes[root]
        if node.kind == "squared":
            leaves = [node.args[0]]
        elif node.kind == "const":
            leaves = []
        else:
            leaves = [program.nodes[a].args[0] for a in node.args if program.nodes[a].kind == "squared"]
        if i in factors and sorted(leaves) != sorted(factors[i]):
            return False
    return True


def certificate_samples(cert, problem, count, seed=0):
    dom = cert.meta.get("domain", {})
    if "ball" in dom:
        return ball_samples(dom["ball"]["center"], dom["ball"]["radius"], count, seed)
    box = dom.get("box") or problem.box.to_json()
    return box_samples(box["lower"], box["upper"], count, seed)


def _failing_point(problem, cert, X):
    """A row of X at which evaluation raises, located by bisection."""
    while len(X) > 1:
        half = X[: len(X) // 2]
        try:
            residual(problem, cert, half)
        except (DomainError, ArithmeticError):
            X = half
            continue
        X = X[len(X) // 2:]
    return X[0]


def sample_residual(problem, cert, count=10000, seed=0, chunk=4096):
    """Residual statistics on deterministic low-discrepancy samples of the validity domain."""
    _check_dimensions(problem, cert)
    if count <= 0:
        return {"samples": 0, "max": math.nan, "argmax": None, "mean": math.nan,
                "min_phi": [], "partition_defect": math.nan, "error": "no samples requested"}
    X = certificate_samples(cert, problem, count, seed)
    rs, phis, parts = [], [], []
    for s in range(0, len(X), chunk):
        Xc = X[s:s + chunk]
        try:
            r, phi, _ = residual(problem, cert, Xc)
            W = cert.evaluate_weights(Xc)
        except (DomainError, ArithmeticError) as exc:
            x = _failing_point(problem, cert, Xc)
            return {"samples": int(len(X)), "max": math.nan, "argmax": None, "mean": math.nan,
                    "min_phi": [], "partition_defect": math.nan, "error": f"evaluation failed: {exc}",
                    "coverage_defect": x.tolist()}
        rs.append(r)
        phis.append(phi.min(axis=1))
        if W.size:
            parts.append(float(np.max(np.abs(np.sum(W * W, axis=0) - 1.0))))
    r = np.concatenate(rs)
    k = int(np.argmax(np.abs(r)))
    return {
        "samples": int(len(X)),
        "max": float(abs(r[k])),
        "argmax": X[k].tolist(),
        "mean": float(np.mean(np.abs(r))),
        "min_phi": np.min(np.array(phis), axis=0).tolist(),
        "partition_defect": max(parts) if parts else 0.0,
        "error": None,
    }


def check_global_optimality(problem, cert, x_star, config=None, X=None):
    """Check that x_star minimizes the generalized Lagrangian certified by ``cert``.

    (i) phi_0(x*) = 0, phi_i(x*) g_i(x*) = 0 and phi_i(x*) >= 0;
    (ii) grad f(x*) = sum phi_i(x*) grad g_i(x*) + sum psi_j(x*) grad h_j(x*);
    (iii) the Lagrangian f - f_star - sum phi_i g_i - sum psi_j h_j is >= 0 on
    samples and vanishes at x*.
    """
    config = config or VerifyConfig()
    x = np.asarray(x_star, dtype=float).ravel()
    _check_dimensions(problem, cert)
    r0, phi, psi = residual(problem, cert, x[None, :])
    phi, psi = phi[:, 0], psi[:, 0]
    (fx, gf, _), gj, hj = problem.jets(x)
    comp = [float(phi[i + 1] * gj[i][0]) for i in range(problem.l)]
    cond_i = (abs(phi[0]) <= config.tol_complementarity
              and all(abs(c) <= config.tol_complementarity for c in comp)
              and bool(np.all(phi >= -config.tol_sos)))
    grad = gf.copy()
    for i in range(problem.l):
        grad -= phi[i + 1] * gj[i][1]
    for j in range(problem.m):
        grad -= psi[j] * hj[j][1]
    defect = float(np.linalg.norm(grad))
    cond_ii = defect <= config.tol_gradient
    if X is None:
        X = certificate_samples(cert, problem, config.samples, config.seed)
    f, G, Hc = problem.values(X)
    phiX, psiX = cert.evaluate(X)
    lag = f - cert.f_star
    if problem.l:
        lag = lag - np.sum(phiX[1:] * G, axis=0)
    if problem.m:
        lag = lag - np.sum(psiX * Hc, axis=0)
    lag_x = float(fx - cert.f_star - sum(phi[i + 1] * gj[i][0] for i in range(problem.l))
                  - sum(psi[j] * hj[j][0] for j in range(problem.m)))
    lag_min = float(lag.min()) if lag.size else math.inf
    cond_iii = lag_min >= -config.tol_lagrangian and abs(lag_x) <= config.tol_lagrangian_at_zero
    return OptimalityReport(x, float(phi[0]), comp, phi.tolist(), defect, lag_min, lag_x,
                            bool(cond_i), bool(cond_ii), bool(cond_iii))


def certificate_zeros(cert):
    meta = cert.meta
    if meta.get("kind") == "local":
        return np.asarray([meta["domain"]["ball"]["center"]], dtype=float)
    pts = meta.get("zeros", {}).get("points", [])
    return np.asarray(pts, dtype=float).reshape(-1, cert.dimension)


def verify_certificate(problem, cert, config=None):
    """Full constructor-independent check of a certificate against a problem."""
    config = config or VerifyConfig()
    tol = dict(config.__dict__)
    tol.pop("samples")
    tol.pop("seed")
    _check_dimensions(problem, cert)
    matches = cert.meta.get("problem") == problem.strings()
    stats = sample_residual(problem, cert, config.samples, config.seed)
    sos = sos_consistent(cert)
    report = VerificationReport(
        stats["max"], stats["argmax"], stats["mean"], stats["min_phi"], stats["partition_defect"], sos,
        stats["samples"], coverage_defect=stats.get("coverage_defect"), problem_matches=matches,
        tolerances=tol, error=stats["error"],
    )
    if stats["error"] is None:
        X = certificate_samples(cert, problem, config.samples, config.seed)
        for z in certificate_zeros(cert):
            try:
                report.optimality.append(check_global_optimality(problem, cert, z, config, X))
            except (DomainError, ArithmeticError) as exc:
                report.error = f"evaluation failed at zero {z.tolist()}: {exc}"
    return report
