"""First- and second-order optimality checks at a candidate point.

Checks every pointwise hypothesis the certificate constructions need:
constraint regularity, KKT stationarity, strict complementarity and
second-order sufficiency on the tangent space.  Constraint indices are
0-based throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasiblePointError


@dataclass(frozen=True)
class KKTTolerances:
    active: float = 1e-8
    feas: float = 1e-8
    rank: float = 1e-8  # relative to the largest singular value
    scomp: float = 1e-10
    sosc: float = 1e-10
    stat: float = 1e-8  # relative to max(1, |grad f|)

    @classmethod
    def from_dict(cls, d):
        known = {k: float(v) for k, v in (d or {}).items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class KKTReport:
    point: np.ndarray
    active: tuple
    lam: np.ndarray
    nu: np.ndarray
    stationarity_residual: float
    is_kkt: bool
    regular: bool
    sigma_min: float
    strict_complementarity: bool
    min_active_multiplier: float
    sosc: bool
    min_eigenvalue: float
    eigenvalues: np.ndarray
    tangent_basis: np.ndarray
    hessian_lagrangian: np.ndarray = field(repr=False, default=None)

    @property
    def passes(self):
        return self.is_kkt and self.regular and self.strict_complementarity and self.sosc

    def failing_conditions(self):
        out = []
        if not self.regular:
            out.append("regularity")
        if not self.is_kkt:
            out.append("stationarity")
        if not self.strict_complementarity:
            out.append("strict complementarity")
        if not self.sosc:
            out.append("second-order sufficiency")
        return out

    def to_json(self):
        fin = lambda v: float(v) if math.isfinite(v) else None  # noqa: E731
        return {
            "point": self.point.tolist(),
            "active": list(self.active),
            "lambda": self.lam.tolist(),
            "nu": self.nu.tolist(),
            "stationarity_residual": float(self.stationarity_residual),
            "kkt": bool(self.is_kkt),
            "regular": {"pass": bool(self.regular), "sigma_min": fin(self.sigma_min)},
            "strict_complementarity": {
                "pass": bool(self.strict_complementarity),
                "min_active_lambda": fin(self.min_active_multiplier),
            },
            "sosc": {
                "pass": bool(self.sosc),
                "min_eigenvalue": fin(self.min_eigenvalue),
                "eigenvalues": self.eigenvalues.tolist(),
            },
            "tangent_dimension": int(self.tangent_basis.shape[1]),
            "passes": bool(self.passes),
            "failing": self.failing_conditions(),
        }


def active_set(problem, x, tol_active=1e-8, tol_feas=1e-8):
    """Indices of inequality constraints with |g_i(x)| <= tol_active."""
    x = np.asarray(x, dtype=float)
    _, G, H = problem.values(x[None, :])
    G, H = G[:, 0], H[:, 0]
    for i, v in enumerate(G):
        if v < -tol_feas:
            raise InfeasiblePointError(f"infeasible point: g{i}(x) = {v:.6g} < 0")
    for j, v in enumerate(H):
        if abs(v) > tol_feas:
            raise InfeasiblePointError(f"infeasible point: h{j}(x) = {v:.6g} != 0")
    return tuple(i for i, v in enumerate(G) if abs(v) <= tol_active)


def constraint_rows(problem, x, active):
    _, gj, hj = problem.jets(x)
    rows = [gj[i][1] for i in active] + [hh[1] for hh in hj]
    return np.array(rows, dtype=float).reshape(len(rows), problem.n)


def check_regularity(problem, x, active, tol_rank=1e-8):
    """(regular, smallest singular value) of the stacked active gradients."""
    A = constraint_rows(problem, x, active)
    return _regularity(A, tol_rank)


def _regularity(A, tol_rank):
    r, n = A.shape
    if r == 0:
        return True, math.inf
    s = np.linalg.svd(A, compute_uv=False)
    if r > n:
        return False, 0.0
    smin = float(s[-1])
    return bool(smin > tol_rank * float(s[0])), smin


def solve_multipliers(problem, x, active):
    """Least-squares multipliers of grad f = sum lam_i grad g_i + sum nu_j grad h_j."""
    (_, gf, _), _, _ = problem.jets(x)
    A = constraint_rows(problem, x, active)
    return _multipliers(gf, A, problem.l, active)


def _multipliers(gf, A, l, active):
    lam = np.zeros(l)
    k = len(active)
    if A.shape[0] == 0:
        return lam, np.zeros(0), float(np.linalg.norm(gf))
    mu, *_ = np.linalg.lstsq(A.T, gf, rcond=None)
    lam[list(active)] = mu[:k] + 0.0
    nu = mu[k:] + 0.0
    res = float(np.linalg.norm(gf - A.T @ mu))
    return lam, nu, res


def tangent_basis(problem, x, active):
    return _tangent(constraint_rows(problem, x, active))


def _tangent(A, tol_rank=1e-8):
    r, n = A.shape
    if r == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > tol_rank * s[0])) if s.size else 0
    V = vt[rank:].T.copy()
    # deterministic sign: largest-magnitude entry of each column positive
    for c in range(V.shape[1]):
        k = int(np.argmax(np.abs(V[:, c])))
        if V[k, c] < 0:
            V[:, c] = -V[:, c]
    return V


def hessian_lagrangian(problem, x, lam, nu):
    (_, _, Hf), gj, hj = problem.jets(x)
    HL = Hf.copy()
    for i, (_, _, Hg) in enumerate(gj):
        if lam[i] != 0.0:
            HL -= lam[i] * Hg
    for j, (_, _, Hh) in enumerate(hj):
        HL -= nu[j] * Hh
    return 0.5 * (HL + HL.T)


def check_sosc(problem, x, report, tol_sosc=1e-10):
    """(flag, min eigenvalue, eigenvalues) of V^T (Hessian of L) V."""
    HL = hessian_lagrangian(problem, x, report.lam, report.nu)
    return _sosc(HL, report.tangent_basis, tol_sosc)


def _sosc(HL, V, tol_sosc):
    if V.shape[1] == 0:
        return True, math.inf, np.zeros(0)
    P = V.T @ HL @ V
    eig = np.linalg.eigvalsh(0.5 * (P + P.T))
    return bool(eig[0] > tol_sosc), float(eig[0]), eig


def check_strict_complementarity(report, tol_scomp=1e-10):
    if not report.active:
        return True
    return bool(min(report.lam[i] for i in report.active) > tol_scomp)


def check_kkt(problem, x, tol=None):
    """Run every pointwise hypothesis check at ``x`` and collect a report."""
    tol = tol or KKTTolerances()
    x = np.asarray(x, dtype=float).ravel()
    if x.size != problem.n:
        raise ValueError(f"point has dimension {x.size}, problem has {problem.n}")
    I = active_set(problem, x, tol.active, tol.feas)
    (_, gf, _), _, _ = problem.jets(x)
    A = constraint_rows(problem, x, I)
    regular, smin = _regularity(A, tol.rank)
    lam, nu, res = _multipliers(gf, A, problem.l, I)
    is_kkt = res <= tol.stat * max(1.0, float(np.linalg.norm(gf)))
    V = _tangent(A, tol.rank)
    min_lam = min((float(lam[i]) for i in I), default=math.inf)
    scomp = (not I) or min_lam > tol.scomp
    HL = hessian_lagrangian(problem, x, lam, nu)
    sosc, emin, eig = _sosc(HL, V, tol.sosc)
    return KKTReport(x, I, lam, nu, res, bool(is_kkt), regular, smin, bool(scomp), min_lam,
                     sosc, emin, eig, V, HL)
