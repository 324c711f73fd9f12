"""Command-line driver.

Reports go to stdout as JSON; refusals print one ``error:`` line to stderr
and exit with the documented code.  No certificate file is written unless
the run passes.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .certificate import Certificate
from .errors import NNCertError, ParseError
from .expr.serialize import dumps
from .globalcert import GlobalConfig, estimate_minimum, find_zeros, global_certificate, local_to_certificate
from .kkt import KKTTolerances, check_kkt
from .localcert import LocalConfig, local_certificate
from .problem import load_problem
from .verify import VerifyConfig, check_global_optimality, verify_certificate

log = logging.getLogger("nncert")

EXIT_CODES = {
    0: "pass",
    2: "residual failure",
    3: "hypothesis failure",
    4: "coverage failure",
    5: "non-isolated zeros",
    64: "parse error",
    65: "infeasible point",
    66: "format error",
}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    samples: int = None  # verification samples; command-specific default
    tol_resid: float = None
    quad_order: int = None
    budget: int = None
    out: str = None


def _parse_points(text, what="point"):
    """A point or list of points given as JSON text, comma-separated numbers, or a file path."""
    if text is None:
        return None
    src = text
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            src = fh.read()
    try:
        v = json.loads(src)
    except json.JSONDecodeError:
        try:
            v = [float(s) for s in src.replace(";", ",").split(",") if s.strip()]
        except ValueError:
            raise ParseError(f"cannot read {what} from {text!r}") from None
    if isinstance(v, dict) and "points" in v:
        v = v["points"]
    try:
        return np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"cannot read {what} from {text!r}") from None


def _configs(opts, run):
    tol = dict(opts.tolerances)
    kkt = KKTTolerances.from_dict(tol)
    quad = run.quad_order or opts.quad_order
    local = LocalConfig(quad_order=quad, seed=run.seed)
    if "tol_resid_local" in tol:
        local = replace(local, tol_resid=float(tol["tol_resid_local"]))
    g = GlobalConfig(budget=run.budget or opts.budget, seed=run.seed, local=local, kkt=kkt)
    for key in ("tol_zero", "tol_negative", "tol_resid"):
        if key in tol:
            g = replace(g, **{key: float(tol[key])})
    if run.tol_resid is not None:
        g = replace(g, tol_resid=run.tol_resid)
    if run.samples:
        g = replace(g, verify_samples=run.samples)
    v = VerifyConfig(samples=run.samples or 10000, seed=run.seed,
                     tol_resid=run.tol_resid if run.tol_resid is not None else float(tol.get("tol_resid", 1e-6)))
    return kkt, local, g, v


def _emit(obj):
    sys.stdout.write(dumps(obj, indent=1) + "\n")


def _write_certificate(cert, path):
    if path:
        cert.save(path)
        log.info("certificate written to %s", path)


def _point_arg(args, problem):
    x = _parse_points(args.point)
    if x is None:
        raise ParseError("--point is required")
    x = x.ravel()
    if x.size != problem.n:
        raise ParseError(f"point has dimension {x.size}, problem has {problem.n}")
    return x


def _f_star(args, opts):
    if args.f_star is not None:
        return float(args.f_star)
    return opts.f_star if opts.f_star is not None else 0.0


def _zeros(args, opts, n):
    z = _parse_points(args.zeros, "zeros") if args.zeros is not None else None
    if z is None and opts.zeros is not None:
        z = np.asarray(opts.zeros, dtype=float)
    if z is not None:
        z = z.reshape(-1, n) if z.size else np.zeros((0, n))
    return z


def cmd_check_kkt(args, run):
    problem, opts = load_problem(args.problem)
    kkt, *_ = _configs(opts, run)
    x = _point_arg(args, problem)
    f_star = _f_star(args, opts)
    rep = check_kkt(problem.shifted(f_star), x, kkt)
    _emit(rep.to_json())
    return 0 if rep.passes else 3


def cmd_zeros(args, run):
    problem, opts = load_problem(args.problem)
    _, _, g, _ = _configs(opts, run)
    f_star = _f_star(args, opts)
    Z = find_zeros(problem.shifted(f_star), g, _zeros(args, opts, problem.n))
    out = Z.to_json()
    out["f_star"] = f_star
    out["kkt"] = [r.to_json() for r in Z.reports]
    _emit(out)
    return 0


def cmd_certify_local(args, run):
    problem, opts = load_problem(args.problem)
    kkt, local, _, v = _configs(opts, run)
    x = _point_arg(args, problem)
    f_star = _f_star(args, opts)
    shifted = problem.shifted(f_star)
    rep = check_kkt(shifted, x, kkt)
    lc = local_certificate(shifted, rep, local)
    cert = local_to_certificate(problem, lc, f_star)
    report = verify_certificate(problem, cert, replace(v, samples=run.samples or 1000))
    out = {"kind": "local", "kkt": rep.to_json(), "certificate": lc.to_json(), "verification": report.to_json()}
    _emit(out)
    if report.exit_code == 0:
        _write_certificate(cert, run.out)
    return report.exit_code


def cmd_certify_global(args, run):
    problem, opts = load_problem(args.problem)
    _, _, g, v = _configs(opts, run)
    f_star = _f_star(args, opts)
    gc = global_certificate(problem, g, _zeros(args, opts, problem.n), f_star)
    report = verify_certificate(problem, gc.certificate, v)
    _emit({"kind": "global", "construction": gc.report, "verification": report.to_json()})
    if report.exit_code == 0:
        _write_certificate(gc.certificate, run.out)
    return report.exit_code


def cmd_verify(args, run):
    problem, opts = load_problem(args.problem)
    *_, v = _configs(opts, run)
    cert = Certificate.load(args.certificate)
    report = verify_certificate(problem, cert, v)
    _emit(report.to_json())
    return report.exit_code


def cmd_optimality(args, run):
    problem, opts = load_problem(args.problem)
    _, _, g, v = _configs(opts, run)
    if args.f_star is not None or opts.f_star is not None:
        f_star, provenance = _f_star(args, opts), "user"
    else:
        f_star, provenance = estimate_minimum(problem, g), "multistart"
    gc = global_certificate(problem, g, _zeros(args, opts, problem.n), f_star)
    cert = gc.certificate
    points = [_point_arg(args, problem)] if args.point is not None else list(gc.zeros.points)
    results = [check_global_optimality(problem, cert, x, v) for x in points]
    report = verify_certificate(problem, cert, v)
    ok = all(r.passes for r in results) and report.passes
    _emit({"f_star": f_star, "f_star_provenance": provenance,
           "points": [r.to_json() for r in results], "verification": report.to_json(), "passes": ok})
    if ok:
        _write_certificate(cert, run.out)
        return 0
    return report.exit_code or 2


COMMANDS = {
    "check-kkt": cmd_check_kkt,
    "zeros": cmd_zeros,
    "certify-local": cmd_certify_local,
    "certify-global": cmd_certify_global,
    "verify": cmd_verify,
    "optimality": cmd_optimality,
}


def build_parser():
    p = argparse.ArgumentParser(prog="nncert", description="Sums-of-squares nonnegativity certificates.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, point=False, zeros=False):
        sp.add_argument("problem", help="problem JSON file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--samples", type=int, default=None, help="verification sample count")
        sp.add_argument("--tol-resid", type=float, default=None)
        sp.add_argument("--quad-order", type=int, default=None)
        sp.add_argument("--budget", type=int, default=None, help="multistart starts")
        sp.add_argument("--f-star", type=float, default=None, help="certify f - f_star")
        sp.add_argument("--out", default=None, help="certificate output path")
        if point:
            sp.add_argument("--point", default=None, help="point as JSON list or comma-separated numbers")
        if zeros:
            sp.add_argument("--zeros", default=None, help="asserted zeros: JSON list of points or a file")
        return sp

    common(sub.add_parser("check-kkt", help="check the hypotheses at a point"), point=True)
    common(sub.add_parser("zeros", help="enumerate zeros of f on S"), zeros=True)
    common(sub.add_parser("certify-local", help="local certificate around a zero"), point=True)
    common(sub.add_parser("certify-global", help="global certificate on the problem box"), zeros=True)
    vp = common(sub.add_parser("verify", help="re-verify a certificate file"))
    vp.add_argument("certificate", help="certificate IR file")
    common(sub.add_parser("optimality", help="global optimality audit at the minimizers"), point=True, zeros=True)
    return p


def _setup_logging():
    level = os.environ.get("NNCERT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    run = RunConfig(args.seed, args.samples, args.tol_resid, args.quad_order, args.budget, args.out)
    try:
        code = COMMANDS[args.command](args, run)
    except NNCertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 66
    if code:
        print(f"error: {EXIT_CODES.get(code, 'failure')}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
