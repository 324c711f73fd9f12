"""Certify every problem in problems/ and print a results table.

Usage: python3 scripts/run_suite.py [--samples N] [--seed S] [--json out.json]
Negative controls are expected to be refused; their exit codes are reported.
"""
import argparse
import glob
import json
import os
import time

from nncert.errors import NNCertError
from nncert.globalcert import GlobalConfig, global_certificate
from nncert.problem import load_problem
from nncert.verify import VerifyConfig, verify_certificate

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "problems")


def run_one(path, samples, seed):
    problem, _ = load_problem(path)
    t = time.perf_counter()
    try:
        gc = global_certificate(problem, GlobalConfig(seed=seed))
    except NNCertError as exc:
        return {"exit": exc.exit_code, "reason": str(exc), "seconds": time.perf_counter() - t}
    built = time.perf_counter() - t
    rep = verify_certificate(problem, gc.certificate, VerifyConfig(samples=samples, seed=seed))
    return {
        "exit": rep.exit_code,
        "zeros": len(gc.zeros.points),
        "regions": len(gc.regions),
        "residual": rep.residual_max,
        "build_seconds": built,
        "seconds": time.perf_counter() - t,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", default=None, help="also write results to this file")
    args = ap.parse_args()
    results = {}
    print(f"{'problem':22s} {'exit':>4s} {'zeros':>5s} {'regions':>7s} {'residual':>9s} {'time[s]':>8s}")
    for path in sorted(glob.glob(os.path.join(ROOT, "*.json"))):
        name = os.path.splitext(os.path.basename(path))[0]
        r = results[name] = run_one(path, args.samples, args.seed)
        res = f"{r['residual']:.1e}" if "residual" in r else "-"
        print(f"{name:22s} {r['exit']:4d} {r.get('zeros', '-'):>5} {r.get('regions', '-'):>7} {res:>9s} {r['seconds']:8.2f}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=1)


if __name__ == "__main__":
    main()
