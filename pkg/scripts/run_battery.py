"""Run every shipped experiment and print a one-line summary per config.

    python scripts/run_battery.py [--out DIR]
"""
import argparse
import time

from driftplate.config import load, shipped_configs
from driftplate.pipeline import run, write_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="battery_reports")
    args = ap.parse_args()
    failed = []
    t_all = time.perf_counter()
    for name in shipped_configs():
        t0 = time.perf_counter()
        report = run(load(name).with_output(deterministic=True))
        write_report(report, args.out, name)
        worst = min((r["margin"] / r["rhs"] for r in report.bounds), default=float("nan"))
        lam = report.spectrum["eigenvalues"]
        print(f"{name:<22} {'pass' if report.passed else 'FAIL'}  Lambda_1={lam[0]:<16.10g}"
              f" worst relative margin={worst:.4f}  {time.perf_counter() - t0:.1f}s")
        if not report.passed:
            failed.append(name)
    print(f"{len(failed)} failing config(s) in {time.perf_counter() - t_all:.1f}s")
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
