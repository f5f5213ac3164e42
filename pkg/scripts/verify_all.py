"""Run the named invariant checks on every built-in model and print a summary table."""

import argparse
import sys
import time

from fermichart import ChartContext, builtin_models
from fermichart.verification import VerifyConfig, run_checks


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--k", type=int, choices=(0, -1), default=0)
    p.add_argument("--seed", type=int, default=VerifyConfig.seed)
    ns = p.parse_args(argv)
    cfg = VerifyConfig(seed=ns.seed)

    failed = 0
    for name, model in builtin_models().items():
        start = time.perf_counter()
        results = run_checks(ChartContext(model, k=ns.k), cfg)
        bad = [r.name for r in results if not r.passed]
        failed += bool(bad)
        status = "ok" if not bad else "FAILED: " + ", ".join(bad)
        print(f"{name:14s} {len(results):2d} checks  {time.perf_counter() - start:5.2f} s  {status}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
