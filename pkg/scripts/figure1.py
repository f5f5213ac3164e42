"""Fermi spaceslice diameters 2 rho_M(tau) for a = t^(1/2), t, t^2.

Writes a CSV table and, with --plot, a PNG (needs matplotlib, which is not a
package dependency).
"""

import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from fermichart.cli import figure1_rows


@dataclass(frozen=True)
class Figure1Config:
    tau_lo: float = 0.1
    tau_hi: float = 10.0
    n: int = 100
    out: str = "figure1.csv"
    plot: str | None = None


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--tau-lo", type=float, default=Figure1Config.tau_lo)
    p.add_argument("--tau-hi", type=float, default=Figure1Config.tau_hi)
    p.add_argument("-n", type=int, default=Figure1Config.n)
    p.add_argument("--out", default=Figure1Config.out)
    p.add_argument("--plot", default=None, help="optional PNG path")
    cfg = Figure1Config(**vars(p.parse_args(argv)))

    taus = np.linspace(cfg.tau_lo, cfg.tau_hi, cfg.n).tolist()
    cols, rows = figure1_rows(taus)
    with open(cfg.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)
    for alpha in sorted({r["alpha"] for r in rows}):
        sub = [r for r in rows if r["alpha"] == alpha]
        slope = np.polyfit([r["tau"] for r in sub], [r["diameter"] for r in sub], 1)[0]
        print(f"alpha = {alpha:g}: fitted slope {slope:.12f}, expected {sub[0]['expected_slope']:.12f}")

    if cfg.plot:
        try:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            print("matplotlib is not installed; skipping the plot", file=sys.stderr)
            return 0
        fig, ax = plt.subplots(figsize=(5, 4))
        for alpha, label in ((0.5, "a = t^1/2"), (1.0, "a = t"), (2.0, "a = t^2")):
            sub = [r for r in rows if r["alpha"] == alpha]
            ax.plot([r["tau"] for r in sub], [r["diameter"] for r in sub], label=label)
        ax.set_xlabel("tau")
        ax.set_ylabel("2 rho_M")
        ax.legend()
        fig.tight_layout()
        fig.savefig(cfg.plot, dpi=150)
    return 0


if __name__ == "__main__":
    sys.exit(main())
