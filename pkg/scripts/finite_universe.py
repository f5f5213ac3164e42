"""Spaceslice radius rho_M(tau) for the bounded models, against the bound (pi/2) lim a/a'."""

import argparse
import math
import sys
from dataclasses import dataclass

from fermichart import ChartContext, LambdaFluid, Sinh, max_radius


@dataclass(frozen=True)
class FiniteUniverseConfig:
    taus: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
    lambdas: tuple[float, ...] = (3.0, 12.0)


def a_over_adot(model, t):
    a, ad, _ = model.derivs(t)
    return float(a / ad)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--tau", type=float, nargs="+", default=list(FiniteUniverseConfig.taus))
    p.add_argument("--lambda", dest="lambdas", type=float, nargs="+", default=list(FiniteUniverseConfig.lambdas))
    ns = p.parse_args(argv)
    cfg = FiniteUniverseConfig(tuple(ns.tau), tuple(ns.lambdas))

    models = [("sinh", Sinh())] + [(f"lambda_fluid(Lambda={lam:g})", LambdaFluid(lam)) for lam in cfg.lambdas]
    for name, model in models:
        ctx = ChartContext(model)
        limit = a_over_adot(model, 40.0)
        print(f"{name}: lim a/a' ~ {limit:.12f}, bound (pi/2) lim a/a' = {0.5 * math.pi * limit:.12f}")
        if name.startswith("lambda"):
            lam = model.lam
            print(f"    sqrt(Lambda/3) = {math.sqrt(lam / 3):.12f}, sqrt(3/Lambda) = {math.sqrt(3 / lam):.12f}")
        for tau in cfg.taus:
            print(f"    tau = {tau:6g}  rho_M = {max_radius(ctx, tau):.12f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
