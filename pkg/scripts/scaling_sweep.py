"""Robust risk versus n for several privacy budgets, with log-log slopes.

Writes a CSV (closed forms only) and prints the fitted slope of the full risk
and of the part above the noiseless floor for each budget.
"""

import argparse
from dataclasses import replace

import numpy as np

from otaest.experiments import loglog_slope
from otaest.model import GaussianLocation, ProductBernoulli, SparseBernoulli, SystemConfig
from otaest.risk import minimax_risk, robust_risk

MODELS = {
    "gaussian": GaussianLocation(1.0, 1.0),
    "bernoulli": ProductBernoulli(),
    "sparse": SparseBernoulli(1),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--family", choices=sorted(MODELS), default="gaussian")
    parser.add_argument("--d", type=int, default=4)
    parser.add_argument("--epsilons", type=float, nargs="+", default=[0.001, 0.01, 0.1, 1.0])
    parser.add_argument("--n-min", type=int, default=64)
    parser.add_argument("--n-max", type=int, default=1 << 16)
    parser.add_argument("--out", default="scaling_sweep.csv")
    args = parser.parse_args()

    model = MODELS[args.family]
    base = SystemConfig(n=1, d=args.d, P=1.0, sigma0_sq=1.0)
    ns = np.unique(np.geomspace(args.n_min, args.n_max, 17).astype(int))
    lines = ["epsilon,n,risk,floor"]
    for eps in args.epsilons:
        risks, excess = [], []
        for n in ns:
            cfg = replace(base, n=int(n))
            risk = robust_risk(model, cfg, eps)
            floor = minimax_risk(model, replace(cfg, sigma0_sq=0.0))
            risks.append(risk)
            excess.append(risk - floor)
            lines.append(f"{eps!r},{n},{risk!r},{floor!r}")
        head = slice(0, 5)
        print(f"eps={eps:<7g} slope first 5 n: {loglog_slope(ns[head], risks[head]):+.3f}"
              f"  slope all n: {loglog_slope(ns, risks):+.3f}"
              f"  excess slope: {loglog_slope(ns, np.maximum(excess, 1e-300)):+.3f}")
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
