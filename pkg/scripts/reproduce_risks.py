"""Closed-form minimax risks next to Monte Carlo estimates at the worst-case parameter."""

import argparse

from otaest.channel import mc_risk
from otaest.model import GaussianLocation, ProductBernoulli, SparseBernoulli, SystemConfig
from otaest.risk import minimax_branch, minimax_risk, scheme_worst_case
from otaest.schemes import optimal_scheme

CASES = [
    (GaussianLocation(1.0, 1.0), SystemConfig(n=10, d=2, P=1.0, sigma0_sq=1.0)),
    (ProductBernoulli(), SystemConfig(n=4, d=1, P=1.0, sigma0_sq=1.0)),
    (ProductBernoulli(), SystemConfig(n=4, d=1, P=1.0, sigma0_sq=100.0)),
    (SparseBernoulli(1), SystemConfig(n=4, d=4, P=1.0, sigma0_sq=1.0)),
    (SparseBernoulli(1), SystemConfig(n=4, d=4, P=1.0, sigma0_sq=50.0)),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    print(f"{'model':<12}{'n':>4}{'d':>4}{'s0':>8}  {'branch':<11}{'closed':>11}{'mc':>11}{'stderr':>10}")
    for i, (model, cfg) in enumerate(CASES):
        scheme = optimal_scheme(model, cfg)
        theta, _ = scheme_worst_case(scheme, model)
        est = mc_risk(model, theta, scheme, args.trials, master_seed=args.seed + i)
        name = model.family if not isinstance(model, SparseBernoulli) else f"sparse m={model.m}"
        print(f"{name:<12}{cfg.n:>4}{cfg.d:>4}{cfg.sigma0_sq:>8g}  {minimax_branch(model, cfg):<11}"
              f"{minimax_risk(model, cfg):>11.7f}{est.mean:>11.7f}{est.stderr:>10.1e}")


if __name__ == "__main__":
    main()
