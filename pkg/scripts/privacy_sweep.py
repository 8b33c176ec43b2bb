"""Exact leakage against its bounds as the number of users grows."""

import argparse

import numpy as np

from otaest.model import GaussianLocation, SystemConfig
from otaest.privacy import bernoulli_mi_bound, bernoulli_mi_exact, gaussian_mi_bound, gaussian_mi_exact


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--d", type=int, default=2)
    parser.add_argument("--sigma0-sq", type=float, default=1.0)
    args = parser.parse_args()

    model = GaussianLocation(1.0, 1.0)
    grid = np.linspace(0, 1, 101)
    print(f"{'n':>6}{'gauss exact':>13}{'gauss bound':>13}{'bern exact':>13}{'bern bound':>13}")
    for n in (1, 2, 4, 8, 16, 32, 64, 128, 256):
        cfg = SystemConfig(n=n, d=args.d, P=1.0, sigma0_sq=args.sigma0_sq)
        bern = args.d * max(bernoulli_mi_exact(n, t) for t in grid)
        print(f"{n:>6}{gaussian_mi_exact(cfg, model):>13.6f}{gaussian_mi_bound(cfg, model):>13.6f}"
              f"{bern:>13.6f}{bernoulli_mi_bound(cfg):>13.6f}")


if __name__ == "__main__":
    main()
