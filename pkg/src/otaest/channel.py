"""Gaussian MAC superposition and seeded Monte Carlo estimation trials."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import ModelSpec, sample_batch, validate_theta
from .schemes import Scheme

# spawn-key namespaces keep single-trial and batch streams disjoint
_TRIAL_KEY = 0
_BATCH_KEY = 1
_BATCH_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class TrialResult:
    theta_hat: np.ndarray
    squared_error: float
    seed_used: int


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    trials: int

    def within(self, value: float, k: float = 3.0) -> bool:
        return abs(self.mean - value) <= k * self.stderr


def derive_seed(master_seed: int, index: int, namespace: int = _TRIAL_KEY) -> int:
    """Counter-based 64-bit seed for stream ``index`` under ``master_seed``."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(namespace, index))
    return int(seq.generate_state(1, np.uint64)[0])


def transmit(X, sigma0_sq: float, rng: np.random.Generator) -> np.ndarray:
    """Y_j = sum_i X_ij + Z_j with Z_j ~ N(0, sigma0_sq). Accepts (n, s) or (trials, n, s)."""
    if sigma0_sq < 0:
        raise ValueError("sigma0_sq must be nonnegative")
    X = np.asarray(X, dtype=float)
    if X.ndim not in (2, 3):
        raise ValueError("X must be an (n, s) matrix or a (trials, n, s) stack")
    y = X.sum(axis=-2)
    if sigma0_sq > 0:
        y = y + math.sqrt(sigma0_sq) * rng.standard_normal(y.shape)
    return y


def _simulate(model: ModelSpec, theta: np.ndarray, scheme: Scheme, trials: int,
              rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    cfg = scheme.config
    users = sample_batch(model, theta, cfg.n, trials, rng)
    x = scheme.encoder.apply(users)
    if scheme.sigma_pri_sq > 0:
        x = x + math.sqrt(scheme.sigma_pri_sq) * rng.standard_normal(x.shape)
    y = transmit(x, cfg.sigma0_sq, rng)
    theta_hat = scheme.estimator(y)
    return theta_hat, np.sum((theta_hat - theta) ** 2, axis=-1)


def run_trial(model: ModelSpec, theta, scheme: Scheme, seed: int) -> TrialResult:
    theta = validate_theta(model, theta, scheme.config.d)
    rng = np.random.default_rng(seed)
    theta_hat, err = _simulate(model, theta, scheme, 1, rng)
    return TrialResult(theta_hat[0], float(err[0]), int(seed))


def batch_size(n: int, d: int) -> int:
    # depends on the problem size only, never on worker count
    return max(1, min(8192, _BATCH_ELEMENTS // (n * d)))


def mc_risk(model: ModelSpec, theta, scheme: Scheme, trials: int,
            master_seed: int | None = None, workers: int = 1) -> McEstimate:
    """Monte Carlo mean squared error with its standard error.

    Trials run in fixed-size batches; batch b draws from a stream seeded by
    (master_seed, b), and per-trial errors are reduced in trial order, so the
    result does not depend on ``workers``.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    cfg = scheme.config
    theta = validate_theta(model, theta, cfg.d)
    master_seed = cfg.master_seed if master_seed is None else master_seed
    size = batch_size(cfg.n, cfg.d)
    counts = [min(size, trials - start) for start in range(0, trials, size)]

    def one_batch(b: int) -> np.ndarray:
        rng = np.random.default_rng(derive_seed(master_seed, b, _BATCH_KEY))
        return _simulate(model, theta, scheme, counts[b], rng)[1]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one_batch, range(len(counts))))
    else:
        parts = [one_batch(b) for b in range(len(counts))]
    errors = np.concatenate(parts)
    return McEstimate(float(errors.mean()), float(errors.std(ddof=1) / math.sqrt(trials)), trials)
