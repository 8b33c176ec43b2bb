"""Minimax-optimal over-the-air encoders and affine estimators.

Every user applies the same encoder; the receiver sees the sum of all
transmissions plus channel noise and applies ``theta_hat = alpha * Y + beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .model import (
    GaussianLocation,
    ModelSpec,
    ProductBernoulli,
    SparseBernoulli,
    SystemConfig,
    validate_theta,
)
from .privacy import calibrate_sigma_pri

LOW_NOISE = "low-noise"
HIGH_NOISE = "high-noise"
LINEAR = "linear"


@dataclass(frozen=True)
class LinearGain:
    gain: float
    local_noise_var: float = 0.0

    def __post_init__(self):
        if self.local_noise_var < 0:
            raise ValueError("local_noise_var must be nonnegative")

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.gain * u


@dataclass(frozen=True)
class TwoLevel:
    level_lo: float
    level_hi: float
    local_noise_var: float = 0.0

    def __post_init__(self):
        if not self.level_hi > self.level_lo:
            raise ValueError("level_hi must exceed level_lo")
        if self.local_noise_var < 0:
            raise ValueError("local_noise_var must be nonnegative")

    @property
    def center(self) -> float:
        return (self.level_hi - self.level_lo) / 2

    @property
    def offset(self) -> float:
        return (self.level_hi + self.level_lo) / 2

    def apply(self, u: np.ndarray) -> np.ndarray:
        if not np.all((u == 0) | (u == 1)):
            raise ValueError("two-level encoder expects binary input")
        return np.where(u == 1, self.level_hi, self.level_lo)


EncoderSpec = Union[LinearGain, TwoLevel]


@dataclass(frozen=True)
class AffineEstimator:
    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("estimator coefficients must be finite")

    def __call__(self, y):
        return self.alpha * np.asarray(y, dtype=float) + self.beta


@dataclass(frozen=True)
class Scheme:
    encoder: EncoderSpec
    estimator: AffineEstimator
    family: str
    config: SystemConfig
    branch: str = LINEAR

    @property
    def sigma_pri_sq(self) -> float:
        return self.encoder.local_noise_var


def gaussian_scheme(cfg: SystemConfig, model: GaussianLocation) -> Scheme:
    if not isinstance(model, GaussianLocation):
        raise TypeError("gaussian_scheme needs a GaussianLocation model")
    spread = model.B**2 + model.sigma_sq
    gain = math.sqrt(cfg.P / spread)
    alpha = math.sqrt(spread / cfg.P) / cfg.n
    return Scheme(LinearGain(gain), AffineEstimator(alpha, 0.0), "gaussian", cfg, LINEAR)


def noise_branch(cfg: SystemConfig) -> str:
    """Which of the two closed-form regimes the two-level schemes are in.

    The boundary ``sigma0^2 = n^{3/2} P`` is where the quadratic coefficient of
    the risk vanishes at the unconstrained minimizer; it is the same for the
    product and sparse models once the levels are power-tight.
    """
    return LOW_NOISE if cfg.sigma0_sq <= cfg.n**1.5 * cfg.P else HIGH_NOISE


def bernoulli_alpha(cfg: SystemConfig, branch: str | None = None) -> float:
    n, P, s0 = cfg.n, cfg.P, cfg.sigma0_sq
    branch = branch or noise_branch(cfg)
    if branch == LOW_NOISE:
        return 1 / (2 * math.sqrt(n * P) * (math.sqrt(n) + 1))
    return n * math.sqrt(P) / (2 * (s0 + n * n * P))


def bernoulli_scheme(cfg: SystemConfig) -> Scheme:
    root_p = math.sqrt(cfg.P)
    branch = noise_branch(cfg)
    est = AffineEstimator(bernoulli_alpha(cfg, branch), 0.5)
    return Scheme(TwoLevel(-root_p, root_p), est, "bernoulli", cfg, branch)


def sparse_levels(d: int, m: int, P: float) -> tuple[float, float]:
    """Power-tight levels (A, B) for m/d <= 1/2."""
    return -math.sqrt(m / (d - m) * P), math.sqrt((d - m) / m * P)


def sparse_alpha(cfg: SystemConfig, m: int, branch: str | None = None) -> float:
    n, d, P, s0 = cfg.n, cfg.d, cfg.P, cfg.sigma0_sq
    ratio_sum = math.sqrt((d - m) / m) + math.sqrt(m / (d - m))
    branch = branch or noise_branch(cfg)
    if branch == LOW_NOISE:
        return 1 / (math.sqrt(n * P) * ratio_sum * (math.sqrt(n) + 1))
    k = m * (d - m)
    return k * n * math.sqrt(P) * ratio_sum / (d * d * s0 + k * n * n * P * ratio_sum**2)


def sparse_beta(cfg: SystemConfig, m: int, alpha: float) -> float:
    n, d, P = cfg.n, cfg.d, cfg.P
    hi_ratio, lo_ratio = math.sqrt((d - m) / m), math.sqrt(m / (d - m))
    centered = (1 - 2 * m / d) * n * math.sqrt(P) / 2 * (hi_ratio + lo_ratio) * alpha + m / d
    return centered - n * math.sqrt(P) * (hi_ratio - lo_ratio) / 2 * alpha


def sparse_scheme(cfg: SystemConfig, m: int) -> Scheme:
    SparseBernoulli(m).check_dim(cfg.d)
    if 2 * m >= cfg.d:
        return replace(bernoulli_scheme(cfg), family="sparse")
    lo, hi = sparse_levels(cfg.d, m, cfg.P)
    branch = noise_branch(cfg)
    alpha = sparse_alpha(cfg, m, branch)
    est = AffineEstimator(alpha, sparse_beta(cfg, m, alpha))
    return Scheme(TwoLevel(lo, hi), est, "sparse", cfg, branch)


def optimal_scheme(model: ModelSpec, cfg: SystemConfig) -> Scheme:
    if isinstance(model, GaussianLocation):
        return gaussian_scheme(cfg, model)
    if isinstance(model, SparseBernoulli):
        return sparse_scheme(cfg, model.m)
    if isinstance(model, ProductBernoulli):
        return bernoulli_scheme(cfg)
    raise TypeError(f"unknown model {model!r}")


def robustify(model: ModelSpec, cfg: SystemConfig, epsilon: float) -> Scheme:
    """Optimal scheme for the effective (power, noise) pair plus local Gaussian noise.

    The returned scheme keeps the caller's ``cfg`` as its config; the encoder
    carries the calibrated local noise variance.
    """
    sigma_pri_sq = calibrate_sigma_pri(cfg, epsilon)
    base = optimal_scheme(model, cfg.effective(sigma_pri_sq))
    encoder = replace(base.encoder, local_noise_var=sigma_pri_sq)
    return replace(base, encoder=encoder, config=cfg)


def effective_config(scheme: Scheme) -> SystemConfig:
    return scheme.config.effective(scheme.sigma_pri_sq)


def encode(scheme: Scheme, u, rng: np.random.Generator | None = None) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (scheme.config.d,):
        raise ValueError(f"sample has shape {u.shape}, expected ({scheme.config.d},)")
    x = scheme.encoder.apply(u)
    if scheme.sigma_pri_sq > 0:
        if rng is None:
            raise ValueError("an rng is required when local noise is enabled")
        x = x + math.sqrt(scheme.sigma_pri_sq) * rng.standard_normal(x.shape)
    return x


def estimate(scheme: Scheme, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != scheme.config.s:
        raise ValueError(f"received vector has length {y.shape[-1]}, expected {scheme.config.s}")
    return scheme.estimator(y)


def power_audit(scheme: Scheme, model: ModelSpec, theta) -> float:
    """Exact per-user average power (1/s) sum_j E[X_ij^2] at ``theta``."""
    theta = validate_theta(model, theta, scheme.config.d)
    enc = scheme.encoder
    d = theta.shape[0]
    if isinstance(enc, LinearGain):
        if not isinstance(model, GaussianLocation):
            raise TypeError("linear-gain audit needs the Gaussian model")
        signal = enc.gain**2 * (float(theta @ theta) / d + model.sigma_sq)
    else:
        signal = float(np.sum(theta * enc.level_hi**2 + (1 - theta) * enc.level_lo**2)) / d
    return signal + enc.local_noise_var


def worst_power_theta(model: ModelSpec, d: int) -> np.ndarray:
    """A parameter at which the optimal schemes use their full power budget."""
    if isinstance(model, GaussianLocation):
        return np.full(d, model.B)
    if isinstance(model, SparseBernoulli):
        theta = np.zeros(d)
        theta[: model.m] = 1.0
        return theta
    return np.ones(d)


def equivalent_centered(level_lo: float, level_hi: float, estimator: AffineEstimator,
                        n: int) -> tuple[float, AffineEstimator]:
    """Map a two-level scheme to the symmetric one with levels +-C.

    The symmetric scheme's output is the original output minus
    ``n (A + B) / 2``, so the estimator absorbs that shift into beta.
    """
    if not level_hi > level_lo:
        raise ValueError("level_hi must exceed level_lo")
    center = (level_hi - level_lo) / 2
    shift = n * (level_lo + level_hi) / 2
    return center, AffineEstimator(estimator.alpha, estimator.beta + estimator.alpha * shift)
