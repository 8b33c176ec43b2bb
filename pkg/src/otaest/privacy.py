"""Mutual-information leakage of one user's data through the channel output.

All quantities are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import GaussianLocation, SystemConfig


class UnboundedInformation(ArithmeticError):
    """The leakage is infinite (no noise separates the user from the output)."""


@dataclass(frozen=True)
class PrivacyReport:
    mi_bound: float | None = None
    mi_exact: float | None = None
    cmi_bound: float | None = None
    epsilon_target: float | None = None
    sigma_pri_sq: float = 0.0

    def __post_init__(self):
        if self.mi_exact is not None and self.mi_bound is not None:
            if not 0 <= self.mi_exact <= self.mi_bound * (1 + 1e-12):
                raise ValueError("expected 0 <= mi_exact <= mi_bound")
        if self.cmi_bound is not None and self.epsilon_target is not None:
            if self.cmi_bound > self.epsilon_target * (1 + 1e-12):
                raise ValueError("calibrated CMI bound exceeds its target")


def to_bits(nats: float) -> float:
    return nats / math.log(2)


def _interference_ratio(cfg: SystemConfig, model: GaussianLocation) -> float:
    # channel noise in units of one user's data-noise power, plus n-1 co-users
    return cfg.n - 1 + cfg.sigma0_sq * (model.B**2 + model.sigma_sq) / (cfg.P * model.sigma_sq)


def gaussian_mi_bound(cfg: SystemConfig, model: GaussianLocation) -> float:
    denom = _interference_ratio(cfg, model)
    if denom <= 0:
        raise UnboundedInformation("single user over a noiseless channel")
    return cfg.d / 2 / denom


def gaussian_mi_exact(cfg: SystemConfig, model: GaussianLocation) -> float:
    """I(Y; U_i) for the linear-gain scheme: d independent Gaussian channels.

    Per channel use the user's signal has variance g^2 sigma^2 and the rest of
    the output (co-users' data noise plus channel noise) has variance
    sigma0^2 + (n - 1) g^2 sigma^2 with g^2 = P / (B^2 + sigma^2).
    """
    denom = _interference_ratio(cfg, model)
    if denom <= 0:
        raise UnboundedInformation("single user over a noiseless channel")
    return cfg.d / 2 * math.log1p(1 / denom)


def _log_binom_pmf(k: np.ndarray, n: int, theta: float) -> np.ndarray:
    log_coef = math.lgamma(n + 1) - np.array([math.lgamma(i + 1) + math.lgamma(n - i + 1) for i in k])
    return log_coef + k * math.log(theta) + (n - k) * math.log1p(-theta)


def bernoulli_mi_exact(n: int, theta_j: float) -> float:
    """I(S; U_i) for one coordinate, S the noiseless count of ones among n users.

    Sums over the outcomes of S given the user's bit. Multiply by d for
    vector data.
    """
    if not 0 <= theta_j <= 1:
        raise ValueError(f"theta_j must lie in [0, 1], got {theta_j}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if theta_j in (0.0, 1.0):
        return 0.0
    counts = np.arange(n + 1)
    log_p = _log_binom_pmf(counts, n, theta_j)
    log_rest = _log_binom_pmf(np.arange(n), n - 1, theta_j)  # the other n-1 users
    # given U_i = 1, S = 1 + rest; given U_i = 0, S = rest
    term_one = np.exp(log_rest) * (log_rest - log_p[1:])
    term_zero = np.exp(log_rest) * (log_rest - log_p[:-1])
    return float(theta_j * term_one.sum() + (1 - theta_j) * term_zero.sum())


def bernoulli_mi_bound(cfg: SystemConfig) -> float:
    return cfg.d / cfg.n


def calibrate_sigma_pri(cfg: SystemConfig, epsilon: float) -> float:
    """Local noise variance that caps the conditional leakage at ``epsilon``."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    s = cfg.s
    return max((s * cfg.P - 2 * epsilon * cfg.sigma0_sq) / (2 * epsilon * cfg.n + s), 0.0)


def robust_cmi_bound(cfg: SystemConfig, sigma_pri_sq: float) -> float:
    """Capacity bound on I(Y; U_i | U_-i) with local noise of this variance."""
    if not 0 <= sigma_pri_sq < cfg.P:
        raise ValueError("need 0 <= sigma_pri_sq < P")
    noise = cfg.n * sigma_pri_sq + cfg.sigma0_sq
    if noise == 0:
        raise UnboundedInformation("no local or channel noise")
    return cfg.s / 2 * math.log1p((cfg.P - sigma_pri_sq) / noise)


@dataclass(frozen=True)
class VlnVCheck:
    lhs: float
    rhs: float
    holds: bool


def vlnv_bound_check(support, probs, atol: float = 1e-12) -> VlnVCheck:
    """Compare E[V ln V] with mu ln((omega^2 + mu^2) / mu) for a discrete V >= 0."""
    v = np.asarray(support, dtype=float)
    p = np.asarray(probs, dtype=float)
    if v.shape != p.shape or v.ndim != 1:
        raise ValueError("support and probs must be 1-D and the same length")
    if np.any(v < 0) or np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-9):
        raise ValueError("invalid distribution")
    mu = float(p @ v)
    if mu <= 0:
        raise ValueError("mean must be positive")
    second = float(p @ v**2)  # omega^2 + mu^2
    safe = np.where(v > 0, v, 1.0)
    lhs = float(np.sum(p * v * np.log(safe)))
    rhs = mu * math.log(second / mu)
    return VlnVCheck(lhs, rhs, lhs <= rhs + atol)


def bernoulli_step_bound_holds(theta_j: float, n: int) -> bool:
    """theta ln(1 + (1 - theta)/(theta n)) <= (1 - theta)/n for theta in (0, 1]."""
    lhs = theta_j * math.log1p((1 - theta_j) / (theta_j * n))
    return lhs <= (1 - theta_j) / n + 1e-15
