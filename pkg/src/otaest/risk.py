"""Closed-form minimax risks, exact per-parameter risks and worst-case search."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    GaussianLocation,
    ModelSpec,
    ProductBernoulli,
    SparseBernoulli,
    SystemConfig,
    theta_sum_bound,
    validate_theta,
)
from .privacy import calibrate_sigma_pri
from .schemes import (
    LINEAR,
    LOW_NOISE,
    LinearGain,
    Scheme,
    equivalent_centered,
    noise_branch,
)


@dataclass(frozen=True)
class RiskReport:
    closed_form: float
    branch: str
    worst_theta: np.ndarray
    mc_mean: float | None = None
    mc_stderr: float | None = None

    def __post_init__(self):
        if self.closed_form < 0:
            raise ValueError("risk must be nonnegative")


# -- closed forms -----------------------------------------------------------

def gaussian_minimax_risk(cfg: SystemConfig, model: GaussianLocation) -> float:
    n, d = cfg.n, cfg.d
    snr_term = cfg.sigma0_sq / (n * cfg.P) * (1 + model.B**2 / model.sigma_sq)
    return d * model.sigma_sq / n * (1 + snr_term)


def bernoulli_minimax_risk(cfg: SystemConfig) -> float:
    n, d, P, s0 = cfg.n, cfg.d, cfg.P, cfg.sigma0_sq
    if noise_branch(cfg) == LOW_NOISE:
        return d / (4 * (math.sqrt(n) + 1) ** 2) * (1 + s0 / (n * P))
    return d / 4 / (1 + n * (n * P / s0))


def sparse_minimax_risk(cfg: SystemConfig, m: int) -> float:
    SparseBernoulli(m).check_dim(cfg.d)
    n, d, P, s0 = cfg.n, cfg.d, cfg.P, cfg.sigma0_sq
    if 2 * m >= d:
        return bernoulli_minimax_risk(cfg)
    ratio_sq = (math.sqrt((d - m) / m) + math.sqrt(m / (d - m))) ** 2
    if noise_branch(cfg) == LOW_NOISE:
        return m / (math.sqrt(n) + 1) ** 2 * ((d - m) / d + d * s0 / (m * n * P * ratio_sq))
    return m / (d / (d - m) + n * (m * n * P * ratio_sq) / (d * s0))


def minimax_risk(model: ModelSpec, cfg: SystemConfig) -> float:
    if isinstance(model, GaussianLocation):
        return gaussian_minimax_risk(cfg, model)
    if isinstance(model, SparseBernoulli):
        return sparse_minimax_risk(cfg, model.m)
    if isinstance(model, ProductBernoulli):
        return bernoulli_minimax_risk(cfg)
    raise TypeError(f"unknown model {model!r}")


def minimax_branch(model: ModelSpec, cfg: SystemConfig) -> str:
    if isinstance(model, GaussianLocation):
        return LINEAR
    return noise_branch(cfg)


def robust_risk(model: ModelSpec, cfg: SystemConfig, epsilon: float) -> float:
    """Minimax risk of the epsilon-robust scheme: the base risk at effective (P, noise)."""
    sigma_pri_sq = calibrate_sigma_pri(cfg, epsilon)
    return minimax_risk(model, cfg.effective(sigma_pri_sq))


# -- exact risks --------------------------------------------------------------

def two_level_coefficients(C, alpha, beta, n: int, d: int, noise_var: float):
    """Coefficients (quad, lin, const) with risk = quad*sum(t^2) + lin*sum(t) + const."""
    nca = n * C * alpha
    quad = 4 * (n * n - n) * C**2 * alpha**2 - 4 * nca + 1
    lin = (4 * n * C**2 * alpha**2 + 4 * nca * beta - 2 * beta
           - 4 * n * n * C**2 * alpha**2 + 2 * nca)
    const = d * (alpha**2 * noise_var + (beta - nca) ** 2)
    return quad, lin, const


def exact_risk_two_level(C: float, alpha: float, beta: float, theta, cfg: SystemConfig,
                         local_noise_var: float = 0.0) -> float:
    """E||theta_hat - theta||^2 for levels +-C and theta_hat = alpha Y + beta.

    ``local_noise_var`` is per-user Gaussian noise added before transmission;
    it adds ``n * local_noise_var`` to the channel noise.
    """
    theta = np.asarray(theta, dtype=float)
    noise = cfg.sigma0_sq + cfg.n * local_noise_var
    quad, lin, const = two_level_coefficients(C, alpha, beta, cfg.n, theta.shape[0], noise)
    return float(quad * (theta @ theta) + lin * theta.sum() + const)


def exact_risk_levels(level_lo: float, level_hi: float, alpha: float, beta: float, theta,
                      cfg: SystemConfig, local_noise_var: float = 0.0) -> float:
    """Exact risk for arbitrary levels (A for 0, B for 1) from first and second moments."""
    theta = np.asarray(theta, dtype=float)
    n = cfg.n
    gap = level_hi - level_lo
    mean = alpha * n * (level_lo + gap * theta) + beta
    var = alpha**2 * (n * gap**2 * theta * (1 - theta) + n * local_noise_var + cfg.sigma0_sq)
    return float(np.sum(var + (mean - theta) ** 2))


def exact_risk_linear(gain: float, alpha: float, theta, cfg: SystemConfig,
                      model: GaussianLocation, local_noise_var: float = 0.0) -> float:
    """Exact risk of x = gain*u (+ local noise) with theta_hat = alpha Y, Gaussian data."""
    theta = np.asarray(theta, dtype=float)
    n, d = cfg.n, theta.shape[0]
    bias = (alpha * gain * n - 1) ** 2 * float(theta @ theta)
    var = d * alpha**2 * (n * gain**2 * model.sigma_sq + n * local_noise_var + cfg.sigma0_sq)
    return bias + var


def exact_risk_gaussian(cfg: SystemConfig, model: GaussianLocation, theta) -> float:
    theta = validate_theta(model, theta, cfg.d)
    spread = model.B**2 + model.sigma_sq
    return exact_risk_linear(math.sqrt(cfg.P / spread), math.sqrt(spread / cfg.P) / cfg.n,
                             theta, cfg, model)


# -- worst case over the parameter space --------------------------------------------------

def sup_risk_two_level(C, alpha, beta, n: int, d: int, noise_var: float, t_max: float):
    """Vectorized sup over {theta in [0,1]^d, sum(theta) <= t_max} of the exact risk.

    Convex case (quad >= 0): the sup sits at a vertex of the polytope, i.e. k ones
    (k = 0 or floor(t_max)) or floor(t_max) ones plus one fractional entry.
    Concave case: the sup over a fixed sum is at the all-equal theta, which
    leaves a 1-D quadratic in the sum.
    """
    quad, lin, const = two_level_coefficients(np.asarray(C, float), np.asarray(alpha, float),
                                              np.asarray(beta, float), n, d, noise_var)
    k = math.floor(t_max + 1e-12)
    frac = t_max - k if t_max - k > 1e-12 else 0.0
    vertex = np.maximum(0.0, (quad + lin) * k)
    if frac:
        vertex = np.maximum(vertex, quad * (k + frac**2) + lin * (k + frac))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_star = np.clip(np.where(quad < 0, -lin * d / (2 * quad), 0.0), 0.0, t_max)
    concave = quad * t_star**2 / d + lin * t_star
    return const + np.where(quad >= 0, vertex, concave)


def worst_case_theta(C: float, alpha: float, beta: float, cfg: SystemConfig,
                     t_max: float | None = None,
                     local_noise_var: float = 0.0) -> tuple[np.ndarray, float]:
    """An explicit maximizing theta and the sup risk (t_max defaults to d)."""
    d, n = cfg.d, cfg.n
    t_max = float(d if t_max is None else t_max)
    if not 0 <= t_max <= d:
        raise ValueError("t_max must lie in [0, d]")
    noise = cfg.sigma0_sq + n * local_noise_var
    quad, lin, const = two_level_coefficients(C, alpha, beta, n, d, noise)

    if quad >= 0:
        k = math.floor(t_max + 1e-12)
        frac = t_max - k if t_max - k > 1e-12 else 0.0
        candidates = [np.zeros(d)]
        full = np.zeros(d)
        full[:k] = 1.0
        candidates.append(full)
        if frac:
            part = full.copy()
            part[k] = frac
            candidates.append(part)
    else:
        t_star = min(max(-lin * d / (2 * quad), 0.0), t_max)
        candidates = [np.full(d, t_star / d)]

    values = [quad * (t @ t) + lin * t.sum() + const for t in candidates]
    best = int(np.argmax(values))
    return candidates[best], float(values[best])


# -- scheme-level helpers -----------------------------------------------------

def scheme_exact_risk(scheme: Scheme, model: ModelSpec, theta) -> float:
    cfg = scheme.config
    theta = validate_theta(model, theta, cfg.d)
    enc = scheme.encoder
    if isinstance(enc, LinearGain):
        return exact_risk_linear(enc.gain, scheme.estimator.alpha, theta, cfg, model,
                                 enc.local_noise_var)
    C, est = equivalent_centered(enc.level_lo, enc.level_hi, scheme.estimator, cfg.n)
    return exact_risk_two_level(C, est.alpha, est.beta, theta, cfg, enc.local_noise_var)


def scheme_worst_case(scheme: Scheme, model: ModelSpec) -> tuple[np.ndarray, float]:
    """Worst-case parameter and sup risk for any scheme built here."""
    cfg = scheme.config
    enc = scheme.encoder
    if isinstance(enc, LinearGain):
        # risk grows with ||theta|| unless the gain inverts exactly, so the sphere is worst
        theta = np.full(cfg.d, model.B)
        return theta, scheme_exact_risk(scheme, model, theta)
    C, est = equivalent_centered(enc.level_lo, enc.level_hi, scheme.estimator, cfg.n)
    return worst_case_theta(C, est.alpha, est.beta, cfg, theta_sum_bound(model, cfg.d),
                            enc.local_noise_var)

