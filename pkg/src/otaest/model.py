"""Parameter spaces, validation and i.i.d. sampling for the three data models."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

# Relative slack on norm/sum constraints; boundary thetas are the worst cases.
THETA_RTOL = 1e-9


class ThetaError(ValueError):
    """Raised when a parameter vector is outside the model's parameter space.

    ``constraint`` names the failed check: ``"dimension"``, ``"norm"``,
    ``"box"`` or ``"sum"``.
    """

    def __init__(self, constraint: str, message: str):
        super().__init__(message)
        self.constraint = constraint


@dataclass(frozen=True)
class SystemConfig:
    n: int
    d: int
    P: float
    sigma0_sq: float
    s: int | None = None
    master_seed: int = 0

    def __post_init__(self):
        if self.s is None:
            object.__setattr__(self, "s", self.d)
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be an integer >= 1, got {self.d}")
        if self.s != self.d:
            raise ValueError(f"only s = d channel uses are supported (s={self.s}, d={self.d})")
        if not self.P > 0:
            raise ValueError(f"P must be positive, got {self.P}")
        if not self.sigma0_sq >= 0:
            raise ValueError(f"sigma0_sq must be nonnegative, got {self.sigma0_sq}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 bits")

    def effective(self, sigma_pri_sq: float) -> "SystemConfig":
        """Config seen by the base scheme once local noise of this variance is added.

        Power drops to ``P - sigma_pri_sq`` and the aggregate noise at the
        receiver grows to ``sigma0_sq + n * sigma_pri_sq``.
        """
        if sigma_pri_sq == 0:
            return self
        return replace(
            self,
            P=self.P - sigma_pri_sq,
            sigma0_sq=self.sigma0_sq + self.n * sigma_pri_sq,
        )


@dataclass(frozen=True)
class GaussianLocation:
    sigma_sq: float
    B: float
    family = "gaussian"

    def __post_init__(self):
        if not self.sigma_sq > 0:
            raise ValueError(f"sigma_sq must be positive, got {self.sigma_sq}")
        if not self.B > 0:
            raise ValueError(f"B must be positive, got {self.B}")


@dataclass(frozen=True)
class ProductBernoulli:
    family = "bernoulli"


@dataclass(frozen=True)
class SparseBernoulli:
    m: int
    family = "sparse"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be an integer >= 1, got {self.m}")

    def check_dim(self, d: int) -> None:
        if self.m > d:
            raise ValueError(f"m must satisfy 1 <= m <= d, got m={self.m}, d={d}")


ModelSpec = Union[GaussianLocation, ProductBernoulli, SparseBernoulli]

FAMILIES = ("gaussian", "bernoulli", "sparse")


def theta_sum_bound(model: ModelSpec, d: int) -> float:
    """Largest admissible sum of coordinates for the Bernoulli families."""
    if isinstance(model, SparseBernoulli):
        model.check_dim(d)
        return float(model.m)
    return float(d)


def validate_theta(model: ModelSpec, theta, d: int | None = None) -> np.ndarray:
    """Check that ``theta`` lies in the parameter space of ``model``.

    Returns the parameter as a float array. Raises :class:`ThetaError` naming
    the violated constraint otherwise.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or (d is not None and theta.shape[0] != d):
        raise ThetaError("dimension", f"theta has shape {theta.shape}, expected ({d},)")
    if not np.all(np.isfinite(theta)):
        raise ThetaError("box", "theta must be finite")
    dim = theta.shape[0]

    if isinstance(model, GaussianLocation):
        radius = model.B * math.sqrt(dim)
        norm = float(np.linalg.norm(theta))
        if norm > radius * (1 + THETA_RTOL):
            raise ThetaError("norm", f"||theta|| = {norm:.6g} exceeds B*sqrt(d) = {radius:.6g}")
        return theta

    if np.any(theta < 0) or np.any(theta > 1):
        raise ThetaError("box", "Bernoulli parameters must lie in [0, 1]")
    if isinstance(model, SparseBernoulli):
        model.check_dim(dim)
        total = float(theta.sum())
        if total > model.m * (1 + THETA_RTOL):
            raise ThetaError("sum", f"sum(theta) = {total:.6g} exceeds m = {model.m}")
    return theta


def sample_users(model: ModelSpec, theta, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an ``n x d`` matrix whose rows are i.i.d. samples from p_theta."""
    theta = validate_theta(model, theta)
    if n < 1:
        raise ValueError("n must be >= 1")
    return sample_batch(model, theta, n, 1, rng)[0]


def sample_batch(model: ModelSpec, theta: np.ndarray, n: int, trials: int,
                 rng: np.random.Generator) -> np.ndarray:
    # shape (trials, n, d); theta assumed already validated
    shape = (trials, n, theta.shape[0])
    if isinstance(model, GaussianLocation):
        return theta + math.sqrt(model.sigma_sq) * rng.standard_normal(shape)
    return (rng.random(shape) < theta).astype(float)
