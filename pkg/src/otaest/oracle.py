"""Brute-force checks of the optimal affine estimators, levels and supporting inequalities.

Grid searches only ever see the exact risk and the worst-case reduction in
:mod:`otaest.risk`; they never call the closed-form minimax formulas they are
compared against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import SystemConfig
from .privacy import vlnv_bound_check
from .risk import (
    exact_risk_levels,
    exact_risk_two_level,
    sup_risk_two_level,
    two_level_coefficients,
    worst_case_theta,
)
from .schemes import AffineEstimator, bernoulli_scheme, equivalent_centered, sparse_levels, sparse_scheme


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    steps: int = 201
    refine_rounds: int = 3
    zoom: float = 10.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("grid needs lo < hi")
        if self.steps < 3:
            raise ValueError("grid needs at least 3 steps")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be nonnegative")
        if not self.zoom > 1:
            raise ValueError("zoom must exceed 1")

    @property
    def resolution(self) -> float:
        """Spacing of the final refined grid."""
        return (self.hi - self.lo) / (self.steps - 1) / self.zoom**self.refine_rounds

    def points(self, center: float | None = None, round_: int = 0) -> np.ndarray:
        width = (self.hi - self.lo) / self.zoom**round_
        if center is None:
            return np.linspace(self.lo, self.hi, self.steps)
        return np.linspace(center - width / 2, center + width / 2, self.steps)


@dataclass
class OracleVerdict:
    name: str
    analytic: dict
    oracle: dict
    gap: float
    tolerance: float
    passed: bool = field(init=False)
    note: str = ""

    def __post_init__(self):
        self.passed = bool(self.gap <= self.tolerance)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


# -- affine estimator search ---------------------------------------------------

def grid_search_affine(cfg: SystemConfig, C: float, t_max: float,
                       alpha_grid: GridSpec | None = None,
                       beta_grid: GridSpec | None = None,
                       local_noise_var: float = 0.0) -> tuple[float, float, float]:
    """Minimize the worst-case exact risk over (alpha, beta) for levels +-C.

    Each round evaluates the full alpha x beta grid, then zooms both axes
    around the incumbent. Ties go to the lowest alpha, then the lowest beta.
    """
    if not C > 0:
        raise ValueError("C must be positive")
    alpha_grid = alpha_grid or GridSpec(0.0, 1 / (cfg.n * C))
    beta_grid = beta_grid or GridSpec(0.0, 1.0)
    noise = cfg.sigma0_sq + cfg.n * local_noise_var
    rounds = max(alpha_grid.refine_rounds, beta_grid.refine_rounds)

    a_c = b_c = None
    best = math.inf
    for r in range(rounds + 1):
        alphas = alpha_grid.points(a_c, min(r, alpha_grid.refine_rounds))
        betas = beta_grid.points(b_c, min(r, beta_grid.refine_rounds))
        A, Bt = np.meshgrid(alphas, betas, indexing="ij")
        sup = sup_risk_two_level(C, A, Bt, cfg.n, cfg.d, noise, t_max)
        idx = int(np.argmin(sup))
        i, j = np.unravel_index(idx, sup.shape)
        if sup[i, j] <= best:
            best = float(sup[i, j])
            a_c, b_c = float(alphas[i]), float(betas[j])
    return a_c, b_c, best


def analytic_alpha(n: int, C: float, sigma0_sq: float, d: int, m: int) -> float:
    root = 1 / (2 * math.sqrt(n) * C * (math.sqrt(n) + 1))
    if 2 * m >= d:
        other = n * C / (2 * (sigma0_sq + n * n * C * C))
    else:
        k = m * (d - m)
        other = 2 * k * n * C / (d * d * sigma0_sq + 4 * k * n * n * C * C)
    return min(root, other)


def analytic_beta(n: int, C: float, alpha: float, d: int, m: int) -> float:
    if 2 * m >= d:
        return 0.5
    return (1 - 2 * m / d) * n * C * alpha + m / d


def flat_risk_alpha(n: int, C: float) -> float:
    return 1 / (2 * math.sqrt(n) * C * (math.sqrt(n) + 1))


def verify_affine_optimum(cfg: SystemConfig, C: float, m: int, alpha_scale: float = 1.0,
                          rtol: float = 0.01) -> OracleVerdict:
    """Grid optimum for levels +-C versus the analytic (alpha*, beta*) on the centered problem.

    ``alpha_scale`` perturbs the analytic alpha (negative control).
    """
    n, d = cfg.n, cfg.d
    alpha = analytic_alpha(n, C, cfg.sigma0_sq, d, m) * alpha_scale
    beta = analytic_beta(n, C, alpha, d, m)
    a_o, b_o, sup_o = grid_search_affine(cfg, C, float(m))
    _, sup_a = worst_case_theta(C, alpha, beta, cfg, float(m))
    gap = max(_rel(alpha, a_o), _rel(beta, b_o))
    return OracleVerdict(
        f"affine-optimum n={n} d={d} m={m} C={C:.4g} s0={cfg.sigma0_sq:g}",
        {"alpha": alpha, "beta": beta, "sup_risk": sup_a},
        {"alpha": a_o, "beta": b_o, "sup_risk": sup_o},
        gap, rtol,
    )


def verify_scheme_optimum(cfg: SystemConfig, m: int | None = None, alpha_scale: float = 1.0,
                          rtol: float = 0.01) -> OracleVerdict:
    """Grid optimum versus the constructed product/sparse scheme, in uncentered coordinates."""
    scheme = bernoulli_scheme(cfg) if m is None else sparse_scheme(cfg, m)
    t_max = cfg.d if m is None else m
    enc, est = scheme.encoder, scheme.estimator
    alpha = est.alpha * alpha_scale
    C, centered = equivalent_centered(enc.level_lo, enc.level_hi, AffineEstimator(alpha, est.beta), cfg.n)
    a_o, b_o_centered, sup_o = grid_search_affine(cfg, C, float(t_max))
    # map the oracle's centered offset back through the level shift
    b_o = b_o_centered - a_o * cfg.n * enc.offset
    _, sup_a = worst_case_theta(C, centered.alpha, centered.beta, cfg, float(t_max))
    gap = max(_rel(alpha, a_o), _rel(est.beta, b_o), _rel(sup_a, sup_o))
    label = "product" if m is None else f"sparse m={m}"
    return OracleVerdict(
        f"scheme-optimum {label} n={cfg.n} d={cfg.d} P={cfg.P:g} s0={cfg.sigma0_sq:g}",
        {"alpha": alpha, "beta": est.beta, "sup_risk": sup_a, "branch": scheme.branch},
        {"alpha": a_o, "beta": b_o, "sup_risk": sup_o},
        gap, rtol,
    )


# -- power-maximizing levels ---------------------------------------------------------

def _max_power(level_lo, level_hi, d: int, m: int):
    # power is linear in sum(theta), so the two ends of [0, m] bound it
    return np.maximum(level_lo**2, (m * level_hi**2 + (d - m) * level_lo**2) / d)


def verify_power_max_C(d: int, m: int, P: float, level_grid: GridSpec | None = None) -> OracleVerdict:
    """Search feasible level pairs for the largest half-gap C = (B - A)/2.

    The low level A is scanned on a refining grid; for each A the largest
    feasible B is found by bisection on the power constraint.
    """
    if not 1 <= m <= d:
        raise ValueError("need 1 <= m <= d")
    span = math.sqrt(d * P / m)
    level_grid = level_grid or GridSpec(-span, span, steps=201, refine_rounds=5)

    def best_high(lo_levels: np.ndarray) -> np.ndarray:
        ok = lo_levels**2 <= P
        lo_b = lo_levels.copy()
        hi_b = lo_levels + 2 * span + 1.0
        for _ in range(100):
            mid = (lo_b + hi_b) / 2
            feasible = _max_power(lo_levels, mid, d, m) <= P
            lo_b = np.where(feasible, mid, lo_b)
            hi_b = np.where(feasible, hi_b, mid)
        return np.where(ok, lo_b, np.nan)

    center = None
    best = (-math.inf, math.nan, math.nan)
    for r in range(level_grid.refine_rounds + 1):
        lows = level_grid.points(center, r)
        highs = best_high(lows)
        C = np.where(np.isnan(highs), -np.inf, (highs - lows) / 2)
        i = int(np.argmax(C))
        if C[i] >= best[0]:
            best = (float(C[i]), float(lows[i]), float(highs[i]))
            center = best[1]

    C_o, A_o, B_o = best
    if 2 * m >= d:
        A_a, B_a = -math.sqrt(P), math.sqrt(P)
    else:
        A_a, B_a = sparse_levels(d, m, P)
    C_a = (B_a - A_a) / 2
    tol = 10 * level_grid.resolution * max(1.0, math.sqrt(d / m))
    gap = max(abs(A_o - A_a), abs(B_o - B_a), abs(C_o - C_a))
    power_at_m = float(_max_power(np.array(A_o), np.array(B_o), d, m))
    return OracleVerdict(
        f"power-max-levels d={d} m={m} P={P:g}",
        {"A": A_a, "B": B_a, "C": C_a, "analytic_feasible": bool(_max_power(A_a, B_a, d, m) <= P * (1 + 1e-12))},
        {"A": A_o, "B": B_o, "C": C_o, "power_at_m": power_at_m},
        gap, tol,
    )


# -- structural identities ---------------------------------------------------------

def key_inequality_check(theta) -> bool:
    """(sum theta)^2 / d <= sum theta^2 <= sum theta for theta in [0,1]^d."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(theta > 1):
        raise ValueError("theta must lie in [0, 1]^d")
    total, sq = float(theta.sum()), float(theta @ theta)
    slack = 1e-12 * max(1.0, total)
    return total**2 / theta.size <= sq + slack and sq <= total + slack


def verify_branch_consistency(cfg: SystemConfig, C: float, m: int) -> OracleVerdict:
    """The min{.,.} scheme is never worse than the quadratic-case candidate.

    Also compares it against the high-alpha candidate alpha = 1/(2C(n - sqrt n)).
    """
    n, d = cfg.n, cfg.d
    a4 = analytic_alpha(n, C, cfg.sigma0_sq, d, m)
    a5 = flat_risk_alpha(n, C)
    _, sup4 = worst_case_theta(C, a4, analytic_beta(n, C, a4, d, m), cfg, float(m))
    _, sup5 = worst_case_theta(C, a5, analytic_beta(n, C, a5, d, m), cfg, float(m))
    oracle = {"sup_flat": sup5}
    note = ""
    if n > 1:
        a1 = 1 / (2 * C * (n - math.sqrt(n)))
        _, sup1 = worst_case_theta(C, a1, analytic_beta(n, C, a1, d, m), cfg, float(m))
        oracle["sup_high_alpha"] = sup1
        if sup1 <= sup4:
            note = "high-alpha candidate not worse"
        elif sup1 - sup4 <= 1e-9 * sup4:
            note = "high-alpha candidate within 1e-9"
    gap = max(0.0, (sup4 - sup5) / sup5)
    if "sup_high_alpha" in oracle:
        gap = max(gap, max(0.0, (sup4 - oracle["sup_high_alpha"]) / sup4 - 1e-9))
    return OracleVerdict(
        f"branch-consistency n={n} d={d} m={m} C={C:g} s0={cfg.sigma0_sq:g}",
        {"sup_analytic": sup4, "alpha": a4}, oracle, gap, 1e-12, note=note,
    )


def verify_shift_equivalence(level_lo: float, level_hi: float, alpha: float, beta: float,
                             cfg: SystemConfig, t_max: float, thetas=None) -> OracleVerdict:
    """Exact risk with levels (A, B) equals the centered scheme's with the shifted estimator.

    Compared at the centered worst-case theta and at any extra ``thetas``.
    """
    C, shifted = equivalent_centered(level_lo, level_hi, AffineEstimator(alpha, beta), cfg.n)
    theta_star, sup_c = worst_case_theta(C, shifted.alpha, shifted.beta, cfg, t_max)
    points = [theta_star] + ([] if thetas is None else list(thetas))
    gap = 0.0
    for theta in points:
        direct = exact_risk_levels(level_lo, level_hi, alpha, beta, theta, cfg)
        centered = exact_risk_two_level(C, shifted.alpha, shifted.beta, theta, cfg)
        gap = max(gap, _rel(direct, centered))
    return OracleVerdict(
        f"shift-equivalence A={level_lo:.4g} B={level_hi:.4g}",
        {"sup_centered": sup_c},
        {"sup_direct": exact_risk_levels(level_lo, level_hi, alpha, beta, theta_star, cfg)},
        gap, 1e-10,
    )


def quad_coefficient_at_root(n: int, C: float) -> float:
    alpha = 1 / (2 * (n + math.sqrt(n)) * C)
    return float(two_level_coefficients(C, alpha, 0.0, n, 1, 0.0)[0])


# -- the batch suite ---------------------------------------------------------------

AFFINE_CASES = [
    # (n, d, P, sigma0_sq, m or None): both noise regimes, product and sparse
    (4, 1, 1.0, 1.0, None),
    (4, 1, 1.0, 100.0, None),
    (9, 2, 1.0, 0.5, None),
    (9, 2, 2.0, 200.0, None),
    (16, 3, 0.5, 4.0, None),
    (2, 2, 1.0, 30.0, None),
    (4, 4, 1.0, 1.0, 1),
    (4, 4, 1.0, 50.0, 1),
    (4, 4, 1.0, 7.0, 1),
    (8, 6, 1.0, 2.0, 2),
    (8, 6, 1.0, 500.0, 2),
    (5, 10, 3.0, 0.1, 3),
    (5, 10, 3.0, 400.0, 3),
    (6, 4, 1.0, 3.0, 3),
]

POWER_CASES = [(2, 1, 1.0), (4, 1, 1.0), (4, 2, 2.0), (5, 4, 1.0), (6, 2, 0.5), (10, 3, 3.0), (3, 3, 1.0)]


def run_suite(alpha_scale: float = 1.0, seed: int = 0, sweep: int = 10_000) -> list[OracleVerdict]:
    """Every oracle check, in a fixed order."""
    rng = np.random.default_rng(seed)
    out: list[OracleVerdict] = []

    for n, d, P, s0, m in AFFINE_CASES:
        out.append(verify_scheme_optimum(SystemConfig(n, d, P, s0), m, alpha_scale))
    for n, C, s0, m, d in [(4, 1.0, 1.0, 1, 1), (4, 1.0, 100.0, 1, 1), (4, 2 / math.sqrt(3), 1.0, 1, 4)]:
        out.append(verify_affine_optimum(SystemConfig(n, d, C * C, s0), C, m, alpha_scale))

    for d, m, P in POWER_CASES:
        out.append(verify_power_max_C(d, m, P))

    worst = 0.0
    for n in range(2, 17):
        for C in (0.5, 1.0, 2.0):
            for s0 in (0.1, 1.0, 10.0):
                for d, m in ((4, 1), (4, 2), (4, 4)):
                    v = verify_branch_consistency(SystemConfig(n, d, C * C, s0), C, m)
                    worst = max(worst, v.gap)
    out.append(OracleVerdict("branch-consistency grid", {"cases": 15 * 27}, {"max_gap": worst}, worst, 1e-12))

    identity_gap = 0.0
    for n in range(1, 65):
        for C in (0.1, 0.5, 1.0, 3.0):
            identity_gap = max(identity_gap, abs(quad_coefficient_at_root(n, C)))
            boundary = n**1.5 * C * C
            root = flat_risk_alpha(n, C)
            identity_gap = max(identity_gap, _rel(n * C / (2 * (boundary + n * n * C * C)), root))
    for n in range(1, 33):
        for d in range(2, 9):
            for m in range(1, (d + 1) // 2):
                cfg = SystemConfig(n, d, 1.0, n**1.5)
                identity_gap = max(identity_gap, _rel(sparse_scheme(cfg, m).estimator.alpha,
                                                      1 / (math.sqrt(n) * (math.sqrt((d - m) / m) + math.sqrt(m / (d - m))) * (math.sqrt(n) + 1))))
    out.append(OracleVerdict("branch-boundary identities", {}, {"max_gap": identity_gap}, identity_gap, 1e-12))

    shift_gap = 0.0
    for _ in range(1000):
        n, d = int(rng.integers(1, 11)), int(rng.integers(1, 5))
        lo = float(rng.uniform(-2, 1))
        hi = lo + float(rng.uniform(0.05, 3))
        cfg = SystemConfig(n, d, 1.0, float(rng.uniform(0, 5)))
        thetas = rng.random((3, d))
        v = verify_shift_equivalence(lo, hi, float(rng.uniform(0, 0.5)), float(rng.uniform(-1, 1)),
                                     cfg, float(rng.uniform(0, d)), thetas)
        shift_gap = max(shift_gap, v.gap)
    out.append(OracleVerdict("shift-equivalence sweep", {"cases": 1000}, {"max_gap": shift_gap}, shift_gap, 1e-10))

    failures = 0
    for _ in range(sweep):
        d = int(rng.integers(1, 12))
        theta = rng.random(d)
        mask = rng.random(d)
        theta = np.where(mask < 0.2, 0.0, np.where(mask > 0.8, 1.0, theta))
        failures += not key_inequality_check(theta)
    out.append(OracleVerdict("key-inequality sweep", {"cases": sweep}, {"failures": failures}, failures, 0))

    failures = 0
    for _ in range(sweep):
        k = int(rng.integers(1, 8))
        support = rng.exponential(2.0, k) * (rng.random(k) > 0.2)
        if not support.any():
            support[0] = 1.0
        probs = rng.dirichlet(np.ones(k))
        failures += not vlnv_bound_check(support, probs).holds
    out.append(OracleVerdict("vlnv-bound sweep", {"cases": sweep}, {"failures": failures}, failures, 0))
    return out
