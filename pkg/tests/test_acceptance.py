"""Acceptance criteria, one test each; every test records a PASS/FAIL line before asserting."""

import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from otaest.channel import mc_risk
from otaest.experiments import loglog_slope
from otaest.model import GaussianLocation, ProductBernoulli, SparseBernoulli, SystemConfig
from otaest.oracle import AFFINE_CASES, POWER_CASES, run_suite, verify_power_max_C, verify_scheme_optimum
from otaest.privacy import (
    bernoulli_mi_bound,
    bernoulli_mi_exact,
    calibrate_sigma_pri,
    gaussian_mi_bound,
    gaussian_mi_exact,
    robust_cmi_bound,
)
from otaest.risk import exact_risk_two_level, minimax_risk, robust_risk, scheme_worst_case
from otaest.schemes import AffineEstimator, Scheme, TwoLevel, optimal_scheme

TRIALS = 100_000


def record(number, title, passed, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {number:>2} {title}: {detail}")
    return passed


def mc_at_worst(model, cfg, seed):
    scheme = optimal_scheme(model, cfg)
    theta, sup = scheme_worst_case(scheme, model)
    return mc_risk(model, theta, scheme, TRIALS, master_seed=seed), sup


def test_c01_gaussian_risk():
    start = time.perf_counter()
    model = GaussianLocation(1.0, 1.0)
    cfg = SystemConfig(n=10, d=2, P=1.0, sigma0_sq=1.0)
    closed = minimax_risk(model, cfg)
    est, _ = mc_at_worst(model, cfg, seed=101)
    elapsed = time.perf_counter() - start
    ok = abs(closed - 0.24) < 1e-12 and est.within(closed) and elapsed < 10
    assert record(1, "gaussian risk", ok,
                  f"closed={closed:.7f} (0.24) mc={est.mean:.6f}+-{est.stderr:.1e} time={elapsed:.2f}s<10s")


def test_c02_bernoulli_risk_both_branches():
    parts, ok = [], True
    for d in (1, 2):
        for s0, unit in ((1.0, 0.0347222), (100.0, 0.2155172)):
            cfg = SystemConfig(n=4, d=d, P=1.0, sigma0_sq=s0)
            closed = minimax_risk(ProductBernoulli(), cfg)
            est, sup = mc_at_worst(ProductBernoulli(), cfg, seed=200 + 10 * d + int(s0))
            good = abs(closed - unit * d) < 5e-8 * d and abs(sup - closed) < 1e-12 and est.within(closed)
            ok &= good
            parts.append(f"d={d} s0={s0:g}: {closed:.7f} mc={est.mean:.6f}+-{est.stderr:.1e}")
    assert record(2, "bernoulli risk, both branches", ok, "; ".join(parts))


def test_c03_sparse_risk():
    model = SparseBernoulli(1)
    cfg = SystemConfig(n=4, d=4, P=1.0, sigma0_sq=1.0)
    closed = minimax_risk(model, cfg)
    est, sup = mc_at_worst(model, cfg, seed=303)
    ok = abs(closed - 0.1041667) < 5e-8 and abs(sup - closed) < 1e-12 and est.within(closed)
    assert record(3, "sparse risk", ok, f"closed={closed:.7f} (0.1041667) mc={est.mean:.6f}+-{est.stderr:.1e}")


def test_c04_oracle_recovers_optima():
    start = time.perf_counter()
    affine = [verify_scheme_optimum(SystemConfig(n, d, P, s0), m) for n, d, P, s0, m in AFFINE_CASES]
    power = [verify_power_max_C(d, m, P) for d, m, P in POWER_CASES]
    elapsed = time.perf_counter() - start
    branches = {v.analytic["branch"] for v in affine}
    worst_affine = max(v.gap for v in affine)
    worst_power = max(v.gap / v.tolerance for v in power)
    ok = (all(v.passed for v in affine + power) and len(affine) >= 12
          and branches == {"low-noise", "high-noise"} and elapsed < 120)
    assert record(4, "oracle recovers alpha*, beta*, levels", ok,
                  f"{len(affine)} affine cases, max rel gap {worst_affine:.2e} (<=1e-2); "
                  f"{len(power)} level cases, max gap/resolution-tol {worst_power:.2f} (<=1); "
                  f"time={elapsed:.1f}s<120s")


def test_c05_exact_risk_matches_mc():
    rng = np.random.default_rng(2024)
    worst, ok = 0.0, True
    for i in range(20):
        n, d = int(rng.integers(1, 11)), int(rng.integers(1, 5))
        C, alpha, beta = rng.uniform(0.2, 2), rng.uniform(0, 0.5), rng.uniform(-0.5, 1)
        cfg = SystemConfig(n=n, d=d, P=C * C, sigma0_sq=float(rng.uniform(0, 4)))
        theta = rng.random(d)
        exact = exact_risk_two_level(C, alpha, beta, theta, cfg)
        scheme = Scheme(TwoLevel(-C, C), AffineEstimator(alpha, beta), "bernoulli", cfg)
        est = mc_risk(ProductBernoulli(), theta, scheme, TRIALS, master_seed=500 + i)
        z = abs(est.mean - exact) / est.stderr
        worst = max(worst, z)
        ok &= z <= 3
    assert record(5, "exact risk vs Monte Carlo", ok, f"20 instances, max |z|={worst:.2f} (<=3)")


def test_c06_bernoulli_mi():
    grid = np.round(np.arange(101) * 0.01, 2)
    d = 3
    slack = min(bernoulli_mi_bound(SystemConfig(n, d, 1.0, 1.0)) - d * max(bernoulli_mi_exact(n, t) for t in grid)
                for n in range(1, 21))
    # independent value: I = H(count) - H(count | own bit) for n=2, theta=1/2
    p = np.array([0.25, 0.5, 0.25])
    enumerated = -np.sum(p * np.log(p)) - math.log(2)
    spot = bernoulli_mi_exact(2, 0.5)
    ok = slack >= 0 and abs(spot - enumerated) <= 1e-6 and abs(spot - 0.34657) <= 1e-5
    assert record(6, "bernoulli MI bound", ok,
                  f"min slack d/n - d*I = {slack:.3e} (>=0); I(2, 0.5)={spot:.6f} vs enumeration {enumerated:.6f}")


def test_c07_gaussian_mi():
    worst = math.inf
    count = 0
    for n in (1, 2, 5, 20, 100):
        for s0 in (0.1, 1.0, 10.0, 100.0):
            for sigma_sq, B in ((1.0, 1.0), (0.5, 2.0), (2.0, 0.5), (1.0, 3.0), (4.0, 1.0)):
                cfg = SystemConfig(n=n, d=2, P=1.0, sigma0_sq=s0)
                model = GaussianLocation(sigma_sq, B)
                worst = min(worst, gaussian_mi_bound(cfg, model) - gaussian_mi_exact(cfg, model))
                count += 1
    spot_cfg, spot_model = SystemConfig(n=5, d=2, P=2.0, sigma0_sq=1.0), GaussianLocation(1.0, 1.0)
    exact, bound = gaussian_mi_exact(spot_cfg, spot_model), gaussian_mi_bound(spot_cfg, spot_model)
    ok = count >= 100 and worst >= 0 and abs(exact - 0.18232) < 1e-5 and abs(bound - 0.2) < 1e-12
    assert record(7, "gaussian MI bound", ok,
                  f"{count} grid points, min slack {worst:.3e} (>=0); spot {exact:.5f} / {bound:.5f}")


def test_c08_calibration():
    cfg = SystemConfig(n=10, d=2, P=1.0, sigma0_sq=1.0)
    worst_ratio, ok = 0.0, True
    for eps in (0.01, 0.1, 0.5, 1.0):
        sp = calibrate_sigma_pri(cfg, eps)
        bound = robust_cmi_bound(cfg, sp)
        ok &= bound <= eps and abs(bound - cfg.s / 2 * math.log1p(2 * eps / cfg.s)) <= 1e-12 * bound
        if sp > 0:
            ratio = (cfg.P - sp) / (cfg.n * sp + cfg.sigma0_sq)
            worst_ratio = max(worst_ratio, abs(ratio - 2 * eps / cfg.s) / (2 * eps / cfg.s))
    sp = calibrate_sigma_pri(cfg, 0.1)
    spot = robust_cmi_bound(cfg, sp)
    ok &= worst_ratio <= 1e-12 and abs(sp - 0.45) < 1e-12 and abs(spot - 0.09531) < 1e-5
    assert record(8, "robust calibration", ok,
                  f"max inner-ratio rel err {worst_ratio:.1e} (<=1e-12); spot sigma_pri^2={sp:.4f} bound={spot:.5f}")


def test_c09_gaussian_robust_scaling():
    ns = [64, 128, 256, 512, 1024]
    model = GaussianLocation(1.0, 1.0)
    risks = [robust_risk(model, SystemConfig(n=n, d=4, P=1.0, sigma0_sq=1.0), 0.01) for n in ns]
    slope = loglog_slope(ns, risks)
    ok = -2.05 <= slope <= -1.90
    assert record(9, "gaussian robust-risk scaling", ok, f"log-log slope {slope:.4f} (band [-2.05, -1.90])")


def test_c09_supplement_privacy_term_scaling():
    # not a criterion line: the part of the risk above the noiseless floor d sigma^2 / n
    ns = [64, 128, 256, 512, 1024]
    model = GaussianLocation(1.0, 1.0)
    excess = [robust_risk(model, SystemConfig(n=n, d=4, P=1.0, sigma0_sq=1.0), 0.01) - 4 / n for n in ns]
    slope = loglog_slope(ns, excess)
    ACCEPTANCE_LINES.append(f"[info] 9b privacy-induced term alone: log-log slope {slope:.4f}")
    assert slope == pytest.approx(-2.0, abs=1e-9)


def test_c10_property_suites():
    verdicts = {v.name: v for v in run_suite(sweep=10_000)}
    names = ["key-inequality sweep", "vlnv-bound sweep", "shift-equivalence sweep",
             "branch-boundary identities", "branch-consistency grid"]
    base_ok = all(verdicts[k].passed for k in names)
    negative = run_suite(alpha_scale=1.1, sweep=100)
    caught = sum(not v.passed for v in negative)
    ok = base_ok and caught > 0
    detail = "; ".join(f"{k}: gap {verdicts[k].gap:.1e}" for k in names)
    assert record(10, "property suites", ok, f"{detail}; negative control failed {caught} verdicts")
