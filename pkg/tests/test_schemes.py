import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from otaest.model import GaussianLocation, ProductBernoulli, SparseBernoulli, SystemConfig
from otaest.privacy import robust_cmi_bound
from otaest.risk import exact_risk_levels, exact_risk_two_level
from otaest.schemes import (
    HIGH_NOISE,
    LOW_NOISE,
    AffineEstimator,
    LinearGain,
    Scheme,
    TwoLevel,
    bernoulli_alpha,
    bernoulli_scheme,
    encode,
    equivalent_centered,
    estimate,
    gaussian_scheme,
    power_audit,
    robustify,
    sparse_alpha,
    sparse_scheme,
    worst_power_theta,
)


def test_gaussian_gain_unit_power():
    cfg = SystemConfig(n=10, d=2, P=1.0, sigma0_sq=1.0)
    s = gaussian_scheme(cfg, GaussianLocation(1.0, 1.0))
    assert s.encoder.gain == pytest.approx(0.70711, abs=1e-5)
    assert s.estimator.alpha == pytest.approx(0.14142, abs=1e-5)
    assert s.estimator.beta == 0


def test_gaussian_unit_gain_case():
    cfg = SystemConfig(n=7, d=3, P=2.5, sigma0_sq=1.0)
    s = gaussian_scheme(cfg, GaussianLocation(1.5, 1.0))  # B^2 + sigma^2 = P
    assert s.encoder.gain == pytest.approx(1.0)
    assert s.estimator.alpha == pytest.approx(1 / 7)


def test_bernoulli_branch_one():
    s = bernoulli_scheme(SystemConfig(n=4, d=1, P=1.0, sigma0_sq=1.0))
    assert s.branch == LOW_NOISE
    assert s.estimator.alpha == pytest.approx(1 / 12)
    assert s.estimator.beta == 0.5
    assert (s.encoder.level_lo, s.encoder.level_hi) == (-1.0, 1.0)


def test_bernoulli_branch_two():
    s = bernoulli_scheme(SystemConfig(n=4, d=1, P=1.0, sigma0_sq=100.0))
    assert s.branch == HIGH_NOISE
    assert s.estimator.alpha == pytest.approx(1 / 58)


@pytest.mark.parametrize("n,P", [(4, 1.0), (9, 0.3), (25, 2.0), (1, 1.0)])
def test_bernoulli_alpha_continuous_at_boundary(n, P):
    cfg = SystemConfig(n=n, d=2, P=P, sigma0_sq=n**1.5 * P)
    a1, a2 = bernoulli_alpha(cfg, LOW_NOISE), bernoulli_alpha(cfg, HIGH_NOISE)
    assert abs(a1 - a2) <= 1e-12 * a1


@pytest.mark.parametrize("n,d,m,P", [(4, 4, 1, 1.0), (9, 10, 3, 0.5), (16, 7, 2, 2.0), (1, 3, 1, 1.0)])
def test_sparse_alpha_continuous_at_boundary(n, d, m, P):
    cfg = SystemConfig(n=n, d=d, P=P, sigma0_sq=n**1.5 * P)
    a1, a2 = sparse_alpha(cfg, m, LOW_NOISE), sparse_alpha(cfg, m, HIGH_NOISE)
    assert abs(a1 - a2) <= 1e-12 * a1


def test_sparse_levels_and_alpha():
    s = sparse_scheme(SystemConfig(n=4, d=4, P=1.0, sigma0_sq=1.0), 1)
    assert s.encoder.level_lo == pytest.approx(-0.57735, abs=1e-5)
    assert s.encoder.level_hi == pytest.approx(1.73205, abs=1e-5)
    assert s.estimator.alpha == pytest.approx(math.sqrt(3) / 24)
    assert s.branch == LOW_NOISE


@pytest.mark.parametrize("cfg,m", [
    (SystemConfig(n=5, d=2, P=1.0, sigma0_sq=1.0), 1),
    (SystemConfig(n=5, d=3, P=2.0, sigma0_sq=50.0), 2),
    (SystemConfig(n=3, d=4, P=1.0, sigma0_sq=1.0), 4),
])
def test_sparse_dense_case_is_bernoulli(cfg, m):
    a, b = sparse_scheme(cfg, m), bernoulli_scheme(cfg)
    assert a.encoder == b.encoder
    assert a.estimator == b.estimator
    assert a.branch == b.branch


def test_sparse_m_out_of_range():
    with pytest.raises(ValueError):
        sparse_scheme(SystemConfig(n=4, d=4, P=1.0, sigma0_sq=1.0), 5)


def test_robustify_noise_level():
    cfg = SystemConfig(n=10, d=2, P=1.0, sigma0_sq=1.0)
    s = robustify(ProductBernoulli(), cfg, 0.1)
    assert s.sigma_pri_sq == pytest.approx(0.45)
    assert robust_cmi_bound(cfg, s.sigma_pri_sq) <= 0.1
    assert s.config is cfg


def test_robustify_clamped_is_unchanged():
    cfg = SystemConfig(n=10, d=2, P=1.0, sigma0_sq=1.0)
    s = robustify(ProductBernoulli(), cfg, 2.0)
    assert s.sigma_pri_sq == 0
    assert s == bernoulli_scheme(cfg)


def test_robustify_gaussian_gain():
    cfg = SystemConfig(n=10, d=2, P=1.0, sigma0_sq=1.0)
    s = robustify(GaussianLocation(1.0, 1.0), cfg, 0.1)
    assert s.encoder.gain == pytest.approx(math.sqrt((1 - 0.45) / 2))
    assert s.encoder.local_noise_var == pytest.approx(0.45)


def test_robustify_rejects_nonpositive_epsilon():
    with pytest.raises(ValueError):
        robustify(ProductBernoulli(), SystemConfig(n=2, d=2, P=1, sigma0_sq=1), 0.0)


def _scheme(encoder, est=AffineEstimator(1.0, 0.0), n=3, d=2):
    return Scheme(encoder, est, "test", SystemConfig(n=n, d=d, P=1.0, sigma0_sq=1.0))


def test_encode_two_level():
    assert np.array_equal(encode(_scheme(TwoLevel(-1, 1)), [0, 1]), [-1, 1])


def test_encode_linear():
    assert np.array_equal(encode(_scheme(LinearGain(0.5)), [2, -2]), [1, -1])


def test_encode_rejects_non_binary():
    with pytest.raises(ValueError):
        encode(_scheme(TwoLevel(-1, 1)), [0.5, 1])


def test_encode_local_noise_variance():
    s = _scheme(TwoLevel(-1, 1, local_noise_var=0.45), d=1)
    rng = np.random.default_rng(5)
    draws = np.array([encode(s, [1.0], rng)[0] for _ in range(100_000)]) - 1.0
    assert abs(draws.var() / 0.45 - 1) < 0.03


def test_estimate_affine():
    s = _scheme(TwoLevel(-1, 1), AffineEstimator(1 / 12, 0.5))
    assert np.allclose(estimate(s, [0, 0]), [0.5, 0.5])
    s = _scheme(TwoLevel(-1, 1), AffineEstimator(1 / 58, 0.5))
    assert np.allclose(estimate(s, [58, -58]), [1.5, -0.5])
    with pytest.raises(ValueError):
        estimate(s, [1.0, 2.0, 3.0])


def test_estimate_noiseless_gaussian_inversion():
    cfg = SystemConfig(n=10, d=2, P=1.0, sigma0_sq=1.0)
    s = gaussian_scheme(cfg, GaussianLocation(1.0, 1.0))
    theta = np.array([1.0, 0.0])
    y = 10 * s.encoder.gain * theta
    assert np.allclose(estimate(s, y), theta)


def test_power_audit_gaussian_tight():
    cfg = SystemConfig(n=10, d=3, P=1.0, sigma0_sq=1.0)
    model = GaussianLocation(1.0, 1.0)
    s = gaussian_scheme(cfg, model)
    assert power_audit(s, model, np.ones(3)) == pytest.approx(1.0, rel=1e-12)


def test_power_audit_sparse_tight():
    cfg = SystemConfig(n=4, d=4, P=1.0, sigma0_sq=1.0)
    s = sparse_scheme(cfg, 1)
    assert power_audit(s, SparseBernoulli(1), [1, 0, 0, 0]) == pytest.approx(1.0, rel=1e-12)


def test_power_audit_robust_within_budget():
    cfg = SystemConfig(n=10, d=2, P=1.0, sigma0_sq=1.0)
    for model in (GaussianLocation(1.0, 1.0), ProductBernoulli(), SparseBernoulli(1)):
        s = robustify(model, cfg, 0.1)
        assert power_audit(s, model, worst_power_theta(model, 2)) <= 1.0 * (1 + 1e-9)


@given(
    n=st.integers(1, 30), d=st.integers(1, 8), P=st.floats(0.01, 10), s0=st.floats(0, 100),
    m_frac=st.floats(0, 1), eps=st.one_of(st.none(), st.floats(0.001, 5)), data=st.data(),
)
def test_power_never_exceeds_budget(n, d, P, s0, m_frac, eps, data):
    cfg = SystemConfig(n=n, d=d, P=P, sigma0_sq=s0)
    m = max(1, round(m_frac * d))
    models = [GaussianLocation(1.0, 0.7), ProductBernoulli(), SparseBernoulli(m)]
    model = data.draw(st.sampled_from(models))
    s = robustify(model, cfg, eps) if eps else (
        gaussian_scheme(cfg, model) if model.family == "gaussian"
        else sparse_scheme(cfg, m) if model.family == "sparse" else bernoulli_scheme(cfg))
    worst = worst_power_theta(model, d)
    assert power_audit(s, model, worst) <= P * (1 + 1e-9)
    if eps is None:
        assert power_audit(s, model, worst) == pytest.approx(P, rel=1e-9)
    theta = np.array(data.draw(st.lists(st.floats(0, 1), min_size=d, max_size=d)))
    if model.family == "gaussian":
        theta = theta / max(1.0, np.linalg.norm(theta) / (0.7 * math.sqrt(d)))
    elif model.family == "sparse":
        theta = theta * min(1.0, m / max(theta.sum(), 1e-12))
    assert power_audit(s, model, theta) <= P * (1 + 1e-9)


def test_equivalent_centered_examples():
    C, est = equivalent_centered(-1, 1, AffineEstimator(0.3, 0.2), n=5)
    assert C == 1 and est == AffineEstimator(0.3, 0.2)
    C, est = equivalent_centered(0, 2, AffineEstimator(0.1, 0.0), n=3)
    assert C == 1 and est.beta == pytest.approx(0.3)
    lo, hi = -math.sqrt(1 / 3), math.sqrt(3)
    C, _ = equivalent_centered(lo, hi, AffineEstimator(0.1, 0.0), n=4)
    assert C == pytest.approx(2 / math.sqrt(3))
    with pytest.raises(ValueError):
        equivalent_centered(1, 1, AffineEstimator(0.1), n=2)


@given(
    lo=st.floats(-3, 3), gap=st.floats(0.01, 4), alpha=st.floats(-1, 1), beta=st.floats(-2, 2),
    n=st.integers(1, 12), s0=st.floats(0, 5), data=st.data(),
)
def test_shift_equivalence_exact_risk(lo, gap, alpha, beta, n, s0, data):
    d = data.draw(st.integers(1, 5))
    theta = np.array(data.draw(st.lists(st.floats(0, 1), min_size=d, max_size=d)))
    cfg = SystemConfig(n=n, d=d, P=1.0, sigma0_sq=s0)
    C, est = equivalent_centered(lo, lo + gap, AffineEstimator(alpha, beta), n)
    direct = exact_risk_levels(lo, lo + gap, alpha, beta, theta, cfg)
    centered = exact_risk_two_level(C, est.alpha, est.beta, theta, cfg)
    assert centered == pytest.approx(direct, rel=1e-10, abs=1e-12)


def test_noiseless_round_trip():
    from otaest.channel import transmit
    rng = np.random.default_rng(0)
    n = 6
    cfg = SystemConfig(n=n, d=3, P=1.0, sigma0_sq=0.0)
    g = gaussian_scheme(cfg, GaussianLocation(1.0, 1.0))
    u = np.array([0.4, -1.2, 2.0])
    y = transmit(np.stack([encode(g, u) for _ in range(n)]), 0.0, rng)
    assert np.allclose(estimate(g, y), u)

    s = sparse_scheme(cfg, 1)
    u = np.array([1.0, 0.0, 1.0])
    fu = encode(s, u)
    y = transmit(np.stack([fu] * n), 0.0, rng)
    assert np.allclose(estimate(s, y), s.estimator.alpha * n * fu + s.estimator.beta)
