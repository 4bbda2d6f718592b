import math

import numpy as np
import pytest

from empclt import (
    ContractError,
    HolderBump,
    ParameterError,
    ProcessSpec,
    ProductCdf,
    UniformCdf,
    approximation_quality,
    calibrate_ks_threshold,
    clt_report,
    findim_gaussian_check,
    gaussian_fit_test,
    limit_covariance_estimate,
    normalized_sums,
    reference_stats,
    sigma_f_estimate,
    sup_statistic_samples,
)

BUMP = HolderBump(-0.5, 0.5, 1.0)


def _centered(spec, seed=99, count=200_000):
    ref = reference_stats(spec, BUMP, 2.0, count, seed=seed)
    return (lambda x, c=ref.mean: BUMP(x) - c), ref


def test_sigma_iid_equals_variance(iid_uniform):
    f, ref = _centered(iid_uniform)
    est = sigma_f_estimate(iid_uniform, f, None, 400, 300, 5)
    # no serial dependence: long-run variance is Var f(X)
    assert est.sigma2 == pytest.approx(ref.r_norm**2, rel=0.1)
    assert est.auto_cutoff
    assert est.lag_cutoff <= 8  # white noise: the run rule stops early


def test_sigma_explicit_cutoff(iid_uniform):
    f, _ = _centered(iid_uniform)
    est = sigma_f_estimate(iid_uniform, f, 0, 400, 200, 5)
    assert est.lag_cutoff == 0 and not est.auto_cutoff
    assert est.sigma2 > 0.0


def test_sigma_requires_centering(iid_uniform):
    with pytest.raises(ContractError):
        sigma_f_estimate(iid_uniform, BUMP, None, 200, 100, 1)


def test_sigma_geometric_exceeds_marginal_variance(geo_half):
    f, ref = _centered(geo_half)
    est = sigma_f_estimate(geo_half, f, None, 1500, 300, 7)
    # positive serial correlation inflates the long-run variance
    assert est.sigma2 > ref.r_norm**2


def test_normalized_sums_shape(iid_uniform):
    f, _ = _centered(iid_uniform)
    sums = normalized_sums(iid_uniform, f, 200, 150, 3)
    assert sums.shape == (150,)
    assert abs(sums.mean()) < 5.0 / math.sqrt(150)
    with pytest.raises(ParameterError):
        normalized_sums(iid_uniform, f, 200, 50, 3)


def test_gaussian_fit_accepts_normal_samples(rng):
    samples = rng.normal(0.0, 2.0, size=2000)
    out = gaussian_fit_test(samples, 4.0)
    assert out["passed"] and out["ks_stat"] < out["threshold"]
    # wrong scale must fail decisively
    out_bad = gaussian_fit_test(samples, 1.0)
    assert not out_bad["passed"]


def test_gaussian_fit_default_threshold():
    out = gaussian_fit_test(np.zeros(400) + 1e-3, 1.0)
    assert out["threshold"] == pytest.approx(1.36 / math.sqrt(400) * 1.5)


def test_gaussian_fit_point_mass():
    out = gaussian_fit_test(np.zeros(100), 0.0)
    assert out["ks_stat"] == 0.0 and out["passed"]
    out2 = gaussian_fit_test(np.full(100, 2.0), 0.0)
    assert out2["ks_stat"] == 1.0 and not out2["passed"]


def test_gaussian_fit_validation():
    with pytest.raises(ParameterError):
        gaussian_fit_test(np.array([]), 1.0)
    with pytest.raises(ParameterError):
        gaussian_fit_test(np.ones(10), -1.0)


def test_calibrated_threshold_reasonable():
    thr = calibrate_ks_threshold(400, mc=400, quantile=0.99, seed=2)
    # in the ballpark of the asymptotic 99th percentile 1.63/sqrt(reps)
    assert 0.06 <= thr <= 0.11
    wider = calibrate_ks_threshold(400, mc=400, quantile=0.99, seed=2, rel_se=0.3)
    assert wider > thr


def test_clt_report_geometric(geo_half):
    f, _ = _centered(geo_half)
    rep = clt_report(geo_half, f, 1200, 300, 32)
    assert rep.passed
    assert not rep.mismatch
    assert rep.sigma2_hat > 0.0
    assert abs(rep.sample_var - rep.sigma2_hat) / rep.sigma2_hat < 0.15
    assert rep.samples.shape == (300,)
    # a vanishing tolerance must trip the mismatch flag on the same data
    tight = clt_report(geo_half, f, 1200, 300, 32, var_tol=1e-6)
    assert tight.mismatch and tight.sigma2_hat == rep.sigma2_hat


def test_clt_report_requires_centered_f(geo_half):
    with pytest.raises(ContractError, match="centered"):
        clt_report(geo_half, BUMP, 500, 150, 1)


def test_findim_iid_uniform_exact_marginals(iid_uniform):
    check = findim_gaussian_check(
        iid_uniform,
        3,
        400,
        220,
        6,
        12,
        marginals=[UniformCdf(-math.sqrt(3), math.sqrt(3))],
        cdf_model=ProductCdf([UniformCdf(-math.sqrt(3), math.sqrt(3))]),
        mc_calibration=300,
    )
    assert check.pass_fraction >= 5.0 / 6.0
    assert len(check.cells) == 3
    assert check.projections.shape == (6, 3)


def test_findim_rejects_zero_projection(iid_uniform):
    with pytest.raises(ParameterError):
        findim_gaussian_check(
            iid_uniform, 3, 100, 120, np.zeros((1, 3)), 0, mc_calibration=100,
            calibration_count=20_000,
        )


def test_limit_kernel_matches_brownian_bridge(iid_uniform):
    # map to the uniform(0,1) scale through the innovation cdf
    u = UniformCdf(-math.sqrt(3), math.sqrt(3))
    pts = np.asarray(u.inverse(np.array([0.25, 0.5, 0.75])))[:, None]
    kern = limit_covariance_estimate(
        iid_uniform, pts, 1500, 800, 3, cdf=ProductCdf([u])
    )
    levels = np.array([0.25, 0.5, 0.75])
    oracle = np.minimum.outer(levels, levels) - np.outer(levels, levels)
    assert np.max(np.abs(kern.matrix - oracle)) < 0.05
    assert np.allclose(kern.matrix, kern.matrix.T)


def test_sup_samples_nonnegative(iid_uniform):
    u = UniformCdf(-math.sqrt(3), math.sqrt(3))
    pts = np.asarray(u.inverse(np.linspace(0.1, 0.9, 9)))[:, None]
    sups = sup_statistic_samples(iid_uniform, pts, 300, 50, 7, cdf=ProductCdf([u]))
    assert sups.shape == (50,)
    assert np.all(sups >= 0.0)


def test_approximation_exact_zero_for_huge_epsilon(iid_uniform):
    out = approximation_quality(
        iid_uniform, [4], 100, 30, 3.0 * math.sqrt(100), 5,
        calibration_count=20_000, n_random=50,
    )
    # |U_n - U_n^(m)| <= 2 sqrt(n) always; epsilon above that is never hit
    assert out.frequencies == (0.0,)
    assert out.ses == (0.0,)


def test_approximation_report_layout(iid_uniform):
    out = approximation_quality(
        iid_uniform, [4, 8], 300, 40, 0.25, 9,
        calibration_count=30_000, n_random=100,
    )
    assert out.m_list == (4, 8)
    assert all(0.0 <= f <= 1.0 for f in out.frequencies)
    assert len(out.grid_sizes) == 2
