import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from empclt import (
    ControlFunction,
    CornerError,
    GaussianCdf,
    HolderBump,
    ParameterError,
    ProductCdf,
    SingularityError,
    UniformCdf,
    bump_eval,
    bump_holder_norm,
    control_psi,
    generalized_inverse,
    holder_norm_estimate,
    modulus_of_continuity,
    ramp,
    theta_holder_constant,
)
from empclt.holder import EmpiricalCdf, InterpolatedCdf, MonteCarloCdf


def test_ramp_values():
    xs = np.array([-2.0, -1.0, -0.3, 0.0, 0.5, 3.0])
    assert np.allclose(ramp(xs), [1.0, 1.0, 0.3, 0.0, 0.0, 0.0])


def test_unit_bump_hand_values():
    bump = HolderBump(0.0, 1.0, 1.0)
    assert bump(np.array([-3.0])) == 1.0
    assert bump(np.array([0.0])) == 1.0
    assert bump(np.array([0.5])) == 0.5
    assert bump(np.array([1.0])) == 0.0
    assert bump(np.array([2.0])) == 0.0


def test_product_bump_2d():
    bump = HolderBump([0.0, 0.0], [1.0, 2.0], 1.0)
    # factors 0.5 and 0.75 at (0.5, 0.5)
    assert bump(np.array([0.5, 0.5])) == pytest.approx(0.375)


def test_bump_eval_batch_matches_loop():
    bump = HolderBump([0.0, -1.0], [1.0, 1.0], 0.7)
    pts = np.random.default_rng(0).uniform(-2, 2, size=(50, 2))
    batch = bump_eval(bump, pts)
    single = np.array([bump_eval(bump, p) for p in pts])
    assert np.allclose(batch, single)


def test_bump_corner_validation():
    with pytest.raises(CornerError):
        HolderBump(1.0, 1.0, 1.0)
    with pytest.raises(CornerError):
        HolderBump([0.0, 0.0], [1.0, -1.0], 1.0)
    with pytest.raises(ParameterError):
        HolderBump(0.0, 1.0, 1.5)


def test_holder_norm_formula():
    # d * max_i gap^(-alpha) + 1 over finite coordinate pairs
    assert bump_holder_norm(HolderBump(0.0, 1.0, 1.0)) == pytest.approx(2.0)
    assert bump_holder_norm(HolderBump([0.0, 0.0], [0.5, 2.0], 1.0)) == pytest.approx(5.0)
    assert bump_holder_norm(HolderBump(0.0, 0.25, 0.5)) == pytest.approx(3.0)
    # no finite pair: indicator of a half line with infinite corner
    inf_bump = HolderBump(-math.inf, math.inf, 1.0)
    assert bump_holder_norm(inf_bump) == 1.0


@settings(max_examples=200)
@given(
    a=st.floats(min_value=-5.0, max_value=4.0),
    gap=st.floats(min_value=1e-3, max_value=5.0),
    x=st.floats(min_value=-10.0, max_value=10.0),
)
def test_sandwich_property(a, gap, x):
    b = a + gap
    v = float(bump_eval(HolderBump(a, b, 1.0), np.array([x])))
    assert (x <= a) <= v <= (x <= b)


def test_uniform_cdf_roundtrip():
    u = UniformCdf(0.0, 1.0)
    assert u.cdf(0.25) == pytest.approx(0.25)
    assert u.inverse(0.25) == pytest.approx(0.25)
    # generalized inverse at 1 is the sup over all x with F <= 1
    assert generalized_inverse(u, 1.0) == math.inf
    assert u.modulus(0.1) == pytest.approx(0.1)


def test_gaussian_cdf_quantiles():
    g = GaussianCdf(0.0, 2.0)
    assert g.cdf(0.0) == pytest.approx(0.5)
    assert g.inverse(0.975) == pytest.approx(2.0 * 1.959964, abs=1e-4)
    assert g.inverse(0.0) == -math.inf


def test_empirical_cdf_is_step_kind():
    e = EmpiricalCdf([3.0, 1.0, 2.0])
    assert e.cdf(2.0) == pytest.approx(2.0 / 3.0)
    assert e.cdf(0.0) == 0.0
    assert not e.continuous


def test_interpolated_cdf_monotone_and_continuous():
    sample = np.random.default_rng(1).normal(size=2000)
    ic = InterpolatedCdf(sample)
    assert ic.continuous
    xs = np.linspace(-3, 3, 50)
    vals = ic.cdf(xs)
    assert np.all(np.diff(vals) >= 0)
    mid = ic.inverse(0.5)
    assert abs(ic.cdf(mid) - 0.5) < 1e-6


def test_product_cdf_modulus_and_inverse():
    prod = ProductCdf([UniformCdf(), UniformCdf()])
    # min(sum of per-coordinate moduli, 1)
    assert modulus_of_continuity(prod, 0.2) == pytest.approx(0.4)
    assert modulus_of_continuity(prod, 0.8) == 1.0
    assert prod.modulus_inverse(0.4) == pytest.approx(0.2)


def test_control_psi_uniform_value():
    cf = ControlFunction.for_marginals([UniformCdf()], 1.0)
    # w^{-1}(1/4) = 1/4, so psi = 1 * 4 + 1
    assert control_psi(cf, 4.0) == pytest.approx(5.0)
    with pytest.raises(ParameterError):
        control_psi(cf, 0.5)


def test_control_psi_jump_cdf_degenerates():
    e = EmpiricalCdf([0.0, 1.0])
    cf = ControlFunction(alpha=1.0, dim=1, handle=ProductCdf([e]))
    with pytest.raises(SingularityError):
        control_psi(cf, 4.0)


def test_theta_holder_constant_linear_cdf():
    u = UniformCdf()
    xs = np.array([[0.1], [0.3], [0.6]])
    ys = np.array([[0.2], [0.5], [0.9]])
    # |F(x)-F(y)|/|x-y| = 1 everywhere inside [0, 1]
    assert theta_holder_constant(u, 1.0, xs, ys) == pytest.approx(1.0)


def test_theta_holder_constant_skips_coincident():
    u = UniformCdf()
    xs = np.array([[0.1], [0.4]])
    ys = np.array([[0.1], [0.8]])
    with pytest.warns(UserWarning):
        val = theta_holder_constant(u, 1.0, xs, ys)
    assert val == pytest.approx(1.0)


def test_holder_norm_estimate_below_analytic():
    bump = HolderBump(0.2, 0.7, 1.0)
    est = holder_norm_estimate(bump, [0.0], [1.0], 1.0, grid=200)
    assert est <= bump_holder_norm(bump) + 1e-9
    # the grid estimate should still see most of the steep part
    assert est >= 0.8 * bump_holder_norm(bump)


def test_monte_carlo_cdf_flags_estimated():
    sample = np.random.default_rng(2).uniform(size=(5000, 2))
    mc = MonteCarloCdf(sample)
    assert mc.estimated
    val = mc.cdf(np.array([[0.5, 0.5]]))[0]
    assert abs(val - 0.25) < 0.03
