import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hcflow.analysis import (
    EXPONENTIAL,
    FINITE_TIME_BLOWUP,
    POLYNOMIAL,
    classify_growth,
    einstein_normalize,
    einstein_residual,
    estimate_blowup_time,
    kernel_annihilator_check,
    pinching_series,
)
from hcflow.errors import InsufficientDataError
from hcflow.flow import IntegratorConfig, integrate, su2_diagonal_flow
from hcflow.forms import HermitianForm
from hcflow.io import random_pd
from hcflow.lie import construct_algebra

SU = construct_algebra("su2c")
SU3 = construct_algebra("strict_upper:3")


def test_growth_polynomial_example():
    traj = integrate(SU3, HermitianForm.diag([1, 2, 3]), IntegratorConfig(t_end=100, sample_interval=0.1))
    rep = classify_growth(traj)
    assert rep.regime == POLYNOMIAL and abs(rep.degree - 1) < 0.1
    assert 0 <= rep.fit_quality <= 1
    assert rep.window[1] == 100
    with pytest.raises(AttributeError):
        rep.rate


def test_growth_exponential_example():
    g = construct_algebra("borel:2")
    traj = integrate(g, HermitianForm.identity(3), IntegratorConfig(t_end=10, sample_interval=0.02))
    rep = classify_growth(traj)
    assert rep.regime == EXPONENTIAL and rep.rate == pytest.approx(2, rel=0.05)


def test_growth_blowup_example():
    rep = classify_growth(integrate(SU, HermitianForm.identity(3)))
    assert rep.regime == FINITE_TIME_BLOWUP and abs(rep.t_star - 1) < 1e-3
    assert "blowup" in rep.diagnostics and "polynomial" in rep.diagnostics


def test_growth_insufficient_data():
    traj = integrate(SU3, HermitianForm.identity(3), IntegratorConfig(t_end=2, sample_interval=0.1))
    with pytest.raises(InsufficientDataError):
        classify_growth(traj)


def test_growth_report_json():
    rep = classify_growth(integrate(SU, HermitianForm.identity(3)))
    d = rep.to_dict()
    assert d["regime"] == FINITE_TIME_BLOWUP and "t_star" in d and isinstance(d["window"], list)


@pytest.mark.parametrize("eps0", [0.5, 1.0])
def test_blowup_time_isotropic(eps0):
    traj = integrate(SU, HermitianForm.identity(3) * eps0)
    assert estimate_blowup_time(traj) == pytest.approx(1 / eps0, rel=1e-3)


def test_blowup_time_matches_eigen_oracle():
    tight = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    oracle = su2_diagonal_flow([1, 1, 2], tight).termination.t_last
    assert abs(estimate_blowup_time(integrate(SU, HermitianForm.diag([1, 1, 2]))) - oracle) < 1e-3


def test_blowup_time_requires_blowup():
    traj = integrate(SU3, HermitianForm.identity(3), IntegratorConfig(t_end=1))
    with pytest.raises(ValueError):
        estimate_blowup_time(traj)


@settings(max_examples=4, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.3, 3.0))
def test_blowup_scaling_covariance(seed, c):
    h0 = random_pd(3, np.random.default_rng(seed))
    t1 = estimate_blowup_time(integrate(SU, h0))
    tc = estimate_blowup_time(integrate(SU, h0 * c))
    assert tc == pytest.approx(t1 / c, rel=1e-3)


def test_pinching_examples():
    traj = integrate(SU, HermitianForm.diag([1, 1, 2]))
    d = pinching_series(traj, HermitianForm.identity(3))
    tail = d[len(d) // 2:]
    assert np.all(np.diff(tail) <= 1e-12)
    assert d[-1] < 1e-2
    same = pinching_series(integrate(SU, HermitianForm.identity(3)), HermitianForm.identity(3))
    assert np.abs(same).max() < 1e-10


def test_pinching_toward_growing_coordinate():
    traj = integrate(SU3, HermitianForm.identity(3), IntegratorConfig(t_end=1000, sample_interval=10))
    d = pinching_series(traj, HermitianForm.diag([0, 0, 1]))
    assert d[-1] < d[1] and d[-1] < 2e-3


def test_pinching_zero_target():
    traj = integrate(SU, HermitianForm.identity(3), IntegratorConfig(t_end=0.1))
    with pytest.raises(ValueError):
        pinching_series(traj, HermitianForm.zeros(3))


@settings(max_examples=15, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_pinching_target_scale_invariance(c):
    traj = integrate(SU, HermitianForm.diag([1, 2, 3]), IntegratorConfig(t_end=0.3, sample_interval=0.05))
    target = HermitianForm.diag([1, 1.5, 2])
    np.testing.assert_allclose(pinching_series(traj, target), pinching_series(traj, target * c), atol=1e-12)


def test_einstein_examples():
    rep = einstein_residual(SU, HermitianForm.identity(3))
    assert rep.lambda_star == pytest.approx(1) and rep.residual < 1e-12
    rep = einstein_residual(SU, HermitianForm.diag([1, 1, 2]))
    assert rep.lambda_star == pytest.approx(1)
    assert rep.residual == pytest.approx(math.sqrt(3) / math.sqrt(6), rel=1e-12)
    rep = einstein_residual(construct_algebra("abelian:3"), HermitianForm.diag([1, 2, 3]))
    assert rep.lambda_star == 0 and rep.residual == 0
    rep = einstein_residual(SU3, HermitianForm.diag([1, 1, 0]))
    assert rep.lambda_star == 0 and rep.residual == 1
    with pytest.raises(ValueError):
        einstein_residual(SU, HermitianForm.zeros(3))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_einstein_scaling(seed, c):
    h = random_pd(3, np.random.default_rng(seed))
    a, b = einstein_residual(SU, h), einstein_residual(SU, h * c)
    assert b.residual == pytest.approx(a.residual, rel=1e-10, abs=1e-12)
    assert b.lambda_star == pytest.approx(c * a.lambda_star, rel=1e-12)


def test_einstein_normalize():
    h = einstein_normalize(SU, HermitianForm.identity(3) * 4)
    assert einstein_residual(SU, h).lambda_star == pytest.approx(1)


def test_kernel_examples():
    i3 = HermitianForm.identity(3)
    chk = kernel_annihilator_check(SU3, i3, i3)
    assert chk.agree and chk.kernel_dim == 2 == chk.expected_dim
    rng = np.random.default_rng(0)
    chk = kernel_annihilator_check(SU, random_pd(3, rng), random_pd(3, rng))
    assert chk.agree and chk.kernel_dim == 0
    b3 = construct_algebra("borel:3")
    i6 = HermitianForm.identity(6)
    chk = kernel_annihilator_check(b3, i6, i6)
    assert chk.agree and chk.kernel_dim == 3


def test_kernel_requires_pd():
    with pytest.raises(ValueError):
        kernel_annihilator_check(SU3, HermitianForm.diag([1, 0, 1]), HermitianForm.identity(3))


@pytest.mark.parametrize("spec", ["strict_upper:4", "borel:3"])
def test_regime_agreement_random(spec):
    g = construct_algebra(spec)
    expected = POLYNOMIAL if spec.startswith("strict") else EXPONENTIAL
    t_end = 100 if expected == POLYNOMIAL else 3
    rng = np.random.default_rng(42)
    for _ in range(5):
        traj = integrate(g, random_pd(g.dim, rng), IntegratorConfig(t_end=t_end, sample_interval=t_end / 1000))
        assert classify_growth(traj).regime == expected
