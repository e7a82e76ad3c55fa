import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hcflow.errors import EvaluationError, ValidationError
from hcflow.forms import HermitianForm, sup_norm
from hcflow.geometry import (
    AffineField,
    build_model,
    ev_pushforward,
    field_bracket,
    induced_metric,
    make_model,
    model_to_spec,
    random_points,
    relative_deviation,
    scale_static_check,
    theta_brackets,
    theta_coordinate,
    theta_from_sharp,
)
from hcflow.io import random_pd
from hcflow.lie import construct_algebra

MODELS = ["hopf_sl2", "heisenberg_left", "translations:3"]


def test_field_bracket_formula():
    x = AffineField(np.zeros((3, 3)), [1, 0, 0])
    a = np.zeros((3, 3))
    a[2, 0] = 1
    y = AffineField(a, [0, 1, 0])
    br = field_bracket(x, y)
    assert not np.any(br.A)
    np.testing.assert_array_equal(br.b, [0, 0, 1])


def test_build_examples():
    hopf = build_model("hopf_sl2")
    assert hopf.ambient_dim == 2 and len(hopf.fields) == 3
    assert hopf.sign_convention in (1, -1) and hopf.bracket_residual < 1e-12
    heis = build_model("heisenberg_left")
    br = field_bracket(heis.fields[0], heis.fields[1])
    np.testing.assert_array_equal(br.b, heis.sign_convention * heis.fields[2].b)
    tr = build_model("translations:2")
    assert not np.any(field_bracket(tr.fields[0], tr.fields[1]).b)


def test_incompatible_fields_rejected():
    su = construct_algebra("su2c")
    fields = [AffineField(np.eye(2) * k, np.zeros(2)) for k in range(1, 4)]
    with pytest.raises(ValidationError, match="worst pair"):
        make_model(su, fields)


def test_custom_model_roundtrip():
    hopf = build_model("hopf_sl2")
    assert model_to_spec(hopf) == {"kind": "hopf_sl2"}
    # a custom model with the same fields serializes and rebuilds identically
    custom = make_model(hopf.alg, hopf.fields, hopf.guard_radius, {"kind": "custom"})
    again = build_model(model_to_spec(custom))
    for f, g in zip(hopf.fields, again.fields):
        np.testing.assert_array_equal(f.A, g.A)
        np.testing.assert_array_equal(f.b, g.b)
    assert again.sign_convention == hopf.sign_convention
    assert again.guard_radius == hopf.guard_radius


def test_unknown_model():
    with pytest.raises(ValueError):
        build_model("klein_bottle")


def test_metric_examples():
    tr = build_model("translations:3")
    z = np.array([1 + 2j, -3, 0.5j])
    np.testing.assert_allclose(induced_metric(tr, HermitianForm.identity(3), z).g_upper, np.eye(3))
    hopf = build_model("hopf_sl2")
    np.testing.assert_allclose(induced_metric(hopf, HermitianForm.identity(3), [1, 0]).g_upper,
                               np.diag([0.25, 0.5]), atol=1e-15)
    heis = build_model("heisenberg_left")
    sample = induced_metric(heis, HermitianForm.identity(3), [2, 0, 0])
    assert sample.g_upper[2, 2] == pytest.approx(5)
    np.testing.assert_allclose(sample.g_upper @ sample.g_lower, np.eye(3), atol=1e-10)


def test_metric_errors():
    hopf = build_model("hopf_sl2")
    with pytest.raises(EvaluationError):
        induced_metric(hopf, HermitianForm.identity(3), [0, 0])
    tr = build_model("translations:2")
    with pytest.raises(EvaluationError):
        induced_metric(tr, HermitianForm.diag([1, 0]), [0, 0])


def test_theta_examples():
    tr = build_model("translations:3")
    z = np.array([1, 2j, 3])
    h = random_pd(3, np.random.default_rng(0))
    assert not np.any(theta_coordinate(tr, h, z))
    assert not np.any(theta_brackets(tr, h, z))
    heis = build_model("heisenberg_left")
    h11, h22, h33 = 1.5, 2.0, 0.7
    expected = np.zeros((3, 3))
    expected[2, 2] = h11 * h22
    for z in ([0, 0, 0], [2 - 1j, 3, 0.5j], [-4, 1j, 7]):
        np.testing.assert_allclose(theta_coordinate(heis, HermitianForm.diag([h11, h22, h33]), z),
                                   expected, atol=1e-12)
    np.testing.assert_allclose(theta_brackets(heis, HermitianForm.identity(3), [1, 2, 3])[2, 2], 1)


def test_theta_brackets_requires_pd():
    hopf = build_model("hopf_sl2")
    with pytest.raises(ValueError):
        theta_brackets(hopf, HermitianForm.diag([1, -1, 1]), [1, 0])


def test_hopf_identity_cross_check():
    hopf = build_model("hopf_sl2")
    i3 = HermitianForm.identity(3)
    for z in random_points(hopf, 100, np.random.default_rng(1)):
        assert relative_deviation(theta_coordinate(hopf, i3, z), theta_brackets(hopf, i3, z)) < 1e-10


@pytest.mark.parametrize("name", MODELS)
def test_cross_formulas_random(name):
    model = build_model(name)
    rng = np.random.default_rng(3)
    for z in random_points(model, 25, rng):
        h = random_pd(model.alg.dim, rng)
        tb = theta_brackets(model, h, z)
        assert relative_deviation(theta_coordinate(model, h, z), tb) < 1e-10
        assert relative_deviation(theta_coordinate(model, h, z, method="fd"), tb) < 1e-5
        assert relative_deviation(theta_from_sharp(model, h, z), tb) < 1e-10
        np.testing.assert_allclose(tb, tb.conj().T, atol=1e-12 * max(1, np.abs(tb).max()))
        assert np.linalg.eigvalsh(tb)[0] >= -1e-10 * max(sup_norm(tb), 1e-300)


def test_scale_static_examples():
    hopf = build_model("hopf_sl2")
    pts = random_points(hopf, 50, np.random.default_rng(2))
    lam, dev = scale_static_check(hopf, HermitianForm.identity(3), pts)
    assert lam == pytest.approx(1, abs=1e-12) and dev < 1e-8
    lam, dev = scale_static_check(hopf, HermitianForm.diag([1, 1, 2]), pts)
    assert dev > 0.1
    tr = build_model("translations:2")
    lam, dev = scale_static_check(tr, HermitianForm.diag([1, 3]), random_points(tr, 5, np.random.default_rng(0)))
    assert lam == 0 and dev == 0
    with pytest.raises(ValueError):
        scale_static_check(hopf, HermitianForm.identity(3), pts[:1])


def test_ev_pushforward_is_g_upper():
    hopf = build_model("hopf_sl2")
    h = random_pd(3, np.random.default_rng(5))
    z = np.array([0.3 + 1j, -2])
    np.testing.assert_allclose(ev_pushforward(hopf, h, z), induced_metric(hopf, h, z).g_upper, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(MODELS), st.integers(0, 2**32 - 1))
def test_cross_formulas_property(name, seed):
    model = build_model(name)
    rng = np.random.default_rng(seed)
    z = random_points(model, 1, rng)[0]
    h = random_pd(model.alg.dim, rng, scale=float(rng.uniform(0.1, 10)))
    tb = theta_brackets(model, h, z)
    assert relative_deviation(theta_coordinate(model, h, z), tb) < 1e-10
    assert relative_deviation(theta_from_sharp(model, h, z), tb) < 1e-10
