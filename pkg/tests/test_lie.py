import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hcflow.errors import NotAHomomorphismError, ValidationError
from hcflow.lie import (
    NILPOTENT,
    NONSOLVABLE,
    SOLVABLE,
    Homomorphism,
    bracket,
    classify_algebra,
    construct_algebra,
    custom_algebra,
    killing_metric,
    parse_spec,
    spec_to_string,
    summand_projection,
    validate_homomorphism,
)

SPECS = ["su2c", "strict_upper:3", "strict_upper:4", "borel:2", "borel:3", "abelian:3",
         "heisenberg3", "direct_sum(su2c,strict_upper:3)", "direct_sum(borel:2,abelian:1)"]


def test_su2c_constants():
    g = construct_algebra("su2c")
    assert g.dim == 3
    assert g.c[0, 1, 2] == 1 and g.c[1, 2, 0] == 1 and g.c[2, 0, 1] == 1
    assert g.c[1, 0, 2] == -1
    assert np.count_nonzero(g.c) == 6


def test_strict_upper_basis_and_bracket():
    g = construct_algebra({"kind": "strict_upper", "n": 3})
    assert g.basis_labels == ("E12", "E23", "E13")
    e = g.basis_vector
    np.testing.assert_array_equal(bracket(g, e("E12"), e("E23")), e("E13"))
    np.testing.assert_array_equal(bracket(g, e("E23"), e("E12")), -e("E13"))
    assert np.count_nonzero(g.c) == 2


def test_borel_basis():
    assert construct_algebra("borel:2").basis_labels == ("E11", "E22", "E12")


def test_abelian_zero():
    g = construct_algebra("abelian:4")
    assert g.dim == 4 and not np.any(g.c)


def test_heisenberg_alias():
    np.testing.assert_array_equal(construct_algebra("heisenberg3").c, construct_algebra("strict_upper:3").c)


def test_su2c_bracket_example():
    g = construct_algebra("su2c")
    np.testing.assert_array_equal(bracket(g, g.basis_vector(0), g.basis_vector(1)), g.basis_vector(2))


def test_bracket_dimension_mismatch():
    with pytest.raises(ValueError):
        bracket(construct_algebra("su2c"), [1, 0], [0, 1, 0])


def test_constants_read_only():
    g = construct_algebra("su2c")
    with pytest.raises(ValueError):
        g.c[0, 1, 2] = 5


def test_custom_antisymmetry_violation_names_triple():
    with pytest.raises(ValidationError, match="antisymmetry"):
        custom_algebra(2, [[0, 1, 0, 1.0, 0.0], [1, 0, 0, 1.0, 0.0]])


def test_custom_jacobi_violation_names_triple():
    # [e1,e2]=e3, [e1,e3]=e1 violates Jacobi on (e1,e2,e3)
    with pytest.raises(ValidationError, match=r"Jacobi.*\(e1, e2, e3\)"):
        custom_algebra(3, [[0, 1, 2, 1, 0], [0, 2, 0, 1, 0]])


def test_custom_roundtrip_via_json():
    g = construct_algebra('{"kind":"custom","dim":3,"constants":[[0,1,2,1,0],[1,2,0,1,0],[0,2,1,-1,0]]}')
    np.testing.assert_allclose(g.c, construct_algebra("su2c").c)
    again = construct_algebra(json.loads(json.dumps(g.spec)))
    np.testing.assert_array_equal(again.c, g.c)


@pytest.mark.parametrize("text", ["borel:3", "strict_upper(4)", "direct_sum(su2c, strict_upper(3))", "su2c"])
def test_spec_string_roundtrip(text):
    spec = parse_spec(text)
    assert parse_spec(spec_to_string(spec)) == spec


def test_unknown_kind():
    with pytest.raises(ValueError):
        construct_algebra("octonions")


def test_small_n_rejected():
    with pytest.raises(ValueError):
        construct_algebra("strict_upper:1")


def test_classify_examples():
    c = classify_algebra(construct_algebra("strict_upper:3"))
    assert c.kind == NILPOTENT and c.lower_central_dims == [3, 1, 0]
    c = classify_algebra(construct_algebra("borel:2"))
    assert c.kind == SOLVABLE and c.derived_dims == [3, 1, 0] and c.lower_central_dims[-1] == 1
    assert classify_algebra(construct_algebra("su2c")).kind == NONSOLVABLE
    assert classify_algebra(construct_algebra("abelian:2")).kind == NILPOTENT


@pytest.mark.parametrize("n", range(2, 9))
def test_classify_families(n):
    assert classify_algebra(construct_algebra(f"strict_upper:{n}")).kind == NILPOTENT
    assert classify_algebra(construct_algebra(f"borel:{n}")).kind == SOLVABLE


def test_classify_series_monotone_and_basis():
    for s in SPECS:
        cls = classify_algebra(construct_algebra(s))
        assert all(a >= b for a, b in zip(cls.lower_central_dims, cls.lower_central_dims[1:]))
        assert all(a >= b for a, b in zip(cls.derived_dims, cls.derived_dims[1:]))
        derived_dim = cls.derived_dims[1] if len(cls.derived_dims) > 1 else cls.derived_dims[0]
        assert len(cls.derived_subalgebra_basis) == derived_dim
        assert cls.warning is None


@pytest.mark.parametrize("a,b,expected", [
    ("strict_upper:3", "abelian:2", NILPOTENT),
    ("strict_upper:3", "borel:2", SOLVABLE),
    ("su2c", "strict_upper:3", NONSOLVABLE),
    ("borel:2", "su2c", NONSOLVABLE),
])
def test_direct_sum_classification(a, b, expected):
    assert classify_algebra(construct_algebra({"kind": "direct_sum", "summands": [a, b]})).kind == expected


def test_killing_examples():
    np.testing.assert_allclose(killing_metric(construct_algebra("su2c")), -2 * np.eye(3), atol=1e-14)
    assert not np.any(killing_metric(construct_algebra("abelian:3")))
    for n in range(2, 6):
        assert np.abs(killing_metric(construct_algebra(f"strict_upper:{n}"))).max() < 1e-12


def test_killing_symmetric():
    for s in SPECS:
        k = killing_metric(construct_algebra(s))
        np.testing.assert_allclose(k, k.T, atol=1e-12)


def test_homomorphism_examples():
    su = construct_algebra("su2c")
    rep = validate_homomorphism(Homomorphism(su, su, np.eye(3)))
    assert rep.valid and rep.max_deviation == 0
    total = construct_algebra("direct_sum(su2c,strict_upper:3)")
    assert validate_homomorphism(summand_projection(total, 0)).valid
    assert validate_homomorphism(summand_projection(total, 1)).valid
    bad = Homomorphism(su, construct_algebra("abelian:3"), np.eye(3))
    with pytest.raises(NotAHomomorphismError) as info:
        validate_homomorphism(bad)
    assert tuple(info.value.pair) == ("e1", "e2")
    assert not validate_homomorphism(bad, raise_on_failure=False).valid


def test_homomorphism_shape_checked():
    su = construct_algebra("su2c")
    with pytest.raises(ValueError):
        Homomorphism(su, construct_algebra("abelian:2"), np.eye(3))


vectors = st.lists(st.floats(-3, 3, allow_nan=False), min_size=6, max_size=6)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SPECS), st.integers(0, 2**32 - 1))
def test_jacobi_and_antisymmetry_random(spec, seed):
    g = construct_algebra(spec)
    rng = np.random.default_rng(seed)
    x, y, z = (rng.standard_normal(g.dim) + 1j * rng.standard_normal(g.dim) for _ in range(3))
    jac = bracket(g, x, bracket(g, y, z)) + bracket(g, y, bracket(g, z, x)) + bracket(g, z, bracket(g, x, y))
    assert np.abs(jac).max() < 1e-10
    np.testing.assert_allclose(bracket(g, x, y), -bracket(g, y, x), atol=1e-12)
    assert np.abs(bracket(g, x, x)).max() < 1e-12
