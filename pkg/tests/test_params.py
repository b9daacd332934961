import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinspin.params import (DegenerateShapeWarning, DimensionlessParams, ParameterError,
                             PhysicalParams, collision_radius, params_from_mapping,
                             semi_major_axis, to_dimensionless, to_physical)


def test_principal_moments_reconstructed():
    p = PhysicalParams.from_moments(M1=0.3, C1=0.4, d1=0.1, d2=0.05, q1=0.2, q2=0.3, G=8.0)
    assert p.B1 - p.A1 == pytest.approx(0.1)
    assert 2 * p.C1 - p.B1 - p.A1 == pytest.approx(0.2)
    assert p.M2 == pytest.approx(0.7) and p.C2 == pytest.approx(0.6)
    assert p.mu == pytest.approx(0.21)
    assert p.a == pytest.approx(2.0)
    # M a^2 = 5/2 (C + |d|)
    assert p.M1 * p.sa1 ** 2 == pytest.approx(2.5 * (0.4 + 0.1))


@pytest.mark.parametrize("kw, needle", [
    (dict(d1=0.5), "|d1| <= C1"),
    (dict(q1=0.05), "|d1| <= q1"),
    (dict(q2=1.5), "q2 <= 2 C2"),
])
def test_bound_violations_named(kw, needle):
    base = dict(M1=0.3, C1=0.4, d1=0.1, d2=0.05, q1=0.2, q2=0.3, G=8.0)
    base.update(kw)
    with pytest.raises(ParameterError, match=needle.replace("|", r"\|")):
        PhysicalParams.from_moments(**base)


def test_unchecked_bounds_warn():
    with pytest.warns(DegenerateShapeWarning):
        p = PhysicalParams.from_moments(0.5, 0.5, 0.1, 0.1, 0.0, 0.0, 8.0, check_bounds=False)
    assert p.bound_violations()


def test_basic_relations_always_enforced():
    with pytest.raises(ParameterError):
        PhysicalParams.from_moments(1.2, 0.5, 0.0, 0.0, 0.0, 0.0, 1.0, check_bounds=False)
    with pytest.raises(ParameterError):
        PhysicalParams.from_moments(0.5, 0.5, 0.0, 0.0, 0.0, 0.0, -1.0, check_bounds=False)


def test_degenerate_prolate_warns():
    with pytest.warns(DegenerateShapeWarning):
        PhysicalParams.from_moments(0.5, 0.5, 0.2, 0.0, 0.2, 0.0, 8.0)


def test_sigma_constraint_and_dhat():
    p = DimensionlessParams(e=0.1, C1=0.3, lambda1=0.2, lambda2=0.4, sigma1=0.01)
    assert p.C1 * p.sigma2 == pytest.approx(p.C2 * p.sigma1)
    assert p.dhat2 == pytest.approx(0.4 * p.sigma2)


def test_equal_bodies_semi_major_axis():
    # mu = C1 / (3 sigma a^2) with C1 = 1/2 and mu = 1/4
    assert semi_major_axis(0.5, 1e-3, 0.25) == pytest.approx(math.sqrt(2 / 3e-3))
    with pytest.raises(ParameterError):
        semi_major_axis(0.5, 0.0, 0.25)


@given(st.floats(0.05, 0.95), st.floats(1e-4, 1e-2), st.floats(-0.2, 0.2), st.floats(-0.2, 0.2),
       st.floats(0.0, 1e-3), st.floats(0.0, 1e-3), st.floats(2.0, 50.0), st.floats(0.0, 0.9))
def test_round_trip(C1, sigma, l1, l2, q1, q2, a, e):
    p = DimensionlessParams(e=e, C1=C1, lambda1=l1, lambda2=l2, sigma1=sigma, qhat1=q1, qhat2=q2, a=a)
    mu = C1 / (3 * sigma * a * a)
    if mu > 0.25:
        with pytest.raises(ParameterError):
            to_physical(p, check_bounds=False)
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ph = to_physical(p, check_bounds=False)
    back = to_dimensionless(ph, a, e)
    for k in ("lambda1", "lambda2", "sigma1", "qhat1", "qhat2"):
        assert getattr(back, k) == pytest.approx(getattr(p, k), rel=1e-9, abs=1e-15)
    assert ph.M1 <= 0.5


def test_collision_radius():
    p = PhysicalParams.from_moments(0.5, 0.5, 0.1, 0.1, 0.2, 0.2, 1000.0)
    assert collision_radius(p) == pytest.approx(2 * math.sqrt(2.5 * 0.6 / 0.5))


def test_mapping_dispatch():
    p = params_from_mapping({"e": "0.1", "lambda1": "0.2"})
    assert isinstance(p, DimensionlessParams) and p.lambda1 == 0.2
    q = params_from_mapping({"M1": 0.5, "C1": 0.5, "d1": 0.1, "d2": 0.1, "q1": 0.2, "q2": 0.2, "G": 8})
    assert isinstance(q, PhysicalParams)
    with pytest.raises(ParameterError):
        params_from_mapping({"M1": 0.5})
    with pytest.raises(ParameterError):
        params_from_mapping({"foo": 1})


def test_dimensionless_validation():
    for kw in (dict(e=1.0), dict(e=0.1, C1=0.0), dict(e=0.1, sigma1=-1.0), dict(e=0.1, qhat1=-1e-3)):
        with pytest.raises(ParameterError):
            DimensionlessParams(**kw)
