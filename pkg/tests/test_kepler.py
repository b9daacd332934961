import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from spinspin.kepler import (KeplerDomainError, KeplerOrbit, eccentricity_from_modulus,
                             kepler_geometry, kepler_residual, orbit_state, osculating_elements,
                             osculating_from_polar, polar_to_cartesian, solve_kepler, true_anomaly)


def test_circular_orbit_is_identity():
    t = np.linspace(-10, 10, 101)
    assert np.array_equal(solve_kepler(0.0, t), t)


def test_known_value_against_root_finder():
    # independent bracketed root of u - e sin u - t
    for e, t in [(0.1, 0.3), (0.5, 2.0), (0.95, 0.01), (0.99, 3.1)]:
        ref = brentq(lambda u: u - e * math.sin(u) - t, t - 1.0, t + 1.0, xtol=1e-15)
        assert solve_kepler(e, t) == pytest.approx(ref, abs=1e-14)


@given(st.floats(0.0, 0.99), st.floats(-50.0, 50.0))
def test_residual_and_branch(e, t):
    u = solve_kepler(e, t)
    assert abs(kepler_residual(e, t, u)) <= 1e-13
    # u - t is 2pi periodic in t, so the root stays within e of t
    assert abs(u - t) <= e + 1e-12


def test_periapsis_apoapsis():
    assert solve_kepler(0.7, 0.0) == 0.0
    assert solve_kepler(0.7, math.pi) == pytest.approx(math.pi, abs=1e-15)


def test_domain_errors():
    for bad in (-0.1, 1.0, 1.5, float("nan")):
        with pytest.raises(KeplerDomainError):
            solve_kepler(bad, 0.3)


def test_true_anomaly_series_small_e():
    # f = t + 2e sin t + 5/4 e^2 sin 2t + O(e^3)
    e = 1e-3
    t = np.linspace(0, 2 * np.pi, 17)
    f = true_anomaly(e, solve_kepler(e, t))
    approx = t + 2 * e * np.sin(t) + 1.25 * e * e * np.sin(2 * t)
    assert np.max(np.abs(f - approx)) < 5 * e ** 3


def test_true_anomaly_unwrapped():
    t = np.linspace(0, 6 * np.pi, 301)
    f = kepler_geometry(0.6, t)[1]
    assert np.all(np.diff(f) > 0)
    assert f[-1] == pytest.approx(6 * np.pi, abs=1e-12)


def test_geometry_radius():
    e = 0.3
    rho, f, u = kepler_geometry(e, 1.2)
    # r/a from the conic equation in f
    assert 1 / rho == pytest.approx((1 - e * e) / (1 + e * math.cos(f)), rel=1e-14)


def test_orbit_validation():
    with pytest.raises(KeplerDomainError):
        KeplerOrbit(a=2.0, e=0.1, mu=0.25, G=7.0)
    with pytest.raises(KeplerDomainError):
        KeplerOrbit(a=-1.0, e=0.1, mu=0.25)
    o = KeplerOrbit(a=3.0, e=0.2, mu=0.2)
    assert o.G == pytest.approx(27.0)


@given(st.floats(0.5, 50.0), st.floats(0.0, 0.95), st.floats(0.0, 2 * math.pi))
def test_osculating_round_trip(a, e, t):
    o = KeplerOrbit(a=a, e=e, mu=0.2)
    el = osculating_from_polar(*orbit_state(o, t), o.mu, o.G)
    assert el.a_F == pytest.approx(a, rel=1e-10)
    assert el.e_F == pytest.approx(e, abs=1e-10)
    if e > 1e-6:
        assert abs(math.remainder(el.omega_F, 2 * math.pi)) < 1e-8 / e
    assert el.h_F == pytest.approx(math.sqrt(o.G * a * (1 - e * e)), rel=1e-10)


def test_osculating_modulus_formula_matches_vector_form():
    o = KeplerOrbit(a=5.0, e=0.4, mu=0.25)
    r, f, pr, pf = orbit_state(o, 0.7)
    el = osculating_from_polar(r, f, pr, pf, o.mu, o.G)
    fdot = pf / (o.mu * r * r)
    assert eccentricity_from_modulus(r, fdot, el.a_F, o.G) == pytest.approx(el.e_F, rel=1e-9)


def test_circular_has_no_periapsis_and_unbound_flag():
    pos, vel = polar_to_cartesian(2.0, 0.3, 0.0, 1.0)
    el = osculating_elements(pos, vel, G=8.0)
    assert el.e_F < 1e-12 and not el.omega_defined
    pos, vel = polar_to_cartesian(1.0, 0.0, 5.0, 0.0)
    assert not osculating_elements(pos, vel, G=1.0).elliptic
