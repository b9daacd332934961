import math
import warnings

import numpy as np
import pytest

from appendix_series import printed_series
from spinspin.dynamics import SpinModel, ModelKind
from spinspin.kepler import kepler_geometry, solve_kepler
from spinspin.params import DimensionlessParams, PhysicalParams
from spinspin.potential import (PotentialDomainError, PotentialTruncation, eval_F12, eval_V,
                                eval_V_direct, exact_parts, grad_V, hess_V, resonance_inventory,
                                series_table, series_V, term_table, term_table_batch, unit_series)


@pytest.fixture
def phys():
    return PhysicalParams.from_moments(0.4, 0.45, 0.1, 0.08, 0.2, 0.15, 20.0 ** 3)


def _points(n=25, seed=3):
    rng = np.random.default_rng(seed)
    return (rng.uniform(8.0, 40.0, n), rng.uniform(-7, 7, n), rng.uniform(-7, 7, n),
            rng.uniform(-7, 7, n))


@pytest.mark.parametrize("trunc", ["V0", "V2", "V2V4"])
def test_table_matches_direct_formula(phys, trunc):
    r, f, t1, t2 = _points()
    a = eval_V(phys, trunc, r, f, t1, t2)
    b = eval_V_direct(phys, trunc, r, f, t1, t2)
    assert np.allclose(a, b, rtol=1e-13, atol=0)


def test_gradient_against_finite_differences(phys):
    r, f, t1, t2 = _points(8)
    g = grad_V(phys, "V2V4", r, f, t1, t2)
    x = np.stack([r, f, t1, t2])
    for i in range(4):
        h = 1e-4 * (r if i == 0 else 1.0)
        up, dn, up2, dn2 = (x.copy() for _ in range(4))
        up[i] += h; dn[i] -= h; up2[i] += 2 * h; dn2[i] -= 2 * h
        fd = (8 * (eval_V_direct(phys, "V2V4", *up) - eval_V_direct(phys, "V2V4", *dn))
              - (eval_V_direct(phys, "V2V4", *up2) - eval_V_direct(phys, "V2V4", *dn2))) / (12 * h)
        scale = np.max(np.abs(g[i])) + 1e-3 * np.max(np.abs(g))
        assert np.max(np.abs(fd - g[i])) < 1e-7 * scale


def test_angle_gradient_sums_to_zero(phys):
    g = grad_V(phys, "V2V4", *_points())
    # rotating every angle together leaves V unchanged
    assert np.max(np.abs(g[1] + g[2] + g[3])) < 1e-12 * np.max(np.abs(g[1:]))


def test_hessian_against_gradient_differences(phys):
    r, f, t1, t2 = 12.0, 0.4, 1.1, -0.7
    H = hess_V(phys, "V2V4", r, f, t1, t2)
    x = np.array([r, f, t1, t2])
    for j in range(4):
        h = 1e-5 * (r if j == 0 else 1.0)
        up, dn = x.copy(), x.copy()
        up[j] += h; dn[j] -= h
        col = (grad_V(phys, "V2V4", *up) - grad_V(phys, "V2V4", *dn)) / (2 * h)
        assert np.allclose(H[:, j], col, rtol=1e-6, atol=1e-8 * np.max(np.abs(H)))
    assert np.allclose(H, H.T)


def test_batched_table(phys):
    other = PhysicalParams.from_moments(0.5, 0.5, 0.05, 0.05, 0.1, 0.1, 10.0 ** 3)
    tb = term_table_batch([phys, other], "V2V4")
    for j, p in enumerate((phys, other)):
        full = term_table(p, "V2V4")
        assert np.allclose(np.sort(tb.c[:, j][tb.c[:, j] != 0]), np.sort(full.c))


def test_domain_and_aliases(phys):
    with pytest.raises(PotentialDomainError):
        eval_V(phys, "V2", 0.0, 0.0, 0.0, 0.0)
    assert PotentialTruncation.parse("spin-spin") is PotentialTruncation.V2V4
    assert PotentialTruncation.parse("kepler") is PotentialTruncation.V0
    with pytest.raises(ValueError):
        PotentialTruncation.parse("V6")


def test_torque_functions_reproduce_spin_equations():
    p = DimensionlessParams(e=0.2, C1=0.45, lambda1=0.3, lambda2=0.2, sigma1=0.02,
                            qhat1=0.01, qhat2=0.004)
    model = SpinModel.from_params(p, ModelKind.KeplerianSpinSpin)
    t = np.linspace(0, 2 * np.pi, 13)
    th1, th2 = 0.3 + 0.7 * t, -0.2 + 1.3 * t
    u = solve_kepler(p.e, t)
    rho = 1 / (1 - p.e * np.cos(u))
    F1, F2 = eval_F12(p, u, th1, th2)
    a1, a2 = model.accel(t, th1, th2)
    assert np.allclose(a1, -0.5 * p.lambda1 * rho ** 5 * F1, rtol=1e-12, atol=1e-15)
    assert np.allclose(a2, -0.5 * p.lambda2 * rho ** 5 * F2, rtol=1e-12, atol=1e-15)


def _fourier_cos(k, n, e, npts=4096):
    t = 2 * np.pi * np.arange(npts) / npts
    rho, f, _ = kepler_geometry(e, t)
    # (a/r)^k cos(n f) is even in t, so the spectrum is a cosine series
    c = np.fft.rfft(rho ** k * np.cos(n * f)).real / npts
    c[1:] *= 2
    return c


@pytest.mark.parametrize("k, n", [(3, 0), (3, 2), (5, 0), (5, 2), (5, 4)])
def test_hansen_series_against_fft(k, n):
    e = 2e-3
    c = _fourier_cos(k, n, e)
    ser = unit_series(k, n, 2)
    pred = np.zeros(12)
    for (ep, m), coef in ser.items():
        pred[abs(m)] += float(coef) * e ** ep
    assert np.max(np.abs(c[:12] - pred)) < 200 * e ** 3


def test_known_spin_orbit_coefficients():
    s = unit_series(3, 2, 2)
    assert s[(1, 3)] == pytest.approx(3.5) and s[(1, 1)] == pytest.approx(-0.5)
    assert s[(2, 4)] == pytest.approx(8.5) and s[(2, 2)] == pytest.approx(-2.5)
    # no secular 0:1 term at second order
    assert (2, 0) not in s


def _series_error(p, part, e, table=None):
    t = np.linspace(0, 2 * np.pi, 97)
    th1, th2 = 0.37 + 0.5 * t, -1.2 + 1.5 * t
    exact = exact_parts(p, e, t, th1, th2)[0 if part == "V2" else 1]
    if table is None:
        approx = series_V(p, e, t, th1, th2)[0 if part == "V2" else 1]
    else:
        approx = sum(c * e ** ep * np.cos(m * t + n1 * th1 + n2 * th2)
                     for (ep, m, n1, n2), c in table.items())
    return np.max(np.abs(exact - approx))


@pytest.mark.parametrize("part", ["V2", "V4"])
def test_series_error_is_third_order(phys, part):
    ratio = _series_error(phys, part, 0.02) / _series_error(phys, part, 0.01)
    assert 6.0 < ratio < 10.0


@pytest.mark.parametrize("part", ["V2", "V4"])
def test_printed_series_differs_from_exact_expansion(phys, part):
    printed = printed_series(phys, part)
    ours = series_table(phys, part, 2)
    # circular orbit: the two agree term by term
    for key in set(printed) | set(ours):
        if key[0] == 0:
            assert printed.get(key, 0.0) == pytest.approx(ours.get(key, 0.0), rel=1e-12)
    # the printed first-order side bands are wrong, so its error is not third order
    ratio = _series_error(phys, part, 0.02, printed) / _series_error(phys, part, 0.01, printed)
    assert ratio < 4.5


def test_printed_first_order_spin_orbit_sidebands(phys):
    printed = printed_series(phys, "V2")
    ours = series_table(phys, "V2", 2)
    base = phys.G * phys.M2 * phys.d1 / phys.a ** 3
    assert printed[(1, 1, -2, 0)] / base == pytest.approx(-9 / 8)
    assert ours[(1, 1, -2, 0)] / base == pytest.approx(3 / 8)
    assert ours[(1, 3, -2, 0)] / base == pytest.approx(-21 / 8)


def test_inventory(phys):
    so, ss = resonance_inventory(phys, "V2", 1)
    assert so == {(3, 2), (1, 2)} and not ss
    so, _ = resonance_inventory(phys, "V2", 2)
    assert (0, 1) not in so
    _, ss = resonance_inventory(phys, "V4", 0)
    assert ss == {(0, 2, -2), (4, -2, -2)}


def test_series_warns_at_large_e(phys):
    with pytest.warns(RuntimeWarning):
        series_V(phys, 0.4, 0.0, 0.0, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        series_V(phys, 0.1, 0.0, 0.0, 0.0)
