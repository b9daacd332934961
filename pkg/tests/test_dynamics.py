import math
import warnings

import numpy as np
import pytest

from spinspin.dynamics import (FullModel, ModelKind, OneBodyModel, SingularStateError, SpinModel,
                               SpinState, keplerian_initial_state, spin_rhs_eccentric)
from spinspin.integrator import IntegratorConfig, integrate
from spinspin.kepler import kepler_geometry
from spinspin.params import DimensionlessParams, to_physical
from spinspin.potential import grad_V

DP = DimensionlessParams(e=0.15, C1=0.45, lambda1=0.3, lambda2=0.2, sigma1=1e-3,
                         qhat1=0.002, qhat2=0.001, a=30.0)


@pytest.fixture(scope="module")
def phys():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return to_physical(DP, check_bounds=False)


def _fd_jac(fun, y, h=1e-6):
    cols = []
    for i in range(len(y)):
        up, dn = y.copy(), y.copy()
        step = h * max(1.0, abs(y[i]))
        up[i] += step; dn[i] -= step
        cols.append((fun(up) - fun(dn)) / (2 * step))
    return np.stack(cols, axis=1)


def test_spin_torques_are_potential_gradients(phys):
    model = SpinModel.from_params(DP, ModelKind.KeplerianSpinSpin)
    t = np.linspace(0, 2 * np.pi, 9)
    th1, th2 = 0.4 + t, -1.0 + 0.8 * t
    rho, f, _ = kepler_geometry(DP.e, t)
    g = grad_V(phys, "V2V4", phys.a / rho, f, th1, th2)
    a1, a2 = model.accel(t, th1, th2)
    assert np.allclose(phys.C1 * a1, -g[2], rtol=1e-10, atol=1e-16)
    assert np.allclose(phys.C2 * a2, -g[3], rtol=1e-10, atol=1e-16)


def test_spin_orbit_kind_drops_spin_spin_terms(phys):
    model = SpinModel.from_params(DP, ModelKind.KeplerianSpinOrbit)
    t, th1, th2 = 0.7, 0.2, 1.4
    rho, f, _ = kepler_geometry(DP.e, t)
    g = grad_V(phys, "V2", phys.a / rho, f, th1, th2)
    a1, _ = model.accel(t, th1, th2)
    # V2 alone also carries the q1 term, which has no angle dependence
    assert phys.C1 * a1 == pytest.approx(-g[2], rel=1e-10)


@pytest.mark.parametrize("kind", [ModelKind.KeplerianSpinSpin, ModelKind.KeplerianSpinOrbit,
                                  ModelKind.SphericalCompanion])
def test_spin_jacobian(kind):
    model = SpinModel.from_params(DP, kind)
    y = np.array([0.3, -0.8, 0.5, 0.6])
    assert np.allclose(model.jac(1.1, y), _fd_jac(lambda z: model.rhs(1.1, z), y), atol=1e-8)


def test_one_body_jacobian_and_spherical_companion():
    m = OneBodyModel.from_params(DP, ModelKind.SphericalCompanion)
    y = np.array([0.9, 1.2])
    assert np.allclose(m.jac(0.4, y), _fd_jac(lambda z: m.rhs(0.4, z), y), atol=1e-8)
    # with a spherical companion the two-body model leaves body 1 on the one-body equation
    two = SpinModel.from_params(DP, ModelKind.SphericalCompanion)
    assert two.accel(0.4, 0.9, 2.0)[0] == pytest.approx(m.accel(0.4, 0.9), rel=1e-13)


@pytest.mark.parametrize("kind", [ModelKind.FullSpinSpin, ModelKind.FullSpinOrbit,
                                  ModelKind.KeplerianFullForm])
def test_full_jacobian(phys, kind):
    model = FullModel(phys, kind)
    z = keplerian_initial_state(phys, DP.e, 0.2, -0.4, 1.0, 1.1)
    z[1] = 0.3
    z[4] = 0.01
    J = model.jac(0.0, z)
    fd = _fd_jac(lambda w: model.rhs(0.0, w), z, h=1e-7)
    assert np.allclose(J, fd, rtol=1e-5, atol=1e-9 * np.max(np.abs(J)))


def test_eccentric_anomaly_form_matches_mean_anomaly_form():
    model = SpinModel.from_params(DP)
    y0 = model.state(0.1, 0.3, 1.05, 0.95)
    e, U = DP.e, 5.0
    T = U - e * math.sin(U)
    cfg = IntegratorConfig(1e-12, 1e-12)
    yt = integrate(model.rhs, y0, 0.0, T, cfg).y_final
    # x_j(u) = theta_j(t(u)), dx/du = theta' (1 - e cos u)
    x0 = np.array([0.1, 0.3, 1.05 * (1 - e), 0.95 * (1 - e)])
    xu = integrate(lambda u, x: spin_rhs_eccentric(DP, u, x), x0, 0.0, U, cfg).y_final
    assert np.allclose(xu[:2], yt[:2], atol=1e-9)
    w1, w2 = model.velocities(yt)
    assert np.allclose(xu[2:], np.array([w1, w2]) * (1 - e * math.cos(U)), atol=1e-9)


def test_negative_lambda_is_quarter_turn():
    pos = SpinModel.from_params(DP)
    neg = SpinModel.from_params(DimensionlessParams(e=DP.e, C1=DP.C1, lambda1=-DP.lambda1,
                                                    lambda2=-DP.lambda2, sigma1=DP.sigma1,
                                                    qhat1=DP.qhat1, qhat2=DP.qhat2))
    t, th1, th2 = 0.8, 0.3, -1.1
    a = pos.accel(t, th1, th2)
    b = neg.accel(t, th1 + math.pi / 2, th2 + math.pi / 2)
    assert np.allclose(a, b, rtol=1e-13)


def test_keplerian_full_form_angular_momentum_rate(phys):
    model = FullModel(phys, ModelKind.KeplerianFullForm)
    z = keplerian_initial_state(phys, DP.e, 0.2, -0.4, 1.0, 1.1)
    z[1] = 0.9
    dz = model.rhs(0.0, z)
    dPf = dz[5] + dz[6] + dz[7]
    g = model.V_per_angle_gradient(z)
    assert dz[5] == 0.0
    assert dPf == pytest.approx(-(g[1] + g[2]), rel=1e-12)
    # the removed force is exactly the perturbative part of the full model
    full = FullModel(phys, ModelKind.FullSpinSpin).rhs(0.0, z)
    assert np.allclose(full - dz, model.perturbation(z), rtol=1e-10, atol=1e-18)


def test_full_model_conserves_energy_and_momentum(phys):
    model = FullModel(phys, ModelKind.FullSpinSpin)
    z0 = keplerian_initial_state(phys, DP.e, 0.2, -0.4, 1.0, 1.1)
    z1 = integrate(model.rhs, z0, 0.0, 4 * np.pi, IntegratorConfig(1e-12, 1e-12)).y_final
    assert model.hamiltonian(z1) == pytest.approx(model.hamiltonian(z0), rel=1e-11)
    assert FullModel.total_angular_momentum(z1) == pytest.approx(
        FullModel.total_angular_momentum(z0), rel=1e-11)


def test_states_and_errors(phys):
    s = SpinState.from_velocities(0.1, 0.2, 1.0, 2.0, C1=0.4)
    assert s.velocities(0.4) == pytest.approx((1.0, 2.0))
    assert ModelKind.parse("spin-spin") is ModelKind.KeplerianSpinSpin
    with pytest.raises(ValueError):
        ModelKind.parse("nbody")
    with pytest.raises(SingularStateError):
        FullModel(phys).rhs(0.0, np.array([0.0, 0, 0, 0, 0, 1, 0, 0]))
    with pytest.raises(ValueError):
        SpinModel(ModelKind.FullSpinSpin, 0.1)
