"""Vector fields of the model hierarchy and their Jacobians.

Keplerian spin models use the state ``(theta1, theta2, p1, p2)`` with
``p_j = C_j dtheta_j/dt`` and the mean anomaly ``t`` as time; the one-body
spin-orbit equation uses ``(theta, dtheta/dt)``.  Full models use
``z = (r, f, theta1, theta2, p_r, p_f, p1, p2)``.

Parameters of the Keplerian models may be numpy arrays broadcasting against
the batch axes of the state, which is how the scans integrate many parameter
values in one call.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .kepler import kepler_geometry
from .params import DimensionlessParams, PhysicalParams
from .potential import (PotentialTruncation, eval_F12, grad_table, hess_table,
                        term_table, term_table_batch, eval_table)


class ModelKind(enum.Enum):
    KeplerianSpinOrbit = "spin-orbit"
    KeplerianSpinSpin = "spin-spin"
    SphericalCompanion = "spherical-companion"
    FullSpinOrbit = "full-spin-orbit"
    FullSpinSpin = "full-spin-spin"
    KeplerianFullForm = "keplerian-full-form"

    @property
    def is_keplerian(self) -> bool:
        return self in (ModelKind.KeplerianSpinOrbit, ModelKind.KeplerianSpinSpin,
                        ModelKind.SphericalCompanion)

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        v = str(value).strip()
        for k in cls:
            if v in (k.value, k.name):
                return k
        raise ValueError(f"unknown model kind {value!r}")


class SingularStateError(ValueError):
    """Full-model state with ``r <= 0``."""


@dataclass(frozen=True)
class SpinState:
    t: float
    theta1: float
    theta2: float
    p1: float
    p2: float

    def as_array(self):
        return np.array([self.theta1, self.theta2, self.p1, self.p2])

    @classmethod
    def from_velocities(cls, theta1, theta2, dtheta1, dtheta2, C1=0.5, t=0.0):
        return cls(t, theta1, theta2, C1 * dtheta1, (1.0 - C1) * dtheta2)

    def velocities(self, C1=0.5):
        return self.p1 / C1, self.p2 / (1.0 - C1)


@dataclass(frozen=True)
class FullState:
    r: float
    f: float
    theta1: float
    theta2: float
    p_r: float
    p_f: float
    p1: float
    p2: float

    def as_array(self):
        return np.array([self.r, self.f, self.theta1, self.theta2,
                         self.p_r, self.p_f, self.p1, self.p2])

    @property
    def phi(self):
        """Reduced angles ``theta_j - f``."""
        return self.theta1 - self.f, self.theta2 - self.f

    @property
    def P_f(self):
        """Total angular momentum ``p_f + p1 + p2``."""
        return self.p_f + self.p1 + self.p2


# --- Keplerian spin models ---------------------------------------------------

class SpinModel:
    """Keplerian spin-orbit / spin-spin equations with (possibly array) parameters.

    ``rhs`` and ``jac`` act on ``(theta1, theta2, p1, p2)`` of shape
    ``(4, *batch)``.
    """

    def __init__(self, kind, e, C1=0.5, lambda1=0.0, lambda2=0.0, sigma1=0.0,
                 qhat1=0.0, qhat2=0.0):
        kind = ModelKind.parse(kind)
        if not kind.is_keplerian:
            raise ValueError(f"{kind.name} is not a Keplerian spin model")
        self.kind = kind
        self.e = np.asarray(e, dtype=float)
        self.C1 = np.asarray(C1, dtype=float)
        self.C2 = 1.0 - self.C1
        lam1 = np.asarray(lambda1, dtype=float)
        lam2 = np.asarray(lambda2, dtype=float)
        sig1 = np.asarray(sigma1, dtype=float)
        qh1 = np.asarray(qhat1, dtype=float)
        qh2 = np.asarray(qhat2, dtype=float)
        sig2 = self.C2 * sig1 / self.C1
        if kind is ModelKind.KeplerianSpinOrbit:
            zero = np.zeros_like(lam1)
            self.D1 = self.D2 = self.Q1 = self.Q2 = zero
        elif kind is ModelKind.SphericalCompanion:
            lam2 = np.zeros_like(lam2)
            self.D1 = lam1 * sig1
            self.D2 = np.zeros_like(self.D1)
            self.Q1 = 25.0 / 28.0 * qh1
            self.Q2 = np.zeros_like(self.Q1)
        else:
            self.D1 = lam1 * sig1
            self.D2 = lam2 * sig2
            self.Q1 = 1.25 * (qh2 + 5.0 / 7.0 * qh1)
            self.Q2 = 1.25 * (qh1 + 5.0 / 7.0 * qh2)
        self.lam1, self.lam2 = lam1, lam2

    @classmethod
    def from_params(cls, p: DimensionlessParams, kind=ModelKind.KeplerianSpinSpin):
        return cls(kind, p.e, p.C1, p.lambda1, p.lambda2, p.sigma1, p.qhat1, p.qhat2)

    def geometry(self, t):
        rho, f, _ = kepler_geometry(self.e, t)
        return rho, f

    def _trig(self, t, th1, th2):
        rho, f = self.geometry(t)
        a1 = 2.0 * (th1 - f)
        a2 = 2.0 * (th2 - f)
        return rho, a1, a2

    def accel(self, t, th1, th2):
        """Angular accelerations ``(theta1'', theta2'')``."""
        rho, a1, a2 = self._trig(t, th1, th2)
        r3 = rho ** 3
        s1, s2 = np.sin(a1), np.sin(a2)
        if self.kind is ModelKind.KeplerianSpinOrbit:
            return -0.5 * self.lam1 * r3 * s1, -0.5 * self.lam2 * r3 * s2
        r5 = r3 * rho * rho
        s12 = np.sin(2.0 * (th1 - th2))
        smix = np.sin(a1 + a2)
        b1 = r3 * s1 + r5 * (self.Q1 * s1 + 25.0 / 8.0 * self.D1 * np.sin(2.0 * a1)
                             + self.D2 * (0.375 * s12 + 4.375 * smix))
        b2 = r3 * s2 + r5 * (self.Q2 * s2 + 25.0 / 8.0 * self.D2 * np.sin(2.0 * a2)
                             + self.D1 * (-0.375 * s12 + 4.375 * smix))
        return -0.5 * self.lam1 * b1, -0.5 * self.lam2 * b2

    def accel_jacobian(self, t, th1, th2):
        """``d theta_j'' / d theta_k`` as ``(k11, k12, k21, k22)``."""
        rho, a1, a2 = self._trig(t, th1, th2)
        r3 = rho ** 3
        c1, c2 = np.cos(a1), np.cos(a2)
        if self.kind is ModelKind.KeplerianSpinOrbit:
            z = np.zeros(np.broadcast(r3, c1, c2, self.lam1).shape)
            return -self.lam1 * r3 * c1, z, z, -self.lam2 * r3 * c2
        r5 = r3 * rho * rho
        c12 = np.cos(2.0 * (th1 - th2))
        cmix = np.cos(a1 + a2)
        k11 = -0.5 * self.lam1 * (2.0 * r3 * c1 + r5 * (
            2.0 * self.Q1 * c1 + 12.5 * self.D1 * np.cos(2.0 * a1)
            + self.D2 * (0.75 * c12 + 8.75 * cmix)))
        k12 = -0.5 * self.lam1 * r5 * self.D2 * (-0.75 * c12 + 8.75 * cmix)
        k22 = -0.5 * self.lam2 * (2.0 * r3 * c2 + r5 * (
            2.0 * self.Q2 * c2 + 12.5 * self.D2 * np.cos(2.0 * a2)
            + self.D1 * (0.75 * c12 + 8.75 * cmix)))
        k21 = -0.5 * self.lam2 * r5 * self.D1 * (-0.75 * c12 + 8.75 * cmix)
        return k11, k12, k21, k22

    def rhs(self, t, y):
        th1, th2, p1, p2 = y
        acc1, acc2 = self.accel(t, th1, th2)
        return np.stack(np.broadcast_arrays(p1 / self.C1, p2 / self.C2,
                                            self.C1 * acc1, self.C2 * acc2))

    def jac(self, t, y):
        """Jacobian of :meth:`rhs`, ``J2 . Hess(H_K)``, shape ``(4, 4, *batch)``."""
        th1, th2 = y[0], y[1]
        k11, k12, k21, k22 = self.accel_jacobian(t, th1, th2)
        shape = np.broadcast(th1, k11).shape
        J = np.zeros((4, 4) + shape)
        J[0, 2] = 1.0 / self.C1
        J[1, 3] = 1.0 / self.C2
        J[2, 0] = self.C1 * k11
        J[2, 1] = self.C1 * k12
        J[3, 0] = self.C2 * k21
        J[3, 1] = self.C2 * k22
        return J

    def state(self, theta1, theta2, dtheta1, dtheta2):
        """Canonical state from angles and angular velocities."""
        return np.stack(np.broadcast_arrays(
            np.asarray(theta1, float), np.asarray(theta2, float),
            self.C1 * np.asarray(dtheta1, float), self.C2 * np.asarray(dtheta2, float)))

    def velocities(self, y):
        return y[2] / self.C1, y[3] / self.C2


class OneBodyModel:
    """Spin equation of a single body on the Keplerian orbit.

    ``theta'' = -(lam/2) [(a/r)^3 sin 2phi + (a/r)^5 (Q sin 2phi + 25/8 D sin 4phi)]``
    with ``phi = theta - f``.  ``Q = D = 0`` is the spin-orbit problem; the
    spherical-companion problem has ``Q = 25/28 qhat1`` and ``D = lambda1 sigma1``.
    State ``(theta, dtheta/dt)`` of shape ``(2, *batch)``; all parameters may
    be arrays.
    """

    def __init__(self, e, lam, Q=0.0, D=0.0):
        self.e = np.asarray(e, dtype=float)
        self.lam = np.asarray(lam, dtype=float)
        self.Q = np.asarray(Q, dtype=float)
        self.D = np.asarray(D, dtype=float)
        self._pure = not (np.any(self.Q != 0.0) or np.any(self.D != 0.0))

    @classmethod
    def from_params(cls, p: DimensionlessParams, kind=ModelKind.SphericalCompanion):
        kind = ModelKind.parse(kind)
        if kind is ModelKind.KeplerianSpinOrbit:
            return cls(p.e, p.lambda1)
        if kind is ModelKind.SphericalCompanion:
            return cls(p.e, p.lambda1, 25.0 / 28.0 * p.qhat1, p.lambda1 * p.sigma1)
        raise ValueError(f"{kind.name} is not a one-body model")

    def accel(self, t, th):
        rho, f, _ = kepler_geometry(self.e, t)
        a = 2.0 * (th - f)
        b = rho ** 3 * np.sin(a)
        if not self._pure:
            b = b + rho ** 5 * (self.Q * np.sin(a) + 25.0 / 8.0 * self.D * np.sin(2.0 * a))
        return -0.5 * self.lam * b

    def rhs(self, t, y):
        th, w = y
        return np.stack(np.broadcast_arrays(w, self.accel(t, th)))

    def jac(self, t, y):
        """Hill-equation coefficient, e.g. ``y'' + lambda (a/r)^3 cos(2 theta - 2f) y = 0``."""
        rho, f, _ = kepler_geometry(self.e, t)
        a = 2.0 * (y[0] - f)
        k = rho ** 3 * np.cos(a)
        if not self._pure:
            k = k + rho ** 5 * (self.Q * np.cos(a) + 25.0 / 4.0 * self.D * np.cos(2.0 * a))
        k = -self.lam * k
        shape = np.broadcast(y[0], k).shape
        J = np.zeros((2, 2) + shape)
        J[0, 1] = 1.0
        J[1, 0] = k
        return J


SpinOrbitModel = OneBodyModel


def spin_rhs(p: DimensionlessParams, kind, t, y):
    """Derivative of ``(theta1, theta2, p1, p2)`` for a Keplerian model."""
    return SpinModel.from_params(p, kind).rhs(t, np.asarray(y, dtype=float))


def spin_rhs_eccentric(p: DimensionlessParams, u, x):
    """Spin-spin system with the eccentric anomaly as time.

    ``x = (x1, x2, y1, y2)`` with ``x_j(u) = theta_j(u - e sin u)`` and
    ``y_j = dx_j/du``.
    """
    x1, x2, y1, y2 = np.asarray(x, dtype=float)
    e = p.e
    rho = 1.0 / (1.0 - e * np.cos(u))
    F1, F2 = eval_F12(p, u, x1, x2)
    damp = rho * e * np.sin(u)
    r3 = rho ** 3
    return np.stack([y1, y2,
                     damp * y1 - 0.5 * p.lambda1 * r3 * F1,
                     damp * y2 - 0.5 * p.lambda2 * r3 * F2])


# --- full models -------------------------------------------------------------

_FULL_TRUNC = {
    ModelKind.FullSpinOrbit: PotentialTruncation.V2,
    ModelKind.FullSpinSpin: PotentialTruncation.V2V4,
    ModelKind.KeplerianFullForm: PotentialTruncation.V2V4,
}


class FullModel:
    """Hamilton's equations of ``H = p_r^2/2mu + p_f^2/(2 mu r^2) + sum p_j^2/2C_j + V``.

    ``KeplerianFullForm`` keeps the spin equations but removes the
    perturbative forces from ``p_r`` and ``p_f``, so the orbit stays on the
    Keplerian ellipse; it is not Hamiltonian.
    """

    def __init__(self, p, kind=ModelKind.FullSpinSpin, trunc=None):
        kind = ModelKind.parse(kind)
        if kind.is_keplerian:
            raise ValueError(f"{kind.name} is not a full model")
        self.kind = kind
        self.trunc = PotentialTruncation.parse(trunc) if trunc is not None else _FULL_TRUNC[kind]
        if isinstance(p, PhysicalParams):
            self.p = p
            self.mu, self.C1, self.C2 = p.mu, p.C1, p.C2
            self.table = term_table(p, self.trunc)
            self.table0 = term_table(p, PotentialTruncation.V0)
            self.table_per = term_table(p, self.trunc, include_v0=False)
        else:
            # a sequence of parameter sets, one per trailing batch index
            ps = list(p)
            self.p = ps
            self.mu = np.array([q.mu for q in ps])
            self.C1 = np.array([q.C1 for q in ps])
            self.C2 = np.array([q.C2 for q in ps])
            self.table = term_table_batch(ps, self.trunc)
            self.table0 = term_table_batch(ps, PotentialTruncation.V0)
            self.table_per = term_table_batch(ps, self.trunc, include_v0=False)

    def _check(self, r):
        if np.any(np.asarray(r) <= 0.0):
            raise SingularStateError("r must be positive")

    def hamiltonian(self, z):
        r, f, t1, t2, pr, pf, p1, p2 = z
        self._check(r)
        kin = pr**2 / (2 * self.mu) + pf**2 / (2 * self.mu * r**2) + p1**2 / (2 * self.C1) + p2**2 / (2 * self.C2)
        return kin + eval_table(self.table, r, f, t1, t2)

    @staticmethod
    def total_angular_momentum(z):
        return z[5] + z[6] + z[7]

    def rhs(self, t, z):
        r, f, t1, t2, pr, pf, p1, p2 = z
        self._check(r)
        mu = self.mu
        g = grad_table(self.table, r, f, t1, t2)
        if self.kind is ModelKind.KeplerianFullForm:
            g0 = grad_table(self.table0, r, f, t1, t2)
            dpr = pf**2 / (mu * r**3) - g0[0]
            dpf = np.zeros_like(np.asarray(pf, dtype=float))
        else:
            dpr = pf**2 / (mu * r**3) - g[0]
            dpf = -g[1]
        return np.stack(np.broadcast_arrays(pr / mu, pf / (mu * r * r), p1 / self.C1, p2 / self.C2,
                                            dpr, dpf, -g[2], -g[3]))

    def hessian_H(self, z):
        """``d^2 H / dz^2`` of the full Hamiltonian, shape ``(8, 8, *batch)``."""
        r, f, t1, t2, pr, pf, p1, p2 = z
        self._check(r)
        mu = self.mu
        HV = hess_table(self.table, r, f, t1, t2)
        shape = HV.shape[2:]
        H = np.zeros((8, 8) + shape)
        H[:4, :4] = HV
        H[0, 0] = H[0, 0] + 3.0 * pf**2 / (mu * r**4)
        H[0, 5] = H[5, 0] = -2.0 * pf / (mu * r**3)
        H[4, 4] = 1.0 / mu
        H[5, 5] = 1.0 / (mu * r * r)
        H[6, 6] = 1.0 / self.C1
        H[7, 7] = 1.0 / self.C2
        return H

    def jac_hamiltonian(self, t, z):
        """``J4 d^2H`` of the full Hamiltonian (used along any base trajectory)."""
        Hs = self.hessian_H(z)
        return np.concatenate([Hs[4:], -Hs[:4]], axis=0)

    def jac(self, t, z):
        """Jacobian of :meth:`rhs` for this kind."""
        J = self.jac_hamiltonian(t, z)
        if self.kind is ModelKind.KeplerianFullForm:
            r, f, t1, t2, pr, pf = z[:6]
            mu = self.mu
            H0 = hess_table(self.table0, r, f, t1, t2)
            J[4] = 0.0
            J[4, 0] = -3.0 * pf**2 / (mu * r**4) - H0[0, 0]
            J[4, 5] = 2.0 * pf / (mu * r**3)
            J[5] = 0.0
        return J

    def perturbation(self, z):
        """``h(z)``: the forces removed by the Keplerian form (on ``p_r``, ``p_f``)."""
        r, f, t1, t2 = z[:4]
        g = grad_table(self.table_per, r, f, t1, t2)
        out = np.zeros((8,) + np.shape(r))
        out[4] = -g[0]
        out[5] = -g[1]
        return out

    def V_per_angle_gradient(self, z):
        """``(dV_per/df, dV_per/dtheta1, dV_per/dtheta2)``."""
        r, f, t1, t2 = z[:4]
        return grad_table(self.table_per, r, f, t1, t2)[1:]


def full_rhs(p: PhysicalParams, kind, z, t=0.0):
    return FullModel(p, kind).rhs(t, np.asarray(z, dtype=float))


def keplerian_initial_state(p: PhysicalParams, e, theta1, theta2, dtheta1, dtheta2):
    """Full-model state on the Keplerian orbit at periapsis with given spins."""
    a = p.a
    return np.array([a * (1.0 - e), 0.0, theta1, theta2, 0.0,
                     p.mu * a * a * math.sqrt(1.0 - e * e), p.C1 * dtheta1, p.C2 * dtheta2])


def variational_rhs(jac, t, base, y):
    """Tangent vector field ``A(t, base) y`` for any of the Jacobians above."""
    A = jac(t, base)
    return np.einsum("ij...,j...->i...", A, np.asarray(y, dtype=float))
