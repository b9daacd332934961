"""Keplerian orbit machinery in the normalized units of the two-ellipsoid problem.

The orbital period is fixed to 2*pi, so time coincides with the mean anomaly
and Kepler's third law reads ``G = a**3`` (total mass is one).  All functions
accept scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

_NEWTON_MAX_ITER = 50
_NEWTON_TOL = 4e-16


class KeplerDomainError(ValueError):
    """Raised for eccentricities outside [0, 1)."""


def _check_e(e):
    e = np.asarray(e, dtype=float)
    if np.any(~np.isfinite(e)) or np.any(e < 0.0) or np.any(e >= 1.0):
        raise KeplerDomainError("eccentricity must lie in [0, 1)")
    return e


def _reduce(t):
    k = np.round(t / TWO_PI)
    return t - TWO_PI * k, k


def solve_kepler(e, t):
    """Solve Kepler's equation ``t = u - e sin u`` for the eccentric anomaly.

    Parameters
    ----------
    e : float or ndarray
        Eccentricity, ``0 <= e < 1``.
    t : float or ndarray
        Mean anomaly (any real value).

    Returns
    -------
    u : float or ndarray
        Eccentric anomaly on the same branch as ``t`` (``u - t`` is
        2*pi-periodic in ``t``).

    Notes
    -----
    Newton's method seeded with ``t + e sin t``; elements that fail to
    converge within 50 iterations are recomputed by bisection on
    ``[t - e, t + e]``, which always brackets the root.
    """
    e = _check_e(e)
    t = np.asarray(t, dtype=float)
    scalar = e.ndim == 0 and t.ndim == 0
    e, t = np.broadcast_arrays(e, t)
    tr, k = _reduce(t)

    u = tr + e * np.sin(tr)
    converged = np.zeros(u.shape, dtype=bool)
    for _ in range(_NEWTON_MAX_ITER):
        g = u - e * np.sin(u) - tr
        dg = 1.0 - e * np.cos(u)
        du = g / dg
        u = u - du
        converged = np.abs(du) <= _NEWTON_TOL * np.maximum(1.0, np.abs(u))
        if converged.all():
            break

    bad = ~converged | ~np.isfinite(u) | (np.abs(u - tr) > e + 1e-12)
    if np.any(bad):
        u = np.array(u, copy=True)
        u[bad] = _bisect_kepler(e[bad], tr[bad])

    u = u + TWO_PI * k
    if scalar:
        return float(u)
    return u


def _bisect_kepler(e, tr):
    lo = tr - e
    hi = tr + e
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = mid - e * np.sin(mid) - tr
        lo = np.where(g < 0.0, mid, lo)
        hi = np.where(g < 0.0, hi, mid)
        if np.all(hi - lo <= 1e-16 * np.maximum(1.0, np.abs(mid))):
            break
    u = 0.5 * (lo + hi)
    # one Newton polish; monotone function so this cannot leave the bracket
    return u - (u - e * np.sin(u) - tr) / (1.0 - e * np.cos(u))


def kepler_residual(e, t, u):
    """Residual ``u - e sin u - t`` after reducing ``t`` and ``u`` to one branch."""
    tr, k = _reduce(np.asarray(t, dtype=float))
    return (np.asarray(u) - TWO_PI * k) - e * np.sin(u) - tr


def true_anomaly(e, u):
    """True anomaly from the eccentric anomaly, unwrapped onto the revolution of ``u``."""
    e = _check_e(e)
    u = np.asarray(u, dtype=float)
    f0 = np.arctan2(np.sqrt(1.0 - e * e) * np.sin(u), np.cos(u) - e)
    f = f0 + TWO_PI * np.round((u - f0) / TWO_PI)
    if f.ndim == 0:
        return float(f)
    return f


def orbit_radius(orbit: "KeplerOrbit", u):
    """Orbital radius ``a (1 - e cos u)``."""
    return orbit.a * (1.0 - orbit.e * np.cos(u))


def kepler_geometry(e, t):
    """Return ``(a/r, f, u)`` along the normalized Keplerian orbit at mean anomaly ``t``.

    This is the cheap path used by the Keplerian spin vector fields, which only
    need the ratio ``a/r`` and the true anomaly.
    """
    u = solve_kepler(e, t)
    rho = 1.0 / (1.0 - np.asarray(e) * np.cos(u))
    return rho, true_anomaly(e, u), u


@dataclass(frozen=True)
class KeplerOrbit:
    """Relative Keplerian orbit with period 2*pi.

    ``G`` defaults to ``a**3``; passing an inconsistent value raises.
    """

    a: float
    e: float
    mu: float
    G: float = field(default=None)

    def __post_init__(self):
        if not self.a > 0.0:
            raise KeplerDomainError("semi-major axis must be positive")
        _check_e(self.e)
        if not 0.0 < self.mu <= 0.25:
            raise KeplerDomainError("reduced mass must lie in (0, 1/4]")
        a3 = self.a ** 3
        if self.G is None:
            object.__setattr__(self, "G", a3)
        elif not math.isclose(self.G, a3, rel_tol=1e-12):
            raise KeplerDomainError(f"G={self.G!r} inconsistent with a**3={a3!r}")

    @property
    def p_f(self) -> float:
        """Constant orbital angular momentum ``mu a^2 sqrt(1 - e^2)``."""
        return self.mu * self.a ** 2 * math.sqrt(1.0 - self.e ** 2)

    def initial_state(self):
        """Polar state ``(r, f, p_r, p_f)`` at periapsis, t = 0."""
        return self.a * (1.0 - self.e), 0.0, 0.0, self.p_f


def orbit_state(orbit: KeplerOrbit, t):
    """Polar state ``(r, f, p_r, p_f)`` of the Keplerian orbit at mean anomaly ``t``.

    ``p_r = mu dr/dt`` with ``dr/dt = a e sin(u) / (1 - e cos u)``.
    """
    u = solve_kepler(orbit.e, t)
    denom = 1.0 - orbit.e * np.cos(u)
    r = orbit.a * denom
    f = true_anomaly(orbit.e, u)
    p_r = orbit.mu * orbit.a * orbit.e * np.sin(u) / denom
    p_f = orbit.p_f * np.ones_like(np.asarray(r))
    if np.ndim(r) == 0:
        return float(r), float(f), float(p_r), float(p_f)
    return r, f, p_r, p_f


def polar_to_cartesian(r, f, r_dot, f_dot):
    """Inertial position and velocity of the relative vector from polar data."""
    c, s = np.cos(f), np.sin(f)
    pos = np.stack([r * c, r * s])
    vel = np.stack([r_dot * c - r * f_dot * s, r_dot * s + r * f_dot * c])
    return pos, vel


@dataclass(frozen=True)
class OsculatingElements:
    """Osculating Keplerian elements of a relative position/velocity pair.

    ``omega_F`` is ``None`` when the eccentricity is below 1e-12 and
    ``elliptic`` is False for unbound (parabolic/hyperbolic) states, in which
    case ``a_F`` and ``e_F`` carry whatever the formulas produce.
    """

    a_F: float
    e_F: float
    omega_F: float | None
    h_F: float
    elliptic: bool = True

    @property
    def omega_defined(self) -> bool:
        return self.omega_F is not None


def osculating_elements(pos, vel, G) -> OsculatingElements:
    """Osculating ``(a_F, e_F, omega_F, h_F)`` of a planar two-body state.

    ``e_F`` is the norm of the eccentricity vector ``v x h / G - r/|r|``;
    :func:`eccentricity_from_modulus` gives the equivalent closed form, which
    loses accuracy near circular orbits.
    """
    x, y = float(pos[0]), float(pos[1])
    vx, vy = float(vel[0]), float(vel[1])
    r = math.hypot(x, y)
    if r <= 0.0:
        raise KeplerDomainError("position must be nonzero")
    v2 = vx * vx + vy * vy
    inv_a = 2.0 / r - v2 / G
    h = x * vy - y * vx
    ex = vy * h / G - x / r
    ey = -vx * h / G - y / r
    e_F = math.hypot(ex, ey)
    if inv_a <= 0.0:
        return OsculatingElements(math.inf if inv_a == 0.0 else 1.0 / inv_a, e_F, None, h, elliptic=False)
    omega = None
    if e_F >= 1e-12:
        omega = math.atan2(ey, ex)
        if omega >= math.pi:
            omega -= 2.0 * math.pi
    return OsculatingElements(1.0 / inv_a, e_F, omega, h, elliptic=True)


def eccentricity_from_modulus(r, f_dot, a_F, G):
    """Closed-form eccentricity ``sqrt(1 - r^4 fdot^2 / (G a_F))``."""
    return math.sqrt(max(0.0, 1.0 - r ** 4 * f_dot ** 2 / (G * a_F)))


def osculating_from_polar(r, f, p_r, p_f, mu, G) -> OsculatingElements:
    """Osculating elements from the polar canonical state of the full model."""
    r_dot = p_r / mu
    f_dot = p_f / (mu * r * r)
    pos, vel = polar_to_cartesian(r, f, r_dot, f_dot)
    return osculating_elements(pos, vel, G)
