"""Mutual gravitational potential of two planar ellipsoids, truncated at V0, V2 or V2+V4.

Every truncation is stored as a short table of terms

    c * r**(-k) * cos(nf*f + n1*theta1 + n2*theta2)

so the value, gradient and Hessian all come from the same three closed-form
rules and cannot drift apart.  The eccentricity series of V2 and V4 is derived
from the same table by expanding ``(a/r)**k`` and ``f`` in the mean anomaly.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .params import DimensionlessParams, PhysicalParams


class PotentialTruncation(enum.Enum):
    V0 = "V0"        # Kepler
    V2 = "V2"        # spin-orbit
    V2V4 = "V2V4"    # spin-spin

    @classmethod
    def parse(cls, value) -> "PotentialTruncation":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper().replace("+", "")
        aliases = {"KEPLER": "V0", "SPIN-ORBIT": "V2", "SPINORBIT": "V2",
                   "SPIN-SPIN": "V2V4", "SPINSPIN": "V2V4", "V4": "V2V4"}
        return cls(aliases.get(key, key))


class PotentialDomainError(ValueError):
    pass


@dataclass(frozen=True)
class TermTable:
    """Columns of ``c r^-k cos(nf f + n1 th1 + n2 th2)``."""

    c: np.ndarray
    k: np.ndarray
    n: np.ndarray  # shape (nterms, 3): (nf, n1, n2)

    def __len__(self):
        return len(self.c)


def _raw_terms(p: PhysicalParams, trunc: PotentialTruncation, include_v0=True):
    G, M1, M2 = p.G, p.M1, p.M2
    d1, d2, q1, q2 = p.d1, p.d2, p.q1, p.q2
    out = []
    if include_v0:
        out.append((-G * M1 * M2, 1, (0, 0, 0)))
    if trunc is PotentialTruncation.V0:
        return out
    out += [
        (-G * M2 * q1 / 4.0 - G * M1 * q2 / 4.0, 3, (0, 0, 0)),
        (-3.0 * G * M2 * d1 / 4.0, 3, (-2, 2, 0)),
        (-3.0 * G * M1 * d2 / 4.0, 3, (-2, 0, 2)),
    ]
    if trunc is PotentialTruncation.V2:
        return out
    P = -3.0 * G / 64.0
    r12, r21 = M2 / M1, M1 / M2
    out += [
        (P * (12.0 * q1 * q2 + 15.0 / 7.0 * (r12 * d1 * d1 + 2.0 * r12 * q1 * q1
                                             + r21 * d2 * d2 + 2.0 * r21 * q2 * q2)), 5, (0, 0, 0)),
        (P * d1 * (20.0 * q2 + 100.0 / 7.0 * q1 * r12), 5, (-2, 2, 0)),
        (P * 25.0 * d1 * d1 * r12, 5, (-4, 4, 0)),
        (P * d2 * (20.0 * q1 + 100.0 / 7.0 * q2 * r21), 5, (-2, 0, 2)),
        (P * 25.0 * d2 * d2 * r21, 5, (-4, 0, 4)),
        (P * 6.0 * d1 * d2, 5, (0, 2, -2)),
        (P * 70.0 * d1 * d2, 5, (-4, 2, 2)),
    ]
    return out


def term_table(p: PhysicalParams, trunc, include_v0=True) -> TermTable:
    """Term table of ``V0 + V_per`` (or of ``V_per`` alone with ``include_v0=False``)."""
    trunc = PotentialTruncation.parse(trunc)
    terms = [t for t in _raw_terms(p, trunc, include_v0) if t[0] != 0.0]
    if not terms:
        return TermTable(np.zeros(0), np.zeros(0, dtype=int), np.zeros((0, 3), dtype=int))
    c, k, n = zip(*terms)
    return TermTable(np.array(c, dtype=float), np.array(k, dtype=int), np.array(n, dtype=int))


def term_table_batch(ps, trunc, include_v0=True) -> TermTable:
    """One table for several parameter sets: ``c`` has shape ``(nterms, len(ps))``."""
    trunc = PotentialTruncation.parse(trunc)
    rows = [_raw_terms(p, trunc, include_v0) for p in ps]
    if not rows or not rows[0]:
        return TermTable(np.zeros((0, len(ps))), np.zeros(0, dtype=int), np.zeros((0, 3), dtype=int))
    k = np.array([t[1] for t in rows[0]], dtype=int)
    n = np.array([t[2] for t in rows[0]], dtype=int)
    c = np.array([[t[0] for t in row] for row in rows], dtype=float).T
    return TermTable(c, k, n)


def _check_r(r):
    if np.any(np.asarray(r) <= 0.0):
        raise PotentialDomainError("r must be positive")


def _phases(table: TermTable, f, theta1, theta2):
    # shape (nterms, *broadcast)
    f, theta1, theta2 = np.broadcast_arrays(np.asarray(f, float), np.asarray(theta1, float),
                                            np.asarray(theta2, float))
    n = table.n.reshape(table.n.shape + (1,) * f.ndim)
    return n[:, 0] * f + n[:, 1] * theta1 + n[:, 2] * theta2


def _expand(table: TermTable, ndim):
    s = (1,) * ndim
    c = table.c
    if c.ndim == 2:
        # batched coefficients: the state batch is the trailing axis
        c = c.reshape(c.shape[0], *s[:-1], c.shape[1])
    else:
        c = c.reshape(-1, *s)
    return c, table.k.reshape(-1, *s), table.n.reshape(table.n.shape + s)


def eval_table(table: TermTable, r, f, theta1, theta2):
    r = np.asarray(r, dtype=float)
    ph = _phases(table, f, theta1, theta2)
    c, k, _ = _expand(table, ph.ndim - 1)
    return np.sum(c * r ** (-k) * np.cos(ph), axis=0)


def grad_table(table: TermTable, r, f, theta1, theta2):
    """Stacked ``(dV/dr, dV/df, dV/dtheta1, dV/dtheta2)``."""
    r = np.asarray(r, dtype=float)
    ph = _phases(table, f, theta1, theta2)
    c, k, n = _expand(table, ph.ndim - 1)
    rk = r ** (-k)
    cs, sn = np.cos(ph), np.sin(ph)
    out = [np.sum(-k * c * rk / r * cs, axis=0)]
    for i in range(3):
        out.append(np.sum(-n[:, i] * c * rk * sn, axis=0))
    return np.stack(out)


def hess_table(table: TermTable, r, f, theta1, theta2):
    """Hessian in ``(r, f, theta1, theta2)``, shape ``(4, 4, *batch)``."""
    r = np.asarray(r, dtype=float)
    ph = _phases(table, f, theta1, theta2)
    c, k, n = _expand(table, ph.ndim - 1)
    rk = r ** (-k)
    cs, sn = np.cos(ph), np.sin(ph)
    H = np.empty((4, 4) + ph.shape[1:])
    H[0, 0] = np.sum(k * (k + 1) * c * rk / (r * r) * cs, axis=0)
    for i in range(3):
        H[0, i + 1] = H[i + 1, 0] = np.sum(k * n[:, i] * c * rk / r * sn, axis=0)
        for j in range(i, 3):
            H[i + 1, j + 1] = H[j + 1, i + 1] = np.sum(-n[:, i] * n[:, j] * c * rk * cs, axis=0)
    return H


def eval_V(p: PhysicalParams, trunc, r, f, theta1, theta2):
    """``V0 + V_per`` at the selected truncation."""
    _check_r(r)
    out = eval_table(term_table(p, trunc), r, f, theta1, theta2)
    return float(out) if np.ndim(out) == 0 else out


def grad_V(p: PhysicalParams, trunc, r, f, theta1, theta2):
    """``(dV/dr, dV/df, dV/dtheta1, dV/dtheta2)``; the last three sum to zero."""
    _check_r(r)
    return grad_table(term_table(p, trunc), r, f, theta1, theta2)


def hess_V(p: PhysicalParams, trunc, r, f, theta1, theta2):
    _check_r(r)
    return hess_table(term_table(p, trunc), r, f, theta1, theta2)


def eval_V_direct(p: PhysicalParams, trunc, r, f, theta1, theta2):
    """Straight transcription of the V2/V4 formulas, kept as a second implementation."""
    trunc = PotentialTruncation.parse(trunc)
    _check_r(r)
    G, M1, M2 = p.G, p.M1, p.M2
    d1, d2, q1, q2 = p.d1, p.d2, p.q1, p.q2
    V = -G * M1 * M2 / r
    if trunc is PotentialTruncation.V0:
        return V
    V = V - G * M2 / (4 * r**3) * (q1 + 3 * d1 * np.cos(2 * theta1 - 2 * f)) \
        - G * M1 / (4 * r**3) * (q2 + 3 * d2 * np.cos(2 * theta2 - 2 * f))
    if trunc is PotentialTruncation.V2:
        return V
    braces = (12 * q1 * q2
              + 15 / 7 * (M2 / M1 * d1**2 + 2 * M2 / M1 * q1**2 + M1 / M2 * d2**2 + 2 * M1 / M2 * q2**2)
              + d1 * M2 * ((20 * q2 / M2 + 100 / 7 * q1 / M1) * np.cos(2 * theta1 - 2 * f)
                           + 25 * d1 / M1 * np.cos(4 * theta1 - 4 * f))
              + d2 * M1 * ((20 * q1 / M1 + 100 / 7 * q2 / M2) * np.cos(2 * theta2 - 2 * f)
                           + 25 * d2 / M2 * np.cos(4 * theta2 - 4 * f))
              + 6 * d1 * d2 * np.cos(2 * theta1 - 2 * theta2)
              + 70 * d1 * d2 * np.cos(2 * theta1 + 2 * theta2 - 4 * f))
    return V - 3 * G / (64 * r**5) * braces


# --- eccentric-anomaly formulation -----------------------------------------

def _sc(x, cf, sf):
    """``s(x) = sin(2x - 2f)``, ``c(x) = cos(2x - 2f)`` from ``cos f`` and ``sin f``."""
    c2f = 2.0 * cf * cf - 1.0
    s2f = 2.0 * cf * sf
    s2x, c2x = np.sin(2.0 * x), np.cos(2.0 * x)
    return s2x * c2f - c2x * s2f, c2x * c2f + s2x * s2f


def eval_F12(p: DimensionlessParams, u, x1, x2):
    """Torque functions ``(F1, F2)`` of the spin-spin system at eccentric anomaly ``u``.

    The spin equations read ``theta_j'' = -(lambda_j / 2) (a/r)^5 F_j``.
    Angles enter through ``s(x) = sin(2x - 2f)`` and ``c(x) = cos(2x - 2f)``,
    with ``sin(4x - 4f) = 2 s c`` and
    ``sin(2x1 + 2x2 - 4f) = s(x1) c(x2) + c(x1) s(x2)``.
    """
    e = p.e
    u = np.asarray(u, dtype=float)
    denom = 1.0 - e * np.cos(u)
    r_a = denom
    cf = (np.cos(u) - e) / denom
    sf = math.sqrt(1.0 - e * e) * np.sin(u) / denom
    s1, c1 = _sc(x1, cf, sf)
    s2, c2 = _sc(x2, cf, sf)
    d1, d2 = p.dhat1, p.dhat2
    s12 = np.sin(2.0 * x1 - 2.0 * x2)
    mixed = s1 * c2 + c1 * s2
    F1 = ((r_a * r_a + 1.25 * (p.qhat2 + 5.0 / 7.0 * p.qhat1)) * s1
          + 25.0 / 4.0 * d1 * s1 * c1 + 3.0 / 8.0 * d2 * s12 + 35.0 / 8.0 * d2 * mixed)
    F2 = ((r_a * r_a + 1.25 * (p.qhat1 + 5.0 / 7.0 * p.qhat2)) * s2
          + 25.0 / 4.0 * d2 * s2 * c2 - 3.0 / 8.0 * d1 * s12 + 35.0 / 8.0 * d1 * mixed)
    return F1, F2


# --- eccentricity series -----------------------------------------------------

# A series is a dict {(e_power, m_t, n1, n2): Fraction} standing for
# sum coef * e**e_power * cos(m_t t + n1 theta1 + n2 theta2).

def _canon(key):
    ep, m, n1, n2 = key
    for v in (m, n1, n2):
        if v != 0:
            if v < 0:
                return ep, -m, -n1, -n2
            break
    return key


def _add(acc, key, coef, max_order):
    if key[0] > max_order or coef == 0:
        return
    key = _canon(key)
    acc[key] = acc.get(key, Fraction(0)) + coef


@lru_cache(maxsize=None)
def _hansen_terms(k: int, n: int, max_order: int = 2):
    """``(a/r)^k cos(n f + phi)`` as ``((e_pow, m_t), coef)`` in cos(m_t t + phi), to O(e^2).

    Uses ``f = t + 2e sin t + 5/4 e^2 sin 2t`` and
    ``a/r = 1 + e cos t + e^2 cos 2t``.
    """
    F = Fraction
    # angular factor, coefficients of cos((n + j) t + phi)
    ang = {(0, n): F(1),
           (1, n - 1): F(-n), (1, n + 1): F(n),
           (2, n - 2): F(-5 * n, 8) + F(n * n, 2),
           (2, n + 2): F(5 * n, 8) + F(n * n, 2),
           (2, n): F(-n * n)}
    # radial factor, coefficients of cos(j t)
    kk = F(k * (k - 1), 4)
    rad = {(0, 0): F(1), (1, 1): F(k), (2, 0): kk, (2, 2): F(k) + kk}
    out = {}
    for (ea, ma), ca in ang.items():
        for (er, jr), cr in rad.items():
            ep = ea + er
            if ep > max_order or ca == 0 or cr == 0:
                continue
            if jr == 0:
                out[(ep, ma)] = out.get((ep, ma), F(0)) + ca * cr
            else:
                for m in (ma + jr, ma - jr):
                    out[(ep, m)] = out.get((ep, m), F(0)) + ca * cr / 2
    return tuple((key, c) for key, c in out.items() if c != 0)


def series_table(p: PhysicalParams, part: str, order: int = 2):
    """Mean-anomaly series of ``V2`` or ``V4`` as ``{(e_pow, m_t, n1, n2): coef}``.

    ``coef`` already contains the ``a**-k`` factor.  Keys are canonical
    (first nonzero of ``m_t, n1, n2`` positive).
    """
    if part not in ("V2", "V4"):
        raise ValueError("part must be 'V2' or 'V4'")
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    a = p.a
    kpart = 3 if part == "V2" else 5
    table = term_table(p, PotentialTruncation.V2V4, include_v0=False)
    out = {}
    for c, k, (nf, n1, n2) in zip(table.c, table.k, table.n.tolist()):
        if k != kpart:
            continue
        c = c * a ** (-k)
        for (ep, m), h in _hansen_terms(k, nf, 2):
            if ep > order:
                continue
            key = _canon((ep, m, n1, n2))
            out[key] = out.get(key, 0.0) + c * float(h)
    return {key: v for key, v in out.items() if v != 0.0}


def unit_series(k: int, nf: int, order: int = 2):
    """Exact rational expansion of ``(a/r)^k cos(nf f + phi)``: ``{(e_pow, m_t): coef}``."""
    return {key: c for key, c in _hansen_terms(k, nf, 2) if key[0] <= order}


def series_V(p: PhysicalParams, e, t, theta1, theta2, order: int = 2):
    """``(V2, V4)`` from their mean-anomaly eccentricity series truncated at ``e**order``."""
    if np.any(np.asarray(e) > 0.3):
        warnings.warn("eccentricity series used above e = 0.3", RuntimeWarning, stacklevel=2)
    res = []
    for part in ("V2", "V4"):
        total = 0.0
        for (ep, m, n1, n2), c in series_table(p, part, order).items():
            total = total + c * e**ep * np.cos(m * t + n1 * theta1 + n2 * theta2)
        res.append(total)
    return tuple(res)


def exact_parts(p: PhysicalParams, e, t, theta1, theta2):
    """``(V2, V4)`` evaluated exactly on the Keplerian orbit at mean anomaly ``t``."""
    from .kepler import kepler_geometry

    rho, f, _ = kepler_geometry(e, t)
    r = p.a / rho
    v2 = eval_table(term_table(p, "V2", include_v0=False), r, f, theta1, theta2)
    v24 = eval_table(term_table(p, "V2V4", include_v0=False), r, f, theta1, theta2)
    return v2, v24 - v2


def resonance_inventory(p: PhysicalParams, part: str, order: int, tol: float = 1e-14):
    """Arguments present at exactly ``e**order``.

    Returns ``(spin_orbit, spin_spin)``: ``spin_orbit`` is a set of reduced
    ``(m, n)`` pairs for arguments ``m t - n theta_j``; ``spin_spin`` is the
    set of canonical ``(m_t, n1, n2)`` with both angles present.
    """
    table = series_table(p, part, order)
    scale = max((abs(v) for v in table.values()), default=1.0)
    so, ss = set(), set()
    for (ep, m, n1, n2), c in table.items():
        if ep != order or abs(c) <= tol * scale:
            continue
        if n1 != 0 and n2 != 0:
            ss.add((m, n1, n2))
        elif n1 != 0 or n2 != 0:
            n = n1 or n2
            mm, nn = (m, -n) if n < 0 else (-m, n)
            g = math.gcd(mm, nn)
            so.add((mm // g, nn // g))
    return so, ss
