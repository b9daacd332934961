"""Adaptive 8th-order Runge-Kutta integration with dense output, events and batching.

The stepper is the Dormand-Prince 8(5,3) pair (tableau taken from
``scipy.integrate._ivp.dop853_coefficients``) with its 7th-degree continuous
extension.  It is written out here rather than using ``solve_ivp`` because the
scans integrate many trajectories at once: a state of shape ``(dim, *batch)``
is advanced with one shared step, controlled by the worst error in the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop
from scipy.optimize import brentq

TWO_PI = 2.0 * np.pi

_A = _dop.A
_B = _dop.B
_C = _dop.C
_E3 = _dop.E3
_E5 = _dop.E5
_D = _dop.D
_NS = _dop.N_STAGES            # 12
_NSE = _dop.N_STAGES_EXTENDED  # 16
_ORDER = 8

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_BETA = 0.04
_ALPHA = 1.0 / _ORDER - 0.2 * _BETA


class IntegrationError(RuntimeError):
    """Integration stopped early; ``t`` and ``y`` hold the last accepted state."""

    def __init__(self, msg, t, y):
        super().__init__(msg)
        self.t = t
        self.y = y


class StepUnderflowError(IntegrationError):
    pass


class StepBudgetError(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    h_init: float | None = None
    h_min: float = 0.0
    h_max: float = math.inf
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0.0 <= self.h_min <= self.h_max) or self.h_max <= 0.0:
            raise ValueError("need 0 <= h_min <= h_max and h_max > 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    @classmethod
    def scan(cls, **kw) -> "IntegratorConfig":
        """Looser defaults for parameter scans (1e-10)."""
        kw.setdefault("abs_tol", 1e-10)
        kw.setdefault("rel_tol", 1e-10)
        return cls(**kw)


@dataclass
class DenseSegment:
    t_old: float
    h: float
    y_old: np.ndarray
    F: np.ndarray

    def __call__(self, t):
        x = (t - self.t_old) / self.h
        y = np.zeros_like(self.y_old)
        for i, f in enumerate(self.F[::-1]):
            y += f
            y *= x if i % 2 == 0 else (1.0 - x)
        return y + self.y_old


@dataclass
class EventRecord:
    t: float
    y: np.ndarray


@dataclass
class Trajectory:
    """Result of :func:`integrate`.

    ``t``/``y`` are the requested samples (``t_eval``) or, when no samples were
    requested, the accepted step endpoints; ``y`` has shape ``(n, dim, *batch)``.
    """

    t: np.ndarray
    y: np.ndarray
    t_final: float
    y_final: np.ndarray
    events: list = field(default_factory=list)
    segments: list | None = None
    nsteps: int = 0
    nfev: int = 0

    def __call__(self, t):
        """Dense evaluation; requires ``dense=True`` at integration time."""
        if not self.segments:
            raise ValueError("trajectory was integrated without dense output")
        segs = self.segments
        t0 = np.array([s.t_old for s in segs])
        direction = np.sign(segs[0].h)
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        if direction > 0:
            idx = np.searchsorted(t0, ts, side="right") - 1
        else:
            idx = np.searchsorted(-t0, -ts, side="right") - 1
        idx = np.clip(idx, 0, len(segs) - 1)
        out = np.stack([segs[i](tt) for i, tt in zip(idx, ts)])
        return out[0] if np.ndim(t) == 0 else out


def _rms_batch(x, scale):
    # sum over the state axis, keep the batch axes
    return np.sum((x / scale) ** 2, axis=0)


def _initial_step(rhs, t0, y0, f0, direction, rtol, atol, h_max):
    scale = atol + np.abs(y0) * rtol
    n = y0.shape[0]
    d0 = np.sqrt(np.max(_rms_batch(y0, scale)) / n)
    d1 = np.sqrt(np.max(_rms_batch(f0, scale)) / n)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, h_max)
    y1 = y0 + h0 * direction * f0
    f1 = rhs(t0 + h0 * direction, y1)
    d2 = np.sqrt(np.max(_rms_batch(f1 - f0, scale)) / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / _ORDER)
    return min(100 * h0, h1, h_max)


class _Stepper:
    def __init__(self, rhs, t0, y0, t1, cfg: IntegratorConfig):
        self.rhs = rhs
        self.cfg = cfg
        self.t = float(t0)
        self.y = np.array(y0, dtype=float)
        self.direction = 1.0 if t1 > t0 else -1.0
        self.t1 = float(t1)
        self.nfev = 0
        self.f = self._fun(self.t, self.y)
        if cfg.h_init is not None:
            self.h_abs = min(abs(cfg.h_init), cfg.h_max)
        else:
            self.h_abs = _initial_step(self._fun, self.t, self.y, self.f, self.direction,
                                       cfg.rel_tol, cfg.abs_tol, cfg.h_max)
        self.err_old = 1e-4
        self.K = np.empty((_NSE,) + self.y.shape)
        self.y_old = None
        self.t_old = None
        self.h = None

    def _fun(self, t, y):
        self.nfev += 1
        return np.asarray(self.rhs(t, y), dtype=float)

    def _rk_step(self, h):
        K = self.K
        t, y = self.t, self.y
        K[0] = self.f
        for s in range(1, _NS):
            dy = np.tensordot(_A[s, :s], K[:s], axes=1) * h
            K[s] = self._fun(t + _C[s] * h, y + dy)
        y_new = y + h * np.tensordot(_B, K[:_NS], axes=1)
        f_new = self._fun(t + h, y_new)
        K[_NS] = f_new
        return y_new, f_new

    def _error_norm(self, h, y_new):
        cfg = self.cfg
        scale = cfg.abs_tol + np.maximum(np.abs(self.y), np.abs(y_new)) * cfg.rel_tol
        K = self.K[:_NS + 1]
        e5 = _rms_batch(np.tensordot(_E5, K, axes=1), scale)
        e3 = _rms_batch(np.tensordot(_E3, K, axes=1), scale)
        denom = e5 + 0.01 * e3
        n = self.y.shape[0]
        with np.errstate(invalid="ignore", divide="ignore"):
            norm = np.where(denom > 0.0, np.abs(h) * e5 / np.sqrt(denom * n), 0.0)
        worst = np.max(norm)
        if not np.isfinite(worst):
            return math.inf
        return float(worst)

    def step(self):
        cfg = self.cfg
        t = self.t
        min_step = max(cfg.h_min, 10.0 * np.spacing(abs(t)))
        h_abs = min(self.h_abs, cfg.h_max)
        while True:
            if h_abs < min_step:
                raise StepUnderflowError(f"step size underflow at t={t!r}", t, self.y)
            h = h_abs * self.direction
            t_new = t + h
            if self.direction * (t_new - self.t1) > 0.0:
                t_new = self.t1
            h = t_new - t
            h_abs = abs(h)
            y_new, f_new = self._rk_step(h)
            err = self._error_norm(h, y_new)
            if err < 1.0:
                if err == 0.0:
                    factor = _MAX_FACTOR
                else:
                    factor = min(_MAX_FACTOR, _SAFETY * err ** (-_ALPHA) * self.err_old ** _BETA)
                self.err_old = max(err, 1e-4)
                break
            h_abs *= max(_MIN_FACTOR, _SAFETY * err ** (-1.0 / _ORDER)) if np.isfinite(err) else _MIN_FACTOR
        self.t_old, self.y_old, self.f_old, self.h = t, self.y, self.f, h
        self.t, self.y, self.f = t_new, y_new, f_new
        self.h_abs = h_abs * factor
        self._dense_ready = False

    def dense(self) -> DenseSegment:
        K = self.K
        h = self.h
        if not self._dense_ready:
            for s in range(_NS + 1, _NSE):
                dy = np.tensordot(_A[s, :s], K[:s], axes=1) * h
                K[s] = self._fun(self.t_old + _C[s] * h, self.y_old + dy)
            self._dense_ready = True
        dy = self.y - self.y_old
        F = np.empty((_dop.INTERPOLATOR_POWER,) + self.y.shape)
        F[0] = dy
        F[1] = h * self.f_old - dy
        F[2] = 2.0 * dy - h * (self.f + self.f_old)
        F[3:] = h * np.tensordot(_D, K, axes=1)
        return DenseSegment(self.t_old, h, self.y_old.copy(), F)


def integrate(rhs, y0, t0, t1, cfg: IntegratorConfig | None = None, *, t_eval=None,
              dense=False, event=None, event_terminal=True, event_direction=0,
              store_steps=True) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1`` (either direction).

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y)`` returning an array shaped like ``y``; ``y`` has shape
        ``(dim, *batch)`` and all batch members share the step.
    t_eval : array_like, optional
        Sample times inside ``[t0, t1]``, ordered in the direction of
        integration, evaluated from the continuous extension.
    dense : bool
        Keep the per-step interpolants (``Trajectory.__call__``).
    event : callable, optional
        Scalar ``event(t, y)`` (unbatched states only).  The first sign change
        is refined on the interpolant to 1e-12 in ``t``; with
        ``event_terminal`` the integration stops there.
    event_direction : int
        0 for any crossing, +1 for increasing, -1 for decreasing.
    """
    cfg = cfg or IntegratorConfig()
    if t1 == t0:
        raise ValueError("t1 must differ from t0")
    y0 = np.asarray(y0, dtype=float)
    if not np.all(np.isfinite(y0)):
        raise ValueError("y0 must be finite")
    if event is not None and y0.ndim != 1:
        raise ValueError("events are only supported for unbatched states")
    st = _Stepper(rhs, t0, y0, t1, cfg)
    direction = st.direction

    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval.ndim != 1:
            raise ValueError("t_eval must be one-dimensional")
        if np.any(direction * np.diff(t_eval) < 0):
            raise ValueError("t_eval must be ordered in the integration direction")
        lo, hi = min(t0, t1), max(t0, t1)
        if np.any((t_eval < lo - 1e-12 * max(1, abs(lo))) | (t_eval > hi + 1e-12 * max(1, abs(hi)))):
            raise ValueError("t_eval outside the integration span")
    samples_t, samples_y = [], []
    ev_i = 0
    if t_eval is not None:
        while ev_i < len(t_eval) and t_eval[ev_i] == t0:
            samples_t.append(t_eval[ev_i])
            samples_y.append(st.y.copy())
            ev_i += 1
    elif store_steps:
        samples_t.append(st.t)
        samples_y.append(st.y.copy())

    segments = [] if dense else None
    events = []
    g_old = None
    if event is not None:
        g_old = float(event(st.t, st.y))
    nsteps = 0

    while direction * (st.t1 - st.t) > 0.0:
        if nsteps >= cfg.max_steps:
            raise StepBudgetError(f"max_steps={cfg.max_steps} exceeded at t={st.t!r}", st.t, st.y)
        st.step()
        nsteps += 1
        seg = None
        if dense:
            seg = st.dense()
            segments.append(seg)

        stop_t = None
        if event is not None:
            g_new = float(event(st.t, st.y))
            crossed = (g_old < 0.0 <= g_new) if event_direction > 0 else \
                      (g_old > 0.0 >= g_new) if event_direction < 0 else \
                      (np.sign(g_old) != np.sign(g_new) and g_new != g_old)
            if g_old == 0.0 and nsteps == 1:
                crossed = False
            if crossed:
                seg = seg or st.dense()
                te = brentq(lambda s: float(event(s, seg(s))), st.t_old, st.t,
                            xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
                events.append(EventRecord(te, seg(te)))
                if event_terminal:
                    stop_t = te
            g_old = g_new

        t_hi = st.t if stop_t is None else stop_t
        if t_eval is not None:
            while ev_i < len(t_eval) and direction * (t_eval[ev_i] - t_hi) <= 0.0:
                te = t_eval[ev_i]
                if te == st.t:
                    samples_y.append(st.y.copy())
                else:
                    seg = seg or st.dense()
                    samples_y.append(seg(te))
                samples_t.append(te)
                ev_i += 1
        elif store_steps and stop_t is None:
            samples_t.append(st.t)
            samples_y.append(st.y.copy())

        if stop_t is not None:
            y_stop = events[-1].y
            if t_eval is None and store_steps:
                samples_t.append(stop_t)
                samples_y.append(y_stop)
            if dense:
                segments[-1] = seg
            return Trajectory(np.array(samples_t), _stack(samples_y, y0), stop_t, y_stop,
                              events, segments, nsteps, st.nfev)

    return Trajectory(np.array(samples_t), _stack(samples_y, y0), st.t, st.y, events,
                      segments, nsteps, st.nfev)


def _stack(ys, y0):
    if not ys:
        return np.empty((0,) + y0.shape)
    return np.stack(ys)


def integrate_with_event(rhs, y0, t0, t1, event, cfg=None, **kw) -> Trajectory:
    """Integrate until the first zero crossing of ``event(t, y)``."""
    return integrate(rhs, y0, t0, t1, cfg, event=event, **kw)


def sample_stroboscopic(rhs, y0, k_max: int, cfg=None, t0: float = 0.0):
    """States at ``t0 + 2 pi k`` for ``k = 0..k_max``, shape ``(k_max + 1, dim, *batch)``."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    ts = t0 + TWO_PI * np.arange(k_max + 1)
    traj = integrate(rhs, y0, ts[0], ts[-1], cfg, t_eval=ts)
    return traj.y


def with_tangent(rhs, jac, dim: int):
    """Augment ``rhs`` with the variational equation ``Phi' = A(t, y) Phi``.

    The augmented state is ``(dim + dim*dim, *batch)``: the base state then
    ``Phi`` flattened row-major.  ``jac(t, y)`` returns ``(dim, dim, *batch)``.
    """
    def aug(t, Y):
        y = Y[:dim]
        Phi = Y[dim:].reshape((dim, dim) + Y.shape[1:])
        A = jac(t, y)
        dPhi = np.einsum("ij...,jk...->ik...", A, Phi)
        return np.concatenate([rhs(t, y), dPhi.reshape((dim * dim,) + Y.shape[1:])])
    return aug


def tangent_initial(y0, dim: int):
    """Initial augmented state with ``Phi(0) = I``."""
    y0 = np.asarray(y0, dtype=float)
    eye = np.eye(dim).reshape((dim * dim,) + (1,) * (y0.ndim - 1))
    eye = np.broadcast_to(eye, (dim * dim,) + y0.shape[1:])
    return np.concatenate([y0, eye])


def split_tangent(Y, dim: int):
    """Inverse of :func:`tangent_initial`: ``(y, Phi)``."""
    Y = np.asarray(Y)
    return Y[:dim], Y[dim:].reshape((dim, dim) + Y.shape[1:])
