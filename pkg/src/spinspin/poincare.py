"""Stroboscopic Poincare maps and the projections ``(theta_j, dtheta_j)``."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ModelKind, OneBodyModel, SpinModel, SpinState
from .integrator import IntegrationError, IntegratorConfig, sample_stroboscopic
from .params import DimensionlessParams

MIN_RING_POINTS = 100


def wrap_angle(theta, half_turn: bool = False):
    """Subtract the nearest multiple of ``2 pi`` (or ``pi`` with ``half_turn``); range ``[-pi, pi)``."""
    period = math.pi if half_turn else 2.0 * math.pi
    theta = np.asarray(theta, dtype=float)
    w = theta - period * np.round(theta / period)
    half = 0.5 * period
    return np.where(w >= half, w - period, w)


@dataclass
class MapOrbit:
    body: int
    theta: np.ndarray
    theta_dot: np.ndarray
    k_max: int
    initial: SpinState
    truncated: bool = False
    theta_unwrapped: np.ndarray = field(default=None, repr=False)

    @property
    def points(self):
        return np.column_stack([self.theta, self.theta_dot])


def poincare_map(params: DimensionlessParams, kind, initial: SpinState, k_max: int, *,
                 cfg=None, half_turn: bool = False, t0: float | None = None):
    """Map orbits of both bodies sampled at ``t0 + 2 pi k``, ``k = 0..k_max``.

    ``initial`` holds canonical momenta ``p_j = C_j dtheta_j``; ``t0``
    defaults to ``initial.t``.

    For ``KeplerianSpinOrbit`` the two bodies evolve independently; body 2
    is still reported.  An integration failure truncates both orbits.
    """
    kind = ModelKind.parse(kind)
    if not kind.is_keplerian:
        raise ValueError("Poincare maps are defined for the Keplerian models")
    model = SpinModel.from_params(params, kind)
    y0 = initial.as_array()
    t0 = initial.t if t0 is None else t0
    truncated = False
    try:
        ys = sample_stroboscopic(model.rhs, y0, k_max, cfg or IntegratorConfig(), t0)
    except IntegrationError as exc:
        truncated = True
        n = int(np.floor((exc.t - t0) / (2.0 * math.pi))) + 1
        ys = sample_stroboscopic(model.rhs, y0, max(1, n - 1), cfg, t0) if n > 1 else y0[None]
    w1, w2 = model.velocities(ys.swapaxes(0, 1))
    out = []
    for j, (th, w) in enumerate(((ys[:, 0], w1), (ys[:, 1], w2)), start=1):
        out.append(MapOrbit(j, wrap_angle(th, half_turn), np.asarray(w), k_max, initial,
                            truncated, np.asarray(th)))
    return tuple(out)


def spin_orbit_map(e, lam, theta0, dtheta0, k_max: int, *, cfg=None, half_turn=False):
    """Batched one-body map; returns ``(theta_wrapped, theta_dot)`` of shape ``(k_max+1, *batch)``."""
    model = OneBodyModel(e, lam)
    y0 = np.stack(np.broadcast_arrays(np.asarray(theta0, float), np.asarray(dtheta0, float)))
    ys = sample_stroboscopic(model.rhs, y0, k_max, cfg or IntegratorConfig.scan())
    return wrap_angle(ys[:, 0], half_turn), ys[:, 1]


def ring_extent(orbit: MapOrbit):
    """``(min, max)`` of ``dtheta`` over the map points."""
    if len(orbit.theta_dot) < MIN_RING_POINTS:
        raise ValueError(f"ring extent needs at least {MIN_RING_POINTS} points")
    return float(np.min(orbit.theta_dot)), float(np.max(orbit.theta_dot))


def section_band(orbit: MapOrbit, theta_c: float = 0.0, width: float = 0.15, upper: bool = True):
    """``dtheta`` range of the points with ``|theta - theta_c| < width`` (mod pi) on one side of the ring.

    Nested annuli have nested ``dtheta`` extents; their crossings of the
    symmetry line ``theta = theta_c`` are disjoint instead, so this band is
    the quantity that separates them.  The side is chosen relative to the
    midpoint of :func:`ring_extent`.
    """
    lo, hi = ring_extent(orbit)
    mid = 0.5 * (lo + hi)
    th = wrap_angle(np.asarray(orbit.theta_unwrapped if orbit.theta_unwrapped is not None
                               else orbit.theta) - theta_c, half_turn=True)
    w = orbit.theta_dot
    sel = (np.abs(th) < width) & ((w >= mid) if upper else (w <= mid))
    if not np.any(sel):
        raise ValueError("no map points near the section")
    return float(np.min(w[sel])), float(np.max(w[sel]))


def overlap(ext1, ext2) -> float:
    """Length of the intersection of two intervals (negative: gap)."""
    return min(ext1[1], ext2[1]) - max(ext1[0], ext2[0])


@dataclass
class SyncRecord:
    sigma: float
    extent1: tuple
    extent2: tuple
    band1: tuple
    band2: tuple

    @property
    def overlap(self) -> float:
        """Overlap of the section bands (negative: gap between the rings)."""
        return overlap(self.band1, self.band2)

    @property
    def mismatch(self) -> float:
        """Largest difference between the two ``dtheta`` extents."""
        return max(abs(self.extent1[0] - self.extent2[0]), abs(self.extent1[1] - self.extent2[1]))


def map_orbits_batch(params: DimensionlessParams, initial: SpinState, k_max: int, *,
                     sigmas=None, kind=ModelKind.KeplerianSpinSpin, cfg=None):
    """Map orbits for a batch of ``sigma1`` values sharing all other parameters."""
    sig = np.asarray(params.sigma1 if sigmas is None else sigmas, dtype=float).reshape(-1)
    model = SpinModel(kind, params.e, params.C1, params.lambda1, params.lambda2, sig,
                      params.qhat1, params.qhat2)
    y0 = np.repeat(initial.as_array()[:, None], len(sig), axis=1)
    ys = sample_stroboscopic(model.rhs, y0, k_max, cfg or IntegratorConfig(), initial.t)
    w1, w2 = model.velocities(ys.swapaxes(0, 1))
    out = []
    for b in range(len(sig)):
        out.append(tuple(MapOrbit(j, wrap_angle(ys[:, j - 1, b]), np.asarray(w[:, b]), k_max,
                                  initial, False, ys[:, j - 1, b])
                         for j, w in ((1, w1), (2, w2))))
    return out


def sync_sweep(base: DimensionlessParams, sigmas, initial: SpinState, k_max: int, *, cfg=None,
               theta_c: float = 0.0):
    """Ring extents and section bands of both bodies along a sigma sweep."""
    sigmas = np.asarray(sigmas, dtype=float)
    out = []
    for s, (o1, o2) in zip(sigmas, map_orbits_batch(base, initial, k_max, sigmas=sigmas, cfg=cfg)):
        out.append(SyncRecord(float(s), ring_extent(o1), ring_extent(o2),
                              section_band(o1, theta_c), section_band(o2, theta_c)))
    return out


def write_map_csv(path, orbits):
    """Columns ``k, body, theta_wrapped, theta_dot``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "body", "theta_wrapped", "theta_dot"])
        for o in orbits:
            for k, (th, v) in enumerate(zip(o.theta, o.theta_dot)):
                w.writerow([k, o.body, f"{th:.17g}", f"{v:.17g}"])
