"""Full model versus Keplerian model from identical initial conditions.

``zeta(t)`` is the Keplerian-form trajectory (orbit fixed on the ellipse,
spins on a balanced spin-spin resonance); ``z(t)`` is the full spin-spin
model started from the same state.  The orbit of ``z`` is described by its
osculating elements and compared through

    delta_a = (a_F - a)/a,  delta_e = e_F - e,
    delta_res_j = (m_j f - 2 theta_j) - (m_j f_F - 2 theta_jF).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import FullModel, ModelKind, SpinModel, keplerian_initial_state
from .integrator import IntegrationError, IntegratorConfig, integrate
from .params import (DegenerateShapeWarning, DimensionlessParams, PhysicalParams,
                     collision_radius, semi_major_axis, to_physical)
from .resonance import (Flavor, ResonanceError, ResonanceSolution, ResonanceSpec,
                        ShootingProblem, newton_shoot, shoot)
from .stability import FloquetTable, floquet_table

EQUAL_MU = 0.25


def comparison_params(e, lam, qhat, sigma, *, C1=0.5, mu=EQUAL_MU) -> DimensionlessParams:
    """Equal-body parameters with the orbit size fixed by ``sigma`` and ``mu``."""
    return DimensionlessParams.equal_bodies(e, lam, qhat, sigma,
                                            a=semi_major_axis(C1, sigma, mu)).replace(C1=C1)


def physical_for(params: DimensionlessParams) -> PhysicalParams:
    """Physical set of a comparison; moment bounds are not enforced (``q = 0`` with ``d != 0`` is common)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateShapeWarning)
        if params.a is None:
            return to_physical(params, EQUAL_MU, check_bounds=False)
        return to_physical(params, check_bounds=False)


def osculating_polar(z, mu, G):
    """Vectorized ``(a_F, e_F, omega_F)`` from full-model states ``z`` of shape ``(8, ...)``.

    ``omega_F`` is NaN where ``e_F == 0``.
    """
    r, f, pr, pf = z[0], z[1], z[4], z[5]
    rd = pr / mu
    fd = pf / (mu * r * r)
    v2 = rd * rd + r * r * fd * fd
    with np.errstate(divide="ignore"):
        a_F = 1.0 / (2.0 / r - v2 / G)
    cf, sf = np.cos(f), np.sin(f)
    vx = rd * cf - r * fd * sf
    vy = rd * sf + r * fd * cf
    h = r * r * fd
    ex = vy * h / G - cf
    ey = -vx * h / G - sf
    e_F = np.hypot(ex, ey)
    omega = np.where(e_F > 0.0, np.arctan2(ey, ex), np.nan)
    return a_F, e_F, omega


@dataclass
class ComparisonRun:
    params: DimensionlessParams
    physical: PhysicalParams
    spec: ResonanceSpec
    solution: ResonanceSolution
    horizon: float
    t: np.ndarray
    zeta: np.ndarray
    z: np.ndarray
    a_F: np.ndarray
    e_F: np.ndarray
    omega_F: np.ndarray
    delta_a: np.ndarray
    delta_e: np.ndarray
    delta_res: np.ndarray
    collision: tuple | None = None
    floquet: FloquetTable | None = None
    flag: str = ""

    def per_revolution(self):
        """Rows at ``t = 2 pi k`` (up to the collision)."""
        k = np.round(self.t / (2.0 * math.pi))
        sel = np.isclose(self.t, 2.0 * math.pi * k, atol=1e-9)
        return {"t": self.t[sel], "delta_a": self.delta_a[sel], "delta_e": self.delta_e[sel],
                "delta_res1": self.delta_res[0][sel], "delta_res2": self.delta_res[1][sel],
                "a_F": self.a_F[sel], "e_F": self.e_F[sel], "omega_F": self.omega_F[sel]}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "delta_a", "delta_e", "delta_res1", "delta_res2", "a_F", "e_F", "omega_F"])
            for row in zip(self.t, self.delta_a, self.delta_e, self.delta_res[0], self.delta_res[1],
                           self.a_F, self.e_F, self.omega_F):
                w.writerow([f"{x:.17g}" for x in row])


def _deltas(spec, params, zeta, z, mu, G):
    a = params.a if params.a is not None else G ** (1.0 / 3.0)
    a_F, e_F, om = osculating_polar(z, mu, G)
    m = np.array([spec.m1, spec.m2], dtype=float).reshape((2,) + (1,) * (z.ndim - 1))
    psi = m * zeta[1] - 2.0 * zeta[2:4]
    psi_F = m * z[1] - 2.0 * z[2:4]
    return a_F, e_F, om, (a_F - a) / a, e_F - params.e, psi - psi_F


def run_comparison(params: DimensionlessParams, spec: ResonanceSpec, horizon: float = 100,
                   cfg=None, *, samples_per_rev: int = 32, trunc=None, with_floquet=False,
                   v_guess=None) -> ComparisonRun:
    """Integrate ``zeta`` and ``z`` for ``horizon`` revolutions and record the deltas.

    The spin part comes from the balanced spin-spin resonance ``spec``;
    the run stops at the first collision ``r_F <= a1 + a2``.
    """
    if spec.flavor is not Flavor.Balanced or spec.bodies != 2:
        raise ResonanceError("comparisons use balanced spin-spin resonances")
    cfg = cfg or IntegratorConfig()
    sol = shoot(params, spec, v_guess, kind=ModelKind.KeplerianSpinSpin, cfg=cfg)
    if not sol.converged:
        raise ResonanceError(f"resonance not converged (residual {sol.residual:.3g})")
    phys = physical_for(params)
    z0 = keplerian_initial_state(phys, params.e, sol.theta0[0], sol.theta0[1], sol.v0[0], sol.v0[1])
    T = 2.0 * math.pi * horizon
    n = int(round(horizon * samples_per_rev))
    ts = np.linspace(0.0, T, n + 1)
    zeta = integrate(FullModel(phys, ModelKind.KeplerianFullForm, trunc).rhs, z0, 0.0, T, cfg,
                     t_eval=ts, store_steps=False).y
    rc = collision_radius(phys)
    full = FullModel(phys, ModelKind.FullSpinSpin, trunc)
    flag = ""
    try:
        tr = integrate(full.rhs, z0, 0.0, T, cfg, t_eval=ts, event=lambda t, y: y[0] - rc,
                       event_terminal=True, event_direction=-1, store_steps=False)
    except IntegrationError as exc:
        flag = f"integration failed at t={exc.t:.6g}: {exc}"
        raise
    collision = None
    if tr.events:
        ev = tr.events[0]
        collision = (float(ev.t), float(ev.y[0]))
    z = tr.y
    m = len(z)
    tt = ts[:m]
    zeta = zeta[:m]
    a_F, e_F, om, da, de, dr = _deltas(spec, params, zeta.T, z.T, phys.mu, phys.G)
    fl = floquet_table(params, spec, trunc=trunc, cfg=cfg, v_guess=sol.v0) if with_floquet else None
    return ComparisonRun(params, phys, spec, sol, horizon, tt, zeta, z, a_F, e_F, om, da, de, dr,
                         collision, fl, flag)


def floquet_of_comparison(params: DimensionlessParams, spec: ResonanceSpec, *, trunc=None,
                          cfg=None) -> FloquetTable:
    """Keplerian side (4 spin multipliers + 4 Kepler ones) and the 8 full-linearization multipliers."""
    if params.a is None:
        params = params.replace(a=semi_major_axis(params.C1, params.sigma1, EQUAL_MU))
    return floquet_table(params, spec, trunc=trunc, cfg=cfg)


# --- grids --------------------------------------------------------------------

GRID_COLUMNS = ("lambda", "sigma", "status", "log10_max_abs_delta_e", "log10_max_abs_delta_a",
                "collision_time")


@dataclass
class GridResult:
    lams: np.ndarray
    sigmas: np.ndarray
    status: np.ndarray            # (n_sigma, n_lambda) of "ok" | "collision" | "failed"
    log_de: np.ndarray
    log_da: np.ndarray
    collision_time: np.ndarray
    max_de: np.ndarray = field(repr=False, default=None)
    max_da: np.ndarray = field(repr=False, default=None)

    def rows(self):
        for i, s in enumerate(self.sigmas):
            for j, lam in enumerate(self.lams):
                yield (float(lam), float(s), str(self.status[i, j]), float(self.log_de[i, j]),
                       float(self.log_da[i, j]), float(self.collision_time[i, j]))


def _continue_lambda(spec, e, lams, sigmas, qhat, C1, cfg):
    """Spin solutions for every ``(sigma, lambda)``; lambdas are visited by increasing ``|lambda|``."""
    ns, nl = len(sigmas), len(lams)
    v = np.full((2, ns, nl), np.nan)
    ok = np.zeros((ns, nl), dtype=bool)
    betas = np.array(spec.betas)[:, None]
    targets = betas + np.array(spec.targets)[:, None]
    guess = np.repeat(np.array(spec.free_velocities)[:, None], ns, axis=1)
    alive = np.ones(ns, dtype=bool)
    sig = np.asarray(sigmas, dtype=float)

    def solve(lam, rows, g):
        model = SpinModel(ModelKind.KeplerianSpinSpin, e, C1, lam, lam, sig[rows], qhat, qhat)
        prob = ShootingProblem(None, spec, ModelKind.KeplerianSpinSpin, model=model)
        nr = newton_shoot(prob, betas, targets, g, 0.0, math.pi, cfg, maxiter=20)
        return nr.converged, nr.v

    lam_cur = 0.0
    for j in np.argsort(np.abs(lams), kind="stable"):
        good, vj = solve(lams[j], slice(None), guess)
        good = good & alive
        # rows lost on a long step are retried along finer sub-paths from lam_cur
        retry = np.nonzero(alive & ~good)[0]
        for nsub in (4, 16, 64):
            if len(retry) == 0:
                break
            g = guess[:, retry]
            conv = np.ones(len(retry), dtype=bool)
            for lam in np.linspace(lam_cur, lams[j], nsub + 1)[1:]:
                c, vs = solve(lam, retry, g)
                conv &= c
                g = np.where(c, vs, g)
            vj[:, retry] = g
            good[retry] = conv
            retry = retry[~conv]
        alive = good
        guess = np.where(good, vj, guess)
        v[:, :, j] = np.where(good, vj, np.nan)
        ok[:, j] = good
        lam_cur = lams[j]
    return v, ok


def _freeze_after(rhs, rc):
    # cells that reached the collision radius stop evolving
    def wrapped(t, z):
        d = rhs(t, z)
        return np.where(z[0] <= rc, 0.0, d)
    return wrapped


def scan_comparison_grid(lams, sigmas, spec: ResonanceSpec | None = None, *, e: float = 0.0,
                         qhat: float = 0.0, horizon: float = 2.0, samples_per_rev: int = 256,
                         trunc=None, cfg=None, chunk: int = 256, progress=None) -> GridResult:
    """Collision flag and ``log10 max |delta_e|``, ``log10 max |delta_a|`` on a ``(sigma, lambda)`` grid.

    All cells are integrated as one batch (in chunks of ``chunk`` cells).
    Collisions are detected on the sample grid; a colliding cell is frozen
    from then on.  Equal bodies with ``mu = 1/4``.
    """
    spec = spec or ResonanceSpec.parse("1:1,3:2")
    cfg = cfg or IntegratorConfig()
    lams = np.asarray(lams, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    ns, nl = len(sigmas), len(lams)
    v, ok = _continue_lambda(spec, e, lams, sigmas, qhat, 0.5, cfg)
    status = np.full((ns, nl), "failed", dtype=object)
    log_de = np.full((ns, nl), np.nan)
    log_da = np.full((ns, nl), np.nan)
    max_de = np.full((ns, nl), np.nan)
    max_da = np.full((ns, nl), np.nan)
    tcol = np.full((ns, nl), np.nan)
    cells = [(i, j) for i in range(ns) for j in range(nl) if ok[i, j]]
    T = 2.0 * math.pi * horizon
    ts = np.linspace(0.0, T, int(round(horizon * samples_per_rev)) + 1)
    for c0 in range(0, len(cells), chunk):
        part = cells[c0:c0 + chunk]
        params = [comparison_params(e, lams[j], qhat, sigmas[i]) for i, j in part]
        phys = [physical_for(p) for p in params]
        z0 = np.stack([keplerian_initial_state(ph, e, spec.beta1, spec.beta2, v[0, i, j], v[1, i, j])
                       for ph, (i, j) in zip(phys, part)], axis=1)
        rc = np.array([collision_radius(ph) for ph in phys])
        zeta = integrate(FullModel(phys, ModelKind.KeplerianFullForm, trunc).rhs, z0, 0.0, T, cfg,
                         t_eval=ts, store_steps=False).y
        full = FullModel(phys, ModelKind.FullSpinSpin, trunc)
        z = integrate(_freeze_after(full.rhs, rc), z0, 0.0, T, cfg, t_eval=ts, store_steps=False).y
        mu = np.array([ph.mu for ph in phys])
        G = np.array([ph.G for ph in phys])
        a = np.array([p.a for p in params])
        zz = np.moveaxis(z, 0, 1)
        a_F, e_F, _ = osculating_polar(zz, mu, G)
        da = np.abs((a_F - a) / a)
        de = np.abs(e_F - e)
        hit = zz[0] <= rc
        for b, (i, j) in enumerate(part):
            if np.any(hit[:, b]):
                status[i, j] = "collision"
                tcol[i, j] = ts[np.argmax(hit[:, b])]
            else:
                status[i, j] = "ok"
                max_de[i, j] = np.max(de[:, b])
                max_da[i, j] = np.max(da[:, b])
                with np.errstate(divide="ignore"):
                    log_de[i, j] = np.log10(max_de[i, j])
                    log_da[i, j] = np.log10(max_da[i, j])
        if progress:
            progress(min(c0 + chunk, len(cells)), len(cells))
    return GridResult(lams, sigmas, status, log_de, log_da, tcol, max_de, max_da)


def write_grid_csv(path, grid: GridResult):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(GRID_COLUMNS)
        for lam, s, st, lde, lda, tc in grid.rows():
            w.writerow([f"{lam:.17g}", f"{s:.17g}", st, f"{lde:.17g}", f"{lda:.17g}", f"{tc:.17g}"])
