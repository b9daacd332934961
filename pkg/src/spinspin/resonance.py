"""Symmetric resonant periodic orbits of the Keplerian spin models.

Symmetric orbits are found by shooting on Dirichlet conditions
``theta_j(alpha) = beta_j``, ``theta_j(alpha + T) = beta_j + target_j``:

* balanced ``m:2``: ``T = pi``, target ``m pi / 2`` (``alpha = 0``);
* standard ``m:n``: ``T = n pi``, target ``m pi``.

The unknowns are the angular velocities at ``alpha`` and the Newton
Jacobian comes from the tangent flow.  All solvers work on batches so the
scans can push many parameter values through one integration.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .dynamics import ModelKind, OneBodyModel, SpinModel
from .integrator import (IntegratorConfig, integrate, split_tangent, tangent_initial,
                         with_tangent)
from .kepler import kepler_geometry
from .params import DimensionlessParams

HALF_PI = 0.5 * math.pi
RESIDUAL_TOL = 1e-10
MAX_NEWTON = 30
FOLD_TOL = 1e-8


class Flavor(enum.Enum):
    Standard = "standard"
    Balanced = "balanced"


class ResonanceError(ValueError):
    pass


def _lattice(value, step, name):
    k = round(value / step)
    if abs(value - k * step) > 1e-12 or k not in (0, 1):
        raise ResonanceError(f"{name} must be 0 or {step:g}")
    return k * step


@dataclass(frozen=True)
class ResonanceSpec:
    """Order ``(m1:n1[, m2:n2])``, flavor and symmetry type ``(alpha, beta1[, beta2])``."""

    m1: int
    n1: int
    m2: int | None = None
    n2: int | None = None
    flavor: Flavor = Flavor.Balanced
    alpha: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0

    def __post_init__(self):
        flavor = Flavor(self.flavor) if not isinstance(self.flavor, Flavor) else self.flavor
        object.__setattr__(self, "flavor", flavor)
        if self.n1 == 0 or (self.n2 is not None and self.n2 == 0):
            raise ResonanceError("n_j must be nonzero")
        if (self.m2 is None) != (self.n2 is None):
            raise ResonanceError("give both m2 and n2 or neither")
        if flavor is Flavor.Balanced:
            if self.n1 != 2 or (self.n2 is not None and self.n2 != 2):
                raise ResonanceError("balanced resonances have n_j = 2")
            if self.alpha != 0.0:
                raise ResonanceError("balanced types are taken at alpha = 0")
        object.__setattr__(self, "alpha", _lattice(self.alpha, math.pi, "alpha"))
        object.__setattr__(self, "beta1", _lattice(self.beta1, HALF_PI, "beta1"))
        object.__setattr__(self, "beta2", _lattice(self.beta2, HALF_PI, "beta2"))

    @classmethod
    def balanced(cls, m1, m2=None, beta1=0.0, beta2=0.0):
        return cls(m1, 2, m2, None if m2 is None else 2, Flavor.Balanced, 0.0, beta1, beta2)

    @classmethod
    def standard(cls, m1, n1, m2=None, n2=None, alpha=0.0, beta1=0.0, beta2=0.0):
        return cls(m1, n1, m2, n2, Flavor.Standard, alpha, beta1, beta2)

    @classmethod
    def parse(cls, order: str, flavor="balanced", res_type: str = "0,0", alpha=0.0):
        """``order`` like ``"3:2"`` or ``"1:1,3:2"``; ``res_type`` like ``"0,pi/2"``."""
        parts = [p.strip() for p in order.split(",") if p.strip()]
        mn = [tuple(int(x) for x in p.split(":")) for p in parts]
        betas = [_parse_angle(x) for x in res_type.split(",") if x.strip()] or [0.0]
        fl = Flavor(flavor)
        if len(mn) == 1:
            (m1, n1), = mn
            return cls(m1, n1, None, None, fl, alpha, betas[0])
        (m1, n1), (m2, n2) = mn
        if fl is Flavor.Balanced:
            # (1:1, 3:2) balanced means (2:2, 3:2)
            m1, n1 = _to_half(m1, n1)
            m2, n2 = _to_half(m2, n2)
        b2 = betas[1] if len(betas) > 1 else 0.0
        return cls(m1, n1, m2, n2, fl, alpha, betas[0], b2)

    @property
    def bodies(self) -> int:
        return 1 if self.m2 is None else 2

    @property
    def n(self) -> int:
        """Common denominator of the standard spin-spin conditions."""
        if self.bodies == 1:
            return abs(self.n1)
        return math.lcm(abs(self.n1), abs(self.n2))

    @property
    def horizon(self) -> float:
        """Length of the shooting interval."""
        return math.pi if self.flavor is Flavor.Balanced else self.n * math.pi

    @property
    def period(self) -> float:
        return 2.0 * self.horizon

    @property
    def betas(self):
        return (self.beta1,) if self.bodies == 1 else (self.beta1, self.beta2)

    @property
    def orders(self):
        return ((self.m1, self.n1),) if self.bodies == 1 else ((self.m1, self.n1), (self.m2, self.n2))

    @property
    def targets(self):
        """Angle increments over the shooting interval."""
        if self.flavor is Flavor.Balanced:
            return tuple(m * HALF_PI for m, _ in self.orders)
        n = self.n
        return tuple(m * (n // abs(nn)) * math.copysign(1, nn) * math.pi for m, nn in self.orders)

    @property
    def free_velocities(self):
        """Exact initial velocities when all ``lambda_j = 0``."""
        return tuple(t / self.horizon for t in self.targets)

    def label(self) -> str:
        o = ",".join(f"{m}:{n}" for m, n in self.orders)
        b = ",".join(_fmt_angle(x) for x in self.betas)
        return f"{self.flavor.value} ({o}) alpha={_fmt_angle(self.alpha)} type=({b})"

    def to_mapping(self) -> dict:
        return {"m1": self.m1, "n1": self.n1, "m2": "" if self.m2 is None else self.m2,
                "n2": "" if self.n2 is None else self.n2, "flavor": self.flavor.value,
                "alpha": self.alpha, "beta1": self.beta1, "beta2": self.beta2 if self.bodies == 2 else ""}


def _to_half(m, n):
    if n == 2:
        return m, 2
    if n == 1:
        return 2 * m, 2
    raise ResonanceError(f"{m}:{n} is not a balanced m:2 order")


def _parse_angle(s):
    s = s.strip().lower().replace(" ", "")
    if s in ("0", "0.0"):
        return 0.0
    if s in ("pi/2", "pi2", "90"):
        return HALF_PI
    if s == "pi":
        return math.pi
    return float(s)


def _fmt_angle(x):
    if x == 0.0:
        return "0"
    if abs(x - HALF_PI) < 1e-12:
        return "pi/2"
    if abs(x - math.pi) < 1e-12:
        return "pi"
    return repr(x)


@dataclass
class ResonanceSolution:
    """Converged (or best-effort) symmetric periodic orbit."""

    spec: ResonanceSpec
    params: DimensionlessParams
    v0: tuple
    residual: float
    converged: bool
    kind: ModelKind = ModelKind.KeplerianSpinSpin
    iterations: int = 0
    singular: bool = False
    flag: str = ""

    @property
    def theta0(self):
        return self.spec.betas

    def problem(self):
        return ShootingProblem(self.params, self.spec, self.kind)

    def initial_state(self):
        prob = self.problem()
        return prob.state(np.array(self.theta0), np.array(self.v0))

    def trajectory(self, t_eval, cfg=None):
        """Angles and velocities at ``t_eval`` (may lie on either side of ``alpha``)."""
        return solve_from(self.problem(), self.spec.alpha, self.initial_state(), t_eval, cfg)

    def to_mapping(self) -> dict:
        out = dict(self.spec.to_mapping())
        out.update({f"param_{k}": v for k, v in self.params.to_mapping().items()})
        out["kind"] = self.kind.value
        out["v0_1"] = self.v0[0]
        out["v0_2"] = self.v0[1] if len(self.v0) > 1 else ""
        out["residual"] = self.residual
        out["converged"] = int(self.converged)
        out["flag"] = self.flag
        return out


def default_kind(spec: ResonanceSpec, params: DimensionlessParams | None = None) -> ModelKind:
    if spec.bodies == 1:
        return ModelKind.SphericalCompanion
    return ModelKind.KeplerianSpinSpin


class ShootingProblem:
    """Uniform view of the one-body (``(theta, dtheta)``) and two-body (canonical) systems."""

    def __init__(self, params, spec: ResonanceSpec, kind=None, model=None):
        self.spec = spec
        self.kind = ModelKind.parse(kind) if kind is not None else default_kind(spec, params)
        self.nb = spec.bodies
        if model is not None:
            self.model = model
        elif self.nb == 1:
            if self.kind is ModelKind.KeplerianSpinSpin:
                self.kind = ModelKind.SphericalCompanion
            self.model = OneBodyModel.from_params(params, self.kind)
        else:
            if self.kind not in (ModelKind.KeplerianSpinSpin, ModelKind.KeplerianSpinOrbit,
                                 ModelKind.SphericalCompanion):
                raise ResonanceError(f"cannot shoot {self.kind.name}")
            self.model = SpinModel.from_params(params, self.kind)
        self.dim = 2 * self.nb
        self.aug = with_tangent(self.model.rhs, self.model.jac, self.dim)

    def state(self, theta, v):
        """``theta``, ``v`` of shape ``(nb, *batch)``."""
        if self.nb == 1:
            return np.stack(np.broadcast_arrays(theta[0], v[0]))
        return self.model.state(theta[0], theta[1], v[0], v[1])

    def angles(self, y):
        return y[: self.nb]

    def velocities(self, y):
        if self.nb == 1:
            return y[1:2]
        return np.stack(self.model.velocities(y))

    def dtheta_dv(self, Phi):
        """``d theta(T) / d v(alpha)``, shape ``(nb, nb, *batch)``."""
        if self.nb == 1:
            return Phi[0:1, 1:2]
        out = np.empty((2, 2) + Phi.shape[2:])
        out[:, 0] = Phi[0:2, 2] * self.model.C1
        out[:, 1] = Phi[0:2, 3] * self.model.C2
        return out


def solve_from(prob: ShootingProblem, t0, y0, t_eval, cfg=None):
    """Integrate ``prob`` from ``(t0, y0)`` to the sorted times ``t_eval``.

    Times before ``t0`` are obtained by a backward integration.  Returns
    ``(angles, velocities)`` each of shape ``(len(t_eval), nb, *batch)``.
    """
    cfg = cfg or IntegratorConfig()
    t_eval = np.asarray(t_eval, dtype=float)
    order = np.argsort(t_eval, kind="stable")
    ts = t_eval[order]
    out = np.empty((len(ts),) + np.shape(y0))
    back = ts < t0
    fwd = ~back
    if np.any(fwd):
        tf = ts[fwd]
        if tf[-1] > t0:
            traj = integrate(prob.model.rhs, y0, t0, tf[-1], cfg, t_eval=tf, store_steps=False)
            out[fwd] = traj.y
        else:
            out[fwd] = y0
    if np.any(back):
        tb = ts[back][::-1]
        traj = integrate(prob.model.rhs, y0, t0, tb[-1], cfg, t_eval=tb, store_steps=False)
        out[back] = traj.y[::-1]
    res = np.empty_like(out)
    res[order] = out
    ang = res[:, : prob.nb]
    vel = np.stack([prob.velocities(y) for y in res])
    return ang, vel


def _flow_with_tangent(prob, t0, T, theta, v, cfg):
    y0 = prob.state(theta, v)
    Y = integrate(prob.aug, tangent_initial(y0, prob.dim), t0, t0 + T, cfg,
                  store_steps=False).y_final
    return split_tangent(Y, prob.dim)


@dataclass
class NewtonResult:
    v: np.ndarray
    residual: np.ndarray
    converged: np.ndarray
    singular: np.ndarray
    iterations: int
    jacobian: np.ndarray | None = None


def _batched_solve(J, G):
    # J (nb, nb, *batch), G (nb, *batch) -> dv (nb, *batch)
    nb = J.shape[0]
    batch = J.shape[2:]
    Jm = np.moveaxis(J.reshape(nb, nb, -1), -1, 0)
    Gm = np.moveaxis(G.reshape(nb, -1), -1, 0)
    det = np.linalg.det(Jm)
    norm = np.max(np.abs(Jm), axis=(1, 2))
    singular = np.abs(det) < FOLD_TOL * np.maximum(1.0, norm) ** nb
    safe = Jm.copy()
    safe[singular] = np.eye(nb)
    dv = np.linalg.solve(safe, -Gm[..., None])[..., 0]
    dv[singular] = 0.0
    return np.moveaxis(dv, 0, -1).reshape((nb,) + batch), singular.reshape(batch)


def newton_shoot(prob: ShootingProblem, theta0, targets, v_guess, t0, T, cfg=None,
                 tol=RESIDUAL_TOL, maxiter=MAX_NEWTON, max_step=2.0) -> NewtonResult:
    """Batched Newton iteration on ``theta(t0 + T) = targets``.

    ``theta0``, ``targets`` and ``v_guess`` have shape ``(nb, *batch)``.
    Converged members are frozen; the iteration stops once every member
    has converged or stagnated.
    """
    cfg = cfg or IntegratorConfig()
    v = np.array(v_guess, dtype=float)
    theta0 = np.broadcast_to(np.asarray(theta0, dtype=float), v.shape)
    targets = np.broadcast_to(np.asarray(targets, dtype=float), v.shape)
    batch = v.shape[1:]
    best_res = np.full(batch, np.inf)
    best_v = v.copy()
    converged = np.zeros(batch, dtype=bool)
    singular = np.zeros(batch, dtype=bool)
    stall = np.zeros(batch, dtype=int)
    J = None
    it = 0
    for it in range(1, maxiter + 1):
        y, Phi = _flow_with_tangent(prob, t0, T, theta0, v, cfg)
        G = prob.angles(y) - targets
        res = np.max(np.abs(G), axis=0)
        res = np.where(np.isfinite(res), res, np.inf)
        improved = res < best_res
        best_res = np.where(improved, res, best_res)
        best_v = np.where(improved, v, best_v)
        stall = np.where(improved & (res < 0.5 * np.where(np.isfinite(best_res), best_res, np.inf) + 1e300),
                         0, stall + 1)
        converged = best_res <= tol
        J = prob.dtheta_dv(Phi)
        dv, sing = _batched_solve(J, G)
        singular = singular | (sing & ~converged)
        active = ~converged & ~sing & (stall < 4)
        if not np.any(active):
            break
        scale = np.max(np.abs(dv), axis=0)
        shrink = np.where(scale > max_step, max_step / np.maximum(scale, 1e-300), 1.0)
        v = np.where(active, v + dv * shrink, v)
    return NewtonResult(best_v, best_res, converged, singular, it, J)


def _shoot(params, spec, v_guess, kind, cfg, maxiter=MAX_NEWTON) -> ResonanceSolution:
    prob = ShootingProblem(params, spec, kind)
    if v_guess is None:
        v_guess = spec.free_velocities
    v_guess = np.asarray(v_guess, dtype=float).reshape(prob.nb)
    betas = np.array(spec.betas)
    targets = betas + np.array(spec.targets)
    nr = newton_shoot(prob, betas, targets, v_guess, spec.alpha, spec.horizon, cfg,
                      maxiter=maxiter)
    conv = bool(nr.converged)
    flag = "" if conv else ("fold" if bool(nr.singular) else "stagnation")
    return ResonanceSolution(spec, params, tuple(float(x) for x in nr.v), float(nr.residual),
                             conv, prob.kind, nr.iterations, bool(nr.singular), flag)


def shoot_balanced(params: DimensionlessParams, spec: ResonanceSpec, v_guess=None, *,
                   kind=None, cfg=None) -> ResonanceSolution:
    """Solve ``theta_j(0) = beta_j``, ``theta_j(pi) = beta_j + m_j pi/2`` for ``dtheta_j(0)``."""
    if spec.flavor is not Flavor.Balanced:
        raise ResonanceError("shoot_balanced needs a balanced spec")
    return _shoot(params, spec, v_guess, kind, cfg)


def shoot_standard(params: DimensionlessParams, spec: ResonanceSpec, v_guess=None, *,
                   kind=None, cfg=None) -> ResonanceSolution:
    """Solve ``theta_j(alpha) = beta_j``, ``theta_j(alpha + n pi) = beta_j + m_j pi``."""
    if spec.flavor is not Flavor.Standard:
        raise ResonanceError("shoot_standard needs a standard spec")
    return _shoot(params, spec, v_guess, kind, cfg)


def shoot(params, spec, v_guess=None, *, kind=None, cfg=None) -> ResonanceSolution:
    return _shoot(params, spec, v_guess, kind, cfg)


# --- gamma scans ---------------------------------------------------------------

def gamma_defects(model: OneBodyModel, m: int, beta: float, gammas, cfg=None):
    """Backward shots from ``theta(pi) = beta + m pi/2``, ``dtheta(pi) = gamma``.

    ``gammas`` must broadcast with the model parameters.  Returns
    ``(theta(0) - beta, dtheta(0), d theta(0)/d gamma)``.
    """
    cfg = cfg or IntegratorConfig.scan()
    gammas = np.asarray(gammas, dtype=float)
    shape = np.broadcast(gammas, model.lam, model.e).shape
    th = np.full(shape, beta + m * HALF_PI)
    y0 = np.stack([th, np.broadcast_to(gammas, shape)])
    aug = with_tangent(model.rhs, model.jac, 2)
    Y = integrate(aug, tangent_initial(y0, 2), math.pi, 0.0, cfg, store_steps=False).y_final
    y, Phi = split_tangent(Y, 2)
    return y[0] - beta, y[1], Phi[0, 1]


def _polish_brackets(model, m, beta, lo, hi, d_lo, d_hi, cfg, tol=1e-12, maxiter=40):
    """Safeguarded Newton on each bracket ``[lo, hi]`` (batched)."""
    g = 0.5 * (lo + hi)
    lo, hi, d_lo = lo.copy(), hi.copy(), d_lo.copy()
    for _ in range(maxiter):
        d, w0, dd = gamma_defects(model, m, beta, g, cfg)
        done = np.abs(d) <= tol
        if np.all(done):
            break
        left = np.sign(d) == np.sign(d_lo)
        lo = np.where(left, g, lo)
        d_lo = np.where(left, d, d_lo)
        hi = np.where(left, hi, g)
        with np.errstate(divide="ignore", invalid="ignore"):
            gn = g - d / dd
        bad = ~np.isfinite(gn) | (gn <= np.minimum(lo, hi)) | (gn >= np.maximum(lo, hi))
        gn = np.where(bad, 0.5 * (lo + hi), gn)
        g = np.where(done, g, gn)
    d, w0, dd = gamma_defects(model, m, beta, g, cfg)
    return g, d, w0, dd


def enumerate_roots(model: OneBodyModel, m: int, beta: float, gammas, cfg=None,
                    polish_cfg=None):
    """All sign changes of the gamma defect, polished.

    ``model`` parameters may have a leading batch axis of size ``B``;
    ``gammas`` is one-dimensional.  Returns a list (length ``B``, or 1) of
    arrays of rows ``(gamma, v0, residual)``.
    """
    gammas = np.asarray(gammas, dtype=float)
    lam = np.atleast_1d(model.lam)
    B = lam.shape[0]
    G = gammas[None, :]
    bm = OneBodyModel(np.atleast_1d(model.e)[:, None] if np.ndim(model.e) else model.e,
                      lam[:, None],
                      np.atleast_1d(model.Q)[:, None] if np.ndim(model.Q) else model.Q,
                      np.atleast_1d(model.D)[:, None] if np.ndim(model.D) else model.D)
    d, _, _ = gamma_defects(bm, m, beta, G, cfg)
    d = np.broadcast_to(d, (B, len(gammas)))
    sign_change = (np.sign(d[:, :-1]) * np.sign(d[:, 1:]) <= 0) & np.isfinite(d[:, :-1]) & np.isfinite(d[:, 1:])
    # exact zeros at a node would be counted twice
    exact = d[:, 1:-1] == 0.0
    sign_change[:, 1:][exact] = False
    bi, gi = np.nonzero(sign_change)
    out = [np.zeros((0, 3)) for _ in range(B)]
    if len(bi) == 0:
        return out
    sub = OneBodyModel(_pick(model.e, bi), lam[bi], _pick(model.Q, bi), _pick(model.D, bi))
    g, res, w0, _ = _polish_brackets(sub, m, beta, gammas[gi], gammas[gi + 1],
                                     d[bi, gi], d[bi, gi + 1], polish_cfg or IntegratorConfig())
    rows = np.stack([g, w0, np.abs(res)], axis=1)
    for b in range(B):
        r = rows[bi == b]
        if len(r):
            r = r[np.argsort(r[:, 0])]
            keep = np.concatenate([[True], np.abs(np.diff(r[:, 1])) > 1e-8])
            out[b] = r[keep]
    return out


def _pick(x, idx):
    x = np.asarray(x)
    return x[idx] if x.ndim else x


def default_gamma_range(m: int):
    return (m / 2.0 - 3.0, m / 2.0 + 3.0)


def enumerate_solutions(params: DimensionlessParams, spec: ResonanceSpec, gamma_range=None,
                        gamma_steps: int = 2000, *, kind=None, cfg=None) -> list:
    """All balanced one-body solutions found by scanning ``dtheta(pi) = gamma``."""
    if spec.bodies != 1 or spec.flavor is not Flavor.Balanced:
        raise ResonanceError("gamma scans are for single-body balanced resonances")
    lo, hi = gamma_range or default_gamma_range(spec.m1)
    if gamma_steps < 2 or not hi > lo:
        return []
    prob = ShootingProblem(params, spec, kind)
    gammas = np.linspace(lo, hi, gamma_steps)
    rows = enumerate_roots(prob.model, spec.m1, spec.beta1, gammas, cfg)[0]
    return [ResonanceSolution(spec, params, (float(w0),), float(res), bool(res <= RESIDUAL_TOL),
                              prob.kind, 0, False, "")
            for _, w0, res in rows]


# --- continuation --------------------------------------------------------------

class ContinuationPath(list):
    """Solutions along a parameter homotopy; ``fold`` marks an early stop."""

    fold: bool = False
    reached: bool = False


_CONT_FIELDS = ("e", "C1", "lambda1", "lambda2", "sigma1", "qhat1", "qhat2")


def _interp_params(p0: DimensionlessParams, p1: DimensionlessParams, s: float):
    vals = {k: (1 - s) * getattr(p0, k) + s * getattr(p1, k) for k in _CONT_FIELDS}
    return replace(p0, **vals)


def continue_solution(sol: ResonanceSolution, target: DimensionlessParams, steps: int = 10,
                      *, cfg=None, min_fraction=1.0 / 1024) -> ContinuationPath:
    """Follow ``sol`` along the straight line from ``sol.params`` to ``target``.

    Each step re-converges by Newton from a secant prediction; failed steps are
    halved down to ``min_fraction`` of the path, after which the path is
    returned with ``fold=True``.
    """
    if not sol.converged:
        raise ResonanceError("continuation needs a converged start")
    path = ContinuationPath([sol])
    if all(getattr(sol.params, k) == getattr(target, k) for k in _CONT_FIELDS):
        path.reached = True
        return path
    s, ds = 0.0, 1.0 / max(1, steps)
    prev_v = None
    cur = sol
    prev_s = 0.0
    while s < 1.0 - 1e-15:
        s_new = min(1.0, s + ds)
        p_new = _interp_params(sol.params, target, s_new)
        guess = np.array(cur.v0)
        if prev_v is not None and s > prev_s:
            guess = guess + (guess - prev_v) * (s_new - s) / (s - prev_s)
        trial = _shoot(p_new, sol.spec, guess, cur.kind, cfg, maxiter=12)
        if trial.converged and not trial.singular:
            prev_v, prev_s = np.array(cur.v0), s
            cur, s = trial, s_new
            path.append(trial)
            ds = min(ds * 1.5, 1.0 / max(1, steps) * 2)
        else:
            ds *= 0.5
            if ds < min_fraction:
                path.fold = True
                return path
    path.reached = True
    return path


# --- resonant angles -------------------------------------------------------------

def resonant_angle(spec: ResonanceSpec, t, theta, body: int = 1, variant: str = "mean", e=None):
    """``psi = m t - n theta`` (``variant='mean'``) or ``m f(t) - n theta`` (``'true'``)."""
    m, n = spec.orders[body - 1]
    t = np.asarray(t, dtype=float)
    if variant == "mean":
        x = t
    elif variant == "true":
        if e is None:
            raise ValueError("variant 'true' needs the eccentricity")
        x = kepler_geometry(e, t)[1]
    else:
        raise ValueError("variant must be 'mean' or 'true'")
    return m * x - n * np.asarray(theta, dtype=float)


def combined_resonant_angle(spec: ResonanceSpec, t, theta1, theta2, sign: int = 1, variant="mean", e=None):
    """``psi_1 +/- psi_2``; ``2 pi lcm(n1, n2)``-periodic on a resonance."""
    return (resonant_angle(spec, t, theta1, 1, variant, e)
            + sign * resonant_angle(spec, t, theta2, 2, variant, e))


# --- Diophantine vectors ----------------------------------------------------------

class DiophantineError(ValueError):
    pass


@dataclass
class DiophantineResult:
    omega: np.ndarray
    alpha: float
    certificate: float
    witness: tuple
    K: int
    resonant: bool = field(default=False)


def _rational_roots(coeffs):
    """Rational roots of an integer polynomial (highest degree first)."""
    a_n, a_0 = coeffs[0], coeffs[-1]
    if a_0 == 0:
        return [Fraction(0)]

    def divisors(x):
        x = abs(x)
        return [d for d in range(1, x + 1) if x % d == 0]

    roots = []
    for p in divisors(a_0):
        for q in divisors(a_n):
            for sgn in (1, -1):
                r = Fraction(sgn * p, q)
                val = sum(Fraction(c) * r ** (len(coeffs) - 1 - i) for i, c in enumerate(coeffs))
                if val == 0:
                    roots.append(r)
    return roots


def diophantine_omega(b, A, alpha_poly, K: int = 50, root: int | None = None) -> DiophantineResult:
    """Frequency vector ``(1, b + A (alpha, alpha^2))`` and a finite-K Diophantine certificate.

    ``alpha_poly`` are the integer coefficients of a cubic (highest degree
    first); ``alpha`` is its largest real root unless ``root`` picks another
    one (index into the sorted real roots).  The certificate is
    ``min |k . omega| |k|_1^2`` over ``0 < |k|_inf <= K``.
    """
    coeffs = [int(c) for c in alpha_poly]
    if any(Fraction(c) != Fraction(orig) for c, orig in zip(coeffs, alpha_poly)):
        raise DiophantineError("polynomial coefficients must be integers")
    if len(coeffs) != 4 or coeffs[0] == 0:
        raise DiophantineError("alpha must be a root of a cubic")
    if _rational_roots(coeffs):
        raise DiophantineError("polynomial is reducible over the rationals")
    A = [[Fraction(x) for x in row] for row in A]
    b = [Fraction(x) for x in b]
    det = A[0][0] * A[1][1] - A[0][1] * A[1][0]
    if det == 0:
        raise DiophantineError("det A = 0")
    r = np.roots(coeffs)
    real = np.sort(r[np.abs(r.imag) < 1e-9].real)
    alpha = float(real[-1] if root is None else real[root])
    Af = np.array(A, dtype=float)
    om12 = np.array(b, dtype=float) + Af @ np.array([alpha, alpha * alpha])
    omega = np.concatenate([[1.0], om12])
    return _certificate(omega, alpha, K)


def diophantine_certificate(omega, K: int = 50) -> DiophantineResult:
    return _certificate(np.asarray(omega, dtype=float), float("nan"), K)


def _certificate(omega, alpha, K):
    ks = np.arange(-K, K + 1)
    k1, k2 = np.meshgrid(ks, ks, indexing="ij")
    best, witness = math.inf, None
    for k0 in ks:
        dot = np.abs(k0 * omega[0] + k1 * omega[1] + k2 * omega[2])
        norm = abs(k0) + np.abs(k1) + np.abs(k2)
        val = dot * norm.astype(float) ** 2
        if k0 == 0:
            val[K, K] = np.inf
        i = np.unravel_index(np.argmin(val), val.shape)
        if val[i] < best:
            best = float(val[i])
            witness = (int(k0), int(k1[i]), int(k2[i]))
    return DiophantineResult(omega, alpha, best, witness, K, resonant=best < 1e-12)


def lattice_types(bodies: int):
    """All ``(beta1[, beta2])`` symmetry types."""
    return list(itertools.product((0.0, HALF_PI), repeat=bodies))
