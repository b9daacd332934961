"""Monodromy matrices and linear stability of the resonant periodic orbits.

Dimensions: 2 for one-body Hill equations in ``(theta, dtheta)``, 4 for the
spin-spin LPH system in canonical ``(theta1, theta2, p1, p2)`` and 8 for the
linearized full model ``y' = J4 d^2H(zeta(t)) y``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import FullModel, ModelKind, OneBodyModel, SpinModel, keplerian_initial_state
from .integrator import IntegratorConfig, integrate, split_tangent, tangent_initial, with_tangent
from .params import DimensionlessParams, PhysicalParams, to_physical
from .resonance import (Flavor, ResonanceSolution, ResonanceSpec, ShootingProblem,
                        enumerate_roots, newton_shoot)

TOL_PARABOLIC = 1e-6
PAIRING_TOL = 1e-6


class StabilityClass(enum.Enum):
    Elliptic = "elliptic"
    Hyperbolic = "hyperbolic"
    ParabolicBand = "parabolic"


def symplectic_form(dim: int) -> np.ndarray:
    n = dim // 2
    J = np.zeros((dim, dim))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def symplectic_residual(M) -> float:
    """``||M^T J M - J||_inf``."""
    M = np.asarray(M)
    J = symplectic_form(M.shape[0])
    return float(np.max(np.abs(M.T @ J @ M - J)))


def eps_from_trace_tol(tol: float) -> float:
    """Modulus margin ``eps`` with ``(1+eps) + 1/(1+eps) = 2 + tol``."""
    return 0.5 * (tol + math.sqrt(tol * tol + 4.0 * tol))


def classify_hill(M, tol_parabolic: float = TOL_PARABOLIC) -> StabilityClass:
    """Trace test on a 2x2 monodromy."""
    tr = abs(float(np.trace(np.asarray(M))))
    if tr < 2.0 - tol_parabolic:
        return StabilityClass.Elliptic
    if tr > 2.0 + tol_parabolic:
        return StabilityClass.Hyperbolic
    return StabilityClass.ParabolicBand


def classify_hill_trace(tr, tol_parabolic: float = TOL_PARABOLIC):
    """Vectorized trace test: 0 elliptic, 1 hyperbolic, 2 parabolic band."""
    a = np.abs(np.asarray(tr))
    return np.where(a < 2.0 - tol_parabolic, 0, np.where(a > 2.0 + tol_parabolic, 1, 2))


_CODE = {0: StabilityClass.Elliptic, 1: StabilityClass.Hyperbolic, 2: StabilityClass.ParabolicBand}


def classify_floquet(multipliers, eps: float = 1e-6) -> dict:
    """``hyperbolic`` iff ``max |phi_k| > 1 + eps``."""
    mod = np.abs(np.asarray(multipliers))
    mm = float(np.max(mod)) if mod.size else 1.0
    return {"hyperbolic": mm > 1.0 + eps, "max_modulus": mm}


def classify_multipliers(multipliers, tol_parabolic: float = TOL_PARABOLIC) -> StabilityClass:
    """Three-way class of an LPH multiplier set, consistent with :func:`classify_hill`.

    Each multiplier gives ``tau = phi + 1/phi`` (the trace of its 2x2 block
    when the system decouples).  Hyperbolic when some modulus exceeds
    ``1 + eps`` with ``eps`` matched to the trace tolerance, parabolic band
    when some ``|tau|`` lies within the tolerance of 2.
    """
    mul = np.asarray(multipliers, dtype=complex)
    if classify_floquet(mul, eps_from_trace_tol(tol_parabolic))["hyperbolic"]:
        return StabilityClass.Hyperbolic
    tau = np.abs((mul + 1.0 / mul).real)
    if np.any(np.abs(tau - 2.0) <= tol_parabolic):
        return StabilityClass.ParabolicBand
    return StabilityClass.Elliptic


def _classify_batch(mul, tol):
    # mul (batch, dim)
    eps = eps_from_trace_tol(tol)
    hyper = np.max(np.abs(mul), axis=-1) > 1.0 + eps
    tau = np.abs((mul + 1.0 / mul).real)
    band = np.any(np.abs(tau - 2.0) <= tol, axis=-1)
    return np.where(hyper, 1, np.where(band, 2, 0))


def pairing_defect(multipliers) -> float:
    """Distance of the set from closure under ``phi -> 1/phi`` and ``phi -> conj(phi)``."""
    mul = np.asarray(multipliers, dtype=complex)
    worst = 0.0
    for img in (1.0 / mul, np.conj(mul)):
        d = np.abs(mul[:, None] - img[None, :])
        # match greedily through the assignment of nearest partners
        from scipy.optimize import linear_sum_assignment
        r, c = linear_sum_assignment(d)
        worst = max(worst, float(np.max(d[r, c])))
    return worst


@dataclass
class MonodromyResult:
    dim: int
    matrix: np.ndarray
    multipliers: np.ndarray
    cls: StabilityClass
    max_modulus: float
    t0: float = 0.0
    period: float = 2.0 * math.pi

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def symplectic_residual(self) -> float:
        return symplectic_residual(self.matrix)

    def pairing_defect(self) -> float:
        return pairing_defect(self.multipliers)

    def moduli_arguments(self):
        """Rows ``(argument, modulus)`` sorted by argument."""
        rows = sorted((float(np.angle(m)), float(abs(m))) for m in self.multipliers)
        return np.array(rows)


def result_from_matrix(M, t0=0.0, period=2.0 * math.pi, tol_parabolic=TOL_PARABOLIC) -> MonodromyResult:
    M = np.asarray(M, dtype=float)
    mul = np.linalg.eigvals(M)
    if M.shape[0] == 2:
        cls = classify_hill(M, tol_parabolic)
    else:
        cls = classify_multipliers(mul, tol_parabolic)
    return MonodromyResult(M.shape[0], M, mul, cls, float(np.max(np.abs(mul))), t0, period)


def _default_cfg(cfg):
    return cfg or IntegratorConfig(abs_tol=1e-13, rel_tol=1e-13)


def flow_matrix(rhs, jac, dim, y0, t0, T, cfg=None):
    """Fundamental matrix ``Phi(t0 + T)`` with ``Phi(t0) = I``; batched over ``y0[..., b]``."""
    aug = with_tangent(rhs, jac, dim)
    Y = integrate(aug, tangent_initial(y0, dim), t0, t0 + T, _default_cfg(cfg),
                  store_steps=False).y_final
    return split_tangent(Y, dim)


def monodromy(params, kind, base_solution: ResonanceSolution, period=None, *, cfg=None,
              tol_parabolic=TOL_PARABOLIC) -> MonodromyResult:
    """Monodromy of the Keplerian spin model along a converged symmetric orbit.

    ``params``/``kind`` default to those stored on the solution.  The period
    defaults to ``2 pi`` for balanced and ``2 pi n`` for standard orders; the
    integration starts at ``alpha``.
    """
    sol = base_solution
    if params is None:
        params = sol.params
    kind = sol.kind if kind is None else kind
    prob = ShootingProblem(params, sol.spec, kind)
    T = sol.spec.period if period is None else period
    y0 = prob.state(np.array(sol.theta0), np.array(sol.v0))
    _, Phi = flow_matrix(prob.model.rhs, prob.model.jac, prob.dim, y0, sol.spec.alpha, T, cfg)
    return result_from_matrix(Phi, sol.spec.alpha, T, tol_parabolic)


def hill_monodromy(e, lam, theta0, v0, T=2.0 * math.pi, t0=0.0, Q=0.0, D=0.0, cfg=None):
    """2x2 monodromy of the one-body equation from ``(theta0, v0)`` at ``t0``."""
    model = OneBodyModel(e, lam, Q, D)
    y0 = np.stack(np.broadcast_arrays(np.asarray(theta0, float), np.asarray(v0, float)))
    _, Phi = flow_matrix(model.rhs, model.jac, 2, y0, t0, T, cfg)
    return Phi


# --- full model ---------------------------------------------------------------

def full_monodromy(phys: PhysicalParams, e: float, sol: ResonanceSolution, *, trunc=None,
                   cfg=None, periods: int = 1, tol_parabolic=TOL_PARABOLIC) -> MonodromyResult:
    """8x8 monodromy of ``y' = J4 d^2H(zeta(t)) y`` along the Keplerian-form trajectory.

    ``zeta`` starts at periapsis with the spins of the balanced solution
    ``sol``; it is ``2 pi``-periodic whenever ``sol`` is.
    """
    if sol.spec.flavor is not Flavor.Balanced or sol.spec.bodies != 2:
        raise ValueError("the full linearization needs a balanced spin-spin solution")
    base = FullModel(phys, ModelKind.KeplerianFullForm, trunc)
    lin = FullModel(phys, ModelKind.FullSpinSpin, trunc)
    z0 = keplerian_initial_state(phys, e, sol.theta0[0], sol.theta0[1], sol.v0[0], sol.v0[1])
    T = 2.0 * math.pi * periods
    _, Phi = flow_matrix(base.rhs, lin.jac_hamiltonian, 8, z0, 0.0, T, cfg)
    return result_from_matrix(Phi, 0.0, T, tol_parabolic)


def kepler_block_monodromy(phys: PhysicalParams, e: float, *, cfg=None) -> MonodromyResult:
    """Orbital 4x4 block ``(r, f, p_r, p_f)`` of the full-model monodromy.

    With spherical bodies the orbit decouples and every multiplier of this
    block is 1 (a defective eigenvalue, so numerical errors scale like the
    square root of the integration error).
    """
    m = FullModel(phys, ModelKind.FullSpinSpin)
    z0 = keplerian_initial_state(phys, e, 0.0, 0.0, 1.0, 1.0)
    _, Phi = flow_matrix(m.rhs, m.jac_hamiltonian, 8, z0, 0.0, 2.0 * math.pi, cfg)
    idx = [0, 1, 4, 5]
    return result_from_matrix(Phi[np.ix_(idx, idx)], 0.0, 2.0 * math.pi)


KEPLER_MULTIPLIERS = np.ones(4, dtype=complex)


@dataclass
class FloquetTable:
    """Multipliers of the Keplerian model (spin block + Kepler block) and of the full linearization."""

    spin: MonodromyResult
    kepler: np.ndarray
    full: MonodromyResult
    solution: ResonanceSolution
    physical: PhysicalParams

    @property
    def keplerian_multipliers(self):
        return np.concatenate([self.spin.multipliers, self.kepler])


def floquet_table(params: DimensionlessParams, spec: ResonanceSpec, *, trunc=None, cfg=None,
                  check_bounds=False, v_guess=None) -> FloquetTable:
    """Both multiplier sets for a balanced spin-spin resonance (``params.a`` must be set)."""
    from .resonance import shoot
    sol = shoot(params, spec, v_guess, cfg=cfg)
    if not sol.converged:
        raise ValueError(f"resonance did not converge (residual {sol.residual:.3g})")
    phys = to_physical(params, check_bounds=check_bounds)
    spin = monodromy(params, None, sol, cfg=cfg)
    full = full_monodromy(phys, params.e, sol, trunc=trunc, cfg=cfg)
    return FloquetTable(spin, KEPLER_MULTIPLIERS.copy(), full, sol, phys)


# --- diagrams -------------------------------------------------------------------

@dataclass
class Diagram:
    """Per-cell stability over ``(e, lambda)``.

    ``cls``: 0 elliptic, 1 hyperbolic, 2 parabolic band, -1 no/failed solution.
    ``count`` is the number of solutions found in the cell (spin-orbit path)
    or 1/0 for converged/failed continuation.
    """

    es: np.ndarray
    lams: np.ndarray
    cls: np.ndarray
    count: np.ndarray
    v0: np.ndarray
    trace: np.ndarray


def spin_orbit_diagram(es, lams, m: int, beta: float = 0.0, gammas=None, *, Q=0.0, D=0.0,
                       cfg=None, tol_parabolic=TOL_PARABOLIC, progress=None) -> Diagram:
    """Balanced ``m:2`` one-body diagram from gamma scans and Hill traces.

    Cells with several solutions keep the class of the first (lowest
    ``dtheta(0)``) and report the count.
    """
    es = np.asarray(es, dtype=float)
    lams = np.asarray(lams, dtype=float)
    if gammas is None:
        gammas = np.linspace(m / 2.0 - 3.0, m / 2.0 + 3.0, 400)
    ne, nl = len(es), len(lams)
    cls = np.full((ne, nl), -1, dtype=int)
    count = np.zeros((ne, nl), dtype=int)
    v0 = np.full((ne, nl), np.nan)
    trace = np.full((ne, nl), np.nan)
    for i, e in enumerate(es):
        rows = enumerate_roots(OneBodyModel(e, lams, Q, D), m, beta, gammas, cfg)
        idx = [j for j, r in enumerate(rows) if len(r)]
        for j in idx:
            count[i, j] = len(rows[j])
            v0[i, j] = rows[j][0, 1]
        if idx:
            idx = np.array(idx)
            Phi = hill_monodromy(e, lams[idx], beta, v0[i, idx], Q=Q, D=D, cfg=cfg)
            tr = Phi[0, 0] + Phi[1, 1]
            trace[i, idx] = tr
            cls[i, idx] = classify_hill_trace(tr, tol_parabolic)
        if progress:
            progress(i + 1, ne)
    return Diagram(es, lams, cls, count, v0, trace)


def spin_spin_diagram(es, lams, m: int, betas=(0.0, 0.0), *, C1=0.5, sigma1=0.0, qhat=0.0,
                      cfg=None, tol_parabolic=TOL_PARABOLIC, progress=None) -> Diagram:
    """Balanced ``(m:2, m:2)`` diagram for equal bodies, ``lambda1 = lambda2 = lambda``.

    Solutions are continued in ``lambda`` from the exact free solution at
    ``lambda = 0``, outward in both directions, all ``e`` rows at once; each
    cell is classified from its 4x4 LPH monodromy.
    """
    es = np.asarray(es, dtype=float)
    lams = np.asarray(lams, dtype=float)
    ne, nl = len(es), len(lams)
    spec = ResonanceSpec.balanced(m, m, betas[0], betas[1])
    cls = np.full((ne, nl), -1, dtype=int)
    count = np.zeros((ne, nl), dtype=int)
    v0 = np.full((ne, nl), np.nan)
    trace = np.full((ne, nl), np.nan)
    free = m / 2.0
    order = np.argsort(np.abs(lams), kind="stable")
    neg = [j for j in order if lams[j] < 0]
    pos = [j for j in order if lams[j] >= 0]
    theta0 = np.array(betas, dtype=float)[:, None]
    targets = theta0 + np.array(spec.targets)[:, None]
    done = 0
    for branch in (pos, neg):
        guess = np.full((2, ne), free)
        ok = np.ones(ne, dtype=bool)
        for j in branch:
            model = SpinModel(ModelKind.KeplerianSpinSpin, es, C1, lams[j], lams[j], sigma1, qhat, qhat)
            prob = ShootingProblem(None, spec, ModelKind.KeplerianSpinSpin, model=model)
            nr = newton_shoot(prob, theta0, targets, guess, 0.0, math.pi, cfg, maxiter=15)
            good = nr.converged & ok
            ok = good
            guess = np.where(good, nr.v, guess)
            count[:, j] = good
            v0[:, j] = np.where(good, nr.v[0], np.nan)
            if np.any(good):
                y0 = model.state(betas[0], betas[1], nr.v[0], nr.v[1])
                _, Phi = flow_matrix(model.rhs, model.jac, 4, y0, 0.0, 2.0 * math.pi, cfg)
                mats = np.moveaxis(Phi, -1, 0)
                mul = np.linalg.eigvals(mats)
                c = _classify_batch(mul, tol_parabolic)
                cls[:, j] = np.where(good, c, -1)
                trace[:, j] = np.where(good, np.trace(Phi), np.nan)
            done += 1
            if progress:
                progress(done, nl)
    return Diagram(es, lams, cls, count, v0, trace)
