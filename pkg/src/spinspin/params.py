"""Parameter sets of the two-ellipsoid models and conversions between them.

Units: ``M1 + M2 = 1``, ``C1 + C2 = 1`` and orbital period 2*pi, hence
``G = a**3``.  The Keplerian spin models are parametrized by the
dimensionless set ``(e, C1, lambda1, lambda2, sigma1, qhat1, qhat2)``; the
full model needs the physical set ``(M1, C1, d1, d2, q1, q2, G)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace

DIMENSIONLESS_KEYS = ("e", "C1", "lambda1", "lambda2", "sigma1", "qhat1", "qhat2")
PHYSICAL_KEYS = ("M1", "C1", "d1", "d2", "q1", "q2", "G")


class ParameterError(ValueError):
    """Invalid parameter set; the message names the violated relation."""


class DegenerateShapeWarning(UserWarning):
    """Accepted but untested limiting shape (``d_j == q_j``) or unchecked bounds."""


def _semi_axis(M, C, d):
    # M a^2 = 5/2 (C + d); |d| because a negative d only swaps the long axis
    if not M > 0.0:
        return math.nan
    return math.sqrt(2.5 * (C + abs(d)) / M)


@dataclass(frozen=True)
class PhysicalParams:
    """Masses, principal moments and derived shape constants of both ellipsoids.

    Build with :meth:`from_moments`.  ``check_bounds=False`` skips the
    moment-of-inertia inequalities (with a warning); some parameter sets used
    for model comparisons are only meaningful that way.
    """

    M1: float
    M2: float
    C1: float
    C2: float
    A1: float
    B1: float
    A2: float
    B2: float
    d1: float
    d2: float
    q1: float
    q2: float
    G: float
    sa1: float
    sa2: float
    check_bounds: bool = field(default=True, compare=False)

    @classmethod
    def from_moments(cls, M1, C1, d1, d2, q1, q2, G, *, check_bounds=True):
        M2 = 1.0 - M1
        C2 = 1.0 - C1
        B1 = 0.5 * (2.0 * C1 - q1 + d1)
        A1 = 0.5 * (2.0 * C1 - q1 - d1)
        B2 = 0.5 * (2.0 * C2 - q2 + d2)
        A2 = 0.5 * (2.0 * C2 - q2 - d2)
        return cls(
            M1=M1, M2=M2, C1=C1, C2=C2, A1=A1, B1=B1, A2=A2, B2=B2,
            d1=d1, d2=d2, q1=q1, q2=q2, G=G,
            sa1=_semi_axis(M1, C1, d1), sa2=_semi_axis(M2, C2, d2),
            check_bounds=check_bounds,
        )

    def __post_init__(self):
        violations = self.bound_violations()
        basic = [v for v in violations if v.startswith("basic:")]
        if basic:
            raise ParameterError("; ".join(basic))
        if violations and self.check_bounds:
            raise ParameterError("; ".join(violations))
        if violations:
            warnings.warn("moment bounds not enforced: " + "; ".join(violations),
                          DegenerateShapeWarning, stacklevel=3)
        for j, (d, q) in enumerate(((self.d1, self.q1), (self.d2, self.q2)), start=1):
            if d != 0.0 and abs(d) == q:
                warnings.warn(f"body {j}: d{j} == q{j} (degenerate prolate shape)",
                              DegenerateShapeWarning, stacklevel=3)

    def bound_violations(self) -> list[str]:
        """List the violated relations; an empty list means the set is admissible."""
        out = []
        tol = 1e-12
        if not (0.0 < self.M1 < 1.0 and 0.0 < self.M2 < 1.0):
            out.append("basic: 0 < M_j < 1")
        if abs(self.M1 + self.M2 - 1.0) > tol:
            out.append("basic: M1 + M2 = 1")
        if abs(self.C1 + self.C2 - 1.0) > tol:
            out.append("basic: C1 + C2 = 1")
        if not self.G > 0.0:
            out.append("basic: G > 0")
        for j, (M, C, A, B, d, q, sa) in enumerate(
            ((self.M1, self.C1, self.A1, self.B1, self.d1, self.q1, self.sa1),
             (self.M2, self.C2, self.A2, self.B2, self.d2, self.q2, self.sa2)), start=1):
            scale = max(1.0, abs(d), abs(q))
            if abs((B - A) - d) > tol * scale or abs((2 * C - B - A) - q) > tol * scale:
                out.append(f"basic: d{j}, q{j} inconsistent with A{j}, B{j}")
            if not (0.0 <= abs(d) <= C + tol and C <= 1.0 + tol):
                out.append(f"0 <= |d{j}| <= C{j} <= 1")
            if not (abs(d) <= q + tol and q <= 2.0 * C + tol):
                out.append(f"|d{j}| <= q{j} <= 2 C{j}")
            if M * sa * sa > 5.0 * C * (1.0 + 1e-12):
                out.append(f"M{j} a{j}^2 <= 5 C{j}")
        return out

    @property
    def mu(self) -> float:
        return self.M1 * self.M2

    @property
    def a(self) -> float:
        """Semi-major axis implied by ``G = a**3``."""
        return self.G ** (1.0 / 3.0)

    def to_mapping(self) -> dict:
        return {k: getattr(self, k) for k in PHYSICAL_KEYS}


@dataclass(frozen=True)
class DimensionlessParams:
    """Parameters of the Keplerian spin models.

    ``lambda1``/``lambda2`` may be negative: a negative value with type-0
    boundary conditions reproduces a type pi/2 solution.  ``a`` is only needed
    to go back to physical parameters.
    """

    e: float
    C1: float = 0.5
    lambda1: float = 0.0
    lambda2: float = 0.0
    sigma1: float = 0.0
    qhat1: float = 0.0
    qhat2: float = 0.0
    a: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.e < 1.0:
            raise ParameterError("0 <= e < 1")
        if not 0.0 < self.C1 < 1.0:
            raise ParameterError("0 < C1 < 1")
        if self.sigma1 < 0.0:
            raise ParameterError("sigma1 >= 0")
        if self.qhat1 < 0.0 or self.qhat2 < 0.0:
            raise ParameterError("qhat_j >= 0")
        if self.a is not None and not self.a > 0.0:
            raise ParameterError("a > 0")

    @property
    def C2(self) -> float:
        return 1.0 - self.C1

    @property
    def sigma2(self) -> float:
        """Fixed by ``C1 sigma2 = C2 sigma1``."""
        return self.C2 * self.sigma1 / self.C1

    @property
    def dhat1(self) -> float:
        """``lambda1 sigma1 = d1 / (M1 a^2)``."""
        return self.lambda1 * self.sigma1

    @property
    def dhat2(self) -> float:
        return self.lambda2 * self.sigma2

    def replace(self, **changes) -> "DimensionlessParams":
        return replace(self, **changes)

    def to_mapping(self) -> dict:
        out = {k: getattr(self, k) for k in DIMENSIONLESS_KEYS}
        if self.a is not None:
            out["a"] = self.a
        return out

    @classmethod
    def equal_bodies(cls, e, lam, qhat=0.0, sigma=0.0, a=None) -> "DimensionlessParams":
        """Identical ellipsoids: ``C1 = 1/2`` and equal lambda, qhat, sigma."""
        return cls(e=e, C1=0.5, lambda1=lam, lambda2=lam, sigma1=sigma,
                   qhat1=qhat, qhat2=qhat, a=a)


def semi_major_axis(C1, sigma1, mu) -> float:
    """Invert ``mu = C1 / (3 sigma1 a^2)`` for ``a``."""
    if not sigma1 > 0.0:
        raise ParameterError("sigma1 > 0 is required to fix the orbit size")
    return math.sqrt(C1 / (3.0 * sigma1 * mu))


def to_physical(p: DimensionlessParams, mu: float | None = None, *,
                check_bounds: bool = True) -> PhysicalParams:
    """Physical parameters of the full model from the dimensionless set.

    Either ``p.a`` is set, and the reduced mass follows from
    ``mu = C1 / (3 sigma1 a^2)``, or ``mu`` is given and fixes ``a``.  The
    lighter body is labelled 1 (``M1 <= 1/2``).
    """
    if not p.sigma1 > 0.0:
        raise ParameterError("sigma1 > 0 is required for a physical mass split")
    if p.a is not None:
        a = p.a
        mu_p = p.C1 / (3.0 * p.sigma1 * a * a)
        if mu is not None and not math.isclose(mu, mu_p, rel_tol=1e-12):
            raise ParameterError(f"mu={mu!r} inconsistent with a={a!r}")
        mu = mu_p
    elif mu is None:
        raise ParameterError("either p.a or mu must be given")
    else:
        a = semi_major_axis(p.C1, p.sigma1, mu)
    if mu > 0.25 * (1.0 + 1e-12):
        raise ParameterError(f"no real mass split: mu={mu!r} > 1/4")
    mu = min(mu, 0.25)
    M1 = 0.5 * (1.0 - math.sqrt(max(0.0, 1.0 - 4.0 * mu)))
    M2 = 1.0 - M1
    C1, C2 = p.C1, p.C2
    return PhysicalParams.from_moments(
        M1=M1, C1=C1,
        d1=p.lambda1 * C1 / (3.0 * M2),
        d2=p.lambda2 * C2 / (3.0 * M1),
        q1=p.qhat1 * M1 * a * a,
        q2=p.qhat2 * M2 * a * a,
        G=a ** 3,
        check_bounds=check_bounds,
    )


def to_dimensionless(p: PhysicalParams, a: float, e: float) -> DimensionlessParams:
    """Dimensionless parameters ``(e, C1, lambda_j, sigma1, qhat_j)`` of a physical set."""
    if not math.isclose(p.G, a ** 3, rel_tol=1e-10):
        raise ParameterError("G = a^3 violated")
    mu = p.mu
    return DimensionlessParams(
        e=e, C1=p.C1,
        lambda1=3.0 * mu / p.M1 * p.d1 / p.C1,
        lambda2=3.0 * mu / p.M2 * p.d2 / p.C2,
        sigma1=p.C1 / (3.0 * mu * a * a),
        qhat1=p.q1 / (p.M1 * a * a),
        qhat2=p.q2 / (p.M2 * a * a),
        a=a,
    )


def collision_radius(p: PhysicalParams) -> float:
    """Sum of the longest semi-axes, ``a1 + a2``."""
    return p.sa1 + p.sa2


def params_from_mapping(values: dict, *, check_bounds=True):
    """Build a parameter set from flat key/value pairs (strings or numbers).

    Keys ``lambda1`` etc. select :class:`DimensionlessParams`; keys ``M1``,
    ``d1`` etc. select :class:`PhysicalParams`.
    """
    vals = {k: float(v) for k, v in values.items() if v not in (None, "")}
    if "lambda1" in vals or "sigma1" in vals or "qhat1" in vals:
        known = {f.name for f in fields(DimensionlessParams)}
        extra = set(vals) - known
        if extra:
            raise ParameterError(f"unknown dimensionless keys: {sorted(extra)}")
        return DimensionlessParams(**vals)
    if "M1" in vals or "d1" in vals:
        missing = [k for k in PHYSICAL_KEYS if k not in vals]
        if missing:
            raise ParameterError(f"missing physical keys: {missing}")
        return PhysicalParams.from_moments(**{k: vals[k] for k in PHYSICAL_KEYS},
                                           check_bounds=check_bounds)
    raise ParameterError("cannot tell parameter set from keys: " + ", ".join(sorted(vals)))


def params_to_mapping(p) -> dict:
    if isinstance(p, (DimensionlessParams, PhysicalParams)):
        return p.to_mapping()
    return asdict(p)
