import math

import numpy as np
import pytest

from spinspin.params import DimensionlessParams, PhysicalParams
from spinspin.resonance import ResonanceSpec, shoot
from spinspin.stability import (StabilityClass, classify_floquet, classify_hill, classify_multipliers,
                                eps_from_trace_tol, full_monodromy, hill_monodromy,
                                kepler_block_monodromy, monodromy, pairing_defect,
                                result_from_matrix, spin_orbit_diagram, spin_spin_diagram,
                                symplectic_residual)


@pytest.mark.parametrize("lam", [0.1, 0.3, 0.8])
def test_hill_closed_form_at_zero_eccentricity(lam):
    # linearization about theta = t: y'' + lam y = 0 (type 0), y'' - lam y = 0 (type pi/2)
    M = hill_monodromy(0.0, lam, 0.0, 1.0)
    assert np.trace(M) == pytest.approx(2 * math.cos(2 * math.pi * math.sqrt(lam)), abs=1e-10)
    M = hill_monodromy(0.0, lam, math.pi / 2, 1.0)
    assert np.trace(M) == pytest.approx(2 * math.cosh(2 * math.pi * math.sqrt(lam)), rel=1e-10)
    assert classify_hill(M) is StabilityClass.Hyperbolic


def test_free_rotation_monodromy():
    M = hill_monodromy(0.3, 0.0, 0.0, 1.5)
    assert np.allclose(M, [[1, 2 * math.pi], [0, 1]], atol=1e-12)
    assert classify_hill(M) is StabilityClass.ParabolicBand


def test_spin_spin_monodromy_factors_without_coupling():
    e, lam1, lam2 = 0.1, 0.2, 0.35
    p = DimensionlessParams(e=e, lambda1=lam1, lambda2=lam2)
    sol = shoot(p, ResonanceSpec.balanced(3, 3))
    res = monodromy(None, None, sol)
    assert res.symplectic_residual() < 1e-9 and res.pairing_defect() < 1e-8
    hill = []
    for lam, v in ((lam1, sol.v0[0]), (lam2, sol.v0[1])):
        one = shoot(DimensionlessParams(e=e, lambda1=lam), ResonanceSpec.balanced(3))
        assert one.v0[0] == pytest.approx(v, abs=1e-10)
        hill.extend(np.linalg.eigvals(hill_monodromy(e, lam, 0.0, v)))
    for mu in hill:
        assert np.min(np.abs(res.multipliers - mu)) < 1e-8


def test_kepler_block_multipliers_are_one():
    phys = PhysicalParams.from_moments(0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 20.0 ** 3)
    res = kepler_block_monodromy(phys, 0.2)
    assert np.max(np.abs(res.multipliers - 1.0)) < 1e-6


def test_full_monodromy_needs_two_body_solution():
    p = DimensionlessParams(e=0.1, lambda1=0.1)
    sol = shoot(p, ResonanceSpec.balanced(3))
    phys = PhysicalParams.from_moments(0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 20.0 ** 3)
    with pytest.raises(ValueError):
        full_monodromy(phys, 0.1, sol)


def test_classifiers():
    eps = eps_from_trace_tol(1e-6)
    assert (1 + eps) + 1 / (1 + eps) == pytest.approx(2 + 1e-6, abs=1e-15)
    assert classify_floquet([2.0, 0.5])["hyperbolic"]
    assert not classify_floquet([np.exp(0.3j), np.exp(-0.3j)])["hyperbolic"]
    ell = [np.exp(0.4j), np.exp(-0.4j), np.exp(1.1j), np.exp(-1.1j)]
    assert classify_multipliers(ell) is StabilityClass.Elliptic
    assert classify_multipliers(ell[:2] + [1.0, 1.0]) is StabilityClass.ParabolicBand
    assert classify_multipliers(ell[:2] + [-1.5, -1 / 1.5]) is StabilityClass.Hyperbolic


def test_multiplier_class_agrees_with_trace_class():
    rng = np.random.default_rng(0)
    for tr in np.concatenate([rng.uniform(-3, 3, 200), [2.0, -2.0, 2 + 5e-7, 2 - 5e-7]]):
        M = np.array([[tr / 2, 1.0], [(tr * tr / 4 - 1), tr / 2]])
        assert classify_multipliers(np.linalg.eigvals(M)) is classify_hill(M)


def test_pairing_and_symplectic_residual_of_rotation():
    c, s = math.cos(0.7), math.sin(0.7)
    R = np.array([[c, s], [-s, c]])
    assert symplectic_residual(R) < 1e-15
    assert pairing_defect(np.linalg.eigvals(R)) < 1e-15
    assert pairing_defect([2.0, 0.4]) > 0.09
    res = result_from_matrix(R)
    assert res.cls is StabilityClass.Elliptic and res.moduli_arguments().shape == (2, 2)


def test_small_diagrams_agree():
    es = np.array([0.0, 0.1, 0.3])
    lams = np.array([-0.6, 0.2, 0.9])
    a = spin_orbit_diagram(es, lams, 2)
    b = spin_spin_diagram(es, lams, 2)
    assert np.all(b.count == 1)
    assert np.array_equal(a.cls, b.cls)
