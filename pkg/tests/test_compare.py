import math

import numpy as np
import pytest

from spinspin.compare import (GRID_COLUMNS, comparison_params, osculating_polar, physical_for,
                              run_comparison, scan_comparison_grid, write_grid_csv)
from spinspin.kepler import KeplerOrbit, orbit_state, osculating_from_polar
from spinspin.resonance import ResonanceError, ResonanceSpec

SPEC = ResonanceSpec.parse("1:1,3:2")


def test_osculating_polar_matches_scalar_elements():
    o = KeplerOrbit(a=7.0, e=0.3, mu=0.25)
    z = np.zeros((8, 5))
    for i, t in enumerate(np.linspace(0.1, 6.0, 5)):
        r, f, pr, pf = orbit_state(o, t)
        z[[0, 1, 4, 5], i] = r, f, pr, pf
    a_F, e_F, om = osculating_polar(z, o.mu, o.G)
    for i in range(5):
        el = osculating_from_polar(z[0, i], z[1, i], z[4, i], z[5, i], o.mu, o.G)
        assert a_F[i] == pytest.approx(el.a_F, rel=1e-12)
        assert e_F[i] == pytest.approx(el.e_F, abs=1e-12)
    assert np.allclose(a_F, 7.0) and np.allclose(e_F, 0.3)
    assert np.allclose(np.cos(om), 1.0)


def test_comparison_params_fix_orbit_size():
    p = comparison_params(0.1, 0.05, 0.01, 1e-3)
    assert p.a == pytest.approx(math.sqrt(0.5 / (3e-3 * 0.25)))
    ph = physical_for(p)
    assert ph.mu == pytest.approx(0.25) and ph.G == pytest.approx(p.a ** 3)


def test_deltas_vanish_initially_and_for_spherical_bodies():
    run = run_comparison(comparison_params(0.1, 0.05, 0.01, 1e-3), SPEC, horizon=1)
    assert run.delta_a[0] == pytest.approx(0.0, abs=1e-13)
    assert run.delta_e[0] == pytest.approx(0.0, abs=1e-13)
    assert np.allclose(run.delta_res[:, 0], 0.0, atol=1e-13)
    # without any asphericity the two models coincide
    sph = run_comparison(comparison_params(0.1, 0.0, 0.0, 1e-3), SPEC, horizon=3)
    assert np.max(np.abs(sph.delta_e)) < 1e-10 and np.max(np.abs(sph.delta_a)) < 1e-10
    assert np.max(np.abs(sph.delta_res)) < 1e-8


def test_close_orbit_stays_near_keplerian():
    run = run_comparison(comparison_params(0.0, 0.05, 0.01, 1e-3), SPEC, horizon=10)
    assert run.collision is None
    assert np.max(np.abs(run.delta_a)) < 1e-2 and np.max(np.abs(run.delta_e)) < 0.1
    rows = run.per_revolution()
    assert len(rows["t"]) == 11


def test_quadrupole_drives_large_eccentricity_variations():
    # wide orbit with flattened bodies: the Keplerian model misses the apsidal motion
    run = run_comparison(comparison_params(0.1, 0.05, 0.01, 1e-7), SPEC, horizon=20)
    assert np.ptp(run.e_F) > 0.2 * 0.1
    flat = run_comparison(comparison_params(0.1, 0.05, 0.0, 1e-7), SPEC, horizon=5)
    assert np.max(np.abs(flat.delta_e)) < 1e-6


def test_single_body_spec_rejected():
    with pytest.raises(ResonanceError):
        run_comparison(comparison_params(0.1, 0.05, 0.01, 1e-3), ResonanceSpec.balanced(3))


def test_grid_corner_collides(tmp_path):
    lams = np.logspace(-3, 0, 8)
    g = scan_comparison_grid(lams, [1e-4, 0.05])
    assert g.status[1, -1] == "collision" and np.all(g.status[0] == "ok")
    assert np.all(np.diff(g.log_de[0]) > 0)
    write_grid_csv(tmp_path / "g.csv", g)
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == ",".join(GRID_COLUMNS) and len(lines) == 17
