import numpy as np
import pytest

import phaselab as pl


def test_signed_distance(sphere4):
    r = 0.5
    d = pl.signed_distance(sphere4, 0, r)
    assert d[0] == pytest.approx(r)
    anti = int(np.argmin(sphere4.vertex_positions @ sphere4.vertex_positions[0]))
    # antipode of a half-radius ball: roughly r - pi
    assert abs(d[anti] - (r - np.pi)) < 0.05 * np.pi
    with pytest.raises(ValueError):
        pl.signed_distance(sphere4, 0, 100.0)


def test_photograph_volume_and_range(sphere4, well):
    V = np.pi / 2
    ph = pl.photograph(sphere4, well, 0.05, V, 0)
    vol = float(sphere4.lumped_mass @ ph.field)
    assert abs(vol - V) <= 1e-8 * V
    assert ph.field.min() >= -1e-12
    assert ph.field.max() <= 1.0 + 1e-12
    assert 0.0 <= ph.delta <= ph.profile.eta


def test_photograph_support_containment(sphere4, well):
    V = 0.5
    ph = pl.photograph(sphere4, well, 0.05, V, 0)
    d = sphere4.geodesic_distance(0)
    outside = d > ph.r_V + ph.profile.eta + 1e-12
    assert np.all(ph.field[outside] <= 1e-12)


def test_photograph_degenerate_well(sphere4, zero_well):
    # affine ramp profile; the volume solve is exact
    V = 1.0
    ph = pl.photograph(sphere4, zero_well, 0.05, V, 0)
    assert abs(float(sphere4.lumped_mass @ ph.field) - V) <= 1e-8 * V


def test_photograph_rejections(sphere4, well):
    with pytest.raises(ValueError):
        pl.photograph(sphere4, well, 0.05, -0.5, 0)
    with pytest.raises(ValueError):
        pl.photograph(sphere4, well, 0.05, 2 * sphere4.total_area, 0)


def test_energy_matches_energy_module(sphere4, well):
    ph = pl.photograph(sphere4, well, 0.05, np.pi / 2, 0)
    assert ph.energy == pl.energy(sphere4, well, 0.05, ph.field)


def test_gamma_limsup_value(sphere5, well):
    V = np.pi / 2
    target = pl.sigma(well, 0, 1) * 2 * np.pi * np.sqrt(7) / 4
    ph = pl.photograph(sphere5, well, 0.02, V, 0)
    assert abs(ph.energy - target) < 0.10 * target


def test_l1_convergence_trend(sphere5, well):
    V = np.pi / 2
    d = sphere5.geodesic_distance(0)
    eps_ladder = [0.2, 0.1, 0.05, 0.025]
    l1 = []
    for eps in eps_ladder:
        ph = pl.photograph(sphere5, well, eps, V, 0)
        chi = (d < ph.r_V).astype(float)
        l1.append(float(sphere5.lumped_mass @ np.abs(ph.field - chi)))
    assert all(a >= b for a, b in zip(l1, l1[1:]))
    slope = np.polyfit(np.log(eps_ladder), np.log(l1), 1)[0]
    assert slope >= 0.2


def test_sublevel_check(sphere4, well):
    V = np.pi / 2
    eps = 0.05
    ph = pl.photograph(sphere4, well, eps, V, 0)
    rep = pl.sublevel_check(sphere4, well, eps, V, [ph], np.inf)
    assert rep["all_below"]
    # the flat state at this volume fraction has bulk energy above any
    # reasonable ceiling for small eps
    const = np.full(sphere4.n_vertices, V / sphere4.total_area)
    e_const = pl.energy(sphere4, well, 0.005, const)
    rep2 = pl.sublevel_check(sphere4, well, 0.005, V, [], 0.1)
    assert e_const > rep2["ceiling"]


def test_sublevel_check_mismatched_fields(sphere4, well):
    ph = pl.photograph(sphere4, well, 0.05, 0.5, 0)
    with pytest.raises(ValueError):
        pl.sublevel_check(sphere4, well, 0.1, 0.5, [ph], 0.1)


def test_modulus_symmetry_and_zero(sphere4, well):
    V = np.pi / 2
    assert pl.photography_modulus(sphere4, well, 0.05, V, 3, 3) == 0.0
    ab = pl.photography_modulus(sphere4, well, 0.05, V, 3, 7)
    ba = pl.photography_modulus(sphere4, well, 0.05, V, 7, 3)
    assert ab == pytest.approx(ba, rel=1e-12)


def test_modulus_monotone_in_separation(sphere5, well):
    V = np.pi / 2
    tri = sphere5.triangles[np.any(sphere5.triangles == 0, axis=1)][0]
    nbr = int(tri[tri != 0][0])
    d = sphere5.geodesic_distance(0)
    far = int(np.argmin(np.abs(d - 1.0)))
    near_mod = pl.photography_modulus(sphere5, well, 0.05, V, 0, nbr)
    far_mod = pl.photography_modulus(sphere5, well, 0.05, V, 0, far)
    assert near_mod < far_mod
