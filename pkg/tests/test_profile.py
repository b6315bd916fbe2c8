import numpy as np
import pytest

import phaselab as pl

# regression target for the eps = 1 transition length of the quartic,
# fixed beforehand by a 10^6-node composite Simpson rule
ETA_EPS1 = 0.9688576532724523


def test_degenerate_profile_exact(zero_well):
    eps = 0.01
    tab = pl.build_profile(zero_well, eps, 0.0, 1.0, 128)
    assert tab.eta == pytest.approx(eps ** 0.25, abs=1e-12)
    # affine: samples lie on the line q = t / eta
    assert np.allclose(tab.s_samples, tab.t_samples / tab.eta, atol=1e-12)
    res, _ = pl.profile_residual(tab, zero_well)
    assert res <= 1e-12


def test_eta_bound(well):
    for eps in (1e-1, 1e-2, 1e-3):
        tab = pl.build_profile(well, eps, 0.0, 1.0, 256)
        assert tab.eta <= eps ** 0.25


def test_eta_regression(well):
    tab = pl.build_profile(well, 1.0, 0.0, 1.0, 2048)
    assert tab.eta == pytest.approx(ETA_EPS1, abs=1e-12)


def test_profile_monotone_and_clamped(well):
    tab = pl.build_profile(well, 0.1, 0.0, 1.0, 256)
    t = np.linspace(-0.5, tab.eta + 0.5, 400)
    q = tab(t)
    assert np.all(np.diff(q) >= -1e-14)
    assert tab(-1.0) == 0.0
    assert tab(tab.eta + 1.0) == 1.0
    assert tab(0.0) == pytest.approx(0.0, abs=1e-14)
    assert tab(tab.eta) == pytest.approx(1.0, abs=1e-14)


def test_step_ordering(well):
    tab = pl.build_profile(well, 0.1, 0.0, 1.0, 256)
    t = np.linspace(-1.0, 2.0, 500)
    q0 = np.where(t < 0.0, 0.0, 1.0)
    assert np.all(tab(t) <= q0 + 1e-14)
    assert np.all(tab(t + tab.eta) >= q0 - 1e-14)


def test_inversion_identity(well):
    tab = pl.build_profile(well, 0.1, 0.0, 1.0, 4096)
    s = np.linspace(0.0, 1.0, 1000)
    assert np.abs(tab(tab.psi(s)) - s).max() <= 1e-8


def test_residual_convergence(well):
    res1, h1 = pl.profile_residual(pl.build_profile(well, 0.1, 0, 1, 512), well)
    res2, h2 = pl.profile_residual(pl.build_profile(well, 0.1, 0, 1, 1024), well)
    assert res1 <= 1e-3
    order = np.log2(res1 / res2)
    assert order >= 1.9
    assert h2 < h1


def test_energy_identity(well):
    eps = 0.1
    tab = pl.build_profile(well, eps, 0.0, 1.0, 2048)
    t = tab.t_samples
    s = tab.s_samples
    mid = 0.5 * (s[1:] + s[:-1])
    dq = np.diff(s) / np.diff(t)
    integrand = 0.5 * eps * dq ** 2 + np.asarray(well.w(mid)) / eps
    lhs = float(integrand @ np.diff(t))
    grid = np.linspace(0.0, 1.0, 200001)
    vals = np.sqrt(2.0 * np.asarray(well.w(grid)) + eps ** 1.5)
    from scipy.integrate import trapezoid
    rhs = float(trapezoid(vals, grid))
    assert lhs <= rhs * (1.0 + 1e-6)


def test_c_exponent_configurable(well):
    tab = pl.build_profile(well, 0.1, 0.0, 1.0, 256, c_exponent=2.0)
    assert tab.eta <= (0.1) ** 0.0 * 1.0  # bound becomes eps^(1-c/2)(beta-alpha)
    res, _ = pl.profile_residual(tab, well)
    assert res <= 1e-3


def test_build_rejections(well):
    with pytest.raises(ValueError):
        pl.build_profile(well, -0.1, 0.0, 1.0, 256)
    with pytest.raises(ValueError):
        pl.build_profile(well, 0.1, 1.0, 0.0, 256)
    with pytest.raises(ValueError):
        pl.build_profile(well, 0.1, 0.0, 1.0, 16)


def test_csv_dump(tmp_path, well):
    tab = pl.build_profile(well, 0.1, 0.0, 1.0, 128)
    path = tmp_path / "profile.csv"
    tab.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (129, 2)
    assert np.allclose(data[:, 0], tab.t_samples)
