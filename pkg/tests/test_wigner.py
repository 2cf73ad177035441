import numpy as np
import pytest
from scipy.special import gammaln

from dretsim import (
    GridTooSmall,
    WignerGrid,
    grid_normalization,
    wigner_function,
    wigner_on_grid,
)
from dretsim.oracles import wigner_quadrature_point


def fock_rho(n, dim):
    rho = np.zeros((dim, dim), dtype=complex)
    rho[n, n] = 1.0
    return rho


def coherent_rho(alpha, dim):
    n = np.arange(dim)
    log_mag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(
        n + 1.0)
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return np.outer(amps, amps.conj())


def test_vacuum_is_gaussian_with_peak_one_over_pi():
    rho = fock_rho(0, 5)
    assert wigner_function(rho, 0.0, 0.0) == pytest.approx(1.0 / np.pi)
    q = np.array([0.5, 1.0, 2.0])
    vals = wigner_function(rho, q, np.zeros(3))
    assert np.allclose(vals, np.exp(-q ** 2) / np.pi, atol=1e-12)


def test_first_fock_state_is_negative_at_origin():
    rho = fock_rho(1, 5)
    assert wigner_function(rho, 0.0, 0.0) == pytest.approx(-1.0 / np.pi)
    # W = (2(Q^2+P^2) - 1) exp(-(Q^2+P^2)) / pi
    val = wigner_function(rho, 1.0, 0.5)
    r2 = 1.25
    assert val == pytest.approx((2 * r2 - 1) * np.exp(-r2) / np.pi)


def test_coherent_state_is_displaced_gaussian():
    alpha = 1.2 + 0.4j
    rho = coherent_rho(alpha, 30)
    # center (Q, P) = (Re alpha, Im alpha) * sqrt(2)
    q0, p0 = np.sqrt(2) * alpha.real, np.sqrt(2) * alpha.imag
    assert wigner_function(rho, q0, p0) == pytest.approx(1 / np.pi, rel=1e-9)
    assert wigner_function(rho, q0 + 1.0, p0) == pytest.approx(
        np.exp(-1.0) / np.pi, rel=1e-8)


def test_wigner_matches_defining_integral_for_random_state():
    rng = np.random.default_rng(11)
    dim = 6
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    for q, p in [(0.0, 0.0), (0.7, -0.3), (-1.1, 0.6), (2.0, 1.0)]:
        series = wigner_function(rho, q, p)
        quad = wigner_quadrature_point(rho, q, p)
        assert abs(quad.imag) < 1e-10
        assert series == pytest.approx(quad.real, abs=1e-8)


def test_grid_normalization_integrates_to_one():
    rho = coherent_rho(0.8, 25)
    grid = WignerGrid(extent=7.0, points=141)
    field = wigner_on_grid(rho, grid)
    assert grid_normalization(field, grid) == pytest.approx(1.0, abs=1e-6)


def test_grid_covers_headroom_rule():
    grid = WignerGrid(extent=8.0, points=101)
    assert grid.covers(10)
    assert not grid.covers(30)


def test_undersized_grid_raises():
    rho = coherent_rho(3.0, 40)      # displaced to Q ~ 4.2
    with pytest.raises(GridTooSmall):
        wigner_on_grid(rho, WignerGrid(extent=2.0, points=61))


def test_grid_validation():
    with pytest.raises(ValueError):
        WignerGrid(extent=-1.0)
    with pytest.raises(ValueError):
        WignerGrid(points=1)
    with pytest.raises(ValueError):
        wigner_function(np.zeros((2, 3)), 0.0, 0.0)
