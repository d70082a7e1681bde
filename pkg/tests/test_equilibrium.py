import numpy as np
import pytest

from flga.equilibrium import (
    MacroField,
    feq_1d,
    feq_2d,
    init_lid_cavity,
    init_shockwave,
    init_sine,
    init_sine_2d,
    init_taylor_green,
    taylor_green_analytic,
)
from flga.lattice import build_descriptor
from flga.state import FLUID, MOVING_WALL, WALL, macroscopic

D2 = build_descriptor("D2Q9")


def test_feq_1d_examples():
    assert np.allclose(feq_1d(1.0, 0.0), [2 / 3, 1 / 6, 1 / 6], atol=1e-16)
    assert np.allclose(feq_1d(1.0, 0.1), [0.6567406, 0.2216297, 0.1216297], atol=1e-6)
    assert np.allclose(feq_1d(2.0, 0.27), 2 * feq_1d(1.0, 0.27), atol=1e-15)


def test_feq_1d_moments_and_positivity():
    u = np.linspace(-1, 1, 201)
    rho = np.full_like(u, 1.7)
    f = feq_1d(rho, u)
    assert (f >= -1e-15).all()
    assert np.allclose(f.sum(axis=0), rho, atol=1e-14)
    assert np.allclose(f[1] - f[2], rho * u, atol=1e-14)


def test_feq_2d_examples():
    assert np.allclose(feq_2d(1.0, 0.0, 0.0), D2.weights, atol=1e-16)
    f = feq_2d(1.0, 0.1, -0.05)
    assert np.sum(f) == pytest.approx(1.0, abs=1e-14)
    assert D2.velocities[:, 0] @ f == pytest.approx(0.1, abs=1e-14)
    assert D2.velocities[:, 1] @ f == pytest.approx(-0.05, abs=1e-14)


def test_feq_2d_factorises():
    f = feq_2d(1.3, 0.1, 0.0)
    f1 = feq_1d(1.3, 0.1)
    # channels with v_y = 0: rest, +x, -x carry 2/3 of the 1D values
    assert np.allclose(f[[0, 1, 3]], f1 * 2 / 3, atol=1e-15)
    assert np.allclose(f[[2, 5, 6]], f1[[0, 1, 2]] / 6, atol=1e-15)


def test_init_sine():
    s = init_sine(0.0, 100)
    assert np.allclose(s.f[1], s.f[2])
    assert not init_sine(1.0, 100).f[2].any()
    s = init_sine(0.5, 100)
    moving = s.f[1, 50] + s.f[2, 50]
    assert s.f[1, 50] / moving == pytest.approx(0.75)
    assert np.allclose(s.f.sum(axis=0), 1.0)
    with pytest.raises(ValueError):
        init_sine(1.5, 10)


def test_init_sine_2d_mass():
    s = init_sine_2d(0.3, 6, 5)
    assert s.shape == (6, 5)
    assert np.allclose(s.f.sum(axis=0), 1.0)


def test_init_shockwave():
    s = init_shockwave(20)
    rho, u = macroscopic(s)
    assert rho[1] == pytest.approx(4) and rho[-2] == pytest.approx(2)
    assert not u.any()
    assert s.flags[0] == WALL and s.flags[-1] == WALL and (s.flags[1:-1] == FLUID).all()
    with pytest.raises(ValueError):
        init_shockwave(21)


def test_taylor_green_fields():
    s = init_taylor_green(40, u_max=0.0)
    assert np.allclose(s.f, D2.weights[:, None, None])
    m = taylor_green_analytic(0.0, 0.1, 40)
    # cos(kx x) = 1 at x = 0, sin(ky y) = 1 at y = L/4
    assert m.u[0, 0, 10] == pytest.approx(-0.1)
    assert m.pressure.mean() == pytest.approx(0.0, abs=1e-15)
    nu = 0.05
    k2 = 2 * (2 * np.pi / 40) ** 2
    m1 = taylor_green_analytic(10.0, nu, 40)
    assert m1.u[0, 0, 10] / m.u[0, 0, 10] == pytest.approx(np.exp(-nu * k2 * 10))
    th = np.log(2) / (nu * k2)
    assert taylor_green_analytic(th, nu, 40).u[0, 0, 10] == pytest.approx(-0.05)
    with pytest.raises(ValueError):
        taylor_green_analytic(-1.0, nu, 40)


def test_taylor_green_init_matches_analytic():
    s = init_taylor_green(16)
    rho, u = macroscopic(s)
    m = taylor_green_analytic(0.0, 0.1, 16)
    assert np.allclose(u, m.u, atol=1e-14)
    assert np.allclose(rho, m.rho, atol=1e-14)


def test_macrofield_validation():
    with pytest.raises(ValueError):
        MacroField(np.ones(3), np.zeros((1, 4)))
    with pytest.raises(ValueError):
        MacroField(-np.ones(3), np.zeros((1, 3)))


def test_lid_cavity_geometry():
    s = init_lid_cavity(10, 0.2)
    assert (s.flags[1:-1, -1] == MOVING_WALL).all()
    assert (s.flags[:, 0] == WALL).all() and (s.flags[[0, -1], :] == WALL).all()
    assert s.wall_velocity[0, 5, -1] == 0.2
    assert not s.f[:, s.flags != FLUID].any()
