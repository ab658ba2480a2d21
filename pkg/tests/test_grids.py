import numpy as np
import pytest
from scipy.special import jn_zeros

import nldlab as nl


def test_build_grid_rejects_coarse():
    with pytest.raises(ValueError):
        nl.build_grid(3, 1.0, 4)


@pytest.mark.parametrize("n", [0, 4, 5])
def test_build_grid_rejects_dimension(n):
    with pytest.raises(ValueError):
        nl.build_grid(n, 1.0, 64)


def test_build_grid_basic():
    grid = nl.build_grid(3, 1.0, 8)
    assert grid.h == pytest.approx(0.125)
    assert grid.surface_factor == pytest.approx(4 * np.pi)
    assert np.all(np.diff(grid.nodes) > 0)
    assert grid.nodes[-1] == pytest.approx(1.0)

    grid2 = nl.build_grid(2, 0.5, 100)
    assert grid2.nodes[50] == pytest.approx(0.25)
    assert grid2.surface_factor == pytest.approx(2 * np.pi)


def test_l2_norm_ball_volume(grid256):
    u = nl.constant_field(grid256, 1.0)
    # Quadrature floor for the rho^2 integrand is 4 pi h^2 / 6 in the square.
    assert nl.l2_norm(u) == pytest.approx(np.sqrt(4 * np.pi / 3), abs=1e-4)


def test_l2_norm_zero(grid256):
    assert nl.l2_norm(nl.constant_field(grid256, 0.0)) == 0.0


def test_l2_norm_interval():
    grid = nl.build_grid(1, 1.0, 256)
    u = nl.field_from_function(grid, lambda r: r)
    # 2 * int_0^1 r^2 dr = 2/3, by hand.
    assert nl.l2_norm(u) == pytest.approx(np.sqrt(2 / 3), abs=1e-4)


def test_l2_exact_for_linear_integrand():
    # n = 1 with u = sqrt(1 + rho): the weighted integrand is linear, which
    # the composite trapezoid integrates exactly.
    grid = nl.build_grid(1, 1.0, 32)
    u = nl.field_from_function(grid, lambda r: np.sqrt(1 + r))
    assert nl.l2_norm(u) ** 2 == pytest.approx(2 * 1.5, abs=1e-12)


def test_l2_refinement_factor():
    vals = {}
    exact = None
    for N in (64, 128):
        grid = nl.build_grid(3, 1.0, N)
        u = nl.field_from_function(grid, np.cos)
        vals[N] = grid.integrate(u.values**2)
    # Oracle: very fine reference grid.
    ref_grid = nl.build_grid(3, 1.0, 8192)
    exact = ref_grid.integrate(nl.field_from_function(ref_grid, np.cos).values ** 2)
    assert abs(vals[64] - exact) / abs(vals[128] - exact) >= 3.5


def test_norm_homogeneity_and_triangle():
    grid = nl.build_grid(3, 1.0, 64)
    rng = np.random.default_rng(7)
    for _ in range(100):
        u = nl.RadialField(grid, rng.standard_normal(grid.N + 1))
        v = nl.RadialField(grid, rng.standard_normal(grid.N + 1))
        c = rng.uniform(-5, 5)
        assert abs(nl.l2_norm(c * u) - abs(c) * nl.l2_norm(u)) <= 1e-12 * (1 + nl.l2_norm(u))
        assert nl.l2_norm(u + v) <= nl.l2_norm(u) + nl.l2_norm(v) + 1e-12


def test_h1_seminorm_constant(grid256):
    assert nl.h1_seminorm(nl.constant_field(grid256, 3.0)) == 0.0


def test_h1_seminorm_poisson_profile(grid256):
    u = nl.field_from_function(grid256, lambda r: (1 - r**2) / 6)
    # By hand: sqrt(4 pi int (rho/3)^2 rho^2) = sqrt(4 pi / 45).
    assert nl.h1_seminorm(u) == pytest.approx(np.sqrt(4 * np.pi / 45), abs=1e-4)


def test_h1_seminorm_grid_invariance_linear():
    vals = []
    for N in (8, 256):
        grid = nl.build_grid(1, 1.0, N)
        u = nl.field_from_function(grid, lambda r: 1 - r)
        vals.append(nl.h1_seminorm(u))
    assert abs(vals[0] - vals[1]) <= 1e-12


def test_sup_norm(grid256):
    assert nl.sup_norm(nl.constant_field(grid256, -2.0)) == 2.0
    u = nl.field_from_function(grid256, lambda r: (1 - r**2) / 6)
    assert nl.sup_norm(u) == pytest.approx(1 / 6)
    assert nl.sup_norm(nl.constant_field(grid256, 0.0)) == 0.0


def test_radial_derivative(grid256):
    d = nl.radial_derivative(nl.constant_field(grid256, 4.0))
    assert nl.sup_norm(d) == 0.0

    u = nl.field_from_function(grid256, lambda r: r**2)
    d = nl.radial_derivative(u)
    err = np.abs(d.values - 2 * grid256.nodes)
    assert d.values[0] == 0.0
    assert np.max(err[1:]) <= 5 * grid256.h**2 + 1e-12

    u = nl.field_from_function(grid256, lambda r: (1 - r**2) / 6)
    d = nl.radial_derivative(u)
    assert np.max(np.abs(d.values[1:] + grid256.nodes[1:] / 3)) <= 5 * grid256.h**2


@pytest.mark.parametrize("n,ref", [
    (1, (np.pi / 2) ** 2),
    (2, jn_zeros(0, 1)[0] ** 2),  # square of the first Bessel J0 zero
    (3, np.pi**2),
])
def test_principal_eigenvalue_closed_forms(n, ref):
    lam = nl.principal_eigenvalue(nl.build_grid(n, 1.0, 512))
    assert abs(lam - ref) / ref <= 5e-3


def test_principal_eigenvalue_refines():
    ref = np.pi**2
    coarse = abs(nl.principal_eigenvalue(nl.build_grid(3, 1.0, 64)) - ref)
    fine = abs(nl.principal_eigenvalue(nl.build_grid(3, 1.0, 512)) - ref)
    assert fine < coarse


def test_field_shape_mismatch(grid256):
    with pytest.raises(ValueError):
        nl.RadialField(grid256, np.zeros(5))
