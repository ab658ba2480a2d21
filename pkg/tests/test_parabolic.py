import numpy as np
import pytest

import nldlab as nl
from nldlab.parabolic import CorridorPreconditionError, LedgerViolation


@pytest.fixture(scope="module")
def grid128():
    return nl.build_grid(3, 1.0, 128)


@pytest.fixture(scope="module")
def small_source_problem(grid128):
    """Uniqueness-regime data: rational coefficient, f = 0.05."""
    a = nl.RationalCoefficient(1.0, 1.0, 0.0, domain=(-0.5, 5.0))
    f = nl.constant_field(grid128, 0.05)
    g = nl.constant_field(grid128, 1.0)
    return grid128, a, f, g


def test_zero_equilibrium(grid128):
    a = nl.ConstantCoefficient(1.0)
    prob = nl.make_parabolic(grid128, a, nl.constant_field(grid128, 0.0),
                             nl.constant_field(grid128, 1.0), 1.0,
                             nl.constant_field(grid128, 0.0), T=0.01, dt=1e-3)
    traj = nl.run(prob, stride=1)
    assert np.all(traj.sup == 0.0)


def test_snapshot_count(grid128):
    a = nl.ConstantCoefficient(1.0)
    prob = nl.make_parabolic(grid128, a, nl.constant_field(grid128, 1.0),
                             nl.constant_field(grid128, 1.0), 1.0,
                             nl.constant_field(grid128, 0.0), T=1e-3, dt=1e-3)
    traj = nl.run(prob, stride=1)
    assert len(traj.snapshots) == 2  # T = dt gives two snapshots
    prob2 = nl.make_parabolic(grid128, a, nl.constant_field(grid128, 1.0),
                              nl.constant_field(grid128, 1.0), 1.0,
                              nl.constant_field(grid128, 0.0), T=0.05, dt=1e-3)
    traj2 = nl.run(prob2, stride=20)
    assert len(traj2.snapshots) == 50 // 20 + 1
    assert np.all(np.isfinite(traj2.l2))


def test_decay_rate_matches_spectrum(grid128):
    a = nl.ConstantCoefficient(1.0)
    u0 = nl.field_from_function(grid128, lambda r: (1 - r**2) / 6)
    prob = nl.make_parabolic(grid128, a, nl.constant_field(grid128, 0.0),
                             nl.constant_field(grid128, 1.0), 1.0, u0,
                             T=0.3, dt=1e-4)
    traj = nl.run(prob, stride=10)
    lam = nl.principal_eigenvalue(grid128)
    mask = traj.times >= 0.15
    slope = -np.polyfit(traj.times[mask], np.log(traj.l2[mask]), 1)[0]
    assert abs(slope - lam) / lam <= 0.05


def test_stationary_start_stays_put(small_source_problem):
    grid, a, f, g = small_source_problem
    stat = nl.make_problem(grid, a, f, g, 1.0)
    u_r = nl.fixed_point_solve(stat).u
    prob = nl.make_parabolic(grid, a, f, g, 1.0, u_r, T=0.5, dt=2e-3)
    traj = nl.run(prob, stride=10)
    scale = 1 + nl.sup_norm(u_r)
    drift = max(nl.sup_norm(s - u_r) for s in traj.snapshots)
    assert drift <= 5 * (grid.h**2 + prob.dt) * scale


def test_determinism(grid128):
    a = nl.ConstantCoefficient(1.0)
    prob = nl.make_parabolic(grid128, a, nl.constant_field(grid128, 1.0),
                             nl.constant_field(grid128, 1.0), 1.0,
                             nl.constant_field(grid128, 0.0), T=0.05, dt=1e-3)
    t1 = nl.run(prob)
    t2 = nl.run(prob)
    assert np.array_equal(t1.final.values, t2.final.values)
    assert np.array_equal(t1.l2, t2.l2)


def test_large_steps_stay_bounded(small_source_problem):
    # The lagged implicit scheme has no step-size stability ceiling.
    grid, a, f, g = small_source_problem
    stat = nl.make_problem(grid, a, f, g, 1.0)
    steady = nl.fixed_point_solve(stat).u
    scale = max(1e-2, nl.sup_norm(steady)) * 10
    prob = nl.make_parabolic(grid, a, f, g, 1.0, nl.constant_field(grid, 0.0),
                             T=10.0, dt=0.1)
    traj = nl.run(prob, stride=10)
    assert np.max(traj.sup) <= scale


def test_energy_ledger_unforced(grid128):
    a = nl.ConstantCoefficient(1.0)
    u0 = nl.field_from_function(grid128, lambda r: np.cos(np.pi * r / 2) ** 2 * (1 - r))
    prob = nl.make_parabolic(grid128, a, nl.constant_field(grid128, 0.0),
                             nl.constant_field(grid128, 1.0), 1.0, u0,
                             T=0.2, dt=1e-3)
    led = nl.energy_ledger(nl.run(prob), prob)
    assert led.ok
    assert np.all(np.diff(led.lhs) <= 1e-12)
    assert np.all(led.lhs <= led.lhs[0] + 1e-12)


def test_energy_ledger_forced_cases(grid128):
    g = nl.constant_field(grid128, 1.0)
    f = nl.constant_field(grid128, 1.0)
    for coeff in (nl.ConstantCoefficient(1.0),
                  nl.RationalCoefficient(1.0, 1.0, 0.0, domain=(-0.5, 5.0))):
        prob = nl.make_parabolic(grid128, coeff, f, g, 2.0,
                                 nl.constant_field(grid128, 0.0), T=1.0, dt=2e-3)
        led = nl.energy_ledger(nl.run(prob), prob)
        assert led.ok


def test_corridor_invariance(small_source_problem):
    grid, a, f, g = small_source_problem
    stat = nl.make_problem(grid, a, f, g, 1.0)
    u_lo = nl.solve_linear_radial(nl.constant_field(grid, a(0.0)), f)
    u_hi = nl.solve_at_max_radius(nl.with_radius(stat, 2.0))[0].u
    for start in (u_lo, 0.5 * (u_lo + u_hi)):
        prob = nl.make_parabolic(grid, a, f, g, 1.0, start, T=1.0, dt=2e-3)
        rep = nl.corridor_check(nl.run(prob, stride=25), u_lo, u_hi)
        assert rep.ok


def test_corridor_precondition_rejected(small_source_problem):
    grid, a, f, g = small_source_problem
    stat = nl.make_problem(grid, a, f, g, 1.0)
    u_lo = nl.solve_linear_radial(nl.constant_field(grid, a(0.0)), f)
    u_hi = nl.solve_at_max_radius(nl.with_radius(stat, 2.0))[0].u
    above = nl.RadialField(grid, u_hi.values * 1.05)
    prob = nl.make_parabolic(grid, a, f, g, 1.0, above, T=0.01, dt=2e-3)
    with pytest.raises(CorridorPreconditionError):
        nl.corridor_check(nl.run(prob, stride=1), u_lo, u_hi)


def test_contraction_identical_data(grid128):
    a = nl.ConstantCoefficient(1.0)
    u0 = nl.field_from_function(grid128, lambda r: (1 - r**2) / 6)
    prob = nl.make_parabolic(grid128, a, nl.constant_field(grid128, 1.0),
                             nl.constant_field(grid128, 1.0), 1.0, u0,
                             T=0.05, dt=1e-3)
    rep = nl.contraction_check(prob, u0, u0)
    assert rep.ok
    assert np.max(rep.W) == 0.0


def test_contraction_constant_coefficient(grid128):
    a = nl.ConstantCoefficient(1.0)
    u0a = nl.field_from_function(grid128, lambda r: (1 - r**2) / 6)
    u0b = nl.constant_field(grid128, 0.0)
    prob = nl.make_parabolic(grid128, a, nl.constant_field(grid128, 1.0),
                             nl.constant_field(grid128, 1.0), 1.0, u0a,
                             T=0.2, dt=1e-3)
    rep = nl.contraction_check(prob, u0a, u0b)
    assert rep.gamma == 0.0
    assert rep.ok
    assert np.all(np.diff(rep.W) <= 1e-14)


def test_contraction_nonlinear(small_source_problem):
    grid, a, f, g = small_source_problem
    stat = nl.make_problem(grid, a, f, g, 1.0)
    u_r = nl.fixed_point_solve(stat).u
    prob = nl.make_parabolic(grid, a, f, g, 1.0, u_r, T=0.5, dt=2e-3)
    rep = nl.contraction_check(prob, u_r, nl.constant_field(grid, 0.0))
    assert rep.gamma > 0.0
    assert rep.ok


def test_absorbing_set_constant_coefficient(grid128):
    a = nl.ConstantCoefficient(1.0)
    u0 = nl.field_from_function(grid128, lambda r: (1 - r**2) / 6)
    prob = nl.make_parabolic(grid128, a, nl.constant_field(grid128, 0.0),
                             nl.constant_field(grid128, 1.0), 1.0, u0,
                             T=1.0, dt=1e-3)
    traj = nl.run(prob, stride=10)
    rep = nl.absorbing_set_report(prob, traj, t0=0.25, K_c=1.0, certified=True)
    # With f = 0 and a' = 0 the bound collapses to rho0^2/(m t0).
    m = a.m
    head = traj.times <= 0.25
    rho0_sq = np.max(traj.l2[head] ** 2)
    assert rep.a2 == 0.0
    assert rep.bound == pytest.approx(rho0_sq / (m * 0.25))
    assert rep.ok


def test_absorbing_set_reporting(small_source_problem):
    grid, a, f, g = small_source_problem
    prob = nl.make_parabolic(grid, a, f, g, 1.0, nl.constant_field(grid, 0.0),
                             T=2.0, dt=5e-3)
    traj = nl.run(prob, stride=20)
    rep = nl.absorbing_set_report(prob, traj, t0=0.5)
    assert rep.ok is None  # defaulted coupling constant: report only
    assert np.isfinite(rep.bound) and rep.observed_vsq > 0
    with pytest.raises(ValueError):
        nl.absorbing_set_report(prob, traj, t0=1.5)


def test_moser_flagship_values():
    me = nl.moser_exponents(3, 2.0, 1.0)
    assert me.sigma == pytest.approx(5 / 7, abs=1e-15)
    assert me.beta == pytest.approx(2 / 5, abs=1e-15)
    assert me.delta == pytest.approx(7 / 10, abs=1e-15)
    assert me.rho == pytest.approx(2 / 7, abs=1e-15)
    assert me.alpha == pytest.approx(1.0, abs=1e-15)
    assert me.theta == pytest.approx(7 / 8, abs=1e-15)
    assert me.q == pytest.approx(2.0)


def test_moser_identities_random():
    rng = np.random.default_rng(53)
    for _ in range(100):
        n = int(rng.integers(3, 7))
        p = rng.uniform(1 + 1e-6, n / (n - 2) - 1e-6)
        r = rng.uniform(1.0, 20.0)
        me = nl.moser_exponents(n, p, r)
        assert abs(2 * r * me.sigma * me.delta - 1.0) <= 1e-12
        assert abs(2 * me.rho - me.alpha * me.beta / me.delta) <= 1e-12
        assert 0 < me.beta < 1 and 0 < me.delta < 1
        assert 0 < me.theta < 1 and 0 < me.rho < 1
        for k in range(1, 21):
            assert nl.moser_sigma(n, p, 2**k * r) <= me.theta**k * me.sigma + 1e-15


def test_moser_rejects_supercritical():
    with pytest.raises(ValueError):
        nl.moser_exponents(3, 3.0, 1.0)  # p >= n/(n-2) = 3
    with pytest.raises(ValueError):
        nl.moser_exponents(2, 1.5, 1.0)
    with pytest.raises(ValueError):
        nl.moser_exponents(3, 2.0, 0.5)


def test_moser_geometric_sums():
    me = nl.moser_exponents(3, 2.0, 1.0)
    assert me.lambda1_sum == pytest.approx(me.sigma / (1 - me.theta))
    assert me.lambda2_sum == pytest.approx(nl.moser_sigma(3, 2.0, 2.0) / (1 - me.theta) ** 2)


def test_linf_tracking(grid128):
    a = nl.ConstantCoefficient(1.0)
    u0 = nl.field_from_function(grid128, lambda r: (1 - r**2) / 6)
    decay = nl.make_parabolic(grid128, a, nl.constant_field(grid128, 0.0),
                              nl.constant_field(grid128, 1.0), 1.0, u0,
                              T=0.3, dt=1e-3)
    rep = nl.linf_tracking(nl.run(decay))
    assert rep.plateau_ok

    forced = nl.make_parabolic(grid128, a, nl.constant_field(grid128, 1.0),
                               nl.constant_field(grid128, 1.0), 1.0,
                               nl.constant_field(grid128, 0.0), T=1.5, dt=2e-3)
    traj = nl.run(forced)
    rep = nl.linf_tracking(traj)
    steady = nl.poisson_phi(nl.make_problem(grid128, a,
                                            nl.constant_field(grid128, 1.0),
                                            nl.constant_field(grid128, 1.0), 1.0))
    assert rep.plateau_ok
    assert rep.sup_overall <= nl.sup_norm(steady) * 1.01


def test_steady_convergence_from_equilibrium(small_source_problem):
    grid, a, f, g = small_source_problem
    stat = nl.make_problem(grid, a, f, g, 1.0)
    u_r = nl.fixed_point_solve(stat).u
    prob = nl.make_parabolic(grid, a, f, g, 1.0, u_r, T=0.2, dt=2e-3)
    rep = nl.steady_convergence_report(nl.run(prob, stride=10), u_r)
    assert np.all(rep.distances <= 5 * (grid.h**2 + prob.dt) * (1 + nl.sup_norm(u_r)))


def test_steady_convergence_certified(grid256):
    a = nl.RationalCoefficient(1.0, 1.0, 0.0, domain=(-0.5, 5.0))
    f = nl.constant_field(grid256, 0.05)
    g = nl.constant_field(grid256, 1.0)
    stat = nl.make_problem(grid256, a, f, g, 1.0)
    u_r = nl.fixed_point_solve(stat).u
    prob = nl.make_parabolic(grid256, a, f, g, 1.0,
                             nl.constant_field(grid256, 0.0), T=3.0, dt=6e-3)
    rep = nl.steady_convergence_report(nl.run(prob, stride=50), u_r, certify=True)
    assert rep.ok
    assert rep.final_ratio <= 1e-4


def test_steady_convergence_report_only(grid256, flagship):
    # Multi-equilibrium data: emit the series, assert nothing about limits.
    phi = nl.poisson_phi(flagship)
    c = float(flagship.kernel.apply_values(phi.values)[0])
    coeff, bps = nl.build_staircase(0.8 * c, 1.25 * c, 2.0, 3)
    stat = nl.make_problem(grid256, coeff, flagship.f, flagship.g, 2.0)
    sols = nl.solve_at_max_radius(stat)
    prob = nl.make_parabolic(grid256, coeff, flagship.f, flagship.g, 2.0,
                             nl.constant_field(grid256, 0.0), T=0.1, dt=2e-3)
    rep = nl.steady_convergence_report(nl.run(prob, stride=10), sols[0].u)
    assert rep.ok is None
    assert np.all(np.isfinite(rep.distances))


def test_bad_initial_value_rejected(grid128):
    a = nl.ConstantCoefficient(1.0)
    with pytest.raises(ValueError):
        nl.make_parabolic(grid128, a, nl.constant_field(grid128, 1.0),
                          nl.constant_field(grid128, 1.0), 1.0,
                          nl.constant_field(grid128, 0.5), T=1.0)
