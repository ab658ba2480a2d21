"""Semi-implicit time integration of the nonlocal diffusion equation and the
diagnostic ledgers that verify its dissipative estimates discretely.

The scheme is backward Euler with the diffusion coefficient lagged one step
(frozen at the previous iterate), which keeps every step a tridiagonal solve
and mirrors the frozen-coefficient structure of the stationary fixed point.
A single run is sequential; parameter sweeps may run concurrently since all
problem data is immutable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .coefficients import DiffusionCoefficient
from .grids import (
    RadialField,
    RadialGrid,
    diffusion_bands,
    h1_seminorm,
    l2_norm,
    principal_eigenvalue,
    sup_norm,
)
from .kernels import InteractionKernel, build_kernel

DEFAULT_STRIDE = 100


class LedgerViolation(RuntimeError):
    """An assertable discrete inequality failed beyond its slack."""


@dataclass(frozen=True)
class ParabolicProblem:
    grid: RadialGrid
    a: DiffusionCoefficient
    f: RadialField
    g: RadialField
    r: float
    kernel: InteractionKernel
    u0: RadialField
    T: float
    dt: float


def make_parabolic(grid: RadialGrid, a: DiffusionCoefficient, f: RadialField,
                   g: RadialField, r: float, u0: RadialField, T: float,
                   dt: float | None = None) -> ParabolicProblem:
    if np.any(f.values < 0) or np.any(g.values < 0):
        raise ValueError("f and g must be nonnegative node-wise")
    scale = 1.0 + float(np.max(np.abs(u0.values)))
    if abs(u0.boundary_value()) > 1e-12 * scale:
        raise ValueError("initial value must satisfy the Dirichlet condition")
    a.validate()
    if dt is None:
        dt = 1e-3 * grid.R**2 / a.m
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < dt:
        raise ValueError("horizon T must cover at least one step")
    vals = u0.values.copy()
    vals[-1] = 0.0
    kernel = build_kernel(grid, g, r)
    return ParabolicProblem(grid=grid, a=a, f=f, g=g, r=float(r), kernel=kernel,
                            u0=RadialField(grid, vals), T=float(T), dt=float(dt))


def step_values(problem: ParabolicProblem, state: np.ndarray, dt: float) -> np.ndarray:
    """One backward-Euler step with the coefficient frozen at ``state``."""
    grid = problem.grid
    A = problem.a(problem.kernel.apply_values(state))
    bands = diffusion_bands(grid, A)
    bands[1] += 1.0 / dt
    if np.any(bands[1] <= 0.0):
        raise ArithmeticError("implicit step lost diagonal dominance")
    rhs = state[:-1] / dt + problem.f.values[:-1]
    interior = solve_banded((1, 1), bands, rhs)
    return np.concatenate([interior, [0.0]])


def step(problem: ParabolicProblem, state: RadialField, dt: float | None = None) -> RadialField:
    if dt is None:
        dt = problem.dt
    return RadialField(problem.grid, step_values(problem, state.values, dt))


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: cheap scalar series at every step, fields decimated to
    the snapshot stride, plus the exact final state."""

    problem: ParabolicProblem
    times: np.ndarray          # every step, t_0 = 0 included
    l2: np.ndarray
    h1: np.ndarray
    sup: np.ndarray
    lr_center: np.ndarray
    snapshot_times: np.ndarray
    snapshots: list[RadialField]
    final: RadialField
    stride: int


def run(problem: ParabolicProblem, stride: int = DEFAULT_STRIDE) -> Trajectory:
    if stride < 1:
        raise ValueError("stride must be at least 1")
    n_steps = int(round(problem.T / problem.dt))
    u = problem.u0.values.copy()
    times = problem.dt * np.arange(n_steps + 1)

    l2 = np.empty(n_steps + 1)
    h1 = np.empty(n_steps + 1)
    sup = np.empty(n_steps + 1)
    lrc = np.empty(n_steps + 1)
    snapshots = []
    snapshot_times = []

    for k in range(n_steps + 1):
        fld = RadialField(problem.grid, u)
        l2[k] = l2_norm(fld)
        h1[k] = h1_seminorm(fld)
        sup[k] = sup_norm(fld)
        lrc[k] = problem.kernel.apply_values(u)[0]
        if k % stride == 0:
            snapshots.append(fld)
            snapshot_times.append(times[k])
        if k < n_steps:
            u = step_values(problem, u, problem.dt)

    return Trajectory(problem=problem, times=times, l2=l2, h1=h1, sup=sup,
                      lr_center=lrc, snapshot_times=np.array(snapshot_times),
                      snapshots=snapshots, final=RadialField(problem.grid, u),
                      stride=stride)


# -- ledgers -------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyLedger:
    lhs: np.ndarray
    rhs: np.ndarray
    ok: bool
    worst_excess: float


def energy_ledger(traj: Trajectory, problem: ParabolicProblem) -> EnergyLedger:
    """Discrete dissipation ledger

        1/2 |u(t)|^2 + (m/2) int_0^t |u|_V^2  <=  1/2 |u0|^2 + (1/2m) int_0^t |f|_*^2

    with the dual norm of f realized by the Poincare proxy |f|_2 / sqrt(l1)
    and right-endpoint Riemann sums matching the implicit scheme's natural
    dissipation direction.  Verdict allows 1e-3 relative slack plus an
    O(dt) startup term.
    """
    m = problem.a.m
    lam = principal_eigenvalue(problem.grid)
    fstar_sq = l2_norm(problem.f) ** 2 / lam
    dt = problem.dt
    v_int = np.concatenate([[0.0], np.cumsum(dt * traj.h1[1:] ** 2)])
    lhs = 0.5 * traj.l2**2 + 0.5 * m * v_int
    rhs = 0.5 * traj.l2[0] ** 2 + (0.5 / m) * fstar_sq * traj.times
    scale = 1.0 + float(rhs[-1])
    excess = lhs - (rhs * (1.0 + 1e-3) + 10.0 * dt * scale)
    return EnergyLedger(lhs=lhs, rhs=rhs, ok=bool(np.all(excess <= 0.0)),
                        worst_excess=float(np.max(excess)))


class CorridorPreconditionError(ValueError):
    """Initial data outside the order interval; the invariance statement
    does not apply."""


@dataclass(frozen=True)
class CorridorReport:
    ok: bool
    worst_lo: float   # most negative margin toward the lower solution
    worst_hi: float   # most negative margin toward the upper solution
    slack: float
    margins_lo: np.ndarray  # per snapshot: min(u - u_lo)
    margins_hi: np.ndarray  # per snapshot: min(u_hi - u)


def corridor_check(traj: Trajectory, u_lo: RadialField, u_hi: RadialField) -> CorridorReport:
    """Verify the trajectory never leaves the order interval [u_lo, u_hi].

    Requires the initial snapshot inside the corridor (up to roundoff);
    otherwise the invariance hypothesis is violated and the check refuses to
    run.  The slack combines a fixed relative floor with the scheme's
    O(h^2 + dt) consistency scale.
    """
    problem = traj.problem
    scale = 1.0 + sup_norm(u_hi)
    tiny = 1e-9 * scale
    first = traj.snapshots[0].values
    if np.any(first < u_lo.values - tiny) or np.any(first > u_hi.values + tiny):
        raise CorridorPreconditionError("initial value lies outside [u_lo, u_hi]")
    slack = 1e-6 * scale + 5.0 * (problem.grid.h**2 + problem.dt) * scale
    margins_lo = np.array([float(np.min(s.values - u_lo.values)) for s in traj.snapshots])
    margins_hi = np.array([float(np.min(u_hi.values - s.values)) for s in traj.snapshots])
    worst_lo = float(np.min(margins_lo))
    worst_hi = float(np.min(margins_hi))
    ok = worst_lo >= -slack and worst_hi >= -slack
    return CorridorReport(ok=ok, worst_lo=worst_lo, worst_hi=worst_hi, slack=slack,
                          margins_lo=margins_lo, margins_hi=margins_hi)


@dataclass(frozen=True)
class ContractionReport:
    ok: bool
    W: np.ndarray
    gamma: float
    slack: float


def contraction_check(problem: ParabolicProblem, u0_a: RadialField,
                      u0_b: RadialField) -> ContractionReport:
    """Uniqueness ledger: the weighted squared distance

        W_k = exp(-sum_j p_j dt) |u_a - u_b|_2^2 (t_k),
        p = (gamma |g|_2 |u_a|_V)^2 / m,

    must be nonincreasing.  gamma is the coefficient's Lipschitz constant on
    the interaction range actually visited by the two runs; the rate uses
    the directly provable Cauchy-Schwarz constant.
    """
    n_steps = int(round(problem.T / problem.dt))
    dt = problem.dt
    ua = u0_a.values.copy()
    ub = u0_b.values.copy()
    d = np.empty(n_steps + 1)
    h1a = np.empty(n_steps + 1)
    lr_lo, lr_hi = np.inf, -np.inf
    for k in range(n_steps + 1):
        d[k] = l2_norm(RadialField(problem.grid, ua - ub))
        h1a[k] = h1_seminorm(RadialField(problem.grid, ua))
        for state in (ua, ub):
            lr = problem.kernel.apply_values(state)
            lr_lo = min(lr_lo, float(np.min(lr)))
            lr_hi = max(lr_hi, float(np.max(lr)))
        if k < n_steps:
            ua = step_values(problem, ua, dt)
            ub = step_values(problem, ub, dt)

    pad = 1e-6 * (1.0 + abs(lr_hi))
    gamma = problem.a.derivative_sup(lr_lo - pad, lr_hi + pad)
    g2 = l2_norm(problem.g)
    p = (gamma * g2 * h1a) ** 2 / problem.a.m
    weight = np.exp(-np.concatenate([[0.0], np.cumsum(dt * p[1:])]))
    W = weight * d**2
    slack = 1e-3 * W[0] + 10.0 * dt * (1.0 + W[0])
    running_min = np.minimum.accumulate(W)
    ok = bool(np.all(W - np.concatenate([[W[0]], running_min[:-1]]) <= slack))
    return ContractionReport(ok=ok, W=W, gamma=gamma, slack=slack)


@dataclass(frozen=True)
class AbsorbingSetReport:
    a1: float
    a2: float
    a3: float
    bound: float
    observed_vsq: float   # sup of |u|_V^2 beyond the settling window
    certified: bool
    ok: bool | None       # None when the coupling constant is only defaulted


def absorbing_set_report(problem: ParabolicProblem, traj: Trajectory, t0: float,
                         K_c: float = 1.0, certified: bool = False) -> AbsorbingSetReport:
    """Uniform-in-time gradient bound (a3/t0 + a2) exp(a1).

    rho_0^2 is the observed sup of |u|_2^2 over the settling window [0, t0];
    a2 = (t0/m) |f|_2^2 and a3 = (t0 lambda / m^2) |f|_2^2 + rho_0^2 / m;
    a1 couples through K_c^2 |a'|_inf^2 a3 / m where K_c absorbs the
    gradient-transfer constant of the interaction functional and is only a
    configuration input.  The uniform Gronwall argument bounds the squared
    V-norm, so the comparison is made against |u|_V^2; it is asserted only
    when the caller certifies K_c.
    """
    if problem.T < 2.0 * t0:
        raise ValueError("need T >= 2 t0 to separate settling and observation windows")
    m = problem.a.m
    lam = principal_eigenvalue(problem.grid)
    f2sq = l2_norm(problem.f) ** 2
    head = traj.times <= t0
    rho0_sq = float(np.max(traj.l2[head] ** 2))
    a2 = t0 / m * f2sq
    a3 = t0 * lam / m**2 * f2sq + rho0_sq / m
    ap_inf = problem.a.lipschitz
    a1 = (K_c**2 * ap_inf**2 * a3) / m
    bound = (a3 / t0 + a2) * np.exp(a1)
    tail = traj.times >= t0
    observed = float(np.max(traj.h1[tail] ** 2))
    ok = observed <= bound if certified else None
    if certified and not ok:
        raise LedgerViolation(
            f"absorbing bound {bound:.6g} exceeded by observed gradient {observed:.6g}"
        )
    return AbsorbingSetReport(a1=a1, a2=a2, a3=a3, bound=float(bound),
                              observed_vsq=observed, certified=certified, ok=ok)


# -- iteration exponents --------------------------------------------------------


@dataclass(frozen=True)
class MoserExponents:
    """Scalar exponents of the norm-bootstrapping iteration that lifts
    integrability of the solution from exponent 2r to infinity."""

    n: int
    p: float
    r: float
    q: float
    sigma: float
    alpha: float
    beta: float
    delta: float
    rho: float
    theta: float
    lambda1_sum: float
    lambda2_sum: float


def moser_sigma(n: int, p: float, r: float) -> float:
    return p * (n + 2) / (2.0 * (r * (2 * p - p * n + n) + n * p))


def moser_exponents(n: int, p: float, r: float) -> MoserExponents:
    """All exponents of one bootstrapping level, plus the closed geometric
    sums controlling the whole iteration.

    Admissibility: n >= 3, p in (1, n/(n-2)), r >= 1.  The identities
    2 r sigma delta = 1 and 2 rho = alpha beta / delta hold exactly and the
    decay sigma(2^k r) <= theta^k sigma(r) makes both sums finite.
    """
    if n < 3:
        raise ValueError("the bootstrapping exponents require n >= 3")
    if p <= 1:
        raise ValueError("need p > 1")
    if p >= n / (n - 2):
        raise ValueError(f"need p < n/(n-2) = {n / (n - 2)!r}; got p={p}")
    if r < 1:
        raise ValueError("need iteration index r >= 1")

    sigma = moser_sigma(n, p, r)
    alpha = (2 * r - 1) / r
    beta = (2 * n * r - (n - 2) * (2 * r - 1) * p) / ((n + 2) * (2 * r - 1) * p)
    delta = 1.0 - alpha * (1.0 - beta) / 2.0
    rho = (2 * n * r - (n - 2) * (2 * r - 1) * p) / (
        2 * r * (p * (n + 2) + n) - 2 * n * (2 * r - 1) * p)
    c2 = 2 * p - p * n + n
    c3 = n * p
    theta = 1.0 - c2 / (2 * c2 + c3)
    lambda1 = sigma / (1.0 - theta)
    lambda2 = moser_sigma(n, p, 2 * r) / (1.0 - theta) ** 2
    return MoserExponents(n=n, p=p, r=r, q=p / (p - 1.0), sigma=sigma, alpha=alpha,
                          beta=beta, delta=delta, rho=rho, theta=theta,
                          lambda1_sum=lambda1, lambda2_sum=lambda2)


# -- asymptotic reports -----------------------------------------------------------


@dataclass(frozen=True)
class LinfReport:
    sup_overall: float
    plateau_ok: bool


def linf_tracking(traj: Trajectory) -> LinfReport:
    """Empirical boundedness: the sup-norm series must plateau (last quarter
    no more than 1% above the earlier maximum) in dissipative runs."""
    sup = traj.sup
    q3 = max(1, (3 * len(sup)) // 4)
    head = float(np.max(sup[:q3]))
    tail = float(np.max(sup[q3:]))
    return LinfReport(sup_overall=float(np.max(sup)),
                      plateau_ok=tail <= head * (1.0 + 1e-2) + 1e-12)


@dataclass(frozen=True)
class SteadyConvergenceReport:
    times: np.ndarray
    distances: np.ndarray
    final_ratio: float
    certified: bool
    ok: bool | None


def steady_convergence_report(traj: Trajectory, u_r: RadialField,
                              certify: bool = False) -> SteadyConvergenceReport:
    """Distance-to-equilibrium series |u(t_k) - u_r|_2 over the snapshots.

    Report-only in general: with several equilibria nothing says which one
    attracts.  When ``certify`` is set (uniqueness regime, nonincreasing
    coefficient, corridor-respecting start), the final distance has to drop
    below 1e-4 of the initial one.
    """
    dists = np.array([l2_norm(s - u_r) for s in traj.snapshots])
    d_final = l2_norm(traj.final - u_r)
    times = traj.snapshot_times
    if traj.snapshot_times[-1] < traj.times[-1]:
        times = np.concatenate([times, [traj.times[-1]]])
        dists = np.concatenate([dists, [d_final]])
    ratio = float(d_final / dists[0]) if dists[0] > 0 else 0.0
    ok = None
    if certify:
        ok = ratio <= 1e-4
        if not ok:
            raise LedgerViolation(
                f"certified steady-state convergence failed: ratio {ratio:.3e}"
            )
    return SteadyConvergenceReport(times=times, distances=dists,
                                   final_ratio=ratio, certified=certify, ok=ok)
