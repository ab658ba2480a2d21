"""Stability certification of stationary solutions.

The linearized quadratic form at a solution u_r splits into a weighted
diffusion part and a nonlocal coupling part,

    G(phi) = int a(L u_r) |phi'|^2  -  int a'(L u_r) (L phi) u_r' phi',

with L the interaction functional.  A solution is stable when G is
nonnegative on all Dirichlet test directions, which is positive
semidefiniteness of the symmetrized discrete form.  The form is assembled
on piecewise-linear hats over the radial grid and the smallest eigenvalue
is taken against the weighted H1 mass, so the certificate is dimensionless
in the |grad phi|^2 normalization.  Assembly and the eigensolve are pure;
branch-wide certification parallelizes over points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, ldl, lu_factor, lu_solve, solve_triangular

from .coefficients import DiffusionCoefficient
from .grids import RadialField, RadialGrid, l2_norm, radial_derivative
from .kernels import InteractionKernel

EIGEN_TOL = 1e-8
EIGEN_MAX_ITER = 10_000


class EigenIterationError(RuntimeError):
    pass


@dataclass(frozen=True)
class StabilityCertificate:
    lambda_min: float
    stable: bool
    eigenvector: RadialField  # worst-case direction, H1-normalized
    grid_size: int
    r: float
    tol_stab: float


def _cell_measure(grid: RadialGrid, nodal: np.ndarray) -> np.ndarray:
    """Per-cell trapezoid of nodal * rho^{n-1} against the surface factor."""
    w = grid.radial_weight() * nodal
    return grid.surface_factor * 0.5 * grid.h * (w[:-1] + w[1:])


def _stiffness(grid: RadialGrid, nodal_coeff: np.ndarray) -> np.ndarray:
    """Weighted stiffness sum_cells c_k (phi_i' phi_j')|_cell, boundary row
    and column eliminated; size N x N over nodes 0..N-1."""
    N = grid.N
    c = _cell_measure(grid, nodal_coeff) / grid.h**2
    S = np.zeros((N + 1, N + 1))
    idx = np.arange(N)
    np.add.at(S, (idx, idx), c)
    np.add.at(S, (idx + 1, idx + 1), c)
    np.add.at(S, (idx, idx + 1), -c)
    np.add.at(S, (idx + 1, idx), -c)
    return S[:N, :N]


def assemble_h1(grid: RadialGrid) -> np.ndarray:
    """H1 mass: the weighted stiffness of the Laplacian itself."""
    return _stiffness(grid, np.ones(grid.N + 1))


def assemble_form(solution, kernel: InteractionKernel,
                  a: DiffusionCoefficient) -> tuple[np.ndarray, np.ndarray]:
    """Assemble (S, Nm): the symmetric diffusion block and the generally
    nonsymmetric nonlocal coupling block of the linearized form.

    Nm[i, j] integrates a'(L u_r) (L hat_j) u_r' hat_i'; the kernel image of
    hat_j is column j of the kernel matrix, so the whole block is dense.
    """
    grid = solution.u.grid
    N = grid.N
    lr = solution.interaction.values
    S = _stiffness(grid, a(lr))

    ap = a.derivative(lr)
    up = radial_derivative(solution.u).values
    Y = (grid.surface_factor * grid.radial_weight() * ap * up)[:, None] * kernel.matrix
    C = 0.5 * grid.h * (Y[:-1, :] + Y[1:, :])  # per-cell integrals, (N, N+1)
    Nm_full = np.zeros((N + 1, N + 1))
    Nm_full[0] = -C[0] / grid.h
    Nm_full[1:N] = (C[: N - 1] - C[1:N]) / grid.h
    return S, Nm_full[:N, :N]


def quadratic_form_value(solution, kernel: InteractionKernel,
                         a: DiffusionCoefficient, phi: np.ndarray) -> float:
    """Evaluate the linearized form directly on one Dirichlet test field,
    without assembling matrices (consistency oracle for the assembly)."""
    grid = solution.u.grid
    phi = np.asarray(phi, dtype=float)
    lr = solution.interaction.values
    dphi = np.diff(phi) / grid.h
    term1 = float(np.sum(dphi**2 * _cell_measure(grid, a(lr))))
    up = radial_derivative(solution.u).values
    z = a.derivative(lr) * kernel.apply_values(phi) * up
    term2 = float(np.sum(dphi * _cell_measure(grid, z)))
    return term1 - term2


def _negative_inertia(d: np.ndarray) -> int:
    """Negative-eigenvalue count of the block-diagonal LDL' factor."""
    n = d.shape[0]
    count = 0
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            det = d[i, i] * d[i + 1, i + 1] - d[i + 1, i] ** 2
            if det < 0.0:
                count += 1
            elif d[i, i] + d[i + 1, i + 1] < 0.0:
                count += 2
            i += 2
        else:
            if d[i, i] < 0.0:
                count += 1
            i += 1
    return count


def min_eigenvalue(S: np.ndarray, Nm: np.ndarray, H: np.ndarray,
                   tol: float = EIGEN_TOL,
                   max_iter: int = EIGEN_MAX_ITER) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue of (S - sym(Nm)) v = lambda H v.

    Cholesky-reduce to a standard symmetric problem B, bracket the bottom of
    its spectrum by inertia bisection (the LDL' factor of B - sigma I counts
    eigenvalues below sigma), then run inverse iteration shifted at the
    certified lower edge of the bracket.  The bracketing makes the result
    immune to clustering at the bottom of the spectrum, which is the common
    case here: the pencil eigenvalues accumulate at inf a(l_r(u)).  Returns
    the eigenvalue and the H-normalized eigenvector.
    """
    M = S - 0.5 * (Nm + Nm.T)
    Rchol = cholesky(H, lower=False)
    X = solve_triangular(Rchol, M, trans="T", lower=False)
    B = solve_triangular(Rchol, X.T, trans="T", lower=False).T
    B = 0.5 * (B + B.T)
    n = B.shape[0]
    eye = np.eye(n)
    scale = max(1.0, float(np.max(np.abs(np.diag(B)))))

    # Certified bracket: nothing below the Gershgorin bound, at least one
    # eigenvalue at or below the smallest diagonal Rayleigh quotient.
    lo = float(np.min(np.diag(B) - (np.sum(np.abs(B), axis=1) - np.abs(np.diag(B)))))
    lo -= 1e-6 * scale
    hi = float(np.min(np.diag(B))) + 1e-6 * scale
    steps = 0
    target = 0.01 * tol * scale
    while hi - lo > target and steps < max_iter:
        steps += 1
        mid = 0.5 * (lo + hi)
        _, d, _ = ldl(B - mid * eye, lower=True)
        if _negative_inertia(d) == 0:
            lo = mid
        else:
            hi = mid

    sigma = lo - 1e-12 * scale
    rng = np.random.default_rng(0)
    w = rng.standard_normal(n)
    w /= np.linalg.norm(w)
    lam = None
    factor = lu_factor(B - sigma * eye)
    while steps < max_iter:
        steps += 1
        w_new = lu_solve(factor, w)
        norm = np.linalg.norm(w_new)
        if not np.isfinite(norm) or norm == 0.0:
            sigma -= tol * scale
            factor = lu_factor(B - sigma * eye)
            continue
        w = w_new / norm
        lam = float(w @ (B @ w))
        if np.linalg.norm(B @ w - lam * w) <= tol * max(1.0, abs(lam)):
            v = solve_triangular(Rchol, w, lower=False)
            v = v / np.sqrt(float(v @ (H @ v)))
            return lam, v
    raise EigenIterationError(
        f"eigen iteration did not converge within {max_iter} steps"
    )


def certify_stability(solution, kernel: InteractionKernel,
                      a: DiffusionCoefficient,
                      tol_stab: float | None = None) -> StabilityCertificate:
    """Assemble the linearized form at a converged solution and certify the
    sign of its smallest symmetrized eigenvalue."""
    grid = solution.u.grid
    if tol_stab is None:
        tol_stab = 1e-8 * a.m
    S, Nm = assemble_form(solution, kernel, a)
    H = assemble_h1(grid)
    lam, v = min_eigenvalue(S, Nm, H)
    vector = np.concatenate([v, [0.0]])
    return StabilityCertificate(
        lambda_min=lam,
        stable=lam >= -tol_stab,
        eigenvector=RadialField(grid, vector),
        grid_size=grid.N,
        r=kernel.r,
        tol_stab=tol_stab,
    )


def stability_lower_bound(problem, solution, eps: float = 1e-2,
                          mu_ref: float | None = None,
                          C1: float | None = None) -> float:
    """Analytic lower-bound factor for the linearized form:

        inf a(L u_r)  -  C1 |g|_2 sup|a'| |f|_2 / inf a(L u_r),

    with the derivative taken over [-eps, mu_ref + eps].  Positive values
    imply stability up to discretization; the bound is sufficient only, so a
    negative value proves nothing.
    """
    from .grids import principal_eigenvalue  # local import to keep module light

    if C1 is None:
        C1 = 1.0 / np.sqrt(principal_eigenvalue(solution.u.grid))
    if mu_ref is None:
        mu_ref = float(np.max(solution.interaction.values))
    inf_a = float(np.min(solution.coefficient_field.values))
    sup_ap = problem.a.derivative_sup(-eps, mu_ref + eps)
    return inf_a - C1 * l2_norm(problem.g) * sup_ap * l2_norm(problem.f) / inf_a
