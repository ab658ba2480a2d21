"""Radial grids on the ball, quadrature, norms and the principal eigenvalue.

Everything downstream works on radially symmetric samples over [0, R] where
R is half the domain diameter.  Integrals over the n-ball reduce to
one-dimensional integrals against the surface factor (2, 2*pi, 4*pi for
n = 1, 2, 3) and the radial weight rho**(n-1).  The weight is folded into
the integrand, not into the quadrature weights, so one composite-trapezoid
weight vector serves every integral.

Grids and fields are immutable after construction; all operations here are
pure functions and safe to call from concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

SURFACE_FACTOR = {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}

#: Coarsest admissible grid; anything below resolves nothing of interest.
MIN_CELLS = 8

EIGEN_MAX_ITER = 10_000


class EigenIterationError(RuntimeError):
    """Inverse power iteration failed to settle (degenerate grid)."""


@dataclass(frozen=True)
class RadialGrid:
    """Uniform discretization of [0, R] with the radial measure attached.

    Attributes
    ----------
    n : spatial dimension, one of 1, 2, 3
    R : outer radius (half the domain diameter)
    N : number of cells; the grid carries N + 1 nodes
    nodes : equally spaced radii, nodes[0] = 0, nodes[N] = R
    h : mesh width R / N
    surface_factor : measure of the unit sphere in dimension n
    """

    n: int
    R: float
    N: int
    nodes: np.ndarray
    h: float
    surface_factor: float

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.N + 1, self.h)
        w[0] = 0.5 * self.h
        w[-1] = 0.5 * self.h
        return w

    def radial_weight(self) -> np.ndarray:
        """Nodal values of rho**(n-1)."""
        return self.nodes ** (self.n - 1)

    def integrate(self, values: np.ndarray) -> float:
        """Integral over the ball of the radial extension of ``values``."""
        w = self.trapezoid_weights()
        return float(self.surface_factor * np.sum(w * self.radial_weight() * values))


@dataclass(frozen=True)
class RadialField:
    """Samples of a radial function on the nodes of a grid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.N + 1,):
            raise ValueError(
                f"field needs {self.grid.N + 1} samples, got shape {vals.shape}"
            )
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def boundary_value(self) -> float:
        return float(self.values[-1])

    def __add__(self, other: "RadialField") -> "RadialField":
        _same_grid(self, other)
        return RadialField(self.grid, self.values + other.values)

    def __sub__(self, other: "RadialField") -> "RadialField":
        _same_grid(self, other)
        return RadialField(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "RadialField":
        return RadialField(self.grid, c * self.values)

    __rmul__ = __mul__


def _same_grid(u: RadialField, v: RadialField) -> None:
    if u.grid is not v.grid and (
        u.grid.n != v.grid.n or u.grid.N != v.grid.N or u.grid.R != v.grid.R
    ):
        raise ValueError("fields live on different grids")


def build_grid(n: int, R: float, N: int) -> RadialGrid:
    """Build a uniform radial grid.

    Raises ``ValueError`` for dimensions outside {1, 2, 3} (no closed-form
    sphere geometry elsewhere) and for N below ``MIN_CELLS``.
    """
    if n not in SURFACE_FACTOR:
        raise ValueError(f"unsupported dimension n={n}; expected 1, 2 or 3")
    if not R > 0:
        raise ValueError(f"outer radius must be positive, got {R}")
    if N < MIN_CELLS:
        raise ValueError(f"N={N} is too coarse; need at least {MIN_CELLS} cells")
    R = float(R)
    nodes = np.linspace(0.0, R, N + 1)
    nodes.setflags(write=False)
    return RadialGrid(
        n=int(n),
        R=R,
        N=int(N),
        nodes=nodes,
        h=R / N,
        surface_factor=SURFACE_FACTOR[n],
    )


def constant_field(grid: RadialGrid, c: float) -> RadialField:
    return RadialField(grid, np.full(grid.N + 1, float(c)))


def field_from_function(grid: RadialGrid, fn) -> RadialField:
    return RadialField(grid, np.asarray(fn(grid.nodes), dtype=float))


def l2_norm(u: RadialField) -> float:
    """L2 norm over the ball of the radial extension of u."""
    return float(np.sqrt(max(u.grid.integrate(u.values**2), 0.0)))


def _derivative_values(grid: RadialGrid, vals: np.ndarray, center_zero: bool) -> np.ndarray:
    d = np.empty_like(vals)
    h = grid.h
    d[1:-1] = (vals[2:] - vals[:-2]) / (2.0 * h)
    # Second-order one-sided stencil at the outer boundary.
    d[-1] = (3.0 * vals[-1] - 4.0 * vals[-2] + vals[-3]) / (2.0 * h)
    if center_zero:
        # Radial symmetry forces a vanishing derivative at the center.
        d[0] = 0.0
    else:
        d[0] = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h)
    return d


def radial_derivative(u: RadialField) -> RadialField:
    """Central-difference radial derivative; pinned to 0 at the center."""
    return RadialField(u.grid, _derivative_values(u.grid, u.values, center_zero=True))


def h1_seminorm(u: RadialField) -> float:
    """L2 norm of the discrete radial derivative (one-sided at both ends)."""
    d = _derivative_values(u.grid, u.values, center_zero=False)
    return float(np.sqrt(max(u.grid.integrate(d**2), 0.0)))


def sup_norm(u: RadialField) -> float:
    return float(np.max(np.abs(u.values)))


def diffusion_bands(grid: RadialGrid, coeff_values: np.ndarray) -> np.ndarray:
    """Tridiagonal bands of the operator -div(A grad .) on nodes 0..N-1.

    Conservative radial finite volumes: midpoint fluxes in the interior,
    symmetry (zero flux) at the center cell, homogeneous Dirichlet at rho = R
    (node N eliminated).  Returned in ``scipy.linalg.solve_banded`` layout,
    shape (3, N): row 0 super-diagonal, row 1 diagonal, row 2 sub-diagonal.
    """
    n, N, h = grid.n, grid.N, grid.h
    rho = grid.nodes
    A = np.asarray(coeff_values, dtype=float)
    mid = 0.5 * (rho[:-1] + rho[1:])  # cell midpoints, length N
    Amid = 0.5 * (A[:-1] + A[1:])
    flux = mid ** (n - 1) * Amid  # rho^{n-1} A at midpoints

    bands = np.zeros((3, N))
    # Center cell [0, h/2]: volume-averaged flux balance.
    c0 = 2.0 * n / h**2 * Amid[0]
    bands[1, 0] = c0
    if N > 1:
        bands[0, 1] = -c0
    # Interior nodes 1..N-1.
    i = np.arange(1, N)
    wi = rho[i] ** (n - 1) * h**2
    cm = flux[i - 1] / wi
    cp = flux[i] / wi
    bands[1, 1:] = cm + cp
    bands[2, 0:N - 1] = -cm  # entry (i, i-1)
    bands[0, 2:] = -cp[:-1]  # entry (i, i+1); last cp couples to node N (Dirichlet)
    return bands


def _bands_matvec(bands: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = bands[1] * v
    out[:-1] += bands[0, 1:] * v[1:]
    out[1:] += bands[2, :-1] * v[:-1]
    return out


def principal_eigenvalue(grid: RadialGrid, tol: float = 1e-10,
                         max_iter: int = EIGEN_MAX_ITER) -> float:
    """Smallest eigenvalue of the radial Dirichlet Laplacian on the grid.

    Inverse power iteration on the conservative finite-volume operator;
    converges to the continuum value at second order in h.
    """
    bands = diffusion_bands(grid, np.ones(grid.N + 1))
    v = 1.0 - grid.nodes[:-1] / grid.R
    lam = None
    for _ in range(max_iter):
        w = solve_banded((1, 1), bands, v)
        w /= np.max(np.abs(w))
        num = float(w @ _bands_matvec(bands, w))
        den = float(w @ w)
        lam_new = num / den
        if lam is not None and abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        lam = lam_new
        v = w
    raise EigenIterationError(
        f"eigenvalue iteration did not converge in {max_iter} steps"
    )
