"""Discrete realization of the interaction functional u -> integral of g*u
over the part of the domain within distance r of each point.

For radial data the n-dimensional integral collapses to a one-dimensional
one: the value at radius t is

    surface_factor * integral_0^R cap_fraction(n, t, s, r) g(s) u(s) s^{n-1} ds,

where ``cap_fraction`` is the fraction of the sphere of radius s that lies
within distance r of a point at radius t.  The whole functional is stored
as one dense (N+1) x (N+1) matrix; kernels are immutable after assembly and
``apply`` is pure, so they can be shared freely across workers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .grids import RadialField, RadialGrid, l2_norm


class BoundViolation(RuntimeError):
    """A mathematically guaranteed inequality failed numerically."""


def cap_fraction(n: int, t, s, r: float):
    """Fraction of the sphere {|y| = s} lying inside the ball B(x, r), |x| = t.

    Total on t, s >= 0 and r >= 0; accepts scalars or broadcastable arrays.
    Clamped closed forms: 1 when r >= t + s, 0 when r <= |t - s|; in between
    the slice is an explicit cap formula per dimension.  Degenerate centers
    (t = 0 or s = 0) are covered by the clamps.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    t, s = np.broadcast_arrays(t, s)
    full = r >= t + s
    empty = ~full & (r <= np.abs(t - s))
    interior = ~(full | empty)

    frac = np.zeros(t.shape, dtype=float)
    frac[full] = 1.0
    if np.any(interior):
        ti = t[interior]
        si = s[interior]
        if n == 1:
            # The sphere is the point pair {-s, +s}; strictly between the
            # clamps exactly one of the two lies within reach.
            frac[interior] = 0.5
        elif n == 2:
            arg = (ti**2 + si**2 - r**2) / (2.0 * ti * si)
            frac[interior] = np.arccos(np.clip(arg, -1.0, 1.0)) / np.pi
        elif n == 3:
            frac[interior] = (r**2 - (ti - si) ** 2) / (4.0 * ti * si)
        else:
            raise ValueError(f"unsupported dimension n={n}")
    if frac.ndim == 0:
        return float(frac)
    return frac


@dataclass(frozen=True)
class InteractionKernel:
    """Dense matrix realizing the interaction functional on a grid."""

    grid: RadialGrid
    r: float
    g: RadialField
    matrix: np.ndarray

    def apply_values(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values

    def apply(self, u: RadialField) -> RadialField:
        if u.grid.N != self.grid.N or u.grid.n != self.grid.n or u.grid.R != self.grid.R:
            raise ValueError("field grid does not match kernel grid")
        return RadialField(self.grid, self.matrix @ u.values)


def build_kernel(grid: RadialGrid, g: RadialField, r: float) -> InteractionKernel:
    """Assemble the interaction matrix for weight g and radius r.

    r must lie in [0, d] with d = 2R the domain diameter; the functional is
    identically zero at r = 0 and sees the whole ball from every point at
    r = d.  The matrix is rebuilt only when r or g changes -- it is linear
    and state independent, so solvers reuse one instance across iterations.
    """
    d = 2.0 * grid.R
    if not 0.0 <= r <= d * (1.0 + 1e-12):
        raise ValueError(f"interaction radius r={r} outside [0, {d}]")
    frac = cap_fraction(grid.n, grid.nodes[:, None], grid.nodes[None, :], float(r))
    w = grid.trapezoid_weights()
    row_weights = grid.surface_factor * w * g.values * grid.radial_weight()
    matrix = frac * row_weights[None, :]
    matrix.setflags(write=False)
    return InteractionKernel(grid=grid, r=float(r), g=g, matrix=matrix)


def functional_bound_report(kernel: InteractionKernel, u: RadialField) -> tuple[float, float]:
    """Return (sup |functional|, |g|_2 |u|_2) and insist the first is bounded
    by the second; this is the Cauchy-Schwarz form of the a-priori bound."""
    lhs = float(np.max(np.abs(kernel.apply_values(u.values))))
    rhs = l2_norm(kernel.g) * l2_norm(u)
    if lhs > rhs * (1.0 + 1e-8):
        raise BoundViolation(
            f"interaction bound violated: sup={lhs!r} exceeds |g||u|={rhs!r}"
        )
    return lhs, rhs


def dump_csv(kernel: InteractionKernel, path) -> None:
    """Debug dump of the kernel matrix, row-major, header i,j,value."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "value"])
        N = kernel.grid.N
        for i in range(N + 1):
            for j in range(N + 1):
                writer.writerow([i, j, f"{kernel.matrix[i, j]:.17g}"])
