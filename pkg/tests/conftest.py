import numpy as np
import pytest

import nldlab as nl


@pytest.fixture(scope="session")
def grid256():
    return nl.build_grid(3, 1.0, 256)


@pytest.fixture(scope="session")
def flagship(grid256):
    """Rational-coefficient problem with f = g = 1 at full interaction radius."""
    a = nl.RationalCoefficient(1.0, 1.0, 0.0, domain=(-0.5, 5.0))
    f = nl.constant_field(grid256, 1.0)
    g = nl.constant_field(grid256, 1.0)
    return nl.make_problem(grid256, a, f, g, r=2.0)


def sphere_mc_fraction(rng, n, t, s, r, samples):
    """Independent Monte Carlo oracle for the sphere-slice fraction: Gaussian
    directions normalized onto the sphere of radius s, distance test against
    the point (t, 0, ..., 0)."""
    if n == 1:
        y = s * rng.choice([-1.0, 1.0], size=samples)
        return float(np.mean(np.abs(y - t) <= r))
    dirs = rng.standard_normal((samples, n))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    pts = s * dirs
    pts[:, 0] -= t
    return float(np.mean(np.einsum("ij,ij->i", pts, pts) <= r * r))
