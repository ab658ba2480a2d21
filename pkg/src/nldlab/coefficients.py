"""Diffusion coefficients a(.), their certification, the scalar reduction
mu * a(mu) = c, and the staircase construction that manufactures problems
with several stationary solutions.

A coefficient is an evaluable function on a declared interval, extended by
constant continuation outside it (so the derivative vanishes beyond the
declared domain).  Certified bounds 0 < m <= a <= M and a local Lipschitz
constant are computed by dense sampling plus breakpoint enumeration.
Coefficients are immutable; every evaluation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

VALIDATE_SAMPLES = 10_001
ROOT_SCAN_INTERVALS = 10_000
TANGENT_SLOPE_TOL = 1e-8


class CoefficientBoundsError(ValueError):
    """Raised when certification finds a(s) <= 0 somewhere on the domain."""

    def __init__(self, message: str, witness: float):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class CoefficientCertificate:
    m: float
    M: float
    lipschitz: float
    domain: tuple[float, float]


class DiffusionCoefficient:
    """Base class: value, right-sided derivative, certified bounds."""

    kind = "abstract"

    def __init__(self, domain: tuple[float, float]):
        lo, hi = float(domain[0]), float(domain[1])
        if not lo < hi:
            raise ValueError(f"empty coefficient domain {domain}")
        self.domain = (lo, hi)
        self._certificate: CoefficientCertificate | None = None

    # -- evaluation ---------------------------------------------------------

    def _raw(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _raw_derivative(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, s):
        arr = np.clip(np.asarray(s, dtype=float), *self.domain)
        out = self._raw(arr)
        if np.ndim(s) == 0:
            return float(out)
        return out

    def derivative(self, s):
        arr = np.asarray(s, dtype=float)
        inside = (arr >= self.domain[0]) & (arr < self.domain[1])
        out = np.where(inside, self._raw_derivative(np.clip(arr, *self.domain)), 0.0)
        if np.ndim(s) == 0:
            return float(out)
        return out

    def breakpoints(self) -> np.ndarray:
        return np.empty(0)

    # -- certification ------------------------------------------------------

    def validate(self) -> CoefficientCertificate:
        """Certify positivity, the bounds m and M, and a Lipschitz constant.

        Dense sampling (10^4 points) plus breakpoint enumeration; rejection
        carries the witnessing argument.
        """
        if self._certificate is not None:
            return self._certificate
        lo, hi = self.domain
        samples = np.linspace(lo, hi, VALIDATE_SAMPLES)
        bps = self.breakpoints()
        if bps.size:
            samples = np.unique(np.concatenate([samples, np.clip(bps, lo, hi)]))
        vals = self(samples)
        k = int(np.argmin(vals))
        m, M = float(vals[k]), float(np.max(vals))
        if m <= 0.0:
            raise CoefficientBoundsError(
                f"coefficient is not positive: a({samples[k]!r}) = {m!r}",
                witness=float(samples[k]),
            )
        lipschitz = float(np.max(np.abs(self.derivative(samples))))
        cert = CoefficientCertificate(m=m, M=M, lipschitz=lipschitz, domain=self.domain)
        self._certificate = cert
        return cert

    @property
    def m(self) -> float:
        return self.validate().m

    @property
    def M(self) -> float:
        return self.validate().M

    @property
    def lipschitz(self) -> float:
        return self.validate().lipschitz

    def derivative_sup(self, lo: float, hi: float, samples: int = VALIDATE_SAMPLES) -> float:
        """sup |a'| over [lo, hi], sampled densely plus breakpoints."""
        pts = np.linspace(lo, hi, samples)
        bps = self.breakpoints()
        if bps.size:
            inside = bps[(bps >= lo) & (bps <= hi)]
            if inside.size:
                pts = np.unique(np.concatenate([pts, inside]))
        return float(np.max(np.abs(self.derivative(pts))))


class ConstantCoefficient(DiffusionCoefficient):
    kind = "constant"

    def __init__(self, value: float, domain=(-1.0, 10.0)):
        super().__init__(domain)
        self.value = float(value)

    def _raw(self, s):
        return np.full_like(s, self.value)

    def _raw_derivative(self, s):
        return np.zeros_like(s)

    def __repr__(self):
        return f"ConstantCoefficient({self.value})"


class RationalCoefficient(DiffusionCoefficient):
    """a(s) = alpha / (beta + s) + gamma, decreasing for alpha > 0."""

    kind = "rational"

    def __init__(self, alpha: float, beta: float, gamma: float = 0.0, domain=None):
        self.alpha, self.beta, self.gamma = float(alpha), float(beta), float(gamma)
        if domain is None:
            domain = (-0.5 * self.beta, 100.0)
        if domain[0] <= -self.beta:
            raise ValueError("domain reaches the pole of the rational coefficient")
        super().__init__(domain)

    def _raw(self, s):
        return self.alpha / (self.beta + s) + self.gamma

    def _raw_derivative(self, s):
        return -self.alpha / (self.beta + s) ** 2

    def __repr__(self):
        return (f"RationalCoefficient(alpha={self.alpha}, beta={self.beta}, "
                f"gamma={self.gamma})")


class PiecewiseLinearCoefficient(DiffusionCoefficient):
    """Linear interpolation through breakpoints, constant continuation
    outside; derivatives use the right-sided convention at kinks."""

    kind = "piecewise_linear"

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("need at least two (s, a) breakpoints")
        s = pts[:, 0]
        if np.any(np.diff(s) <= 0):
            raise ValueError("breakpoint abscissae must be strictly increasing")
        super().__init__((float(s[0]), float(s[-1])))
        self._s = s
        self._a = pts[:, 1]
        self._slopes = np.diff(self._a) / np.diff(self._s)

    def _raw(self, s):
        return np.interp(s, self._s, self._a)

    def _raw_derivative(self, s):
        idx = np.searchsorted(self._s, s, side="right") - 1
        idx = np.clip(idx, 0, len(self._slopes) - 1)
        return self._slopes[idx]

    def breakpoints(self) -> np.ndarray:
        return self._s.copy()

    def __repr__(self):
        return f"PiecewiseLinearCoefficient({len(self._s)} breakpoints)"


class TabulatedCoefficient(DiffusionCoefficient):
    """Monotone piecewise-cubic interpolation of a sample table."""

    kind = "tabulated"

    def __init__(self, s, a):
        s = np.asarray(s, dtype=float)
        a = np.asarray(a, dtype=float)
        if s.ndim != 1 or s.shape != a.shape or s.size < 2:
            raise ValueError("tabulated coefficient needs matching 1-d tables")
        super().__init__((float(s[0]), float(s[-1])))
        self._interp = PchipInterpolator(s, a, extrapolate=False)
        self._dinterp = self._interp.derivative()
        self._s = s.copy()

    def _raw(self, s):
        return np.asarray(self._interp(s), dtype=float)

    def _raw_derivative(self, s):
        return np.asarray(self._dinterp(s), dtype=float)

    def breakpoints(self) -> np.ndarray:
        return self._s.copy()


# -- scalar reduction -------------------------------------------------------


@dataclass(frozen=True)
class MuRoot:
    """One root of mu * a(mu) = c with its refinement residual.  Roots where
    the product has nearly vanishing slope are flagged as tangential; even-
    multiplicity crossings are structurally unstable and only detected
    heuristically."""

    mu: float
    residual: float
    tangential: bool


def scalar_mu_roots(a: DiffusionCoefficient, c: float, mu_max: float | None = None) -> list[MuRoot]:
    """All simple roots of mu * a(mu) = c in [0, mu_max], sorted ascending.

    Uniform sign-change scan over 10^4 intervals refined by bisection to
    |mu a(mu) - c| <= 1e-12 (1 + c).  Since a >= m > 0 forces any root below
    c / m, the default scan window 10 c / m cannot miss one.
    """
    if c < 0:
        raise ValueError(f"right-hand side c={c} must be nonnegative")
    if mu_max is None:
        mu_max = 10.0 * c / a.m if c > 0 else 1.0
    if mu_max <= 0:
        raise ValueError("mu_max must be positive")

    def h(mu):
        return mu * a(mu) - c

    target = 1e-12 * (1.0 + c)
    mus = np.linspace(0.0, mu_max, ROOT_SCAN_INTERVALS + 1)
    hs = mus * a(mus) - c

    roots: list[MuRoot] = []

    def add_root(mu, res):
        for existing in roots:
            if abs(existing.mu - mu) <= 1e-9 * (1.0 + abs(mu)):
                return
        slope = a(mu) + mu * a.derivative(mu)
        roots.append(MuRoot(mu=float(mu), residual=float(abs(res)),
                            tangential=bool(abs(slope) < TANGENT_SLOPE_TOL)))

    for k in range(len(mus)):
        if abs(hs[k]) <= target:
            add_root(mus[k], hs[k])
    for k in range(len(mus) - 1):
        if hs[k] * hs[k + 1] < 0.0:
            lo, hi = mus[k], mus[k + 1]
            flo = hs[k]
            mid, fmid = lo, flo
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fmid = h(mid)
                if abs(fmid) <= target or (hi - lo) <= 4.0 * np.finfo(float).eps * max(1.0, hi):
                    break
                if flo * fmid < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fmid
            add_root(mid, fmid)

    roots.sort(key=lambda rt: rt.mu)
    return roots


# -- staircase construction -------------------------------------------------


def build_staircase(c_min: float, c_max: float, a0: float, n1: int):
    """Piecewise-linear decreasing coefficient whose product mu * a(mu)
    covers [c_min, c_max] on (n1 + 1) / 2 designed intervals.

    Recursion: m1 = 2 c_max / a0 with a(m1) = a0 / 2; then repeatedly
    m_{2j} = 2 m_{2j-1} (the free choice, doubled to keep the designed
    intervals well separated), a(m_{2j}) = c_min / m_{2j},
    m_{2j+1} = 2 c_max / a(m_{2j}), a(m_{2j+1}) = a(m_{2j}) / 2.

    Returns ``(coefficient, breakpoints)`` where breakpoints lists
    m_1 ... m_{n1}; the designed intervals are (0, m_1), (m_2, m_3), ...
    """
    if not 0.0 < c_min <= c_max:
        raise ValueError("need 0 < c_min <= c_max (positive target interval)")
    if a0 <= 0:
        raise ValueError("a0 must be positive")
    if n1 < 1 or n1 % 2 == 0:
        raise ValueError(f"n1 must be an odd positive integer, got {n1}")

    pts = [(0.0, float(a0))]
    m1 = 2.0 * c_max / a0
    pts.append((m1, a0 / 2.0))
    while len(pts) - 1 < n1:
        m_prev = pts[-1][0]
        m_even = 2.0 * m_prev
        a_even = c_min / m_even
        m_odd = 2.0 * c_max / a_even
        pts.append((m_even, a_even))
        pts.append((m_odd, a_even / 2.0))

    coeff = PiecewiseLinearCoefficient(pts)
    breakpoints = np.array([p[0] for p in pts[1:]])
    return coeff, breakpoints


def designed_intervals(breakpoints: np.ndarray) -> list[tuple[float, float]]:
    """Designed (m_even, m_odd) pairs of a staircase, starting at (0, m1)."""
    ms = np.concatenate([[0.0], np.asarray(breakpoints, dtype=float)])
    return [(float(ms[i]), float(ms[i + 1])) for i in range(0, len(ms) - 1, 2)]


def interval_condition_check(a: DiffusionCoefficient, m_lo: float, m_hi: float,
                             c_min: float, c_max: float,
                             samples: int = VALIDATE_SAMPLES) -> bool:
    """True iff a attains its max over [m_lo, m_hi] at m_lo, its min at m_hi,
    and [c_min, c_max] fits inside [m_lo a(m_lo), m_hi a(m_hi)]."""
    if not 0 <= m_lo <= m_hi:
        raise ValueError("need 0 <= m_lo <= m_hi")
    pts = np.linspace(m_lo, m_hi, samples)
    bps = a.breakpoints()
    if bps.size:
        inside = bps[(bps >= m_lo) & (bps <= m_hi)]
        if inside.size:
            pts = np.unique(np.concatenate([pts, inside]))
    vals = a(pts)
    tol = 1e-10 * (1.0 + float(np.max(np.abs(vals))))
    a_lo, a_hi = a(m_lo), a(m_hi)
    if a_lo < np.max(vals) - tol or a_hi > np.min(vals) + tol:
        return False
    slack = 1e-12 * (1.0 + abs(c_max))
    return m_lo * a_lo <= c_min + slack and c_max <= m_hi * a_hi + slack
