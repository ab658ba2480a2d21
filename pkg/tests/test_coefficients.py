import numpy as np
import pytest

import nldlab as nl
from nldlab.coefficients import CoefficientBoundsError


def all_kinds():
    return [
        nl.ConstantCoefficient(2.0),
        nl.RationalCoefficient(1.0, 1.0, 0.0, domain=(-0.5, 10.0)),
        nl.PiecewiseLinearCoefficient([(0.0, 1.0), (1.0, 0.5), (3.0, 0.4)]),
        nl.TabulatedCoefficient(np.linspace(0, 4, 9), 1.0 + 0.5 * np.cos(np.linspace(0, 4, 9))),
    ]


def test_constant_eval():
    a = nl.ConstantCoefficient(2.0)
    assert a(0.3) == 2.0
    assert a.derivative(0.3) == 0.0
    assert a.m == a.M == 2.0
    assert a.lipschitz == 0.0


def test_rational_eval():
    a = nl.RationalCoefficient(1.0, 1.0, 0.0, domain=(-0.5, 10.0))
    assert a(1.0) == pytest.approx(0.5)
    assert a.derivative(1.0) == pytest.approx(-0.25)
    # Constant continuation outside the declared domain.
    assert a(100.0) == pytest.approx(a(10.0))
    assert a.derivative(100.0) == 0.0


def test_piecewise_linear_eval():
    a = nl.PiecewiseLinearCoefficient([(0.0, 1.0), (1.0, 0.5)])
    assert a(0.5) == pytest.approx(0.75)
    assert a.derivative(0.5) == pytest.approx(-0.5)
    # Right-sided convention at the last breakpoint: continuation slope.
    assert a.derivative(1.0) == 0.0
    assert a(2.0) == pytest.approx(0.5)


@pytest.mark.parametrize("a", all_kinds())
def test_derivative_consistency(a):
    rng = np.random.default_rng(23)
    lo, hi = a.domain
    h = 1e-6 * (hi - lo)
    bps = a.breakpoints()
    count = 0
    while count < 100:
        s = rng.uniform(lo + 2 * h, hi - 2 * h)
        if bps.size and np.min(np.abs(bps - s)) < 10 * h:
            continue
        fd = (a(s + h) - a(s - h)) / (2 * h)
        assert abs(fd - a.derivative(s)) <= 1e-6 * (1 + abs(a.derivative(s)))
        count += 1


def test_validate_rational():
    a = nl.RationalCoefficient(1.0, 1.0, 0.0, domain=(0.0, 10.0))
    cert = a.validate()
    assert cert.m == pytest.approx(1 / 11)
    assert cert.M == pytest.approx(1.0)
    assert cert.lipschitz == pytest.approx(1.0)  # |a'(0)| = 1


def test_validate_rejects_nonpositive():
    a = nl.PiecewiseLinearCoefficient([(0.0, 0.0), (10.0, 10.0)])  # a(0) = 0
    with pytest.raises(CoefficientBoundsError) as err:
        a.validate()
    assert abs(err.value.witness) < 1e-6


def test_validate_constant():
    cert = nl.ConstantCoefficient(3.0).validate()
    assert cert.m == cert.M == 3.0
    assert cert.lipschitz == 0.0


@pytest.mark.parametrize("a", all_kinds())
def test_eval_respects_certified_bounds(a):
    rng = np.random.default_rng(31)
    cert = a.validate()
    s = rng.uniform(a.domain[0] - 1, a.domain[1] + 1, size=100_000)
    vals = a(s)
    assert np.all(vals >= cert.m * (1 - 1e-12))
    assert np.all(vals <= cert.M * (1 + 1e-12))


def test_scalar_roots_rational():
    a = nl.RationalCoefficient(1.0, 1.0, 0.0, domain=(-0.5, 10.0))
    roots = nl.scalar_mu_roots(a, 0.5)
    # mu / (1 + mu) = 0.5 has the single solution mu = 1.
    assert len(roots) == 1
    assert roots[0].mu == pytest.approx(1.0, abs=1e-10)
    assert not roots[0].tangential


def test_scalar_roots_zero_rhs():
    a = nl.ConstantCoefficient(2.0)
    roots = nl.scalar_mu_roots(a, 0.0)
    assert len(roots) == 1 and roots[0].mu == 0.0


def test_scalar_roots_negative_rhs_rejected():
    with pytest.raises(ValueError):
        nl.scalar_mu_roots(nl.ConstantCoefficient(1.0), -0.5)


def test_scalar_roots_residual_invariant():
    rng = np.random.default_rng(41)
    a = nl.RationalCoefficient(2.0, 0.5, 0.1, domain=(-0.2, 50.0))
    for _ in range(20):
        c = rng.uniform(0.01, 5.0)
        roots = nl.scalar_mu_roots(a, c)
        # mu a(mu) strictly increases for this shape, so the root is unique.
        assert len(roots) == 1
        for rt in roots:
            assert abs(rt.mu * a(rt.mu) - c) <= 1e-10 * (1 + c)


def test_staircase_example_values():
    coeff, bps = nl.build_staircase(0.5, 1.0, 2.0, 1)
    assert bps[0] == pytest.approx(1.0)
    assert coeff(1.0) == pytest.approx(1.0)
    assert nl.interval_condition_check(coeff, 0.0, 1.0, 0.5, 1.0)

    coeff3, bps3 = nl.build_staircase(0.5, 1.0, 2.0, 3)
    assert bps3 == pytest.approx([1.0, 2.0, 8.0])
    assert coeff3(2.0) == pytest.approx(0.25)
    assert coeff3(8.0) == pytest.approx(0.125)
    # Condition on the second designed interval: [m2 a(m2), m3 a(m3)] = [0.5, 1].
    assert 2.0 * coeff3(2.0) == pytest.approx(0.5)
    assert 8.0 * coeff3(8.0) == pytest.approx(1.0)
    for lo, hi in nl.designed_intervals(bps3):
        assert nl.interval_condition_check(coeff3, lo, hi, 0.5, 1.0)


def test_staircase_rejects_bad_input():
    with pytest.raises(ValueError):
        nl.build_staircase(0.5, 1.0, 2.0, 2)  # even
    with pytest.raises(ValueError):
        nl.build_staircase(0.0, 1.0, 2.0, 3)  # c_min must be positive
    with pytest.raises(ValueError):
        nl.build_staircase(0.5, 1.0, -1.0, 3)


def test_staircase_root_structure():
    # For any c strictly inside the target interval the product mu a(mu)
    # crosses c once per designed interval and once more in the free region
    # between them (it must descend from c_max to c_min there), so n1 = 3
    # yields three roots of which exactly two are localized.
    coeff, bps = nl.build_staircase(0.5, 1.0, 2.0, 3)
    c = 0.75
    roots = nl.scalar_mu_roots(coeff, c)
    assert len(roots) == 3
    ivals = nl.designed_intervals(bps)
    per = [sum(lo <= rt.mu <= hi for rt in roots) for lo, hi in ivals]
    assert per == [1, 1]
    # Hand values: mu(2 - mu) = 0.75 on the first interval gives mu = 0.5.
    assert roots[0].mu == pytest.approx(0.5, abs=1e-9)


def test_interval_condition_check_basics():
    const = nl.ConstantCoefficient(1.0)
    assert nl.interval_condition_check(const, 0.0, 2.0, 0.5, 1.5)
    increasing = nl.PiecewiseLinearCoefficient([(0.0, 1.0), (2.0, 2.0)])
    assert not nl.interval_condition_check(increasing, 0.0, 2.0, 0.5, 1.5)
    with pytest.raises(ValueError):
        nl.interval_condition_check(const, -1.0, 2.0, 0.5, 1.5)
