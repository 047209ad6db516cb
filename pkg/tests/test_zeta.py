import math

import numpy as np
import pytest
from scipy.optimize import brentq

from fdelectro.pb import zeta_residual, zeta_solve


def bisection_root(alpha, beta, gamma, a, b):
    """Plain bisection on the increasing residual, to an interval width of 1e-14."""
    lo, hi = -beta, alpha
    f = lambda z: math.log(beta + z) - math.log(alpha - z) - b * gamma + a * z
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def random_tuples(rng, count):
    # concentrations within two decades of each other and |b*gamma| <= 5, the range the
    # PB sweeps visit; wider ranges push the root against the bracket end where double
    # precision cannot resolve the residual to 1e-12
    alpha = 10 ** rng.uniform(-1, 1, count)
    beta = 10 ** rng.uniform(-1, 1, count)
    gamma = rng.uniform(-5, 5, count)
    a = 10 ** rng.uniform(-3, 1, count)
    b = rng.uniform(-1, 1, count)
    return zip(alpha, beta, gamma, a, b)


def test_symmetric_root_is_zero():
    assert zeta_solve(1.3, 1.3, 0.0, 0.7, 0.4) == 0.0


def test_worked_example():
    z = zeta_solve(2.0, 1.0, 0.0, 1.0, 0.0)
    expected = brentq(lambda t: math.log(1 + t) - math.log(2 - t) + t, -1 + 1e-15, 2 - 1e-15, xtol=1e-15)
    assert z == pytest.approx(expected, abs=1e-14)
    assert z == pytest.approx(bisection_root(2.0, 1.0, 0.0, 1.0, 0.0), abs=1e-13)


@pytest.mark.parametrize("args", [(0.0, 1.0, 0.0, 1.0, 0.0), (1.0, -1.0, 0.0, 1.0, 0.0), (1.0, 1.0, 0.0, 0.0, 0.0)])
def test_invalid_arguments(args):
    with pytest.raises(ValueError):
        zeta_solve(*args)


def test_random_against_bisection():
    rng = np.random.default_rng(7)
    for alpha, beta, gamma, a, b in random_tuples(rng, 1000):
        z = zeta_solve(alpha, beta, gamma, a, b)
        assert -beta < z < alpha
        assert abs(zeta_residual(alpha, beta, gamma, a, b, z)) <= 1e-12 * (1 + abs(b * gamma))
        ref = bisection_root(alpha, beta, gamma, a, b)
        if abs(ref) > 1e-13:
            assert np.sign(z) == np.sign(ref)
        assert abs(z - ref) <= 1e-12 * (alpha + beta)


def test_residual_is_increasing_on_bracket():
    rng = np.random.default_rng(8)
    for alpha, beta, gamma, a, b in random_tuples(rng, 100):
        zs = np.linspace(-beta, alpha, 203)[1:-1]
        f = [zeta_residual(alpha, beta, gamma, a, b, z) for z in zs]
        assert np.all(np.diff(f) > 0)


def test_lipschitz_in_data():
    rng = np.random.default_rng(9)
    for alpha, beta, gamma, a, b in random_tuples(rng, 200):
        z = zeta_solve(alpha, beta, gamma, a, b)
        d = 1e-6 * min(alpha, beta)
        slack = 1e-10
        assert abs(zeta_solve(alpha + d, beta, gamma, a, b) - z) <= d + slack
        assert abs(zeta_solve(alpha, beta + d, gamma, a, b) - z) <= d + slack
        assert abs(zeta_solve(alpha, beta, gamma + 1e-6, a, b) - z) <= abs(b) / a * 1e-6 + slack
