import math

import numpy as np
import pytest

from hetsim.special import (ergodic_rate_of_sinr, exp_integral_e1,
                            invert_ergodic_rate, sinr_of_rate)

# frozen from adaptive quadrature of the defining integral
# (scipy.integrate.quad, epsrel 1e-13; estimated error < 1e-13 relative)
E1_QUAD_ORACLE = {1.0: 2.1938393439552023e-01, 10.0: 4.1569689296853255e-06}

# frozen from 200-step bisection against the quadrature-based forward map
GAMMA_FOR_RATE_3 = 10.839998729412


def test_e1_matches_quadrature_oracle():
    for z, ref in E1_QUAD_ORACLE.items():
        assert exp_integral_e1(z) == pytest.approx(ref, rel=1e-12)


def test_e1_small_argument_asymptote():
    z = 1e-8
    euler_gamma = 0.5772156649015329
    assert exp_integral_e1(z) + math.log(z) == pytest.approx(-euler_gamma, abs=1e-6)


def test_e1_rejects_nonpositive():
    with pytest.raises(ValueError):
        exp_integral_e1(0.0)
    with pytest.raises(ValueError):
        exp_integral_e1(-1.0)


def test_inversion_matches_bisection_oracle():
    assert invert_ergodic_rate(3.0) == pytest.approx(GAMMA_FOR_RATE_3, abs=1e-8)


def test_inversion_round_trip():
    for rate in (0.5, 1.0, 3.0, 6.0):
        g = invert_ergodic_rate(rate)
        assert ergodic_rate_of_sinr(g) == pytest.approx(rate, rel=1e-9)


def test_inversion_monotone_through_origin():
    rates = [1e-4, 1e-3, 1e-2, 0.1, 1.0]
    gammas = [invert_ergodic_rate(r) for r in rates]
    assert all(a < b for a, b in zip(gammas, gammas[1:]))
    assert gammas[0] < 1e-3
    assert invert_ergodic_rate(0.0) == 0.0


def test_deterministic_sinr_map():
    assert sinr_of_rate(1.5) == pytest.approx(2 ** 1.5 - 1, rel=1e-15)
    assert np.allclose(sinr_of_rate([1.0, 3.0]), [1.0, 7.0])


def test_ergodic_target_exceeds_deterministic():
    # Jensen: the mean SINR of a faded link must beat 2^r - 1 to average out
    for rate in (0.3, 1.5, 3.0):
        assert invert_ergodic_rate(rate) > sinr_of_rate(rate)
