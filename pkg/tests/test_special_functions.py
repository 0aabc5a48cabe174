#!/usr/bin/env python3
# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from src.core import special_functions
from src.core.errors import DomainError, NoZeroError, ResolutionError
from src.core.special_functions import (count_denominator_zeros, denom_zero, denominator, denominator_imag_series,
                                        denominator_v_derivative, locate_denominator_zero, psi, psi_prime,
                                        winding_count)
from tests.oracles import mp_psi, mp_psi_prime

SAMPLES = [0.5 + 0.0j, 0.5 + 0.3j, 0.5 + 5.0j, 0.5 - 40.0j, 2.5 - 3.0j, 1.3 + 0.1j, 7.0 + 120.0j]


@pytest.mark.parametrize("s", SAMPLES)
def test_psi_matches_mpmath(s):
    assert complex(psi(s)) == pytest.approx(mp_psi(s), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("s", SAMPLES)
def test_psi_prime_matches_mpmath(s):
    assert complex(psi_prime(s)) == pytest.approx(mp_psi_prime(s), rel=1e-12, abs=1e-15)


def test_real_arguments_stay_real():
    x = np.array([0.3, 1.0, 4.5])
    assert np.isrealobj(psi(x))
    assert np.isrealobj(psi_prime(x))
    assert psi(1.0) == pytest.approx(-np.euler_gamma / (2.0 * math.pi), rel=1e-14)
    assert psi_prime(1.0) == pytest.approx(math.pi / 12.0, rel=1e-14)


def test_gamma_poles_rejected():
    for s in (0.0, -1.0, -3.0):
        with pytest.raises(DomainError):
            psi(s)
        with pytest.raises(DomainError):
            psi_prime(s)


@pytest.mark.parametrize("m, beta", [(1, 10.0), (1, 1.0), (2, 3.0), (1, -1.0), (4, 0.25)])
def test_denom_zero_residual(m, beta):
    v = denom_zero(m, beta)
    x = 0.5 + v
    residual = 1.0 + m * beta * float(psi(x))
    assert abs(residual) <= 1e-12 * max(1.0, abs(m * beta * float(psi(x))))


def test_denom_zero_residual_random_pairs(rng):
    for _ in range(50):
        m = int(rng.integers(1, 7))
        beta = float(rng.choice([-1.0, 1.0]) * 10.0 ** rng.uniform(-1.0, 1.7))
        x = 0.5 + denom_zero(m, beta)
        assert x > 0.0
        residual = 1.0 + m * beta * float(psi(x))
        assert abs(residual) <= 1e-12 * max(1.0, abs(m * beta * float(psi(x))))


def test_denom_zero_rejects_inaccurate_root(monkeypatch):
    exact = special_functions.optimize.bisect

    def offset_bisect(f, a, b, **kwargs):
        return exact(f, a, b, **kwargs) * (1.0 + 1e-6)

    monkeypatch.setattr(special_functions.optimize, "bisect", offset_bisect)
    with pytest.raises(ResolutionError) as info:
        denom_zero(1, 10.0)
    assert abs(info.value.context["residual"]) > 1e-12


def test_denom_zero_sign():
    assert 0.3 < denom_zero(1, 10.0) < 0.7
    assert denom_zero(1, 1.0) < 0.0
    assert denom_zero(1, -1.0) > 0.0
    with pytest.raises(NoZeroError):
        denom_zero(1, 0.0)


def test_v_derivative_sign_follows_beta():
    assert denominator_v_derivative(1, 2.0, 0.3) > 0.0
    assert denominator_v_derivative(1, -2.0, 0.3) < 0.0


def test_imag_series_matches_digamma():
    for rho in (3.0 - 1.0j, -0.7 - 0.2j, 12.0 + 0.3j):
        direct = complex(denominator(rho, 2, 1.5)).imag
        series = denominator_imag_series(rho, 2, 1.5)
        assert series == pytest.approx(direct, rel=1e-9)
    with pytest.raises(DomainError):
        denominator_imag_series(1.0 + 0.6j, 1, 1.0)


def test_winding_count_polynomials():
    square = [complex(-1, -1), complex(1, -1), complex(1, 1), complex(-1, 1)]
    assert winding_count(lambda z: z, square) == 1
    assert winding_count(lambda z: z ** 2 * (z - 0.5j), square) == 3
    assert winding_count(lambda z: z - 3.0, square) == 0


@pytest.mark.parametrize("m, beta", [(1, 10.0), (1, 1.0), (1, -5.0)])
def test_single_zero_in_lower_region(m, beta):
    """Im ρ < 1/2 内恰有一个零点, 位于 −iv_β"""
    v = denom_zero(m, beta)
    depth = max(2.0, v + 1.0)
    assert count_denominator_zeros(m, beta, half_width=10.0, depth=depth) == 1
    rho = locate_denominator_zero(m, beta, half_width=10.0, depth=depth)
    assert rho.real == pytest.approx(0.0, abs=1e-10)
    assert rho.imag == pytest.approx(-v, abs=1e-10)
