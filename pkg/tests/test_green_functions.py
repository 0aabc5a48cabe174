#!/usr/bin/env python3
# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from src.core.errors import DomainError
from src.core.fuchsian_orbits import OrbitSpectrum
from src.core.green_functions import (fit_sigma_envelope, free_green, free_green_many, free_green_romberg,
                                      green_majorant, green_sum, green_sum_line, kernel)
from tests.oracles import legendre_green_s2


def test_legendre_value_at_log2():
    assert legendre_green_s2(math.log(2.0)) == pytest.approx(-0.0594, abs=5e-5)
    assert free_green(-1.5j, math.log(2.0)) == pytest.approx(legendre_green_s2(math.log(2.0)), rel=1e-8)


@pytest.mark.parametrize("d", [0.25, 0.5, 1.0, 2.0, 4.0])
def test_integral_representation_matches_q1(d):
    value = free_green(-1.5j, d)
    assert abs(value.imag) < 1e-14
    assert value.real == pytest.approx(legendre_green_s2(d), rel=1e-8)


def test_romberg_scheme_agrees(rng):
    rhos = rng.uniform(-6.0, 6.0, 5) - 1j * rng.uniform(0.6, 3.0, 5)
    for d in (0.3, 1.0, 2.5):
        batch = free_green_many(rhos, d)
        for rho, value in zip(rhos, batch):
            assert free_green_romberg(rho, d) == pytest.approx(complex(value), rel=1e-8, abs=1e-12)


def test_conjugate_symmetry():
    rho = 2.3 - 1.1j
    assert free_green(-np.conj(rho), 1.2) == pytest.approx(np.conj(free_green(rho, 1.2)), rel=1e-12, abs=1e-15)


def test_magnitude_decreases_with_distance():
    ds = np.linspace(0.2, 5.0, 25)
    values = np.array([abs(free_green(-1.2j, d)) for d in ds])
    assert np.all(np.diff(values) < 0.0)


def test_domain_checks():
    with pytest.raises(DomainError):
        free_green(1.0 - 0.2j, 1.0)
    with pytest.raises(DomainError):
        free_green(-1.5j, 0.0)
    with pytest.raises(DomainError):
        green_sum(OrbitSpectrum.from_pairs([(1.0, 2)]), 0.9 + 0.0j)


def test_kernel_endpoint_limit():
    d = 1.5
    assert kernel(np.array([0.0]), d)[0] == pytest.approx(2.0 / math.sqrt(math.sinh(d)), rel=1e-12)
    u = np.array([0.3, 1.1, 2.0])
    direct = 2.0 * u / np.sqrt(np.cosh(d + u * u) - np.cosh(d))
    assert np.allclose(kernel(u, d), direct, rtol=1e-12)


def test_single_length_sum(single_length_orbit):
    s = 2.0 + 0.5j
    rho = -1j * (s - 0.5)
    gs = green_sum(single_length_orbit, s)
    assert gs.value == pytest.approx(free_green(rho, 2.0), rel=1e-13)
    doubled = OrbitSpectrum.from_pairs([(2.0, 2)], radius=2.0)
    assert green_sum(doubled, s).value == pytest.approx(2.0 * free_green(rho, 2.0), rel=1e-13)


def test_sum_matches_q1_closed_form(cyclic_orbit):
    gs = green_sum(cyclic_orbit, 2.0)
    expected = sum(2.0 * legendre_green_s2(float(n)) for n in range(1, 7))
    assert gs.value.real == pytest.approx(expected, rel=1e-8)
    assert gs.tail > 0.0


def test_tail_covers_longer_orbit():
    """σ = 2: R = 10 与 R = 20 的和之差不超过 R = 10 时给出的尾项"""
    short = OrbitSpectrum.from_pairs([(float(n), 2) for n in range(1, 11)], radius=10.0)
    long = OrbitSpectrum.from_pairs([(float(n), 2) for n in range(1, 21)], radius=20.0)
    s = 2.5 + 0.7j
    a, b = green_sum(short, s), green_sum(long, s)
    assert abs(a.value - b.value) <= a.tail


def test_line_sum_and_majorant(cyclic_orbit):
    rhos = np.array([0.0, 1.5, -4.0]) - 1.5j
    values, tail = green_sum_line(cyclic_orbit, rhos)
    for rho, value in zip(rhos, values):
        assert value == pytest.approx(green_sum(cyclic_orbit, 0.5 + 1j * rho).value, rel=1e-9)
    assert math.isfinite(tail)
    majorant = green_majorant(cyclic_orbit, 1.5)
    assert majorant == pytest.approx(-values[0].real, rel=1e-9)
    assert np.all(np.abs(values) <= majorant * (1.0 + 1e-9))


def test_sigma_envelope(cyclic_orbit):
    C, sigmas, majorants = fit_sigma_envelope(cyclic_orbit)
    assert C > 0.0
    assert np.all(majorants <= C / np.sqrt(sigmas) * (1.0 + 1e-12))
    assert np.all(np.diff(majorants) < 0.0)
    empty = OrbitSpectrum.from_pairs([], radius=1.0)
    assert fit_sigma_envelope(empty)[0] == 0.0
