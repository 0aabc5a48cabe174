#!/usr/bin/env python3
# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from src.core.errors import ConstructionError, DomainError
from src.core.test_functions import (AppendixParams, TestFunction, appendix_h_eps, appendix_local_estimates,
                                     appendix_onset_height, appendix_params_from_heights, compbound_diagnostic,
                                     dyadic_heights, make_cauchy_h, make_constant_h, membership_check)


def test_cauchy_values():
    h = make_cauchy_h(3.0, power=2)
    assert complex(h(0.0)) == pytest.approx(3.0 ** -4)
    rho = np.array([0.7 - 1.2j, 4.0 + 0.3j, -2.0 - 2.5j])
    assert np.allclose(h(rho), h(-rho), rtol=1e-14)
    step = 1e-6
    fd = (h(rho + step) - h(rho - step)) / (2.0 * step)
    assert np.allclose(h.prime(rho), fd, rtol=1e-7)
    assert h.sigma < 3.0


def test_cauchy_parameter_checks():
    with pytest.raises(DomainError):
        make_cauchy_h(3.0, power=1)
    with pytest.raises(DomainError):
        make_cauchy_h(0.0)
    with pytest.raises(DomainError):
        make_cauchy_h(2.0, sigma_target=2.5)


def test_membership_passes_inside_strip():
    report = membership_check(make_cauchy_h(3.0, power=2), sigma=2.5, delta=1.0)
    assert report.passed, report.details
    assert all(report.checks.values())


def test_membership_fails_past_pole():
    report = membership_check(make_cauchy_h(3.0, power=2), sigma=3.5, delta=1.0)
    assert not report.passed
    assert report.checks["cauchy_integral"] is False


def test_membership_detects_odd_function():
    odd = TestFunction(lambda r: r / (r * r + 9.0) ** 2,
                       lambda r: 1.0 / (r * r + 9.0) ** 2 - 4.0 * r * r / (r * r + 9.0) ** 3,
                       sigma=2.5, delta=1.0, tag="odd")
    report = membership_check(odd, sigma=2.5, delta=1.0)
    assert not report.passed
    assert report.checks["evenness"] is False


def test_constant_is_exempt():
    h = make_constant_h(2.0)
    assert membership_check(h, sigma=5.0, delta=1.0).passed
    assert np.all(h(np.array([1.0, 2.0 - 1.0j])) == 2.0)
    assert np.all(h.prime(np.array([1.0, 2.0 - 1.0j])) == 0.0)


def test_cutoff_envelope():
    h = make_cauchy_h(3.0, power=4)
    X = h.cutoff(1.0)
    samples = np.array([X, 3.0 * X]) - 1.0j
    assert np.all(np.abs(samples.real) * (np.abs(h(samples)) + np.abs(h.prime(samples))) < 1e-13)
    assert X < 1e3


def test_dyadic_heights_are_valid():
    heights, exponents = dyadic_heights(3, 48, 0.9)
    assert exponents == (48, 52, 56)
    params = AppendixParams(0.9, 1.0, 2.0, heights, exponents)
    assert params.omega == pytest.approx(0.09)
    assert np.all(params.coefficients > 0.0)
    with pytest.raises(ConstructionError):
        dyadic_heights(3, 48, 0.9, stride=3)


def test_appendix_constraints():
    with pytest.raises(ConstructionError):
        AppendixParams(0.5, 1.0, 2.0, (1.2 * 2 ** 3, 1.2 * 2 ** 5), (4, 6))
    with pytest.raises(ConstructionError):
        AppendixParams(0.5, 1.0, 2.0, (100.0,), (4,))
    with pytest.raises(ConstructionError):
        AppendixParams(1.5, 1.0, 2.0, (9.6,), (4,))
    with pytest.raises(ConstructionError):
        AppendixParams(0.5, 1.0, 1.0, (9.6,), (4,))


def test_params_from_safe_heights():
    params = appendix_params_from_heights([0.5, 3.0, 5.0, 40.0, 100.0, 2000.0], 0.5, 1.0)
    assert params.exponents == (2, 6, 11)
    assert params.heights == (3.0, 40.0, 2000.0)
    assert params.sigma0 == 2.0
    with pytest.raises(ConstructionError):
        appendix_params_from_heights([0.5], 0.5, 1.0)


def test_h_eps_is_even():
    params = appendix_params_from_heights([3.0, 40.0, 2000.0], 0.5, 1.0)
    h = appendix_h_eps(params)
    rho = np.array([3.5 - 0.5j, 41.0 + 0.2j, -1999.0 - 0.9j, 0.1j])
    assert np.allclose(h(rho), h(-rho), rtol=1e-10, atol=0.0)
    assert h.params["tail"] > 0.0


def test_local_estimates_beyond_onset():
    heights, exponents = dyadic_heights(3, 48, 0.9)
    params = AppendixParams(0.9, 1.0, 2.0, heights, exponents)
    assert appendix_onset_height(0.9, 1.0, 2.0) < heights[0]
    estimates = appendix_local_estimates(params)
    assert [e.exponent for e in estimates] == list(exponents)
    for e in estimates:
        assert e.lower_constant > 0.0
        assert e.far_ratio <= 1.0
        assert e.suppression_ratio <= 1.0


def test_compbound_rows(small_weyl_spectrum, spectral_ctx):
    rows = compbound_diagnostic(spectral_ctx, small_weyl_spectrum, [2.3, 3.1, 3.9], sigma=2.0)
    assert len(rows) == 3
    for row in rows:
        assert row.skipped or (math.isfinite(row.integral) and row.ratio > 0.0)
    with pytest.raises(DomainError):
        compbound_diagnostic(spectral_ctx, small_weyl_spectrum, [2.3], sigma=0.5)
