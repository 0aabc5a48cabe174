#!/usr/bin/env python3
# -*- coding: utf-8 -*-
import math
import os

import numpy as np
import pytest
from scipy import integrate

from src.core.constants import TOL
from src.core.data_manager import load_group
from src.core.eigen_solver import safe_heights, solve_new_eigs
from src.core.errors import ContourCollisionError, DivergenceRiskError, DomainError
from src.core.fuchsian_orbits import OrbitSpectrum, enumerate_orbit
from src.core.green_functions import kernel
from src.core.special_functions import denom_zero, psi_prime
from src.core.spectral_function import CouplingContext, synthetic_weyl_spectrum
from src.core.test_functions import make_cauchy_h, make_constant_h
from src.core.trace_formula import (TraceReport, _axis_weight_bound, _multisets, contour_series_ratio,
                                    diffractive_line_terms, diffractive_sum, geometric_line, identity_term, line_rule,
                                    pretrace_rhs, select_nu, select_sigma, series_ratio_bound, spectral_side,
                                    transform_g, transform_g_many, truncated_check)
from tests.oracles import diffractive_k1_oracle


@pytest.fixture
def h4():
    return make_cauchy_h(3.0, power=4)


@pytest.fixture
def ctx2():
    return CouplingContext.from_beta(2.0, m=1)


@pytest.fixture
def ctx10():
    return CouplingContext.from_beta(10.0, m=1)


def test_line_rule_is_mirrored():
    rhos, w, contour = line_rule(1.5, 40.0, step=0.5, order=8, uniform_to=10.0)
    assert np.allclose(rhos.imag, -1.5)
    assert np.array_equal(rhos.real, -rhos.real[::-1])
    assert np.array_equal(w, w[::-1])
    assert math.fsum(w) == pytest.approx(80.0, rel=1e-13)
    assert contour.nodes == rhos.size


def test_transform_is_height_independent(h4, ctx2):
    """β = 2 时 v_β < 0, Im ρ = −1 与 −2 之间没有零点"""
    ts = np.array([0.7, 1.5, 3.0])
    upper = transform_g_many(h4, ctx2, 1, 1.0, ts)
    lower = transform_g_many(h4, ctx2, 1, 2.0, ts)
    assert np.allclose(upper, lower, rtol=1e-7, atol=1e-13)
    assert np.allclose(transform_g_many(h4, ctx2, 2, 1.0, ts), transform_g_many(h4, ctx2, 2, 2.0, ts),
                       rtol=1e-7, atol=1e-13)


def test_transform_checks(h4, ctx2):
    assert np.all(transform_g_many(make_constant_h(), ctx2, 1, 1.0, [1.0, 2.0]) == 0.0)
    with pytest.raises(DomainError):
        transform_g(h4, ctx2, 0, 1.0, 1.0)
    with pytest.raises(DomainError):
        transform_g(h4, ctx2, 1, 1.0, 0.0)


def test_transform_residue_across_zero(h4, ctx10):
    """跨过 −iv_β 时 g_{β,1} 的差等于该处的留数"""
    v = denom_zero(1, 10.0)
    t = 2.0
    above = transform_g(h4, ctx10, 1, 0.2, t)
    below = transform_g(h4, ctx10, 1, 0.8, t)
    residue = complex(h4.prime(np.array([-1j * v]))[0]) * math.exp(-v * t) / (1j * 10.0 * float(psi_prime(0.5 + v)))
    assert above - below == pytest.approx(residue, rel=1e-7, abs=1e-13)


def test_identity_term_residue(h4, ctx10):
    v = denom_zero(1, 10.0)
    above = identity_term(h4, ctx10, 0.2)
    below = identity_term(h4, ctx10, 0.8)
    expected = -complex(h4(np.array([-1j * v]))[0]).real
    assert above.value - below.value == pytest.approx(expected, rel=1e-8, abs=1e-13)
    assert above.tail >= 0.0


def test_identity_term_rejects_constant(ctx2):
    with pytest.raises(DomainError):
        identity_term(make_constant_h(), ctx2, 0.0)


def test_contour_collision(h4, ctx10):
    v = denom_zero(1, 10.0)
    with pytest.raises(ContourCollisionError):
        identity_term(h4, ctx10, v)
    with pytest.raises(ContourCollisionError):
        transform_g(h4, ctx10, 1, v, 1.0)


def test_contour_tolerance_override(h4, ctx10):
    nu = select_nu(ctx10, 2.0)
    identity_term(h4, ctx10, nu)
    wide = TOL.updated({"contour_collision_tol": 1.0})
    with pytest.raises(ContourCollisionError):
        identity_term(h4, ctx10, nu, tolerances=wide)
    with pytest.raises(ContourCollisionError):
        diffractive_sum(h4, ctx10, OrbitSpectrum.from_pairs([(2.0, 1)]), 1, nu, 2.0, ratio=0.5, max_workers=1,
                        tolerances=wide)


def test_select_nu(ctx2, ctx10):
    v = denom_zero(1, 10.0)
    assert select_nu(ctx10, 2.0) == pytest.approx(v + 0.1)
    assert select_nu(ctx10, v + 0.1) == pytest.approx(v + 0.05)
    assert select_nu(ctx2, 2.0) == 0.0


def test_half_line_pretrace(h4, ctx2, cyclic_orbit):
    line = geometric_line(h4, ctx2, cyclic_orbit, 2.0)
    full = pretrace_rhs(h4, ctx2, cyclic_orbit, 2.0, line=line)
    half = pretrace_rhs(h4, ctx2, cyclic_orbit, 2.0, line=line, half_line=True)
    assert half.value == pytest.approx(full.value, rel=1e-9, abs=1e-13)


@pytest.mark.parametrize("beta, k_max", [(2.0, 8), (10.0, 12)])
def test_pretrace_decomposition(h4, cyclic_orbit, beta, k_max):
    """pretrace = 恒等项 + Σ_k 衍射项, 要求 ν 与 σ 之间没有分母零点"""
    ctx = CouplingContext.from_beta(beta, m=1)
    sigma = 2.0
    assert np.max(contour_series_ratio(ctx, cyclic_orbit, sigma)) < 0.25
    line = geometric_line(h4, ctx, cyclic_orbit, sigma)
    pretrace = pretrace_rhs(h4, ctx, cyclic_orbit, sigma, line=line)
    ident = identity_term(h4, ctx, select_nu(ctx, sigma))
    terms = diffractive_line_terms(h4, ctx, cyclic_orbit, k_max, sigma, line=line)
    total = ident.value + math.fsum(t.value for t in terms)
    assert pretrace.value == pytest.approx(total, abs=1e-9)


def test_nested_sum_matches_line_terms(h4, ctx2, cyclic_orbit):
    sigma = 2.0
    nested = diffractive_sum(h4, ctx2, cyclic_orbit, 2, select_nu(ctx2, sigma), sigma, ratio=0.5, max_workers=1)
    line = diffractive_line_terms(h4, ctx2, cyclic_orbit, 2, sigma)
    for got, want in zip(nested.values, line):
        assert got == pytest.approx(want.value, rel=1e-6)
    assert nested.tuple_counts == [6, 21]
    assert nested.spline_error < 1e-6
    assert nested.total_tail > 0.0


def test_pruned_multisets_enter_the_tail():
    orbit = OrbitSpectrum.from_pairs([(1.0, 2), (40.0, 1)], radius=40.0)
    kept, pruned_mass = _multisets(orbit, 2, 2.0)
    assert kept == [((1.0, 1.0), 4.0)]
    short, long_ = _axis_weight_bound(1.0, 2.0), _axis_weight_bound(40.0, 2.0)
    expected = 4.0 * math.exp(-82.0) * short * long_ + math.exp(-160.0) * long_ * long_
    assert pruned_mass > 0.0
    assert pruned_mass == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("length", [0.5, 1.0, 3.0, 40.0])
def test_axis_weight_bound_dominates_kernel(length):
    sigma = 2.0
    integral, _ = integrate.quad(lambda u: float(kernel(np.array([u]), length)[0]) * math.exp(-sigma * u * u),
                                 0.0, np.inf)
    assert 0.0 < integral <= _axis_weight_bound(length, sigma)


@pytest.mark.slow
@pytest.mark.parametrize("k_max", [1, 2, 3, 4])
def test_nested_pipeline_within_reported_tails(h4, ctx2, cyclic_orbit, k_max):
    """|pretrace − 恒等项 − Σ_k 衍射项| 不超过各部分报告的尾项之和"""
    sigma = 2.0
    assert np.max(contour_series_ratio(ctx2, cyclic_orbit, sigma)) < 0.25
    nu = select_nu(ctx2, sigma)
    pretrace = pretrace_rhs(h4, ctx2, cyclic_orbit, sigma)
    ident = identity_term(h4, ctx2, nu)
    nested = diffractive_sum(h4, ctx2, cyclic_orbit, k_max, nu, sigma, ratio=0.5, max_workers=1)
    gap = abs(pretrace.value - ident.value - math.fsum(nested.values))
    assert gap <= pretrace.tail + ident.tail + nested.total_tail


@pytest.mark.slow
def test_nested_pipeline_gap_shrinks(h4, ctx2, cyclic_orbit):
    sigma = 2.0
    nu = select_nu(ctx2, sigma)
    target = pretrace_rhs(h4, ctx2, cyclic_orbit, sigma).value - identity_term(h4, ctx2, nu).value
    nested = diffractive_sum(h4, ctx2, cyclic_orbit, 4, nu, sigma, ratio=0.5, max_workers=1)
    gaps = np.abs(target - np.cumsum(nested.values))
    # 嵌套求积的相对精度约 1e-6
    slack = 1e-5 * abs(nested.values[0])
    assert np.all(np.diff(gaps) <= slack)
    assert gaps[1] < gaps[0]


@pytest.mark.slow
def test_bolza_geometric_self_consistency(h4, data_dir):
    group = load_group(os.path.join(data_dir, "groups", "bolza.json"))
    orbit = enumerate_orbit(group, 4.0)
    ctx = CouplingContext.from_beta(2.0, m=orbit.stabilizer_order)
    sigma = 2.0
    assert np.max(contour_series_ratio(ctx, orbit, sigma)) < 0.25
    nu = select_nu(ctx, sigma)
    line = geometric_line(h4, ctx, orbit, sigma)
    pretrace = pretrace_rhs(h4, ctx, orbit, sigma, line=line)
    ident = identity_term(h4, ctx, nu)
    terms = diffractive_line_terms(h4, ctx, orbit, 8, sigma, line=line)
    assert pretrace.value == pytest.approx(ident.value + math.fsum(t.value for t in terms), abs=1e-9)
    nested = diffractive_sum(h4, ctx, orbit, 2, nu, sigma, ratio=0.5, max_workers=1)
    for got, want in zip(nested.values, terms):
        assert got == pytest.approx(want.value, rel=1e-6, abs=1e-12)
    gap = abs(pretrace.value - ident.value - math.fsum(nested.values))
    assert gap <= pretrace.tail + ident.tail + nested.total_tail



@pytest.mark.slow
def test_first_diffractive_term_against_quadrature(h4, ctx2, single_length_orbit):
    nested = diffractive_sum(h4, ctx2, single_length_orbit, 1, 0.0, 2.0, ratio=0.5, max_workers=1)
    expected = diffractive_k1_oracle(h4, 1, 2.0, 2.0, 1, height=1.0)
    assert nested.values[0] == pytest.approx(expected, rel=1e-7)


def test_divergence_guard(h4, ctx2, cyclic_orbit):
    with pytest.raises(DivergenceRiskError):
        diffractive_sum(h4, ctx2, cyclic_orbit, 2, 0.0, 2.0, ratio=1.5, max_workers=1)
    with pytest.raises(DomainError):
        diffractive_sum(h4, ctx2, cyclic_orbit, 0, 0.0, 2.0)


def test_select_sigma(ctx2, cyclic_orbit):
    sigma = select_sigma(ctx2, cyclic_orbit)
    assert sigma > 0.5
    assert series_ratio_bound(ctx2, cyclic_orbit, sigma) < 0.9
    bound = series_ratio_bound(ctx2, cyclic_orbit, 2.0)
    assert np.max(contour_series_ratio(ctx2, cyclic_orbit, 2.0)) <= bound


def test_toy_spectral_side(toy_spectrum, spectral_ctx):
    h = make_cauchy_h(3.0, power=4)
    perturbed = solve_new_eigs(spectral_ctx, toy_spectrum, lambda_max=10.0)
    side = spectral_side(h, toy_spectrum, perturbed)
    expected = complex(h(np.array([math.sqrt(0.75)]))[0]).real - complex(h(np.array([0.5j]))[0]).real
    assert side.value == pytest.approx(expected, rel=1e-10)
    assert side.tail == 0.0


def test_expanded_spectral_side_agrees():
    spec = synthetic_weyl_spectrum(4.0 * math.pi, 120, seed=11, zero_weight_fraction=0.2, multiplicity_fraction=0.2)
    ctx = CouplingContext(alpha=1.0, beta=1.0, c0=0.0, m=1)
    perturbed = solve_new_eigs(ctx, spec, spec.truncation / 4.0)
    assert perturbed.inherited
    h = make_cauchy_h(10.0, power=4)
    paired = spectral_side(h, spec, perturbed)
    expanded = spectral_side(h, spec, perturbed, expanded=True)
    assert expanded.value == pytest.approx(paired.value, rel=1e-9, abs=1e-16)
    assert paired.tail > 0.0


def test_truncated_check_on_toy(toy_spectrum, spectral_ctx):
    h = make_cauchy_h(3.0, power=4)
    perturbed = solve_new_eigs(spectral_ctx, toy_spectrum, lambda_max=10.0)
    check = truncated_check(h, spectral_ctx, toy_spectrum, perturbed, T=2.0, sigma=1.0)
    assert check.zeros_inside == 2 and check.poles_inside == 2
    assert check.gap <= 1e-6
    with pytest.raises(DomainError):
        truncated_check(h, spectral_ctx, toy_spectrum, perturbed, T=4.0, sigma=1.0)


def test_truncated_check_at_safe_height(weyl_spectrum):
    h = make_cauchy_h(3.0, power=4)
    ctx = CouplingContext(alpha=1.0, beta=1.0, c0=0.0, m=1)
    perturbed = solve_new_eigs(ctx, weyl_spectrum, weyl_spectrum.truncation / 4.0)
    heights = safe_heights(weyl_spectrum, perturbed, count=10)
    usable = [T for T in heights.T_values if 0.25 + T * T < perturbed.lambda_max]
    assert usable
    check = truncated_check(h, ctx, weyl_spectrum, perturbed, T=usable[0], sigma=1.0)
    assert check.gap <= 1e-6 * max(1.0, abs(check.lhs))


@pytest.mark.slow
@pytest.mark.parametrize("index", range(25))
def test_truncated_check_on_random_spectra(rng, index):
    seed = int(rng.integers(0, 2 ** 31, size=25)[index])
    spec = synthetic_weyl_spectrum(4.0 * math.pi, 200, seed=seed)
    h = make_cauchy_h(3.0, power=4)
    ctx = CouplingContext(alpha=1.0, beta=1.0, c0=0.0, m=1)
    perturbed = solve_new_eigs(ctx, spec, spec.truncation / 4.0)
    heights = safe_heights(spec, perturbed, count=10)
    usable = [T for T in heights.T_values if 0.25 + T * T < perturbed.lambda_max][:3]
    assert len(usable) == 3
    for T in usable:
        check = truncated_check(h, ctx, spec, perturbed, T=T, sigma=1.0)
        assert check.gap <= 1e-6 * max(1.0, abs(check.lhs))



def test_report_serialises():
    report = TraceReport(mode="trace-geometric", alpha=2.0, beta=2.0, c0=0.0, nu=0.0, sigma=2.0, k_max=3,
                         diffractive_terms=[0.1, 0.01, 0.001], tails={"orbit": 1e-12})
    data = report.to_dict()
    assert data["mode"] == "trace-geometric"
    assert data["diffractive_terms"] == [0.1, 0.01, 0.001]
    assert data["converged"] is False
