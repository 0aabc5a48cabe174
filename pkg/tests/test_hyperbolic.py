#!/usr/bin/env python3
# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from src.core.errors import DomainError
from src.core.hyperbolic import (IDENTITY, HPoint, MoebiusMap, apply, compose, cosh_dist, dist, dist_from_u,
                                 hyperbolic_translation, invert, rotation_about_i)


def _random_points(rng, n):
    return [HPoint(float(x), float(y)) for x, y in zip(rng.uniform(-3, 3, n), rng.uniform(0.2, 4.0, n))]


def _random_map(rng):
    a, b, c = rng.uniform(-2, 2, 3)
    a = a if abs(a) > 0.3 else 0.3 + abs(a)
    return MoebiusMap(float(a), float(b), float(c), float((1.0 + b * c) / a))


def test_point_requires_upper_half_plane():
    with pytest.raises(DomainError):
        HPoint(0.0, 0.0)
    with pytest.raises(DomainError):
        HPoint(1.0, -2.0)
    with pytest.raises(DomainError):
        HPoint(float("nan"), 1.0)


def test_distance_axioms(rng):
    pts = _random_points(rng, 12)
    for z in pts:
        assert dist(z, z) == 0.0
    for z, w, v in zip(pts, pts[1:], pts[2:]):
        assert dist(z, w) == pytest.approx(dist(w, z), rel=1e-14)
        assert dist(z, v) <= dist(z, w) + dist(w, v) + 1e-12
        assert cosh_dist(z, w) == pytest.approx(math.cosh(dist(z, w)), rel=1e-12)


def test_distance_along_imaginary_axis():
    for length in (0.1, 1.0, 3.5):
        w = apply(hyperbolic_translation(length), HPoint(0.0, 1.0))
        assert w.x == pytest.approx(0.0, abs=1e-15)
        assert dist(HPoint(0.0, 1.0), w) == pytest.approx(length, rel=1e-13)


def test_small_distance_series_branch():
    u = np.array([1e-20, 1e-16, 1e-14])
    assert np.allclose(dist_from_u(u), np.sqrt(2.0 * u), rtol=1e-12)
    assert dist_from_u(0.0) == 0.0


def test_isometry_invariance(rng):
    pts = _random_points(rng, 10)
    for _ in range(5):
        m = _random_map(rng)
        for z, w in zip(pts, pts[1:]):
            assert dist(apply(m, z), apply(m, w)) == pytest.approx(dist(z, w), rel=1e-9, abs=1e-12)


def test_determinant_is_enforced():
    with pytest.raises(DomainError):
        MoebiusMap(2.0, 0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        MoebiusMap.from_entries([1.1, 0.0, 0.0, 1.0])
    g = MoebiusMap.from_entries([1.0 + 1e-10, 0.0, 0.0, 1.0])
    assert g.det() == pytest.approx(1.0, abs=1e-15)


def test_psl_sign_normalization():
    assert MoebiusMap(-1.0, 0.0, 0.0, -1.0) == IDENTITY
    assert hash(MoebiusMap(-1.0, 0.0, 0.0, -1.0)) == hash(IDENTITY)
    g = MoebiusMap(-2.0, 1.0, -1.0, 0.0)
    assert g.a > 0.0
    assert g == MoebiusMap(2.0, -1.0, 1.0, 0.0)


def test_inverse_and_composition(rng):
    for _ in range(5):
        g = _random_map(rng)
        assert compose(g, invert(g)).is_identity()
        assert (g @ invert(g)).is_identity()
    r = rotation_about_i(math.pi)
    assert compose(r, r).is_identity()


def test_rotation_fixes_i():
    for theta in (0.3, math.pi / 4, 2.0):
        w = apply(rotation_about_i(theta), HPoint(0.0, 1.0))
        assert w.x == pytest.approx(0.0, abs=1e-15)
        assert w.y == pytest.approx(1.0, rel=1e-15)
