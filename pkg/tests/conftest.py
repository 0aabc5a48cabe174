#!/usr/bin/env python3
# -*- coding: utf-8 -*-
import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from src.core.fuchsian_orbits import OrbitSpectrum
from src.core.spectral_function import CouplingContext, Spectrum, synthetic_weyl_spectrum

DATA_DIR = os.path.join(ROOT, "data")


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def toy_spectrum():
    """单本征值有限模型: λ₀ = 0, w₀ = 0.5"""
    return Spectrum(np.array([0.0]), np.array([1]), np.array([0.5]), 1.0, complete=True)


@pytest.fixture
def weyl_spectrum():
    return synthetic_weyl_spectrum(4.0 * np.pi, 200, seed=7)


@pytest.fixture
def small_weyl_spectrum():
    return synthetic_weyl_spectrum(4.0 * np.pi, 20, seed=3)


@pytest.fixture
def cyclic_orbit():
    """单个长度为 1 的双曲生成元, z₀ 在轴上: 长度 n, 重数 2"""
    return OrbitSpectrum.from_pairs([(float(n), 2) for n in range(1, 7)], radius=6.0, label="cyclic")


@pytest.fixture
def single_length_orbit():
    return OrbitSpectrum.from_pairs([(2.0, 1)], radius=2.0, label="single")


@pytest.fixture
def spectral_ctx():
    return CouplingContext(alpha=2.0, beta=2.0, c0=0.0, m=1)
