#!/usr/bin/env python3
# -*- coding: utf-8 -*-
import numpy as np
import pytest

from src.utils import gpu_utils


def test_spectral_sums_cpu_values():
    lam_j = np.array([0.0, 2.0])
    mw = np.array([0.5, 1.0])
    lam = np.array([1.0])
    value = gpu_utils.spectral_sums(lam_j, mw, lam, "value")
    expected = 0.5 * 1.0 / (-1.0 * 1.0) + 1.0 * 3.0 / (1.0 * 5.0)
    assert value[0] == pytest.approx(expected, rel=1e-15)
    deriv = gpu_utils.spectral_sums(lam_j, mw, lam, "derivative")
    assert deriv[0] == pytest.approx(1.5, rel=1e-15)
    with pytest.raises(ValueError):
        gpu_utils.spectral_sums(lam_j, mw, lam, "curvature")


def test_gpu_request_without_cupy(monkeypatch):
    monkeypatch.setattr(gpu_utils, "CUPY_AVAILABLE", False)
    gpu_utils.set_gpu_enabled(True)
    try:
        assert gpu_utils._gpu_enabled is False
    finally:
        gpu_utils.set_gpu_enabled(False)


def test_device_failure_falls_back_to_numpy(monkeypatch):
    def broken(*args):
        raise RuntimeError("out of device memory")

    lam_j = np.array([0.0, 2.0, 5.0])
    mw = np.array([0.5, 1.0, 0.25])
    lam = np.array([1.0, 3.0])
    expected = gpu_utils.spectral_sums(lam_j, mw, lam, "value")
    monkeypatch.setattr(gpu_utils, "_gpu_enabled", True)
    monkeypatch.setattr(gpu_utils, "GPU_MIN_WORK", 1)
    monkeypatch.setattr(gpu_utils, "_device_sums", broken)
    assert np.array_equal(gpu_utils.spectral_sums(lam_j, mw, lam, "value"), expected)
    with pytest.raises(ValueError):
        gpu_utils.spectral_sums(lam_j, mw, lam, "curvature")
