#!/usr/bin/env python3
# -*- coding: utf-8 -*-
import logging
from types import ModuleType
from typing import Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# 点数 × 谱长度超过该值时才值得搬运到 GPU
GPU_MIN_WORK = 2_000_000


def _load_cupy() -> Tuple[Optional[ModuleType], int]:
    """返回 (cupy 模块, CUDA 设备数); 未安装或驱动不可用时为 (None, 0)"""
    try:
        import cupy
    except ImportError:
        return None, 0
    try:
        return cupy, int(cupy.cuda.runtime.getDeviceCount())
    except Exception as e:
        logger.warning(f"CUDA 运行时不可用, 谱求和只在 CPU 上进行: {e}")
        return None, 0


cp, DEVICE_COUNT = _load_cupy()
CUPY_AVAILABLE = cp is not None and DEVICE_COUNT > 0
_gpu_enabled = False


def set_gpu_enabled(enabled: bool):
    global _gpu_enabled
    _gpu_enabled = bool(enabled) and CUPY_AVAILABLE
    if enabled and not _gpu_enabled:
        logger.warning("请求启用 GPU 谱求和, 但没有可用的 CuPy/CUDA 设备, 继续使用 numpy。")
    elif _gpu_enabled:
        logger.info(f"谱求和工作量 ≥ {GPU_MIN_WORK} 时在 GPU 上计算 ({DEVICE_COUNT} 个 CUDA 设备)。")


def _kernel(xp, lam_j, mw, lam, kind: str):
    diff = lam_j[None, :] - lam[:, None]
    if kind == "value":
        terms = mw[None, :] * (1.0 + lam_j[None, :] * lam[:, None]) / (diff * (lam_j[None, :] ** 2 + 1.0))
    elif kind == "derivative":
        terms = mw[None, :] / (diff * diff)
    else:
        raise ValueError(f"未知的谱求和类型: {kind}")
    return terms.sum(axis=1)


def _device_sums(lam_j: np.ndarray, mw: np.ndarray, lam: np.ndarray, kind: str) -> np.ndarray:
    try:
        return cp.asnumpy(_kernel(cp, cp.asarray(lam_j), cp.asarray(mw), cp.asarray(lam), kind))
    finally:
        cp.get_default_memory_pool().free_all_blocks()


def spectral_sums(lam_j: np.ndarray, mw: np.ndarray, lam: np.ndarray, kind: str = "value") -> np.ndarray:
    """
    Σ_j mw_j·(1 + λ_jλ)/((λ_j − λ)(λ_j² + 1)) (kind="value") 或 Σ_j mw_j/(λ_j − λ)² (kind="derivative")。
    工作量足够大且启用 GPU 时在 GPU 上计算, 否则使用 numpy, 两者语义一致。
    """
    lam = np.atleast_1d(lam)
    if kind not in ("value", "derivative"):
        raise ValueError(f"未知的谱求和类型: {kind}")
    if _gpu_enabled and lam.size * lam_j.size >= GPU_MIN_WORK:
        try:
            return _device_sums(lam_j, mw, lam, kind)
        except Exception as e:
            logger.error(f"GPU 谱求和失败 ({lam.size} × {lam_j.size}), 改用 numpy: {e}", exc_info=True)
    return _kernel(np, lam_j, mw, lam, kind)
