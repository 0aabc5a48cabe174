#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
自由双曲格林函数的积分表示与轨道上的格林求和

G_{1/2+iρ}(d) = −(1/(2π√2)) ∫_d^∞ e^{−iρt}/√(cosh t − cosh d) dt,  Im ρ < −1/2

代换 t = d + u² 后 cosh t − cosh d = 2 sinh(d + u²/2) sinh(u²/2), 端点奇性消失, 被积函数关于 u 解析且为偶函数。
"""
import logging
import math
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import integrate

from src.core.constants import EXP_CUTOFF, GREEN_PREFACTOR, TOL
from src.core.errors import DomainError
from src.core.fuchsian_orbits import OrbitSpectrum, orbit_tail_bound
from src.core.workers import parallel_map

logger = logging.getLogger(__name__)
_MODULE = "green_functions"
_LOG2 = math.log(2.0)


class GreenSum(NamedTuple):
    value: complex
    tail: float


def _log_sinh(y: np.ndarray) -> np.ndarray:
    return y - _LOG2 + np.log1p(-np.exp(-2.0 * y))


def _log_x_over_sinh(x: np.ndarray) -> np.ndarray:
    small = x < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, -x * x / 6.0, np.log(safe) - _log_sinh(safe))


def log_kernel(u: np.ndarray, d: float) -> np.ndarray:
    """log of 2u/√(cosh(d+u²) − cosh d), 即代换后的权函数的对数"""
    x = 0.5 * np.asarray(u, dtype=float) ** 2
    return _LOG2 + 0.5 * _log_x_over_sinh(x) - 0.5 * _log_sinh(d + x)


def kernel(u: np.ndarray, d: float) -> np.ndarray:
    return np.exp(log_kernel(u, d))


def substitution_cutoff(decay: float) -> float:
    """u 轴截断点 U, 使 e^{−decay·U²} 低于 1e−16 量级"""
    return math.sqrt((EXP_CUTOFF + 5.0) / decay)


def _validate(rhos: np.ndarray, d: float, margin: float) -> float:
    if not (d > 0.0) or not math.isfinite(d):
        raise DomainError("距离 d 必须为正", _MODULE, {"d": d})
    worst = float(np.max(rhos.imag))
    if worst > -0.5 - margin:
        raise DomainError("积分表示要求 Im ρ < −1/2 − margin", _MODULE, {"im_rho": worst, "margin": margin})
    return -(worst + 0.5)


def free_green_many(rhos, d: float, epsabs: float = 1e-13, epsrel: float = 1e-11,
                    margin: float = TOL.im_rho_margin) -> np.ndarray:
    """对一组 ρ 同时计算 G_{1/2+iρ}(d), 自适应 Gauss–Kronrod (quad_vec)"""
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    decay = _validate(rhos, d, margin)
    U = substitution_cutoff(decay)
    n = rhos.size

    def integrand(u):
        phase = np.exp(log_kernel(u, d) - 1j * rhos * (d + u * u))
        return np.concatenate([phase.real, phase.imag])

    val, _ = integrate.quad_vec(integrand, 0.0, U, epsabs=epsabs, epsrel=epsrel, norm="max", limit=20000)
    return GREEN_PREFACTOR * (val[:n] + 1j * val[n:])


def free_green(rho: complex, d: float, **kwargs) -> complex:
    return complex(free_green_many([rho], d, **kwargs)[0])


def free_green_romberg(rho: complex, d: float, k: int = 15, margin: float = TOL.im_rho_margin) -> complex:
    """独立格式: 代换轴上的梯形公式加 Richardson 外推 (Romberg)"""
    rhos = np.atleast_1d(np.asarray(rho, dtype=complex))
    decay = _validate(rhos, d, margin)
    U = substitution_cutoff(decay)
    u = np.linspace(0.0, U, 2 ** k + 1)
    values = np.exp(log_kernel(u, d) - 1j * rhos[0] * (d + u * u))
    dx = u[1] - u[0]
    return GREEN_PREFACTOR * complex(integrate.romb(values.real, dx), integrate.romb(values.imag, dx))


def _green_length_task(args: Tuple[np.ndarray, float, float]) -> np.ndarray:
    rhos, length, margin = args
    return free_green_many(rhos, length, margin=margin)


def green_values_by_length(orbit: OrbitSpectrum, rhos, max_workers: Optional[int] = None,
                           margin: float = TOL.im_rho_margin) -> np.ndarray:
    """返回形状 (长度数, ρ 数) 的 G 值表, 行按长度升序"""
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    if orbit.is_empty:
        return np.zeros((0, rhos.size), dtype=complex)
    rows = parallel_map(_green_length_task, [(rhos, float(l), margin) for l in orbit.lengths], max_workers)
    return np.vstack(rows)


def _tail_for(orbit: OrbitSpectrum, sigma: float, eps_growth: float) -> float:
    eps = min(eps_growth, 0.5 * (sigma - 0.5))
    return orbit_tail_bound(orbit, sigma, eps)


def green_sum_line(orbit: OrbitSpectrum, rhos, eps_growth: float = 0.1, max_workers: Optional[int] = None,
                   margin: float = TOL.im_rho_margin) -> Tuple[np.ndarray, float]:
    """Σ_γ G 在一组 ρ 上的值(按长度升序逐行累加)及最弱衰减处的尾项上界"""
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    sigma = -float(np.max(rhos.imag))
    table = green_values_by_length(orbit, rhos, max_workers, margin)
    total = np.zeros(rhos.size, dtype=complex)
    for mult, row in zip(orbit.mults, table):
        total = total + mult * row
    return total, _tail_for(orbit, sigma, eps_growth)


def green_sum(orbit: OrbitSpectrum, s: complex, eps_growth: float = 0.1,
              margin: float = TOL.im_rho_margin, max_workers: Optional[int] = None) -> GreenSum:
    """Σ_{γ∈Γ∖𝓘} G_s(z₀, γz₀), 要求 Re s > 1"""
    s = complex(s)
    if s.real <= 1.0 + margin:
        raise DomainError("格林求和要求 Re s > 1", _MODULE, {"s": s})
    rho = -1j * (s - 0.5)
    table = green_values_by_length(orbit, [rho], max_workers, margin)
    terms = [mult * complex(row[0]) for mult, row in zip(orbit.mults, table)]
    value = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    return GreenSum(value, _tail_for(orbit, s.real - 0.5, eps_growth))


def green_majorant(orbit: OrbitSpectrum, sigma: float) -> float:
    """Σ mult·|G_{1/2+σ}(l)|; ρ = −iσ 时被积函数为正, G 为负实数"""
    if orbit.is_empty:
        return 0.0
    table = green_values_by_length(orbit, [-1j * sigma])
    return math.fsum(float(m) * abs(complex(row[0])) for m, row in zip(orbit.mults, table))


def fit_sigma_envelope(orbit: OrbitSpectrum, sigmas=None) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    拟合 Σ|G| ≤ C·σ^{−1/2} 的常数 C。

    返回 (C, sigmas, majorants)。
    """
    sigmas = np.linspace(1.0, 10.0, 19) if sigmas is None else np.asarray(sigmas, dtype=float)
    majorants = np.array([green_majorant(orbit, float(s)) for s in sigmas])
    C = float(np.max(majorants * np.sqrt(sigmas))) if majorants.size else 0.0
    logger.debug(f"σ^(-1/2) 包络常数 C = {C:.6g}")
    return C, sigmas, majorants
