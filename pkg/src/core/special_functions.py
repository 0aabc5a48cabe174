#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
归一化双伽马函数 ψ(s) = Γ′(s)/(2πΓ(s)) 及其导数, 以及 1 + mβψ(1/2 + v) 的唯一实零点
"""
import logging
import math
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize, special

from src.core.constants import TWO_PI
from src.core.errors import DomainError, NoZeroError, ResolutionError

logger = logging.getLogger(__name__)
_MODULE = "special_functions"

_ASYMPTOTIC_TERMS = 8
_BERNOULLI = special.bernoulli(2 * _ASYMPTOTIC_TERMS)
_SHIFT_TARGET = 10.0


def _check_poles(s) -> None:
    arr = np.asarray(s)
    re, im = np.real(arr), np.imag(arr)
    bad = (im == 0.0) & (re <= 0.0) & (re == np.round(re))
    if np.any(bad):
        raise DomainError("Γ 函数在非正整数处有极点", _MODULE, {"s": complex(np.ravel(arr)[np.argmax(np.ravel(bad))])})


def psi(s):
    """ψ(s) = digamma(s)/(2π)。实参数返回实数, 复参数返回复数。"""
    _check_poles(s)
    return special.psi(s) / TWO_PI


def _complex_trigamma(z: np.ndarray) -> np.ndarray:
    z = np.array(z, dtype=complex)
    acc = np.zeros_like(z)
    n_shift = int(max(0.0, math.ceil(_SHIFT_TARGET - float(np.min(z.real, initial=_SHIFT_TARGET)))))
    for _ in range(n_shift):
        low = z.real < _SHIFT_TARGET
        acc = acc + np.where(low, 1.0 / (z * z), 0.0)
        z = np.where(low, z + 1.0, z)
    inv = 1.0 / z
    inv2 = inv * inv
    series = inv + 0.5 * inv2
    power = inv2 * inv
    for k in range(1, _ASYMPTOTIC_TERMS + 1):
        series = series + _BERNOULLI[2 * k] * power
        power = power * inv2
    return acc + series


def psi_prime(s):
    """ψ′(s) = trigamma(s)/(2π); 复参数用平移递推 + 渐近级数。"""
    _check_poles(s)
    arr = np.asarray(s)
    if not np.iscomplexobj(arr):
        return special.polygamma(1, s) / TWO_PI
    out = _complex_trigamma(arr) / TWO_PI
    return complex(out) if out.ndim == 0 else out


def denominator(rho, m: int, beta: float):
    """1 + mβψ(1/2 + iρ)"""
    return 1.0 + m * beta * psi(0.5 + 1j * np.asarray(rho, dtype=complex))


def denominator_v_derivative(m: int, beta: float, v: float) -> float:
    """d/dv (1 + mβψ(1/2 + v)) = mβψ′(1/2 + v), 其符号与 β 相同"""
    return float(m * beta * psi_prime(0.5 + v))


def denominator_imag_series(rho: complex, m: int, beta: float, n_terms: int = 20000) -> float:
    """
    Im(1 + mβψ(1/2 + iρ)) = mβ·Re ρ/(2π)·Σ_{n≥0} |n + 1/2 + iρ|^{−2}

    截断后的尾项用中点积分近似补足。要求 Im ρ < 1/2。
    """
    x = 0.5 - rho.imag
    a = rho.real
    if x <= 0.0:
        raise DomainError("要求 Im ρ < 1/2", _MODULE, {"rho": rho})
    n = np.arange(n_terms, dtype=float)
    partial = math.fsum(1.0 / ((n + x) ** 2 + a * a))
    edge = n_terms - 0.5 + x
    tail = (0.5 * math.pi - math.atan(edge / abs(a))) / abs(a) if a != 0.0 else 1.0 / edge
    return m * beta * a / TWO_PI * (partial + tail)


def denom_zero(m: int, beta: float, max_doublings: int = 1100) -> float:
    """
    1 + mβψ(1/2 + v) 在 (−1/2, ∞) 上的唯一实零点 v_β。

    在 x = 1/2 + v 变量上做区间二分: 下端取 2^{−k} 逼近 0, 上端从 1 几何增长。
    β < 0 时单调方向相反, 同样适用。
    """
    if m < 1:
        raise DomainError("稳定化子阶数 m 必须 ≥ 1", _MODULE, {"m": m})
    if beta == 0.0:
        raise NoZeroError("β = 0 时 1 + mβψ 没有零点", _MODULE, {"beta": beta})

    def f(x: float) -> float:
        return 1.0 + m * beta * float(psi(x))

    sign_low = -math.copysign(1.0, beta)
    lo = 0.5
    for k in range(1, 1075):
        lo = 2.0 ** (-k)
        if math.copysign(1.0, f(lo)) == sign_low:
            break
    else:
        raise ResolutionError("无法在 0 附近建立二分下端", _MODULE, {"m": m, "beta": beta})
    hi = 1.0
    for _ in range(max_doublings):
        value = f(hi)
        if math.isfinite(value) and math.copysign(1.0, value) == -sign_low:
            break
        hi *= 2.0
        if not math.isfinite(hi):
            break
    else:
        hi = math.inf
    if not math.isfinite(hi):
        raise NoZeroError("零点超出双精度可表示范围", _MODULE, {"m": m, "beta": beta})

    x = optimize.bisect(f, lo, hi, xtol=1e-300, rtol=4.0 * np.finfo(float).eps, maxiter=4000)
    residual = f(x)
    scale = max(1.0, abs(m * beta * float(psi(x))))
    if not abs(residual) <= 1e-12 * scale:
        raise ResolutionError(f"v_β 残差 {residual:.3e} 超过 1e-12", _MODULE,
                              {"m": m, "beta": beta, "x": x, "residual": residual})
    v = x - 0.5
    logger.debug(f"v_β = {v:.16g} (m={m}, β={beta}), 零点{'位于' if v > 0 else '不在'}下半平面")
    return v


def winding_count(f: Callable[[np.ndarray], np.ndarray], corners: Sequence[complex], n_initial: int = 256,
                  max_step: float = 0.5, max_rounds: int = 30) -> int:
    """
    按辐角原理计算 f 沿闭合折线(逆时针)的卷绕数。

    逐段累加相邻采样点的相位增量; 增量超过 max_step 的区段反复加密。
    """
    corners = list(corners)
    total = 0.0
    for start, end in zip(corners, corners[1:] + corners[:1]):
        t = np.linspace(0.0, 1.0, n_initial + 1)
        values = f(start + t * (end - start))
        for _ in range(max_rounds):
            if not np.all(np.isfinite(values)) or np.any(values == 0):
                raise ResolutionError("函数在积分路径上为零或非有限", _MODULE, {"edge": (start, end)})
            steps = np.angle(values[1:] / values[:-1])
            coarse = np.abs(steps) > max_step
            if not np.any(coarse):
                break
            mids = 0.5 * (t[:-1] + t[1:])[coarse]
            t = np.sort(np.concatenate([t, mids]))
            values = f(start + t * (end - start))
        else:
            raise ResolutionError("卷绕数加密次数超限", _MODULE, {"edge": (start, end)})
        total += math.fsum(steps)
    count = total / TWO_PI
    if abs(count - round(count)) > 0.1:
        raise ResolutionError(f"卷绕数 {count:.4f} 不接近整数", _MODULE)
    return int(round(count))


def _rectangle(half_width: float, depth: float, top: float):
    return [complex(-half_width, -depth), complex(half_width, -depth),
            complex(half_width, top), complex(-half_width, top)]


def count_denominator_zeros(m: int, beta: float, half_width: float = 10.0, depth: float = 2.0,
                            top: float = 0.5 - 1e-3) -> int:
    """[−T, T]×[−σ, top] 内 1 + mβψ(1/2 + iρ) 的零点个数"""
    if top >= 0.5:
        raise DomainError("矩形上边必须低于 ψ 在 s = 0 处的极点 (Im ρ = 1/2)", _MODULE, {"top": top})
    return winding_count(lambda rho: denominator(rho, m, beta), _rectangle(half_width, depth, top))


def locate_denominator_zero(m: int, beta: float, half_width: float = 10.0, depth: float = 2.0,
                            top: float = 0.5 - 1e-3, newton_steps: int = 30) -> complex:
    """
    由辐角原理一阶矩 (1/2πi)∮ρ f′/f dρ 给出矩形内唯一零点的初值, 再做牛顿迭代。
    """
    corners = _rectangle(half_width, depth, top)

    def log_derivative(rho):
        s = 0.5 + 1j * rho
        return 1j * m * beta * psi_prime(s) / (1.0 + m * beta * psi(s))

    moment = 0.0j
    for start, end in zip(corners, corners[1:] + corners[:1]):
        delta = end - start

        def integrand(t):
            rho = start + t * delta
            v = rho * log_derivative(rho) * delta
            return np.array([v.real, v.imag])

        val, _ = integrate.quad_vec(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=2000)
        moment += complex(val[0], val[1])
    rho = moment / (2j * math.pi)
    for _ in range(newton_steps):
        f_val = complex(denominator(rho, m, beta))
        step = f_val / complex(1j * m * beta * psi_prime(0.5 + 1j * rho))
        rho -= step
        if abs(step) < 1e-15 * max(1.0, abs(rho)):
            break
    return rho
