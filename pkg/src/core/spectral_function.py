#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
谱函数 S_{α,z₀}(s) 的几何表示与谱表示, 常数 c₀, 耦合重整化 β(α) 与亏参数 t
"""
import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np

from src.core.constants import TOL, BetaConvention, Tolerances
from src.core.errors import DomainError, PoleProximityError, SingularCouplingError, ValidationError
from src.core.fuchsian_orbits import OrbitSpectrum
from src.core.green_functions import green_sum, green_sum_line
from src.core.special_functions import psi
from src.utils.gpu_utils import spectral_sums

logger = logging.getLogger(__name__)
_MODULE = "spectral_function"
_FOUR_PI = 4.0 * math.pi


class SValue(NamedTuple):
    value: complex
    tail: float


@dataclass(frozen=True, eq=False)
class Spectrum:
    """
    未扰动谱数据: 本征值 λ_j (严格递增), 重数 m_j, 权重 w_j = |φ_j(z₀)|², 曲面面积。

    complete=True 表示有限模型, 截断尾项为零。
    """
    lambdas: np.ndarray
    mults: np.ndarray
    weights: np.ndarray
    area: float
    complete: bool = False

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=float).reshape(-1)
        mult = np.array(self.mults, dtype=np.int64).reshape(-1)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if not (lam.shape == mult.shape == w.shape):
            raise ValidationError("lambda/mult/weight 列长度不一致", _MODULE)
        if lam.size == 0:
            raise ValidationError("谱为空", _MODULE)
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(w))):
            raise ValidationError("谱数据包含非有限值", _MODULE)
        if np.any(np.diff(lam) <= 0.0):
            bad = int(np.argmax(np.diff(lam) <= 0.0)) + 1
            raise ValidationError("本征值必须严格递增", _MODULE, {"index": bad, "lambda": float(lam[bad])})
        if lam[0] < 0.0:
            raise ValidationError("本征值必须非负", _MODULE, {"lambda": float(lam[0])})
        if np.any(mult < 1):
            raise ValidationError("重数必须 ≥ 1", _MODULE)
        if np.any(w < 0.0):
            raise ValidationError("权重必须非负", _MODULE)
        if not (self.area > 0.0):
            raise ValidationError("面积必须为正", _MODULE, {"area": self.area})
        for arr in (lam, mult, w):
            arr.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "mults", mult)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return int(self.lambdas.size)

    @property
    def truncation(self) -> float:
        return float(self.lambdas[-1])

    @property
    def mass(self) -> np.ndarray:
        return self.mults * self.weights

    @property
    def pole_mask(self) -> np.ndarray:
        return self.weights > 0.0

    @property
    def poles(self) -> np.ndarray:
        """权重非零的不同本征值, 即 S 的极点(λ 轴)"""
        return self.lambdas[self.pole_mask]

    def pole_rhos(self) -> np.ndarray:
        return np.sqrt(self.poles - 0.25 + 0j)

    def prefix(self, count: int) -> "Spectrum":
        return Spectrum(self.lambdas[:count], self.mults[:count], self.weights[:count], self.area, False)

    def expanded(self) -> Tuple[np.ndarray, np.ndarray]:
        """按重数展开的 (λ, w) 列表"""
        return np.repeat(self.lambdas, self.mults), np.repeat(self.weights, self.mults)

    def weyl_mass_constant(self) -> float:
        """Σ_{λ_j ≤ X} m_j w_j ≤ C_w·X/(4π) 在谱的上半段拟合的 C_w (不小于 1)"""
        lam = self.lambdas
        cum = np.cumsum(self.mass)
        upper = lam >= 0.5 * lam[-1]
        upper &= lam > 0.0
        if not np.any(upper):
            return 1.0
        return max(1.0, float(np.max(cum[upper] * _FOUR_PI / lam[upper])))

    def tail_bound(self, lam) -> np.ndarray:
        """λ_j > Λ 部分的截断误差上界; Λ < 2|λ| 时返回 inf"""
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        if self.complete:
            return np.zeros(lam.shape)
        Lam = self.truncation
        mag = np.abs(lam)
        with np.errstate(divide="ignore"):
            bound = 2.0 * self.weyl_mass_constant() / _FOUR_PI * (1.0 / Lam ** 2 + 2.0 * mag / Lam)
        return np.where(Lam >= 2.0 * mag, bound, np.inf) if Lam > 0.0 else np.full(lam.shape, np.inf)


def synthetic_weyl_spectrum(area: float, count: int, seed: int = 0, zero_weight_fraction: float = 0.0,
                            multiplicity_fraction: float = 0.0) -> Spectrum:
    """
    按 Weyl 律合成谱: 间距服从均值 4π/area 的指数分布, λ₀ = 0 且 w₀ = 1/area,
    其余权重服从均值 1/area 的指数分布。
    """
    rng = np.random.default_rng(seed)
    gaps = rng.exponential(_FOUR_PI / area, size=count - 1)
    lambdas = np.concatenate([[0.0], np.cumsum(gaps) + 1e-3])
    weights = rng.exponential(1.0 / area, size=count)
    weights[0] = 1.0 / area
    mults = np.ones(count, dtype=np.int64)
    if zero_weight_fraction > 0.0:
        zero = rng.random(count) < zero_weight_fraction
        zero[0] = False
        weights[zero] = 0.0
    if multiplicity_fraction > 0.0:
        double = rng.random(count) < multiplicity_fraction
        double[0] = False
        mults[double] = 2
    return Spectrum(lambdas, mults, weights, area)


def deficiency_parameter() -> complex:
    """t(1 − t) = i 且 Re t > 1/2 的根 t = (1 + √(1 − 4i))/2"""
    return 0.5 * (1.0 + cmath.sqrt(1.0 - 4.0j))


@dataclass(frozen=True)
class CouplingContext:
    alpha: float
    beta: float
    c0: float
    m: int
    t: complex = field(default_factory=deficiency_parameter)
    convention: BetaConvention = BetaConvention.MINUS_C0
    c0_tail: float = 0.0

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("稳定化子阶数 m 必须 ≥ 1", _MODULE, {"m": self.m})

    @property
    def xi(self) -> complex:
        return (self.t - 0.5) / 1j

    @property
    def alpha_inv(self) -> float:
        if math.isinf(self.alpha):
            return 0.0
        return math.inf if self.alpha == 0.0 else 1.0 / self.alpha

    @property
    def beta_inv(self) -> float:
        if self.beta == 0.0:
            raise DomainError("β = 0 时 β⁻¹ 无定义", _MODULE)
        return 1.0 / self.beta

    @classmethod
    def from_beta(cls, beta: float, m: int = 1, c0: float = 0.0,
                  convention: BetaConvention = BetaConvention.MINUS_C0) -> "CouplingContext":
        """已知 β 时反解 α (只用于几何侧各项的计算)"""
        if beta == 0.0:
            alpha = 0.0
        elif convention is BetaConvention.MINUS_C0:
            inv = 1.0 / beta + c0
            alpha = math.inf if inv == 0.0 else 1.0 / inv
        else:
            den = 1.0 - c0 * beta
            alpha = math.inf if den == 0.0 else beta / den
        return cls(alpha=alpha, beta=beta, c0=c0, m=m, convention=convention)


def renormalize(alpha: float, c0: float, convention: BetaConvention,
                tol: float = TOL.singular_coupling_tol) -> float:
    """β(α); α = ±∞ 时 β = 1/c₀"""
    if math.isinf(alpha):
        if c0 == 0.0:
            raise SingularCouplingError("c₀ = 0 时 α = ±∞ 对应的 β 无定义", _MODULE, {"alpha": alpha})
        return 1.0 / c0
    if c0 != 0.0:
        singular = 1.0 / c0 if convention is BetaConvention.MINUS_C0 else -1.0 / c0
        if abs(alpha - singular) <= tol * max(1.0, abs(singular)):
            raise SingularCouplingError("耦合常数位于重整化奇点", _MODULE,
                                        {"alpha": alpha, "singular_alpha": singular, "convention": convention.value})
    if convention is BetaConvention.MINUS_C0:
        return alpha / (1.0 - alpha * c0)
    return alpha / (1.0 + c0 * alpha)


def make_context(alpha: float, m: int, orbit: Optional[OrbitSpectrum] = None,
                 convention: BetaConvention = BetaConvention.MINUS_C0, eps_growth: float = 0.1,
                 tolerances: Tolerances = TOL) -> CouplingContext:
    """c₀ = m·Re ψ(t) + Re Σ G_t, 再按约定计算 β; 各项容差取自 tolerances"""
    t = deficiency_parameter()
    c0 = m * float(np.real(psi(t)))
    c0_tail = 0.0
    if orbit is not None and not orbit.is_empty:
        gs = green_sum(orbit, t, eps_growth=eps_growth, margin=tolerances.im_rho_margin)
        c0 += gs.value.real
        c0_tail = gs.tail
        if c0_tail > tolerances.c0_tail_tol:
            logger.warning(f"c₀ 的轨道尾项上界 {c0_tail:.3e} 超过 {tolerances.c0_tail_tol:g}, 请增大枚举半径")
    beta = renormalize(alpha, c0, convention, tol=tolerances.singular_coupling_tol)
    logger.info(f"耦合: α = {alpha!r}, c₀ = {c0:.16g}, β = {beta:.16g} ({convention.value})")
    return CouplingContext(alpha=alpha, beta=beta, c0=c0, m=m, t=t, convention=convention, c0_tail=c0_tail)


def s_geometric(ctx: CouplingContext, orbit: OrbitSpectrum, s: complex, margin: float = TOL.im_rho_margin) -> SValue:
    """S(s) = β⁻¹ + mψ(s) + Σ_{γ∈Γ∖𝓘} G_s(z₀, γz₀), Re s > 1"""
    s = complex(s)
    if s.real <= 1.0:
        raise DomainError("几何表示要求 Re s > 1", _MODULE, {"s": s})
    gs = green_sum(orbit, s, margin=margin)
    return SValue(ctx.beta_inv + ctx.m * complex(psi(s)) + gs.value, gs.tail)


def s_geometric_line(ctx: CouplingContext, orbit: OrbitSpectrum, rhos,
                     margin: float = TOL.im_rho_margin) -> Tuple[np.ndarray, float]:
    """沿一组 ρ (s = 1/2 + iρ) 的几何表示值及尾项"""
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    if np.max(rhos.imag) >= -0.5:
        raise DomainError("几何表示要求 Im ρ < −1/2", _MODULE, {"im_rho": float(np.max(rhos.imag))})
    greens, tail = green_sum_line(orbit, rhos, margin=margin)
    return ctx.beta_inv + ctx.m * psi(0.5 + 1j * rhos) + greens, tail


def _pole_guard(spec: Spectrum, rhos: np.ndarray, pole_tol: float) -> None:
    r = spec.pole_rhos()
    if r.size == 0:
        return
    gap = np.minimum(np.abs(rhos[:, None] - r[None, :]), np.abs(rhos[:, None] + r[None, :]))
    flat = int(np.argmin(gap))
    i, j = divmod(flat, r.size)
    if gap[i, j] < pole_tol:
        index = int(np.flatnonzero(spec.pole_mask)[j])
        raise PoleProximityError(f"ρ = {complex(rhos[i])} 距离极点过近", index, float(gap[i, j]), _MODULE,
                                 {"lambda": float(spec.lambdas[index])})


def s_spectral_lambda(ctx: CouplingContext, spec: Spectrum, lam) -> np.ndarray:
    """λ 变量上的谱表示 α⁻¹ + Σ m_j w_j (1 + λ_jλ)/((λ_j − λ)(λ_j² + 1)), 不做极点检查"""
    mask = spec.pole_mask
    return ctx.alpha_inv + spectral_sums(spec.lambdas[mask], spec.mass[mask], np.asarray(lam), "value")


def s_spectral_many(ctx: CouplingContext, spec: Spectrum, rhos,
                    pole_tol: float = TOL.pole_tol) -> Tuple[np.ndarray, np.ndarray]:
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    _pole_guard(spec, rhos, pole_tol)
    lam = 0.25 + rhos * rhos
    return s_spectral_lambda(ctx, spec, lam), spec.tail_bound(lam)


def s_spectral(ctx: CouplingContext, spec: Spectrum, rho: complex, pole_tol: float = TOL.pole_tol) -> SValue:
    values, tails = s_spectral_many(ctx, spec, [rho], pole_tol)
    return SValue(complex(values[0]), float(tails[0]))


def s_prime_lambda(spec: Spectrum, lam) -> np.ndarray:
    """dS/dλ = Σ m_j w_j/(λ_j − λ)²"""
    mask = spec.pole_mask
    return spectral_sums(spec.lambdas[mask], spec.mass[mask], np.asarray(lam), "derivative")


def s_prime_spectral_many(ctx: CouplingContext, spec: Spectrum, rhos, pole_tol: float = TOL.pole_tol) -> np.ndarray:
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    _pole_guard(spec, rhos, pole_tol)
    return 2.0 * rhos * s_prime_lambda(spec, 0.25 + rhos * rhos)


def s_prime_spectral(ctx: CouplingContext, spec: Spectrum, rho: complex, pole_tol: float = TOL.pole_tol) -> complex:
    """dS/dρ = 2ρ·Σ m_j w_j/(λ_j − λ)², λ = 1/4 + ρ²"""
    return complex(s_prime_spectral_many(ctx, spec, [rho], pole_tol)[0])


def resolvent_identity_sides(spec: Spectrum, lam: complex) -> Tuple[complex, complex]:
    """有限模型下的预解式恒等式两边: Σ mw[1/(λ_j−λ) − 1/(λ_j−i)] 与 (i−λ)Σ mw/((λ_j−λ)(λ_j−i))"""
    lj, mw = spec.lambdas, spec.mass
    left = np.sum(mw * (1.0 / (lj - lam) - 1.0 / (lj - 1j)))
    right = (1j - lam) * np.sum(mw / ((lj - lam) * (lj - 1j)))
    return complex(left), complex(right)
