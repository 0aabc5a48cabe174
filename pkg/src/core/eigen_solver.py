#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
扰动本征值求解: S 在相邻极点之间的交错零点, 间隙子列与安全高度 T_N
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from src.core.constants import TOL
from src.core.errors import DomainError, ResolutionError, TruncationMismatchError
from src.core.spectral_function import CouplingContext, Spectrum, s_spectral_lambda

logger = logging.getLogger(__name__)
_MODULE = "eigen_solver"


class NewEigenvalue(NamedTuple):
    mu: float
    lo: float
    hi: float


@dataclass(frozen=True)
class PerturbedSpectrum:
    """
    new_eigs: 每个极点区间内的新本征值及其区间; inherited: 情形 (a1)/(a2) 继承的 (λ, 重数);
    ground: 第一个极点下方的零点(λ₀ = 0 为极点时为负)。
    """
    new_eigs: Tuple[NewEigenvalue, ...]
    inherited: Tuple[Tuple[float, int], ...]
    ground: Optional[float]
    lambda_max: float
    area: float = 1.0
    skipped: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)

    def new_values(self) -> np.ndarray:
        """所有新零点(含基态), 升序"""
        values = [e.mu for e in self.new_eigs]
        if self.ground is not None:
            values.append(self.ground)
        return np.sort(np.array(values, dtype=float))

    def new_in(self, lo: float, hi: float) -> Optional[float]:
        for e in self.new_eigs:
            if lo < e.mu < hi:
                return e.mu
        return None

    def inherited_expanded(self) -> np.ndarray:
        if not self.inherited:
            return np.empty(0)
        return np.repeat([lam for lam, _ in self.inherited], [m for _, m in self.inherited])

    def paired_poles(self, spec: Spectrum) -> Tuple[np.ndarray, np.ndarray]:
        """升序新零点与最低的同样数目的极点逐项配对"""
        new = self.new_values()
        poles = spec.poles
        if new.size > poles.size:
            raise TruncationMismatchError("新本征值多于极点, 截断不一致", _MODULE,
                                          {"new": int(new.size), "poles": int(poles.size)})
        unpaired = int(np.count_nonzero(poles[new.size:] < self.lambda_max))
        if unpaired > 1:
            raise TruncationMismatchError("lambda_max 以下有多个极点未配对", _MODULE,
                                          {"unpaired": unpaired, "lambda_max": self.lambda_max})
        return new, poles[:new.size]

    def expanded_pairs(self, spec: Spectrum) -> Tuple[np.ndarray, np.ndarray]:
        """按重数展开的 (扰动, 未扰动) 本征值列表, 截到最高的已配对极点"""
        new, poles = self.paired_poles(spec)
        cut = poles[-1] if poles.size else -math.inf
        unperturbed, _ = spec.expanded()
        unperturbed = unperturbed[unperturbed <= cut]
        inherited = self.inherited_expanded()
        perturbed = np.sort(np.concatenate([inherited[inherited <= cut], new]))
        return perturbed, np.sort(unperturbed)


@dataclass(frozen=True)
class SafeHeights:
    T_values: Tuple[float, ...]
    provenance: Tuple[Tuple[float, float, float], ...]
    complete: bool = True

    def __len__(self):
        return len(self.T_values)


def _bisect_brackets(f, a: np.ndarray, b: np.ndarray, xtol: float, max_iter: int = 400) -> np.ndarray:
    """对一组独立区间同时二分; 要求 f(a) < 0 < f(b) 且 f 单调递增"""
    a = a.copy()
    b = b.copy()
    for _ in range(max_iter):
        width = b - a
        active = width > np.maximum(xtol, 4.0 * np.finfo(float).eps * np.abs(0.5 * (a + b)))
        if not np.any(active):
            break
        mid = 0.5 * (a + b)
        fm = f(mid)
        neg = fm < 0.0
        a = np.where(active & neg, mid, a)
        b = np.where(active & ~neg, mid, b)
    return 0.5 * (a + b)


def _pole_offset(p: float) -> float:
    return max(1e-13, 1e-13 * abs(p))


def solve_new_eigs(ctx: CouplingContext, spec: Spectrum, lambda_max: float, safety: float = 4.0,
                   xtol: float = TOL.bisect_xtol, max_ground_exponent: int = 60) -> PerturbedSpectrum:
    """
    在 λ 轴上对每个相邻极点区间二分求 S 的零点; 最后一个极点到 lambda_max 之间同样搜索。
    第一个极点下方按 λ = −2^k 几何扩展寻找基态。
    """
    if not spec.complete and lambda_max > spec.truncation / safety:
        logger.warning(f"lambda_max = {lambda_max:g} 超过截断 Λ/{safety:g} = {spec.truncation / safety:g}, 尾项可能污染结果")

    def S(lam):
        return np.real(s_spectral_lambda(ctx, spec, np.asarray(lam, dtype=float)))

    inherited: List[Tuple[float, int]] = []
    for lam, mult, w in zip(spec.lambdas, spec.mults, spec.weights):
        if w == 0.0:
            inherited.append((float(lam), int(mult)))
        elif mult > 1:
            inherited.append((float(lam), int(mult) - 1))

    poles = spec.poles
    los, his, tops = [], [], []
    for k, p in enumerate(poles):
        if p >= lambda_max:
            break
        top = k + 1 >= len(poles)
        hi = lambda_max if top else float(poles[k + 1])
        if hi <= p:
            continue
        los.append(float(p))
        his.append(hi)
        tops.append(top)

    new_eigs: List[NewEigenvalue] = []
    skipped: List[Tuple[float, float]] = []
    if los:
        lo_arr, hi_arr = np.array(los), np.array(his)
        top_arr = np.array(tops)
        a = lo_arr + np.array([_pole_offset(p) for p in lo_arr])
        b = np.where(top_arr, hi_arr, hi_arr - np.array([_pole_offset(p) for p in hi_arr]))
        fa, fb = S(a), S(b)
        valid = (fa < 0.0) & (fb > 0.0)
        for i in np.flatnonzero(~valid):
            if top_arr[i] and fa[i] < 0.0 and fb[i] <= 0.0:
                logger.debug(f"区间 ({lo_arr[i]:g}, {hi_arr[i]:g}] 内 S 未变号, 零点高于 lambda_max")
                continue
            logger.warning(f"区间 ({lo_arr[i]:.12g}, {hi_arr[i]:.12g}) 内 S 无符号变化, 已跳过")
            skipped.append((float(lo_arr[i]), float(hi_arr[i])))
        if np.any(valid):
            roots = _bisect_brackets(S, a[valid], b[valid], xtol)
            new_eigs = [NewEigenvalue(float(mu), float(lo), float(hi))
                        for mu, lo, hi in zip(roots, lo_arr[valid], hi_arr[valid])]

    ground = None
    if poles.size:
        upper = float(poles[0]) - _pole_offset(float(poles[0]))
        if S(upper) > 0.0:
            for k in range(max_ground_exponent + 1):
                lower = -(2.0 ** k)
                if lower < upper and S(lower) < 0.0:
                    ground = float(_bisect_brackets(S, np.array([lower]), np.array([upper]), xtol)[0])
                    break
            else:
                logger.info(f"在 λ ≥ −2^{max_ground_exponent} 内未找到基态零点")

    logger.info(f"求得 {len(new_eigs)} 个新本征值, 基态 = {ground}, 继承 {len(inherited)} 项, 跳过 {len(skipped)} 个区间")
    return PerturbedSpectrum(tuple(new_eigs), tuple(inherited), ground, float(lambda_max), spec.area, tuple(skipped))


def pole_spectrum(spec: Spectrum) -> Spectrum:
    mask = spec.pole_mask
    if not np.any(mask):
        raise DomainError("谱中没有非零权重的本征值", _MODULE)
    return Spectrum(spec.lambdas[mask], spec.mults[mask], spec.weights[mask], spec.area, spec.complete)


def weyl_lower_constant(spec: Spectrum) -> float:
    """按重数展开后 c₁ = min_{n≥1} λ_n/n"""
    expanded, _ = spec.expanded()
    n = np.arange(1, expanded.size)
    if n.size == 0:
        return 0.0
    return float(np.min(expanded[1:] / n))


def gap_subsequence(spec: Spectrum, c: Optional[float] = None) -> List[Tuple[float, float]]:
    """相邻本征值间隙 ≥ c 的所有对; c 缺省取 c₁/2"""
    if c is None:
        c = 0.5 * weyl_lower_constant(spec)
        if c <= 0.0:
            gaps = np.diff(spec.lambdas)
            c = float(np.max(gaps)) if gaps.size else 0.0
    lam = spec.lambdas
    gaps = np.diff(lam)
    return [(float(lam[k]), float(lam[k + 1])) for k in np.flatnonzero(gaps >= c)]


def safe_height_rule(rho_k: float, chi: float, rho_next: float) -> float:
    """取零点 χ 与较远一侧极点的中点"""
    if abs(chi - rho_k) >= abs(chi - rho_next):
        return 0.5 * (rho_k + chi)
    return 0.5 * (rho_next + chi)


def safe_heights(spec: Spectrum, perturbed: PerturbedSpectrum, count: int, c: Optional[float] = None) -> SafeHeights:
    poles = pole_spectrum(spec)
    real_poles = np.sqrt(poles.lambdas[poles.lambdas > 0.25] - 0.25)
    zeros = perturbed.new_values()
    real_zeros = np.sqrt(zeros[zeros > 0.25] - 0.25)

    values: List[float] = []
    provenance: List[Tuple[float, float, float]] = []
    for lam_k, lam_next in gap_subsequence(poles, c):
        if len(values) >= count:
            break
        if lam_k <= 0.25:
            continue
        mu = perturbed.new_in(lam_k, lam_next)
        if mu is None:
            continue
        rho_k, rho_next, chi = math.sqrt(lam_k - 0.25), math.sqrt(lam_next - 0.25), math.sqrt(mu - 0.25)
        T = safe_height_rule(rho_k, chi, rho_next)
        clearance = 0.25 * abs(rho_next - rho_k)
        nearest = min(np.min(np.abs(real_poles - T)), np.min(np.abs(real_zeros - T), initial=math.inf))
        if nearest < clearance * (1.0 - 1e-12):
            raise ResolutionError("安全高度未满足 1/4 间隙间距", _MODULE, {"T": T, "nearest": float(nearest)})
        values.append(T)
        provenance.append((rho_k, chi, rho_next))
    complete = len(values) >= count
    if not complete:
        logger.warning(f"只找到 {len(values)} 个安全高度 (请求 {count})")
    return SafeHeights(tuple(values), tuple(provenance), complete)


def polybound_diagnostic(spec: Spectrum, heights: SafeHeights, sigma: float, n_w: int = 17) -> List[Tuple[float, float]]:
    """Σ m_j w_j |1/(λ_j − μ) − 1/(λ_j − i)| 在 μ = 1/4 + (T + iw)², w ∈ [−σ, 0] 上的最大值与 T⁵ 之比"""
    if sigma <= 0.5:
        raise DomainError("σ 必须大于 1/2", _MODULE, {"sigma": sigma})
    w = np.linspace(-sigma, 0.0, n_w)
    lj, mw = spec.lambdas, spec.mass
    out = []
    for T in heights.T_values:
        mu = 0.25 + (T + 1j * w) ** 2
        sums = np.sum(mw[None, :] * np.abs(1.0 / (lj[None, :] - mu[:, None]) - 1.0 / (lj[None, :] - 1j)), axis=1)
        out.append((float(T), float(np.max(sums)) / T ** 5))
    return out
