#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
迹公式两侧的数值计算

谱侧: Σ_j {h(ρ_j^α) − h(ρ_j)} 以及截断形式下沿 ∂B(T) 的 h·S′/S 围道积分。
几何侧: −(1/2πi)∫ h′ log S 沿 Im ρ = −σ, 以及它展开后的恒等项和衍射轨道项
    β^k (−1/(2π√2))^k Σ_{γ₁…γ_k} ∫…∫ g_{β,k}(t₁ + … + t_k) Π dt_j/√(cosh t_j − cosh l_j)。

全部导数 (h′, S′, D′) 均对 ρ 求导。
"""
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from itertools import combinations_with_replacement
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.interpolate import CubicSpline

from src.core.constants import EXP_CUTOFF, GREEN_PREFACTOR, TOL, TWO_PI, Tolerances
from src.core.eigen_solver import PerturbedSpectrum
from src.core.errors import (BoundaryProximityError, ContourCollisionError, DivergenceRiskError, DomainError,
                             NoZeroError, ResolutionError)
from src.core.fuchsian_orbits import OrbitSpectrum, orbit_tail_bound
from src.core.green_functions import fit_sigma_envelope, green_sum_line, kernel
from src.core.special_functions import denom_zero, denominator, psi, psi_prime
from src.core.spectral_function import CouplingContext, Spectrum, s_prime_spectral_many, s_spectral_many
from src.core.test_functions import TestFunction
from src.core.workers import parallel_map

logger = logging.getLogger(__name__)
_MODULE = "trace_formula"


@dataclass(frozen=True)
class ContourSpec:
    height: float
    re_cutoff: float
    nodes: int
    cutoff_error: float = 0.0


class TermValue(NamedTuple):
    value: float
    tail: float


@dataclass
class TraceReport:
    mode: str
    alpha: float
    beta: float
    c0: float
    nu: Optional[float] = None
    sigma: Optional[float] = None
    k_max: int = 0
    spectral_side: Optional[float] = None
    identity_term: Optional[float] = None
    pretrace: Optional[float] = None
    diffractive_terms: List[float] = field(default_factory=list)
    tails: Dict[str, Any] = field(default_factory=dict)
    gap: Optional[float] = None
    converged: bool = False
    research_mode: bool = False
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# ---------------------------------------------------------------- 线积分规则

def _panel_edges(cutoff: float, step: float, uniform_to: float, growth: float, max_width: float) -> np.ndarray:
    edges = [0.0]
    x = 0.0
    while x < cutoff:
        width = step if x < uniform_to else min(max_width, max(step, x * (growth - 1.0)))
        x = min(x + width, cutoff)
        edges.append(x)
    return np.array(edges)


def line_rule(height: float, cutoff: float, step: float = 0.25, order: int = 16, uniform_to: float = 32.0,
              growth: float = 1.15, max_width: float = math.inf) -> Tuple[np.ndarray, np.ndarray, ContourSpec]:
    """
    Im ρ = −height 上 [−cutoff, cutoff] 的复合 Gauss–Legendre 规则。

    |x| ≤ uniform_to 用等宽面板, 之外按比例 growth 放宽 (不超过 max_width); 节点关于 0 严格镜像。
    """
    edges = _panel_edges(cutoff, step, uniform_to, growth, max_width)
    nodes, weights = leggauss(order)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    x = ((0.5 * (a + b))[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    xs = np.concatenate([-x[::-1], x])
    ws = np.concatenate([w[::-1], w])
    return xs - 1j * height, ws, ContourSpec(height, cutoff, int(xs.size))


def _check_contour(ctx: CouplingContext, height: float, tol: float = TOL.contour_collision_tol) -> Optional[float]:
    """返回 v_β (无零点时为 None); 路径高度离 v_β 太近时报错"""
    if ctx.beta == 0.0:
        return None
    try:
        v = denom_zero(ctx.m, ctx.beta)
    except NoZeroError:
        return None
    if abs(height - v) < tol:
        raise ContourCollisionError("积分路径经过 1 + mβψ 的零点 −iv_β", _MODULE,
                                    {"height": height, "v_beta": v, "tol": tol})
    return v


# ---------------------------------------------------------------- ν 与 σ 的选取

def select_nu(ctx: CouplingContext, sigma: float) -> float:
    """v_β ∈ (0, σ) 时 ν = v_β + min(0.1, (σ − v_β)/2), 否则 ν = 0"""
    if ctx.beta == 0.0:
        return 0.0
    try:
        v = denom_zero(ctx.m, ctx.beta)
    except NoZeroError:
        return 0.0
    if 0.0 < v < sigma:
        nu = v + min(0.1, 0.5 * (sigma - v))
    else:
        nu = 0.0
    logger.info(f"v_β = {v:.12g}, ν = {nu:.12g}")
    return nu


def _coupling_floor(ctx: CouplingContext, sigma: float) -> float:
    """min_t |β⁻¹ + mψ(1/2 + σ + it)|"""
    t = np.concatenate([np.linspace(0.0, 20.0, 401), np.geomspace(20.0, 1e8, 200)])
    values = ctx.beta_inv + ctx.m * psi(0.5 + sigma + 1j * t)
    return float(np.min(np.abs(values)))


def _envelope_parts(ctx: CouplingContext, orbit: OrbitSpectrum, sigma: float,
                    envelope_C: Optional[float], eps_growth: float) -> Tuple[float, float, float]:
    """(C σ^{−1/2}, 轨道尾项, min|β⁻¹ + mψ|)"""
    if envelope_C is None:
        envelope_C = 0.0 if orbit.is_empty else fit_sigma_envelope(orbit)[0]
    eps = min(eps_growth, 0.5 * (sigma - 0.5))
    tail = orbit_tail_bound(orbit, sigma, eps)
    return envelope_C / math.sqrt(sigma), tail, _coupling_floor(ctx, sigma)


def series_ratio_bound(ctx: CouplingContext, orbit: OrbitSpectrum, sigma: float,
                       envelope_C: Optional[float] = None, eps_growth: float = 0.1) -> float:
    """Im ρ = −σ 上 |βG/(1 + mβψ)| 的包络上界 (C σ^{−1/2} + 尾项)/min_t|β⁻¹ + mψ|"""
    if sigma <= 0.5:
        raise DomainError("σ 必须大于 1/2", _MODULE, {"sigma": sigma})
    if ctx.beta == 0.0:
        return 0.0
    majorant, tail, floor = _envelope_parts(ctx, orbit, sigma, envelope_C, eps_growth)
    return math.inf if floor == 0.0 else (majorant + tail) / floor


def contour_series_ratio(ctx: CouplingContext, orbit: OrbitSpectrum, sigma: float, rhos=None,
                         tolerances: Tolerances = TOL) -> np.ndarray:
    """逐点的 |βG/(1 + mβψ)|; 缺省取 Im ρ = −σ 上 [−50, 50] 的等距点"""
    if rhos is None:
        rhos = np.linspace(-50.0, 50.0, 401) - 1j * sigma
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    greens, _ = green_sum_line(orbit, rhos, margin=tolerances.im_rho_margin)
    return np.abs(ctx.beta * greens / denominator(rhos, ctx.m, ctx.beta))


def select_sigma(ctx: CouplingContext, orbit: OrbitSpectrum, perturbed: Optional[PerturbedSpectrum] = None,
                 sigma_min: float = 1.0, growth: float = 1.05, cap: float = 1e3, target: float = 0.9,
                 eps_growth: float = 0.1) -> float:
    """网格 σ_j = sigma_min·growth^j 上第一个使包络比值 < target 的 σ (同时超过 |Im ρ₀^α|)"""
    C = 0.0 if orbit.is_empty else fit_sigma_envelope(orbit)[0]
    floor_sigma = 0.5
    if perturbed is not None and perturbed.ground is not None and perturbed.ground < 0.25:
        floor_sigma = max(floor_sigma, math.sqrt(0.25 - perturbed.ground))
    sigma = sigma_min
    ratio = math.inf
    while sigma <= cap:
        if sigma > floor_sigma:
            ratio = series_ratio_bound(ctx, orbit, sigma, envelope_C=C, eps_growth=eps_growth)
            if ratio < target:
                logger.info(f"选定 σ = {sigma:.6g}, 级数比值上界 {ratio:.4g} (C = {C:.4g})")
                return sigma
        sigma *= growth
    raise DivergenceRiskError(f"σ ≤ {cap:g} 内找不到使比值 < {target} 的 σ", _MODULE,
                              {"last_ratio": ratio, "C": C, "beta": ctx.beta})


# ---------------------------------------------------------------- 积分变换 g_{β,k}

def transform_g_many(h: TestFunction, ctx: CouplingContext, k: int, height: float, ts,
                     step: float = 0.25, order: int = 16, tol: float = 1e-13, chunk: int = 16,
                     tolerances: Tolerances = TOL) -> np.ndarray:
    """
    g_{β,k}(t) = ((−1)^k/(2πik)) ∫ h′(ρ) e^{−iρt}/(1 + mβψ(1/2 + iρ))^k dρ, 路径 Im ρ = −height。

    面板宽度不超过 e^{−ixt} 的一个周期; t 按块处理以限制内存。
    """
    if k < 1:
        raise DomainError("k 必须 ≥ 1", _MODULE, {"k": k})
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts <= 0.0):
        raise DomainError("t 必须为正", _MODULE, {"t_min": float(np.min(ts))})
    out = np.zeros(ts.size, dtype=complex)
    if h.exempt:
        return out
    _check_contour(ctx, height, tolerances.contour_collision_tol)
    X = h.cutoff(height, tol, derivative_only=True)
    prefactor = (-1) ** k / (2j * math.pi * k)
    order_idx = np.argsort(ts)
    for start in range(0, ts.size, chunk):
        idx = order_idx[start:start + chunk]
        period = TWO_PI / float(ts[idx].max())
        rhos, w, _ = line_rule(height, X, step=min(step, period), order=order, max_width=period)
        base = w * h.prime(rhos) / denominator(rhos, ctx.m, ctx.beta) ** k
        out[idx] = prefactor * (base @ np.exp(-1j * np.outer(rhos, ts[idx])))
    return out


def transform_g(h: TestFunction, ctx: CouplingContext, k: int, nu: float, t: float, **kwargs) -> complex:
    return complex(transform_g_many(h, ctx, k, nu, [t], **kwargs)[0])


def transform_decay_envelope(h: TestFunction, ctx: CouplingContext, k: int, sigma: float,
                             tol: float = 1e-13) -> float:
    """A 使得 |g_{β,k}(t)| ≤ A·e^{−σt}: A = ∫|h′|/(2πk·min|1 + mβψ|^k), 沿 Im ρ = −σ"""
    X = h.cutoff(sigma, tol, derivative_only=True)
    rhos, w, _ = line_rule(sigma, X)
    floor = float(np.min(np.abs(denominator(rhos, ctx.m, ctx.beta))))
    return float(np.sum(w * np.abs(h.prime(rhos)))) / (TWO_PI * k * floor ** k)


# ---------------------------------------------------------------- 恒等项

def identity_term(h: TestFunction, ctx: CouplingContext, nu: float, step: float = 0.25, order: int = 16,
                  tol: float = 1e-13, tolerances: Tolerances = TOL) -> TermValue:
    """(1/2πi)∫ h·D′/D dρ = (1/2π)∫ h(ρ)·mβψ′(1/2 + iρ)/(1 + mβψ(1/2 + iρ)) dρ, Im ρ = −ν"""
    if ctx.beta == 0.0:
        return TermValue(0.0, 0.0)
    if h.exempt:
        raise DomainError("常数测试函数的恒等项积分发散", _MODULE)
    _check_contour(ctx, nu, tolerances.contour_collision_tol)
    X = h.cutoff(nu, tol)
    rhos, w, _ = line_rule(nu, X, step=step, order=order)
    s = 0.5 + 1j * rhos
    ratio = ctx.m * ctx.beta * psi_prime(s) / denominator(rhos, ctx.m, ctx.beta)
    value = complex(np.sum(w * h(rhos) * ratio)) / TWO_PI
    if abs(value.imag) > tolerances.residue_imag_tol * max(1.0, abs(value.real)):
        raise ResolutionError("恒等项的虚部残差过大", _MODULE, {"imag": value.imag, "nu": nu})
    edge = complex(X - 1j * nu)
    tail = X * abs(complex(h(edge))) * abs(complex(ratio[-1])) / math.pi
    logger.info(f"恒等项 (ν = {nu:.6g}) = {value.real:.16g}")
    return TermValue(value.real, tail)


# ---------------------------------------------------------------- 几何侧沿 Im ρ = −σ 的数据

@dataclass(frozen=True)
class GeometricLine:
    rhos: np.ndarray
    weights: np.ndarray
    h_prime: np.ndarray
    denom: np.ndarray
    greens: np.ndarray
    green_tail: float
    contour: ContourSpec

    @property
    def abs_h_prime(self) -> float:
        return float(np.sum(self.weights * np.abs(self.h_prime)))


def geometric_line(h: TestFunction, ctx: CouplingContext, orbit: OrbitSpectrum, sigma: float,
                   step: float = 0.25, order: int = 16, tol: float = 1e-12, max_width: float = 1.0,
                   tolerances: Tolerances = TOL) -> GeometricLine:
    if sigma <= 0.5 + tolerances.im_rho_margin:
        raise DomainError("几何表示要求 σ > 1/2", _MODULE, {"sigma": sigma})
    X = h.cutoff(sigma, tol, derivative_only=True)
    rhos, w, contour = line_rule(sigma, X, step=step, order=order, max_width=max_width)
    greens, tail = green_sum_line(orbit, rhos, margin=tolerances.im_rho_margin)
    logger.debug(f"几何线 σ = {sigma:g}: {rhos.size} 个节点, 截断 X = {X:g}, 轨道尾项 {tail:.3e}")
    return GeometricLine(rhos, w, h.prime(rhos), denominator(rhos, ctx.m, ctx.beta), greens, tail, contour)


def _unwrapped_log(z: np.ndarray, start_arg: Optional[float] = None) -> np.ndarray:
    """沿节点顺序连续追踪 log z; 相邻辐角跳变超过 0.9π 视为分辨率不足"""
    angles = np.angle(z)
    first = angles[0] if start_arg is None else start_arg + (
        (angles[0] - start_arg + math.pi) % TWO_PI - math.pi)
    steps = (np.diff(angles) + math.pi) % TWO_PI - math.pi
    if steps.size and np.max(np.abs(steps)) > 0.9 * math.pi:
        i = int(np.argmax(np.abs(steps)))
        raise ResolutionError("log S 的辐角在相邻节点间跳变过大", _MODULE,
                              {"jump": float(steps[i]), "index": i})
    arg = first + np.concatenate([[0.0], np.cumsum(steps)])
    return np.log(np.abs(z)) + 1j * arg


def pretrace_rhs(h: TestFunction, ctx: CouplingContext, orbit: OrbitSpectrum, sigma: float,
                 line: Optional[GeometricLine] = None, half_line: bool = False,
                 tolerances: Tolerances = TOL) -> TermValue:
    """
    −(1/2πi)∫ h′(ρ) log S(1/2 + iρ) dρ 沿 Im ρ = −σ。

    常数 log β⁻¹ 对 ∫h′ = 0 无贡献, 实际积分 log(βS) = log(D + βG)。
    half_line 时只积分 Re ρ ≥ 0 并利用 h′ 的奇性与 S 的共轭对称性。
    """
    if ctx.beta == 0.0:
        return TermValue(0.0, 0.0)
    line = line or geometric_line(h, ctx, orbit, sigma, tolerances=tolerances)
    z = line.denom + ctx.beta * line.greens
    if half_line:
        n = line.rhos.size // 2
        z0 = complex(denominator(-1j * sigma, ctx.m, ctx.beta)
                     + ctx.beta * green_sum_line(orbit, [-1j * sigma], margin=tolerances.im_rho_margin)[0][0])
        arg0 = 0.0 if z0.real > 0.0 else math.pi
        logs = _unwrapped_log(z[n:], start_arg=arg0)
        F = complex(np.sum(line.weights[n:] * line.h_prime[n:] * logs))
        H = float(np.real(np.sum(line.weights[n:] * line.h_prime[n:])))
        value = complex(-(F.imag - arg0 * H) / math.pi)
    else:
        logs = _unwrapped_log(z)
        value = complex(np.sum(line.weights * line.h_prime * logs)) / (-2j * math.pi)
    if abs(value.imag) > tolerances.residue_imag_tol * max(1.0, abs(value.real)):
        logger.warning(f"pretrace 虚部残差 {value.imag:.3e}")
    tail = line.abs_h_prime * abs(ctx.beta) * line.green_tail / (TWO_PI * float(np.min(np.abs(z))))
    logger.info(f"pretrace (σ = {sigma:.6g}) = {value.real:.16g}, 尾项 {tail:.3e}")
    return TermValue(value.real, tail)


def diffractive_line_terms(h: TestFunction, ctx: CouplingContext, orbit: OrbitSpectrum, k_max: int, sigma: float,
                           line: Optional[GeometricLine] = None, tolerances: Tolerances = TOL) -> List[TermValue]:
    """第 k 项的线积分形式 (1/2πi)((−β)^k/k)∫ h′ (G/D)^k dρ"""
    if ctx.beta == 0.0 or orbit.is_empty:
        return [TermValue(0.0, 0.0) for _ in range(k_max)]
    line = line or geometric_line(h, ctx, orbit, sigma, tolerances=tolerances)
    x = line.greens / line.denom
    bound = float(np.max(np.abs(ctx.beta * x)))
    out = []
    for k in range(1, k_max + 1):
        value = complex(np.sum(line.weights * line.h_prime * x ** k)) * (-ctx.beta) ** k / (2j * math.pi * k)
        tail = line.abs_h_prime / TWO_PI * bound ** (k - 1) * abs(ctx.beta) * line.green_tail / float(
            np.min(np.abs(line.denom)))
        out.append(TermValue(value.real, tail))
    return out


# ---------------------------------------------------------------- 衍射轨道项 (嵌套积分形式)

@dataclass
class DiffractiveResult:
    terms: List[TermValue]
    remainder: float
    ratio: float
    spline_error: float = 0.0
    tuple_counts: List[int] = field(default_factory=list)

    @property
    def values(self) -> List[float]:
        return [t.value for t in self.terms]

    @property
    def total_tail(self) -> float:
        return math.fsum(t.tail for t in self.terms) + self.remainder


def _axis_weight_bound(length: float, sigma: float) -> float:
    """∫₀^∞ kernel(u, l)·e^{−σu²} du ≤ √(π/(σ sinh l)), 因为 kernel ≤ 2/√(sinh l)"""
    return math.sqrt(math.pi / (sigma * math.sinh(length)))


def _multisets(orbit: OrbitSpectrum, k: int, sigma: float) -> Tuple[List[Tuple[Tuple[float, ...], float]], float]:
    """
    长度多重集及其权重 k!/Πc! · Π mult^c; Σl 超过 kτ₀ + 37/σ 的组合被剪除。
    同时返回被剪除部分的质量 Σ weight·e^{−σΣl}·Π√(π/(σ sinh l)), 乘以 g 的衰减常数即为其积分上界。
    """
    lengths, mults = orbit.lengths, orbit.mults
    limit = k * orbit.tau0 + EXP_CUTOFF / sigma
    out = []
    pruned = []
    for combo in combinations_with_replacement(range(lengths.size), k):
        ls = tuple(float(lengths[i]) for i in combo)
        counts = Counter(combo)
        weight = math.factorial(k)
        for i, c in counts.items():
            weight = weight // math.factorial(c) * int(mults[i]) ** c
        if sum(ls) > limit:
            axes = math.prod(_axis_weight_bound(l, sigma) for l in ls)
            pruned.append(float(weight) * math.exp(-sigma * sum(ls)) * axes)
            continue
        out.append((ls, float(weight)))
    return out, math.fsum(pruned)


def _axis_cutoff(sigma: float) -> float:
    return math.sqrt(EXP_CUTOFF / (sigma + 0.5))


def _axis_nodes(k: int, n_axis: int) -> int:
    return {1: 64, 2: 40, 3: 24}.get(k, n_axis)


def _g_spline(h: TestFunction, ctx: CouplingContext, k: int, sigma: float, t_lo: float, t_hi: float,
              points: int, budget: float = 1e-9, refinements: int = 2,
              tolerances: Tolerances = TOL) -> Tuple[CubicSpline, float]:
    """e^{σt}g_{β,k}(t) 在 [t_lo, t_hi] 对数等距网格上的三次样条, 在区间中点处与直接计算比对"""
    error = math.inf
    spline = None
    for _ in range(refinements + 1):
        ts = np.geomspace(t_lo, t_hi, points)
        scaled = np.real(transform_g_many(h, ctx, k, sigma, ts, tolerances=tolerances)) * np.exp(sigma * ts)
        spline = CubicSpline(ts, scaled)
        mids = np.sqrt(ts[:-1] * ts[1:])[::max(1, points // 12)]
        direct = np.real(transform_g_many(h, ctx, k, sigma, mids, tolerances=tolerances)) * np.exp(sigma * mids)
        error = float(np.max(np.abs(spline(mids) - direct)) / max(1e-300, float(np.max(np.abs(scaled)))))
        if error <= budget:
            break
        points *= 2
    else:
        logger.warning(f"g_{{β,{k}}} 样条相对误差 {error:.3e} 超过 {budget:g}")
    return spline, error


def _tuple_integral_task(args) -> float:
    """∫…∫ g(Σl + Σu²) Π kernel(u_j, l_j) du_j, 每轴 Gauss–Legendre"""
    spline, sigma, lengths, n_axis = args
    U = _axis_cutoff(sigma)
    nodes, weights = leggauss(n_axis)
    u = 0.5 * U * (nodes + 1.0)
    wu = 0.5 * U * weights
    t = np.array(sum(lengths))
    w = np.array(1.0)
    for l in lengths:
        t = np.add.outer(t, u * u)
        w = np.multiply.outer(w, wu * kernel(u, l))
    t = t.ravel()
    return float(np.sum(w.ravel() * spline(t) * np.exp(-sigma * t)))


def diffractive_sum(h: TestFunction, ctx: CouplingContext, orbit: OrbitSpectrum, k_max: int, nu: float,
                    sigma: float, n_axis: int = 20, spline_points: int = 96, ratio: Optional[float] = None,
                    max_workers: Optional[int] = None, tolerances: Tolerances = TOL) -> DiffractiveResult:
    """
    β^k(−1/(2π√2))^k Σ_{γ₁…γ_k} ∫_{l₁}^∞…∫_{l_k}^∞ g_{β,k}(t₁ + … + t_k) Π dt_j/√(cosh t_j − cosh l_j)。

    g_{β,k} 在 Im ρ = −σ 上计算 (与 Im ρ = −ν 之间无零点); 每条轴用 t = l + u² 代换。
    """
    if k_max < 1:
        raise DomainError("k_max 必须 ≥ 1", _MODULE, {"k_max": k_max})
    if orbit.is_empty or ctx.beta == 0.0:
        return DiffractiveResult([TermValue(0.0, 0.0) for _ in range(k_max)], 0.0, 0.0, 0.0, [0] * k_max)
    _check_contour(ctx, nu, tolerances.contour_collision_tol)
    C = fit_sigma_envelope(orbit)[0]
    if ratio is None:
        ratio = series_ratio_bound(ctx, orbit, sigma, envelope_C=C)
    if ratio >= 1.0:
        raise DivergenceRiskError("级数比值上界 ≥ 1, 拒绝求和", _MODULE, {"ratio": ratio, "sigma": sigma})
    majorant, tail, floor = _envelope_parts(ctx, orbit, sigma, C, 0.1)
    inner_ratio = majorant / floor
    delta = ratio - inner_ratio
    X = h.cutoff(sigma, 1e-13, derivative_only=True)
    rhos, w, _ = line_rule(sigma, X)
    abs_hp = float(np.sum(w * np.abs(h.prime(rhos))))

    U2 = _axis_cutoff(sigma) ** 2
    terms: List[TermValue] = []
    counts: List[int] = []
    worst_spline = 0.0
    for k in range(1, k_max + 1):
        tuples, pruned_mass = _multisets(orbit, k, sigma)
        counts.append(len(tuples))
        pruned_tail = 0.0
        if pruned_mass > 0.0:
            pruned_tail = (abs(ctx.beta * GREEN_PREFACTOR) ** k * transform_decay_envelope(h, ctx, k, sigma)
                           * pruned_mass)
            logger.debug(f"衍射项 k={k}: 剪除的多重集贡献上界 {pruned_tail:.3e}")
        if not tuples:
            terms.append(TermValue(0.0, abs_hp / TWO_PI * ratio ** (k - 1) * delta + pruned_tail))
            continue
        sums = [sum(ls) for ls, _ in tuples]
        spline, err = _g_spline(h, ctx, k, sigma, min(sums), max(sums) + k * U2, spline_points,
                                tolerances=tolerances)
        worst_spline = max(worst_spline, err)
        n = _axis_nodes(k, n_axis)
        integrals = parallel_map(_tuple_integral_task, [(spline, sigma, ls, n) for ls, _ in tuples], max_workers)
        total = math.fsum(weight * value for (_, weight), value in zip(tuples, integrals))
        value = (ctx.beta * GREEN_PREFACTOR) ** k * total
        term_tail = abs_hp / TWO_PI * ratio ** (k - 1) * delta + pruned_tail
        terms.append(TermValue(float(value), term_tail))
        logger.info(f"衍射项 k={k}: {value:.16g} ({len(tuples)} 个多重集, 样条误差 {err:.2e})")
    remainder = abs_hp / TWO_PI * ratio ** (k_max + 1) / ((k_max + 1) * (1.0 - ratio))
    return DiffractiveResult(terms, remainder, ratio, worst_spline, counts)


# ---------------------------------------------------------------- 谱侧

def _rho(lam) -> np.ndarray:
    return np.sqrt(np.asarray(lam, dtype=complex) - 0.25)


def _weyl_tail(h: TestFunction, spec: Spectrum, start: float) -> float:
    """2·(area/4π)∫_{start}^∞ |h(√(λ − 1/4))| dλ"""
    if spec.complete:
        return 0.0
    density = spec.area / (4.0 * math.pi)
    value, _ = integrate.quad(lambda lam: abs(complex(h(np.sqrt(complex(lam - 0.25)))))
                              , max(start, 0.25), math.inf, limit=200)
    return 2.0 * density * value


def spectral_side(h: TestFunction, spec: Spectrum, perturbed: PerturbedSpectrum,
                  expanded: bool = False) -> TermValue:
    """
    Σ_j {h(ρ_j^α) − h(ρ_j)}: 新零点与极点逐项配对, 继承的本征值相互抵消。

    expanded=True 时改为按重数展开的两张列表逐项求和。
    """
    new, poles = perturbed.paired_poles(spec)
    if expanded:
        pert, unpert = perturbed.expanded_pairs(spec)
        a, b = h(_rho(pert)), h(_rho(unpert))
    else:
        a, b = h(_rho(new)), h(_rho(poles))
    value = math.fsum(np.real(a)) - math.fsum(np.real(b))
    cut = float(poles[-1]) if poles.size else 0.0
    tail = _weyl_tail(h, spec, cut)
    return TermValue(value, tail)


def _distance_to_rectangle(points: np.ndarray, T: float, sigma: float) -> np.ndarray:
    corners = [complex(-T, -sigma), complex(T, -sigma), complex(T, sigma), complex(-T, sigma)]
    best = np.full(points.shape, np.inf)
    for a, b in zip(corners, corners[1:] + corners[:1]):
        d = b - a
        s = np.clip(np.real((points - a) * np.conj(d)) / abs(d) ** 2, 0.0, 1.0)
        best = np.minimum(best, np.abs(points - (a + s * d)))
    return best


def _edge_rule(start: complex, end: complex, width: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    length = abs(end - start)
    panels = max(1, int(math.ceil(length / width)))
    nodes, weights = leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    a, b = edges[:-1], edges[1:]
    t = ((0.5 * (a + b))[:, None] + (0.5 * (b - a))[:, None] * nodes[None, :]).ravel()
    wt = ((0.5 * (b - a))[:, None] * weights[None, :]).ravel()
    return start + t * (end - start), wt * (end - start)


@dataclass
class TruncatedCheck:
    lhs: float
    rhs: complex
    gap: float
    zeros_inside: int
    poles_inside: int
    nearest: float


def truncated_check(h: TestFunction, ctx: CouplingContext, spec: Spectrum, perturbed: PerturbedSpectrum, T: float,
                    sigma: float, step: float = 0.1, order: int = 16,
                    clearance: Optional[float] = None, tolerances: Tolerances = TOL) -> TruncatedCheck:
    """
    B(T) 内的点和 Σ h(零点) − Σ h(极点) (计入 ±ρ) 与
    (1/πi)[∫_{−T−iσ}^{T−iσ} + ∫_{T−iσ}^{T+iσ}] h·S′/S dρ 的比较。
    """
    if clearance is None:
        clearance = tolerances.boundary_clearance
    if sigma <= 0.5:
        raise DomainError("σ 必须大于 1/2", _MODULE, {"sigma": sigma})
    if 0.25 + T * T >= perturbed.lambda_max:
        raise DomainError("B(T) 超出已求解的范围 lambda_max", _MODULE,
                          {"T": T, "lambda_max": perturbed.lambda_max})
    zeros = _rho(perturbed.new_values())
    poles = _rho(spec.poles)
    zeros = np.concatenate([zeros, -zeros])
    poles = np.concatenate([poles, -poles])
    everything = np.concatenate([zeros, poles])
    dist = _distance_to_rectangle(everything, T, sigma)
    i = int(np.argmin(dist))
    if dist[i] < clearance:
        raise BoundaryProximityError("∂B(T) 离极点或零点太近", _MODULE,
                                     {"T": T, "nearest": complex(everything[i]), "distance": float(dist[i])})

    def inside(points):
        return points[(np.abs(points.real) < T) & (np.abs(points.imag) < sigma)]

    z_in, p_in = inside(zeros), inside(poles)
    lhs = math.fsum(np.real(h(z_in))) - math.fsum(np.real(h(p_in)))

    rhs = 0.0j
    for start, end in ((complex(-T, -sigma), complex(T, -sigma)), (complex(T, -sigma), complex(T, sigma))):
        width = min(step, max(0.5 * float(dist[i]), 1e-3))
        rho, drho = _edge_rule(start, end, width, order)
        values, _ = s_spectral_many(ctx, spec, rho, pole_tol=tolerances.pole_tol)
        derivs = s_prime_spectral_many(ctx, spec, rho, pole_tol=tolerances.pole_tol)
        rhs += complex(np.sum(drho * h(rho) * derivs / values))
    rhs /= 1j * math.pi
    gap = abs(lhs - rhs)
    logger.info(f"截断迹公式 T = {T:.8g}: lhs = {lhs:.12g}, rhs = {rhs.real:.12g}{rhs.imag:+.2e}i, gap = {gap:.3e}")
    return TruncatedCheck(lhs, rhs, gap, int(z_in.size), int(p_in.size), float(dist[i]))
