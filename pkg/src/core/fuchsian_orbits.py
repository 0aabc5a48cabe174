#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Fuchsian 群的字展开与衍射轨道长度谱

广度优先展开生成元及其逆的乘积, 按量化后的 PSL 元素去重, 统计 z₀ 的稳定化子阶数,
并输出半径 R 内的长度 l = d(γz₀, z₀) 及重数。
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np

from src.core.constants import TOL
from src.core.errors import ConfigurationError, DomainError, IncompleteEnumerationError
from src.core.hyperbolic import HPoint, MoebiusMap, dist, dist_from_u, apply, invert

logger = logging.getLogger(__name__)
_MODULE = "fuchsian_orbits"
_INT_LIMIT = 2.0 ** 62


@dataclass(frozen=True)
class GroupSpec:
    generators: Tuple[MoebiusMap, ...]
    z0: HPoint
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        if not self.generators:
            raise ConfigurationError("生成元列表为空", _MODULE, {"label": self.label})
        for idx, g in enumerate(self.generators):
            if not isinstance(g, MoebiusMap):
                raise ConfigurationError(f"第 {idx} 个生成元不是 MoebiusMap", _MODULE)
            if g.is_identity():
                raise ConfigurationError(f"第 {idx} 个生成元是恒等元", _MODULE, {"label": self.label, "index": idx})

    def generators_with_inverses(self) -> List[MoebiusMap]:
        out: List[MoebiusMap] = []
        seen = set()
        for g in self.generators:
            for h in (g, invert(g)):
                if h.key() not in seen:
                    seen.add(h.key())
                    out.append(h)
        return out

    def max_displacement(self) -> float:
        return max(dist(apply(g, self.z0), self.z0) for g in self.generators)


@dataclass(frozen=True, eq=False)
class OrbitSpectrum:
    """升序排列的轨道长度与重数, 稳定化子阶数 m_Γ, 最小长度 τ₀ 与枚举半径 R"""
    lengths: np.ndarray
    mults: np.ndarray
    stabilizer_order: int
    radius: float
    label: str = ""
    tau0: float = field(init=False)

    def __post_init__(self):
        lengths = np.array(self.lengths, dtype=float).reshape(-1)
        mults = np.array(self.mults, dtype=np.int64).reshape(-1)
        if lengths.shape != mults.shape:
            raise ConfigurationError("长度与重数数组长度不一致", _MODULE)
        if self.stabilizer_order < 1:
            raise ConfigurationError("稳定化子阶数必须 ≥ 1", _MODULE, {"stabilizer_order": self.stabilizer_order})
        if lengths.size:
            if np.any(lengths <= 0.0) or np.any(lengths > self.radius * (1.0 + 1e-12)):
                raise ConfigurationError("轨道长度必须位于 (0, R]", _MODULE, {"radius": self.radius})
            if np.any(np.diff(lengths) <= 0.0):
                raise ConfigurationError("轨道长度必须严格递增", _MODULE)
            if np.any(mults < 1):
                raise ConfigurationError("重数必须 ≥ 1", _MODULE)
        lengths.setflags(write=False)
        mults.setflags(write=False)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "mults", mults)
        object.__setattr__(self, "tau0", float(lengths[0]) if lengths.size else math.inf)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[float, int]], stabilizer_order: int = 1,
                   radius: Optional[float] = None, label: str = "") -> "OrbitSpectrum":
        pairs = sorted(pairs)
        lengths = [p[0] for p in pairs]
        mults = [p[1] for p in pairs]
        if radius is None:
            radius = lengths[-1] if lengths else 0.0
        return cls(np.array(lengths, dtype=float), np.array(mults, dtype=np.int64), stabilizer_order, radius, label)

    @property
    def is_empty(self) -> bool:
        return self.lengths.size == 0

    @property
    def pairs(self) -> List[Tuple[float, int]]:
        return [(float(l), int(m)) for l, m in zip(self.lengths, self.mults)]

    @property
    def element_count(self) -> int:
        return int(self.mults.sum())

    def truncated(self, radius: float) -> "OrbitSpectrum":
        keep = self.lengths <= radius
        return OrbitSpectrum(self.lengths[keep], self.mults[keep], self.stabilizer_order, radius, self.label)

    def histogram(self, bin_width: float) -> Tuple[np.ndarray, np.ndarray]:
        """长度直方图(按重数加权), 返回 (bin_edges, counts)"""
        top = max(self.radius, bin_width)
        edges = np.arange(0.0, top + bin_width, bin_width)
        counts, edges = np.histogram(self.lengths, bins=edges, weights=self.mults)
        return edges, counts.astype(np.int64)


def _normalize_rows(mats: np.ndarray) -> np.ndarray:
    det = mats[:, 0] * mats[:, 3] - mats[:, 1] * mats[:, 2]
    return mats / np.sqrt(det)[:, None]


def _signed_keys(mats: np.ndarray, quantum: float) -> Tuple[np.ndarray, np.ndarray]:
    """逐行量化并做 PSL 符号规范化, 返回 (整数键, 同步翻转后的浮点矩阵)"""
    scaled = mats / quantum
    if np.max(np.abs(scaled), initial=0.0) >= _INT_LIMIT:
        raise ConfigurationError("矩阵元素过大, 无法量化去重; 请减小半径", _MODULE,
                                 {"max_entry": float(np.max(np.abs(mats)))})
    q = np.rint(scaled).astype(np.int64)
    nonzero = q != 0
    lead = np.argmax(nonzero, axis=1)
    sign = np.sign(q[np.arange(q.shape[0]), lead])
    sign[sign == 0] = 1
    return q * sign[:, None], mats * sign[:, None]


def _cluster(lengths: np.ndarray, cluster_tol: float) -> List[Tuple[float, int]]:
    if lengths.size == 0:
        return []
    lengths = np.sort(lengths)
    out: List[Tuple[float, int]] = []
    start = 0
    for i in range(1, lengths.size + 1):
        if i == lengths.size or lengths[i] - lengths[i - 1] > cluster_tol * max(1.0, lengths[i - 1]):
            block = lengths[start:i]
            out.append((float(block.mean()), int(block.size)))
            start = i
    return out


def enumerate_orbit(group: GroupSpec, radius: float, cluster_tol: float = TOL.cluster_tol,
                    max_words: int = 2_000_000, fix_tol: float = TOL.fix_tol,
                    quantum: float = TOL.dedup_quantum) -> OrbitSpectrum:
    """
    广度优先枚举 d(γz₀, z₀) ≤ R 的所有群元。
    剪枝半径为 R + 2·max 生成元位移, 超出剪枝半径的字不再向下展开。
    """
    if radius <= 0.0:
        raise DomainError("枚举半径必须为正", _MODULE, {"radius": radius})
    if cluster_tol <= 0.0:
        raise DomainError("聚类容差必须为正", _MODULE, {"cluster_tol": cluster_tol})

    gens = np.array([g.entries for g in group.generators_with_inverses()], dtype=float)
    z0 = group.z0.to_complex()
    y0 = group.z0.y
    prune_radius = radius + 2.0 * group.max_displacement()
    logger.info(f"开始枚举 '{group.label}': R = {radius:.6g}, 剪枝半径 = {prune_radius:.6g}, 生成元(含逆) {len(gens)} 个")

    identity_key = (int(round(1.0 / quantum)), 0, 0, int(round(1.0 / quantum)))
    visited = {identity_key}
    frontier = np.array([[1.0, 0.0, 0.0, 1.0]])
    stabilizer = 1
    raw_lengths: List[np.ndarray] = []
    depth = 0

    while frontier.shape[0]:
        depth += 1
        a, b, c, d = (frontier[:, i][:, None] for i in range(4))
        ga, gb, gc, gd = (gens[:, i][None, :] for i in range(4))
        prods = np.stack([a * ga + b * gc, a * gb + b * gd, c * ga + d * gc, c * gb + d * gd], axis=-1).reshape(-1, 4)
        keys, prods = _signed_keys(_normalize_rows(prods), quantum)

        fresh = []
        for i, key in enumerate(map(tuple, keys.tolist())):
            if key not in visited:
                visited.add(key)
                fresh.append(i)
        if not fresh:
            break
        new = prods[fresh]
        w = (new[:, 0] * z0 + new[:, 1]) / (new[:, 2] * z0 + new[:, 3])
        u = np.abs(w - z0) ** 2 / (2.0 * y0 * w.imag)
        dists = np.atleast_1d(dist_from_u(u))

        fixed = dists < fix_tol
        stabilizer += int(fixed.sum())
        inside = (~fixed) & (dists <= radius)
        raw_lengths.append(dists[inside])
        frontier = new[dists <= prune_radius]
        logger.debug(f"深度 {depth}: 新元素 {len(fresh)}, 前沿 {frontier.shape[0]}, 已访问 {len(visited)}")

        if len(visited) > max_words:
            partial = OrbitSpectrum.from_pairs(_cluster(np.concatenate(raw_lengths), cluster_tol),
                                               stabilizer, radius, group.label)
            raise IncompleteEnumerationError(f"字数超出预算 {max_words}, 枚举不完整", partial, _MODULE,
                                             {"visited": len(visited), "depth": depth})

    lengths = np.concatenate(raw_lengths) if raw_lengths else np.empty(0)
    spectrum = OrbitSpectrum.from_pairs(_cluster(lengths, cluster_tol), stabilizer, radius, group.label)
    logger.info(f"枚举完成: {spectrum.element_count} 个轨道点, {spectrum.lengths.size} 个不同长度, "
                f"m_Γ = {stabilizer}, τ₀ = {spectrum.tau0:.10g}")
    return spectrum


def orbit_count_constant(spec: OrbitSpectrum, eps_growth: float) -> float:
    """拟合 N(r) ≤ K·e^{(1+ε)r} 中的常数 K"""
    floor = math.exp(-(1.0 + eps_growth) * spec.radius) if math.isfinite(spec.radius) else 0.0
    if spec.is_empty:
        return floor
    cum = np.cumsum(spec.mults)
    return max(floor, float(np.max(cum * np.exp(-(1.0 + eps_growth) * spec.lengths))))


def orbit_tail_bound(spec: OrbitSpectrum, sigma: float, eps_growth: float = 0.1) -> float:
    """
    Σ_{τ>R} |G_{1/2+iρ}(z₀, γz₀)| 在 Im ρ = −σ 上的上界。

    逐项用 |G| ≤ e^{−στ}/√(8πσ sinh τ), 再对计数函数 N(r) ≤ K e^{(1+ε)r} 分部求和,
    得到 K(σ + coth R/2) e^{(1/2+ε−σ)R} / ((σ − 1/2 − ε)√(4πσ(1 − e^{−2R})))。
    σ ≤ 1/2 + ε 时把 ε 缩到 (σ − 1/2)/2, 界仍然成立但常数 K 随之重新拟合。
    """
    if sigma <= 0.5:
        raise DomainError("σ 必须大于 1/2", _MODULE, {"sigma": sigma})
    if sigma <= 0.5 + eps_growth:
        shrunk = 0.5 * (sigma - 0.5)
        logger.debug(f"σ = {sigma:g} 不大于 1/2 + ε, 增长指数 ε 由 {eps_growth:g} 缩为 {shrunk:g}")
        eps_growth = shrunk
    R = spec.radius
    if not math.isfinite(R):
        return 0.0
    if R <= 0.0:
        return math.inf
    K = orbit_count_constant(spec, eps_growth)
    coth = 1.0 / math.tanh(R)
    return (K * (sigma + 0.5 * coth) * math.exp((0.5 + eps_growth - sigma) * R)
            / ((sigma - 0.5 - eps_growth) * math.sqrt(4.0 * math.pi * sigma * (-math.expm1(-2.0 * R)))))
