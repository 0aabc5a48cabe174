#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
上半平面模型: 点、双曲距离、Möbius 等距变换与 PSL(2,ℝ) 规范化
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.core.constants import TOL
from src.core.errors import DomainError

_MODULE = "hyperbolic"


@dataclass(frozen=True)
class HPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)) or self.y <= 0.0:
            raise DomainError(f"上半平面的点要求 y > 0, 收到 ({self.x}, {self.y})", _MODULE, {"y": self.y})

    @classmethod
    def from_complex(cls, z: complex) -> "HPoint":
        return cls(float(z.real), float(z.imag))

    def to_complex(self) -> complex:
        return complex(self.x, self.y)


def cosh_dist(z: HPoint, w: HPoint) -> float:
    """cosh d(z, w) = 1 + |z − w|²/(2 Im z Im w)"""
    return 1.0 + _half_chord(z, w)


def _half_chord(z: HPoint, w: HPoint) -> float:
    dx, dy = z.x - w.x, z.y - w.y
    return (dx * dx + dy * dy) / (2.0 * z.y * w.y)


def dist_from_u(u):
    """arccosh(1 + u), 对小 u 使用级数 √(2u)(1 − u/12) 以避免相消。接受标量或数组。"""
    u = np.asarray(u, dtype=float)
    small = u < 0.5 * TOL.small_dist ** 2
    safe = np.where(small, 0.0, u)
    out = np.where(small, np.sqrt(2.0 * u) * (1.0 - u / 12.0), np.log1p(safe + np.sqrt(safe * (safe + 2.0))))
    return float(out) if out.ndim == 0 else out


def dist(z: HPoint, w: HPoint) -> float:
    return dist_from_u(_half_chord(z, w))


@dataclass(frozen=True, eq=False)
class MoebiusMap:
    """
    实 2×2 单位行列式矩阵, 作用为 z ↦ (az + b)/(cz + d)。
    构造时做符号规范化(首个非零元为正), 相等性与哈希基于量化后的元素。
    """
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        entries = (self.a, self.b, self.c, self.d)
        if not all(math.isfinite(e) for e in entries):
            raise DomainError("Möbius 矩阵元素必须有限", _MODULE, {"entries": entries})
        det = self.a * self.d - self.b * self.c
        scale = max(1.0, abs(self.a * self.d) + abs(self.b * self.c))
        if abs(det - 1.0) > TOL.det_tol * scale:
            raise DomainError(f"行列式偏离 1: det = {det!r}", _MODULE, {"det": det})
        lead = next((e for e in entries if e != 0.0), 1.0)
        if lead < 0.0:
            for name, value in zip("abcd", entries):
                object.__setattr__(self, name, -value)

    @classmethod
    def from_entries(cls, entries, det_tol: float = TOL.det_load_tol) -> "MoebiusMap":
        """从文件读取时使用: 放宽行列式容差后除以 √det 重新归一。"""
        a, b, c, d = (float(e) for e in entries)
        det = a * d - b * c
        if not math.isfinite(det) or abs(det - 1.0) > det_tol:
            raise DomainError(f"生成元行列式 {det!r} 超出容差 {det_tol}", _MODULE, {"det": det})
        s = math.sqrt(det)
        return cls(a / s, b / s, c / s, d / s)

    @property
    def entries(self) -> Tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def key(self, quantum: float = TOL.dedup_quantum) -> Tuple[int, int, int, int]:
        return quantized_key(self.entries, quantum)

    def is_identity(self, quantum: float = TOL.dedup_quantum) -> bool:
        return self.key(quantum) == IDENTITY.key(quantum)

    def __eq__(self, other):
        if not isinstance(other, MoebiusMap):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return compose(self, other)


def quantized_key(entries, quantum: float = TOL.dedup_quantum) -> Tuple[int, int, int, int]:
    q = [int(round(e / quantum)) for e in entries]
    lead = next((v for v in q if v != 0), 1)
    if lead < 0:
        q = [-v for v in q]
    return tuple(q)


IDENTITY = MoebiusMap(1.0, 0.0, 0.0, 1.0)


def apply(m: MoebiusMap, z: HPoint) -> HPoint:
    zc = z.to_complex()
    den = m.c * zc + m.d
    w = (m.a * zc + m.b) / den
    # Im w = y/|cz+d|², 直接用该式保证虚部为正
    return HPoint(w.real, z.y / (den.real * den.real + den.imag * den.imag))


def compose(m: MoebiusMap, n: MoebiusMap) -> MoebiusMap:
    a = m.a * n.a + m.b * n.c
    b = m.a * n.b + m.b * n.d
    c = m.c * n.a + m.d * n.c
    d = m.c * n.b + m.d * n.d
    det = a * d - b * c
    s = math.sqrt(det) if det > 0.0 else 1.0
    return MoebiusMap(a / s, b / s, c / s, d / s)


def invert(m: MoebiusMap) -> MoebiusMap:
    return MoebiusMap(m.d, -m.b, -m.c, m.a)


def hyperbolic_translation(length: float) -> MoebiusMap:
    """沿虚轴平移 length 的双曲元 diag(e^{ℓ/2}, e^{−ℓ/2})"""
    h = 0.5 * length
    return MoebiusMap(math.exp(h), 0.0, 0.0, math.exp(-h))


def rotation_about_i(theta: float) -> MoebiusMap:
    """绕 i 转角 theta 的椭圆元"""
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    return MoebiusMap(c, s, -s, c)
