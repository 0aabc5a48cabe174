#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
项目共享常量、枚举与容差记录
"""
import math
from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Any, ClassVar, Dict, Tuple


class RunMode(Enum):
    """命令行运行模式"""
    ORBITS = "orbits"
    EIGENS = "eigens"
    TRACE_TRUNCATED = "trace-truncated"
    TRACE_GEOMETRIC = "trace-geometric"
    DIAGNOSTICS = "diagnostics"
    TESTFN = "testfn"

    @classmethod
    def from_str(cls, s: str):
        for item in cls:
            if item.value == s:
                return item
        raise ValueError(f"未知运行模式: '{s}'")


class BetaConvention(Enum):
    """耦合常数重整化约定: minus-c0 为 β⁻¹ = α⁻¹ − c₀, plus-c0 为 β⁻¹ = α⁻¹ + c₀"""
    MINUS_C0 = "minus-c0"
    PLUS_C0 = "plus-c0"

    @classmethod
    def from_str(cls, s: str):
        for item in cls:
            if item.value == s:
                return item
        raise ValueError(f"未知的 β 约定: '{s}'")


class EigenKind(Enum):
    """扰动谱条目类型"""
    NEW = "new"
    INHERITED = "inherited"
    GROUND = "ground"

    @classmethod
    def from_str(cls, s: str):
        for item in cls:
            if item.value == s:
                return item
        raise ValueError(f"未知的本征值类型: '{s}'")


@dataclass(frozen=True)
class Tolerances:
    """集中管理的数值容差。所有模块默认从 TOL 读取。"""
    det_tol: float = 1e-12
    det_load_tol: float = 1e-9
    dedup_quantum: float = 1e-9
    fix_tol: float = 1e-9
    cluster_tol: float = 1e-8
    small_dist: float = 1e-6
    pole_tol: float = 1e-8
    im_rho_margin: float = 1e-3
    singular_coupling_tol: float = 1e-10
    contour_collision_tol: float = 1e-6
    boundary_clearance: float = 1e-4
    bisect_xtol: float = 1e-12
    c0_tail_tol: float = 1e-10
    residue_imag_tol: float = 1e-9

    # 数值内部使用, 不接受设置文件覆盖
    INTERNAL: ClassVar[Tuple[str, ...]] = ("det_tol", "small_dist")

    def updated(self, overrides: Dict[str, Any]) -> "Tolerances":
        known = {f.name for f in fields(self)} - set(self.INTERNAL)
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"未知或不可配置的容差字段: {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})


TOL = Tolerances()

TWO_PI = 2.0 * math.pi
# 自由格林函数积分表示的前置常数 −1/(2π√2)
GREEN_PREFACTOR = -1.0 / (2.0 * math.pi * math.sqrt(2.0))
# e^{-37} 约为 1e-16, 用于指数截断
EXP_CUTOFF = 37.0
WORKERS_ENV_VAR = "SCATTERTRACE_WORKERS"
