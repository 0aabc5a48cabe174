#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
工具包异常层次

每个异常携带来源模块名与上下文字典(出错的量、最近的极点/零点等), 命令行入口据此输出诊断信息。
"""
from typing import Any, Dict, Optional


class ScatterTraceError(Exception):
    def __init__(self, message: str, module: str = "", context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.module = module
        self.context = dict(context or {})

    def describe(self) -> str:
        ctx = ", ".join(f"{k}={v}" for k, v in self.context.items())
        head = f"[{self.module}] " if self.module else ""
        return f"{head}{self}" + (f" ({ctx})" if ctx else "")


class DomainError(ScatterTraceError, ValueError):
    """参数超出运算定义域"""


class ConfigurationError(ScatterTraceError, ValueError):
    """配置或群生成元不合法"""


class ValidationError(ConfigurationError):
    """输入文件校验失败"""


class TruncationMismatchError(ScatterTraceError, ValueError):
    """谱两侧截断不一致"""


class NoZeroError(DomainError):
    """β = 0 时 1 + mβψ 没有零点"""


class SingularCouplingError(DomainError):
    """耦合常数落在重整化的奇点上"""


class PoleProximityError(DomainError):
    def __init__(self, message: str, index: int, distance: float, module: str = "spectral_function",
                 context: Optional[Dict[str, Any]] = None):
        ctx = {"index": index, "distance": distance}
        ctx.update(context or {})
        super().__init__(message, module, ctx)
        self.index = index
        self.distance = distance


class ContourCollisionError(DomainError):
    """积分路径与分母零点 −iv_β 重合"""


class BoundaryProximityError(DomainError):
    """∂B(T) 离极点或零点太近"""


class ConstructionError(DomainError):
    """附录测试函数的二进 T 序列不满足约束"""


class IncompleteEnumerationError(ScatterTraceError, RuntimeError):
    def __init__(self, message: str, partial, module: str = "fuchsian_orbits",
                 context: Optional[Dict[str, Any]] = None):
        super().__init__(message, module, context)
        self.partial = partial


class ResolutionError(ScatterTraceError, RuntimeError):
    """数值分辨率不足(辐角跳变、卷绕数无法确定等)"""


class DivergenceRiskError(ScatterTraceError, RuntimeError):
    """对数级数的比值上界不小于 1"""
