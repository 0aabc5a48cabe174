#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
结果导出处理器: JSON 报告与绘图用的 CSV 表
"""
import json
import logging
import math
import os
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.core.data_manager import write_table

logger = logging.getLogger(__name__)


def _jsonable(value: Any) -> Any:
    """numpy 标量/数组与非有限浮点数转为 JSON 可表示的值 (inf → "inf")"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, complex):
        return {"re": _jsonable(value.real), "im": _jsonable(value.imag)}
    return value


class ExportHandler:
    """把一次运行的报告与表格写入输出目录; 相同输入得到逐字节相同的文件。"""

    def __init__(self, output_dir: str):
        self.output_dir = output_dir
        self.written: list = []
        os.makedirs(self.output_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def write_report(self, report: Dict[str, Any], name: str = "report.json") -> str:
        target = self.path(name)
        with open(target, "w", encoding="utf-8", newline="\n") as f:
            json.dump(_jsonable(report), f, indent=2, ensure_ascii=False, sort_keys=True, allow_nan=False)
            f.write("\n")
        self.written.append(target)
        logger.info(f"报告已写出: {target}")
        return target

    def write_table(self, df: pd.DataFrame, name: str) -> str:
        target = self.path(name)
        write_table(df, target)
        self.written.append(target)
        return target

    def write_complex_series(self, name: str, x, values, extra: Optional[Dict[str, Any]] = None) -> str:
        """沿路径的复数值表: 列 x, re, im, abs"""
        values = np.asarray(values, dtype=complex)
        columns = {"x": np.asarray(x, dtype=float), "re": values.real, "im": values.imag, "abs": np.abs(values)}
        columns.update(extra or {})
        return self.write_table(pd.DataFrame(columns), name)
