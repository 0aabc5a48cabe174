#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
输入输出数据管理: 群文件 (JSON)、谱文件与扰动谱文件 (CSV)、轨道长度表 (CSV)

所有 CSV 经 pandas 读写, 浮点数以 17 位有效数字输出, 重新读入后与写出的数据逐位一致。
"""
import json
import logging
import math
import os
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.core.constants import EigenKind, TOL
from src.core.eigen_solver import NewEigenvalue, PerturbedSpectrum
from src.core.errors import ScatterTraceError, ValidationError
from src.core.fuchsian_orbits import GroupSpec, OrbitSpectrum
from src.core.hyperbolic import HPoint, MoebiusMap
from src.core.spectral_function import Spectrum

logger = logging.getLogger(__name__)
_MODULE = "data_manager"

FLOAT_FORMAT = "%.17g"
SPECTRUM_COLUMNS = ["lambda", "mult", "weight"]
PERTURBED_COLUMNS = ["lambda", "mult", "type", "lo", "hi"]
ORBIT_COLUMNS = ["length", "mult"]


def _read_metadata_line(path: str) -> Dict[str, str]:
    """首行形如 'area=12.566,complete=1' 的元数据"""
    if not os.path.exists(path):
        raise ValidationError(f"文件不存在: {path}", _MODULE, {"path": path})
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline().strip()
    meta = {}
    for item in first.split(","):
        if "=" not in item:
            raise ValidationError(f"元数据行格式错误: '{first}'", _MODULE, {"path": path})
        key, value = item.split("=", 1)
        meta[key.strip()] = value.strip()
    return meta


def _read_table(path: str, columns, skip_meta: bool) -> pd.DataFrame:
    if not os.path.exists(path):
        raise ValidationError(f"文件不存在: {path}", _MODULE, {"path": path})
    try:
        df = pd.read_csv(path, skiprows=1 if skip_meta else 0, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ValidationError(f"无法解析 CSV: {e}", _MODULE, {"path": path}) from e
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise ValidationError(f"缺少列: {missing}", _MODULE, {"path": path, "columns": list(df.columns)})
    return df


# ---------------------------------------------------------------- 群

def load_group(path: str, det_tol: float = TOL.det_load_tol) -> GroupSpec:
    """读取 {label, z0: [x, y], generators: [[a, b, c, d], ...]}"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise ValidationError(f"群文件不存在: {path}", _MODULE, {"path": path}) from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"群文件不是合法 JSON: {e}", _MODULE, {"path": path}) from e
    for key in ("z0", "generators"):
        if key not in raw:
            raise ValidationError(f"群文件缺少字段 '{key}'", _MODULE, {"path": path})
    try:
        x, y = (float(v) for v in raw["z0"])
        z0 = HPoint(x, y)
        gens = []
        for idx, entries in enumerate(raw["generators"]):
            if len(entries) != 4:
                raise ValidationError(f"第 {idx} 个生成元应有 4 个元素", _MODULE, {"path": path})
            gens.append(MoebiusMap.from_entries(entries, det_tol=det_tol))
    except ValidationError:
        raise
    except (ScatterTraceError, TypeError, ValueError) as e:
        raise ValidationError(f"群文件内容无效: {e}", _MODULE, {"path": path}) from e
    group = GroupSpec(tuple(gens), z0, str(raw.get("label", os.path.splitext(os.path.basename(path))[0])))
    logger.info(f"已读取群 '{group.label}': {len(gens)} 个生成元, z₀ = ({x:g}, {y:g})")
    return group


def save_group(group: GroupSpec, path: str):
    payload = {
        "label": group.label,
        "z0": [group.z0.x, group.z0.y],
        "generators": [list(g.entries) for g in group.generators],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=4, ensure_ascii=False)


# ---------------------------------------------------------------- 谱

def load_spectrum(path: str) -> Spectrum:
    meta = _read_metadata_line(path)
    if "area" not in meta:
        raise ValidationError("谱文件元数据缺少 area", _MODULE, {"path": path})
    try:
        area = float(meta["area"])
    except ValueError as e:
        raise ValidationError(f"area 不是数值: '{meta['area']}'", _MODULE, {"path": path}) from e
    if not (area > 0.0 and math.isfinite(area)):
        raise ValidationError("面积必须为正", _MODULE, {"area": area})
    complete = meta.get("complete", "0") in ("1", "true", "True")
    df = _read_table(path, SPECTRUM_COLUMNS, skip_meta=True)
    try:
        spec = Spectrum(df["lambda"].to_numpy(dtype=float), df["mult"].to_numpy(dtype=np.int64),
                        df["weight"].to_numpy(dtype=float), area, complete)
    except (TypeError, ValueError) as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError(f"谱数据无效: {e}", _MODULE, {"path": path}) from e
    logger.info(f"已读取谱: {len(spec)} 个不同本征值, 面积 {area:g}, {'有限模型' if complete else '截断谱'}")
    return spec


def save_spectrum(spec: Spectrum, path: str):
    df = pd.DataFrame({"lambda": spec.lambdas, "mult": spec.mults, "weight": spec.weights})
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"area={float(spec.area)!r},complete={int(spec.complete)}\n")
        df.to_csv(f, index=False, float_format=FLOAT_FORMAT)


def save_perturbed(perturbed: PerturbedSpectrum, path: str):
    rows = [(e.mu, 1, EigenKind.NEW.value, e.lo, e.hi) for e in perturbed.new_eigs]
    rows += [(lam, m, EigenKind.INHERITED.value, np.nan, np.nan) for lam, m in perturbed.inherited]
    if perturbed.ground is not None:
        rows.append((perturbed.ground, 1, EigenKind.GROUND.value, np.nan, np.nan))
    df = pd.DataFrame(rows, columns=PERTURBED_COLUMNS).sort_values("lambda", kind="stable")
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"area={float(perturbed.area)!r},lambda_max={float(perturbed.lambda_max)!r}\n")
        df.to_csv(f, index=False, float_format=FLOAT_FORMAT)


def load_perturbed(path: str) -> PerturbedSpectrum:
    meta = _read_metadata_line(path)
    df = _read_table(path, PERTURBED_COLUMNS, skip_meta=True)
    new, inherited, ground = [], [], None
    for row in df.to_dict("records"):
        try:
            kind = EigenKind.from_str(str(row["type"]))
        except ValueError as e:
            raise ValidationError(str(e), _MODULE, {"path": path}) from e
        if kind is EigenKind.NEW:
            new.append(NewEigenvalue(float(row["lambda"]), float(row["lo"]), float(row["hi"])))
        elif kind is EigenKind.INHERITED:
            inherited.append((float(row["lambda"]), int(row["mult"])))
        else:
            ground = float(row["lambda"])
    return PerturbedSpectrum(tuple(new), tuple(inherited), ground, float(meta.get("lambda_max", "inf")),
                             float(meta.get("area", "1.0")))


# ---------------------------------------------------------------- 轨道长度表

def save_orbit(orbit: OrbitSpectrum, path: str):
    df = pd.DataFrame({"length": orbit.lengths, "mult": orbit.mults})
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"radius={float(orbit.radius)!r},stabilizer_order={orbit.stabilizer_order},label={orbit.label}\n")
        df.to_csv(f, index=False, float_format=FLOAT_FORMAT)


def load_orbit(path: str) -> OrbitSpectrum:
    meta = _read_metadata_line(path)
    df = _read_table(path, ORBIT_COLUMNS, skip_meta=True)
    try:
        return OrbitSpectrum(df["length"].to_numpy(dtype=float), df["mult"].to_numpy(dtype=np.int64),
                             int(meta.get("stabilizer_order", "1")), float(meta["radius"]), meta.get("label", ""))
    except (KeyError, ValueError, ScatterTraceError) as e:
        raise ValidationError(f"轨道表无效: {e}", _MODULE, {"path": path}) from e


def write_table(df: pd.DataFrame, path: str):
    """结果表 (绘图数据) 输出"""
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"已写出 {path} ({len(df)} 行)")


def read_table(path: str, columns: Optional[Any] = None) -> pd.DataFrame:
    return _read_table(path, columns or [], skip_meta=False)
