#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
配置管理处理器
"""
import copy
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from src.core.constants import BetaConvention, RunMode, TOL, Tolerances
from src.core.errors import ConfigurationError

logger = logging.getLogger(__name__)
_MODULE = "config_handler"

DEFAULT_SETTINGS_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))),
                                     "settings", "default.json")


def parse_alpha(token) -> float:
    """α 取有限实数或 'inf' / '-inf' (对应 β = 1/c₀)"""
    if isinstance(token, (int, float)):
        value = float(token)
    else:
        text = str(token).strip().lower()
        if text in ("inf", "+inf", "infinity"):
            return math.inf
        if text in ("-inf", "-infinity"):
            return -math.inf
        try:
            value = float(text)
        except ValueError as e:
            raise ConfigurationError(f"无法解析耦合常数 α = '{token}'", _MODULE) from e
    if math.isnan(value):
        raise ConfigurationError("α 不能为 NaN", _MODULE)
    return value


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    """一次运行所需的全部参数; 由 ConfigHandler.build 生成"""
    mode: RunMode
    output_dir: str = "results"
    group_path: Optional[str] = None
    orbit_path: Optional[str] = None
    spectrum_path: Optional[str] = None
    alpha: float = 1.0
    beta: Optional[float] = None
    m: Optional[int] = None
    beta_convention: BetaConvention = BetaConvention.MINUS_C0
    radius: float = 6.0
    max_words: int = 2_000_000
    eps_growth: float = 0.1
    histogram_bin: float = 0.25
    lambda_max: Optional[float] = None
    safety_factor: float = 4.0
    safe_heights: int = 3
    k_max: int = 4
    sigma: Optional[float] = None
    nu: Optional[float] = None
    sigma_cap: float = 1000.0
    sigma_target_ratio: float = 0.9
    n_axis: int = 20
    spline_points: int = 96
    T: Optional[float] = None
    half_line: bool = False
    a: float = 3.0
    power: int = 4
    eps: float = 0.9
    n_w: int = 17
    n_segment: int = 64
    use_gpu: bool = False
    parallel_threshold: int = 8
    seed: int = 0
    tolerances: Tolerances = field(default_factory=lambda: TOL)

    def validate(self) -> "RunConfig":
        checks = [
            (self.radius > 0.0, "radius 必须为正"),
            (self.max_words > 0, "max_words 必须为正"),
            (0.0 < self.eps_growth < 1.0, "eps_growth 必须位于 (0, 1)"),
            (self.histogram_bin > 0.0, "histogram_bin 必须为正"),
            (self.lambda_max is None or self.lambda_max > 0.0, "lambda_max 必须为正"),
            (self.safety_factor >= 1.0, "safety_factor 必须 ≥ 1"),
            (self.safe_heights >= 1, "safe_heights 必须 ≥ 1"),
            (1 <= self.k_max <= 8, "k_max 必须位于 [1, 8]"),
            (self.sigma is None or self.sigma > 0.5, "σ 必须大于 1/2"),
            (self.nu is None or self.nu >= 0.0, "ν 必须非负"),
            (self.sigma_cap > 1.0, "sigma_cap 必须大于 1"),
            (0.0 < self.sigma_target_ratio < 1.0, "sigma_target_ratio 必须位于 (0, 1)"),
            (self.n_axis >= 4, "n_axis 必须 ≥ 4"),
            (self.spline_points >= 16, "spline_points 必须 ≥ 16"),
            (self.T is None or self.T > 0.0, "T 必须为正"),
            (self.a > 0.0, "a 必须为正"),
            (self.power >= 2, "power 必须 ≥ 2"),
            (0.0 < self.eps < 1.0, "eps 必须位于 (0, 1)"),
            (self.n_w >= 2 and self.n_segment >= 2, "诊断网格点数必须 ≥ 2"),
            (self.m is None or self.m >= 1, "m 必须 ≥ 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigurationError(message, _MODULE, {"mode": self.mode.value})
        if self.mode is RunMode.ORBITS and not self.group_path:
            raise ConfigurationError("orbits 模式需要 --group", _MODULE)
        if self.mode in (RunMode.EIGENS, RunMode.TRACE_TRUNCATED) and not self.spectrum_path:
            raise ConfigurationError(f"{self.mode.value} 模式需要 --spectrum", _MODULE)
        if self.mode is RunMode.TRACE_GEOMETRIC and not (self.group_path or self.orbit_path):
            raise ConfigurationError("trace-geometric 模式需要 --group 或 --orbit", _MODULE)
        return self


# settings 文件中的 (section, key) 与 RunConfig 字段的对应
_SETTINGS_FIELDS = {
    ("orbits", "radius"): "radius",
    ("orbits", "max_words"): "max_words",
    ("orbits", "eps_growth"): "eps_growth",
    ("orbits", "histogram_bin"): "histogram_bin",
    ("spectral", "beta_convention"): "beta_convention",
    ("spectral", "lambda_max"): "lambda_max",
    ("spectral", "safety_factor"): "safety_factor",
    ("spectral", "safe_heights"): "safe_heights",
    ("trace", "k_max"): "k_max",
    ("trace", "sigma"): "sigma",
    ("trace", "nu"): "nu",
    ("trace", "sigma_cap"): "sigma_cap",
    ("trace", "sigma_target_ratio"): "sigma_target_ratio",
    ("trace", "n_axis"): "n_axis",
    ("trace", "spline_points"): "spline_points",
    ("trace", "T"): "T",
    ("trace", "half_line"): "half_line",
    ("test_function", "a"): "a",
    ("test_function", "power"): "power",
    ("test_function", "eps"): "eps",
    ("diagnostics", "n_w"): "n_w",
    ("diagnostics", "n_segment"): "n_segment",
    ("performance", "use_gpu"): "use_gpu",
    ("performance", "parallel_threshold"): "parallel_threshold",
}


class ConfigHandler:
    """读取默认设置, 合并用户设置文件, 再叠加命令行参数, 生成不可变的 RunConfig。"""

    def __init__(self, default_path: str = DEFAULT_SETTINGS_PATH):
        self.default_path = default_path
        self.settings: Dict[str, Any] = self._load_json(default_path) if os.path.exists(default_path) else {}
        self.current_config_file: Optional[str] = None

    @staticmethod
    def _load_json(path: str) -> Dict[str, Any]:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError as e:
            raise ConfigurationError(f"设置文件不存在: {path}", _MODULE) from e
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"无法解析设置文件 '{path}': {e}", _MODULE) from e
        if not isinstance(data, dict):
            raise ConfigurationError("设置文件的顶层必须是对象", _MODULE, {"path": path})
        return data

    def load_user_settings(self, path: str):
        self.settings = deep_merge(self.settings, self._load_json(path))
        self.current_config_file = path
        logger.info(f"已加载设置: {os.path.basename(path)}")

    def _values_from_settings(self) -> Dict[str, Any]:
        values: Dict[str, Any] = {}
        for (section, key), name in _SETTINGS_FIELDS.items():
            block = self.settings.get(section, {})
            if key in block and block[key] is not None:
                values[name] = block[key]
        return values

    def build(self, mode: str, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        """overrides 中值为 None 的项视为未指定"""
        try:
            run_mode = RunMode.from_str(mode)
        except ValueError as e:
            raise ConfigurationError(str(e), _MODULE) from e
        values = self._values_from_settings()
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})

        if "beta_convention" in values and not isinstance(values["beta_convention"], BetaConvention):
            try:
                values["beta_convention"] = BetaConvention.from_str(str(values["beta_convention"]))
            except ValueError as e:
                raise ConfigurationError(str(e), _MODULE) from e
        if "alpha" in values:
            values["alpha"] = parse_alpha(values["alpha"])

        try:
            tolerances = TOL.updated(self.settings.get("tolerances", {}))
        except ValueError as e:
            raise ConfigurationError(str(e), _MODULE) from e

        known = set(RunConfig.__dataclass_fields__)
        unknown = set(values) - known
        if unknown:
            raise ConfigurationError(f"未知的配置项: {sorted(unknown)}", _MODULE)
        cfg = RunConfig(mode=run_mode, tolerances=tolerances, **values)
        return cfg.validate()

    def save_config(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.settings, f, indent=4, ensure_ascii=False)
        logger.info(f"设置已保存到 {path}")
