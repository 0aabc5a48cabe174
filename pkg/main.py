#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
ScatterTrace
主程序入口
"""

import argparse
import logging
import os
import sys

# 确保导入路径正确
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.core.errors import ScatterTraceError
from src.handlers.config_handler import ConfigHandler
from src.handlers.run_handler import EXIT_TOOLKIT_ERROR, run
from src.utils.help_content import PROGRAM_DESCRIPTION, available_modes, get_mode_help
from src.utils.logger import attach_run_log, setup_logger

# 命令行参数名与 RunConfig 字段的对应; 值为 None 表示未给出, 使用设置文件中的值
_FLAG_FIELDS = [
    "output_dir", "group_path", "orbit_path", "spectrum_path", "alpha", "beta", "m", "beta_convention",
    "radius", "max_words", "eps_growth", "histogram_bin", "lambda_max", "safety_factor", "safe_heights",
    "k_max", "sigma", "nu", "sigma_cap", "sigma_target_ratio", "n_axis", "spline_points", "T", "half_line",
    "a", "power", "eps", "n_w", "n_segment", "use_gpu", "seed",
]


def _add_common(p: argparse.ArgumentParser):
    io = p.add_argument_group("输入输出")
    io.add_argument("--group", dest="group_path", help="群文件 (JSON)")
    io.add_argument("--orbit", dest="orbit_path", help="已枚举的轨道长度表 (CSV)")
    io.add_argument("--spectrum", dest="spectrum_path", help="谱文件 (CSV)")
    io.add_argument("--out", dest="output_dir", default=None, help="输出目录, 缺省 results/")
    io.add_argument("--settings", help="覆盖默认设置的 JSON 文件")
    io.add_argument("--verbose", action="store_true", help="控制台输出 DEBUG 日志")

    cp = p.add_argument_group("耦合")
    cp.add_argument("--alpha", default=None, help="耦合常数 α, 可取 inf")
    cp.add_argument("--beta", type=float, default=None, help="直接给定重整化耦合 β")
    cp.add_argument("--m", type=int, default=None, help="稳定化子阶数 m_Γ (缺省取自群)")
    cp.add_argument("--beta-convention", dest="beta_convention", choices=["minus-c0", "plus-c0"], default=None)

    nk = p.add_argument_group("数值参数")
    nk.add_argument("--R", dest="radius", type=float, default=None, help="轨道枚举半径")
    nk.add_argument("--max-words", dest="max_words", type=int, default=None)
    nk.add_argument("--eps-growth", dest="eps_growth", type=float, default=None)
    nk.add_argument("--histogram-bin", dest="histogram_bin", type=float, default=None)
    nk.add_argument("--lambda-max", dest="lambda_max", type=float, default=None)
    nk.add_argument("--safety-factor", dest="safety_factor", type=float, default=None)
    nk.add_argument("--safe-heights", dest="safe_heights", type=int, default=None)
    nk.add_argument("--k-max", dest="k_max", type=int, default=None)
    nk.add_argument("--sigma", type=float, default=None)
    nk.add_argument("--nu", type=float, default=None)
    nk.add_argument("--sigma-cap", dest="sigma_cap", type=float, default=None)
    nk.add_argument("--sigma-target", dest="sigma_target_ratio", type=float, default=None)
    nk.add_argument("--n-axis", dest="n_axis", type=int, default=None)
    nk.add_argument("--spline-points", dest="spline_points", type=int, default=None)
    nk.add_argument("--T", dest="T", type=float, default=None, help="截断高度 (缺省用安全高度)")
    nk.add_argument("--half-line", dest="half_line", action="store_true", default=None)
    nk.add_argument("--a", type=float, default=None, help="测试函数 (ρ² + a²)^{−power} 的 a")
    nk.add_argument("--power", type=int, default=None)
    nk.add_argument("--eps", type=float, default=None)
    nk.add_argument("--n-w", dest="n_w", type=int, default=None)
    nk.add_argument("--n-segment", dest="n_segment", type=int, default=None)
    nk.add_argument("--gpu", dest="use_gpu", action="store_true", default=None)
    nk.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scattertrace", description=PROGRAM_DESCRIPTION,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in available_modes():
        p = sub.add_parser(mode, description=get_mode_help(mode), formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_common(p)
    return parser


def main(argv=None) -> int:
    """主函数"""
    args = build_parser().parse_args(argv)
    logger = setup_logger(logging.DEBUG if args.verbose else logging.INFO)

    try:
        handler = ConfigHandler()
        if args.settings:
            handler.load_user_settings(args.settings)
        overrides = {name: getattr(args, name) for name in _FLAG_FIELDS}
        cfg = handler.build(args.mode, overrides)
        attach_run_log(cfg.output_dir)
    except ScatterTraceError as e:
        logger.error(f"配置错误: {e.describe()}")
        return EXIT_TOOLKIT_ERROR

    code = run(cfg)
    logger.info(f"ScatterTrace {args.mode} 结束, 退出码 {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
