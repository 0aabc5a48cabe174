#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
命令行帮助文本

每个子命令一段说明, 由 main.py 作为 argparse 的 description/epilog 使用。
"""
from typing import Dict

PROGRAM_DESCRIPTION = """\
ScatterTrace: 紧双曲曲面上点散射子的迹公式数值工具。
各子命令读取群文件 (JSON) 或谱文件 (CSV), 在输出目录写出 report.json 与若干 CSV 表。
退出码: 0 成功, 1 未收敛, 2 工具包错误, 3 未预期的错误。
进程数由环境变量 SCATTERTRACE_WORKERS 控制。"""

_MODE_HELP: Dict[str, str] = {
    "orbits": """\
枚举 d(γz₀, z₀) ≤ R 的群元, 输出衍射轨道长度及重数 (orbit.csv) 与长度直方图 (orbit_histogram.csv)。
群文件格式: {"label": ..., "z0": [x, y], "generators": [[a, b, c, d], ...]}, 行列式容差 1e-9。""",
    "eigens": """\
在相邻极点之间二分求 S 的零点, 即扰动后的新本征值, 写出 perturbed.csv (type 列: new | inherited | ground)
以及安全高度 safe_heights.csv。谱文件首行为元数据 'area=<面积>[,complete=1]', 之后是 lambda,mult,weight 三列。
--alpha inf 对应 β = 1/c₀。""",
    "trace-truncated": """\
截断迹公式: B(T) 内零点与极点处 h 的点和, 与 ∂B(T) 上 h·S′/S 围道积分的比较。
未指定 --T 时使用安全高度; gap ≤ 1e-6 视为收敛。""",
    "trace-geometric": """\
几何侧自洽检验: 沿 Im ρ = −σ 的 pretrace 积分与 恒等项 + Σ_{k≤k_max} 衍射项 的比较。
σ 缺省时自动选取, ν 缺省时取 v_β 上方。同时给出 --spectrum 时进入研究模式, 额外计算谱侧 (不作为收敛判据)。""",
    "diagnostics": """\
诊断表: σ^{−1/2} 包络 (需要群或轨道表), 多项式界比值 polybound.csv 与线段积分比值 compbound.csv (需要谱文件)。""",
    "testfn": """\
测试函数检验: Cauchy 型 h 的成员抽样检验, 以及二进高度序列上 h_ε 的局部估计与正性。""",
}


def get_mode_help(mode: str) -> str:
    return _MODE_HELP.get(mode, "")


def available_modes():
    return list(_MODE_HELP)
