#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
并行计算辅助模块

任务函数必须是模块级函数(可被 pickle)。结果按提交顺序返回, 归约顺序与串行路径完全一致。
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures.process import BrokenProcessPool
from typing import Any, Callable, List, Optional, Sequence

from src.core.constants import WORKERS_ENV_VAR

logger = logging.getLogger(__name__)

DEFAULT_PARALLEL_THRESHOLD = 8
_threshold = DEFAULT_PARALLEL_THRESHOLD


def set_parallel_threshold(threshold: int):
    global _threshold
    _threshold = max(1, int(threshold))


def resolve_worker_count(requested: Optional[int] = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    raw = os.environ.get(WORKERS_ENV_VAR)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning(f"环境变量 {WORKERS_ENV_VAR}='{raw}' 不是整数, 使用默认进程数")
    return max(1, (os.cpu_count() or 2) // 2)


def parallel_map(func: Callable[[Any], Any], tasks: Sequence[Any], max_workers: Optional[int] = None,
                 threshold: Optional[int] = None) -> List[Any]:
    """按顺序返回 func(task) 的结果; 任务数少于 threshold 或仅一个进程时串行执行。"""
    tasks = list(tasks)
    threshold = _threshold if threshold is None else threshold
    workers = resolve_worker_count(max_workers)
    if workers <= 1 or len(tasks) < threshold:
        return [func(task) for task in tasks]
    try:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as executor:
            futures = [executor.submit(func, task) for task in tasks]
            return [future.result() for future in futures]
    except BrokenProcessPool as e:
        logger.warning(f"进程池崩溃, 回退到串行计算: {e}")
        return [func(task) for task in tasks]
