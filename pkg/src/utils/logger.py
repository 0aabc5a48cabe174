#!/usr/bin/env python3
# -*- coding: utf-8 -*-
import logging
import os
from datetime import datetime
from typing import Union

_FORMAT = '%(asctime)s - %(processName)-12s - %(name)-28s - %(levelname)-8s - %(message)s'
_DATEFMT = '%Y-%m-%d %H:%M:%S'
RUN_LOG_NAME = "run.log"


def _level(log_level: Union[int, str]) -> int:
    if isinstance(log_level, str):
        value = logging.getLevelName(log_level.upper())
        return value if isinstance(value, int) else logging.INFO
    return log_level


def setup_logger(log_level: Union[int, str] = logging.INFO, log_dir: str = "logs"):
    """
    根日志器: 控制台按给定级别输出, 按日滚动的文件记录 DEBUG。
    scipy 的 IntegrationWarning 等 warnings 也转入日志。
    """
    os.makedirs(log_dir, exist_ok=True)
    formatter = logging.Formatter(_FORMAT, datefmt=_DATEFMT)

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)
    if root_logger.hasHandlers():
        for h in list(root_logger.handlers):
            h.close()
        root_logger.handlers.clear()

    console = logging.StreamHandler()
    console.setLevel(_level(log_level))
    console.setFormatter(formatter)
    root_logger.addHandler(console)

    daily = logging.FileHandler(os.path.join(log_dir, f"ScatterTrace{datetime.now():%Y%m%d}.log"), encoding='utf-8')
    daily.setLevel(logging.DEBUG)
    daily.setFormatter(formatter)
    root_logger.addHandler(daily)

    logging.captureWarnings(True)

    return logging.getLogger(__name__)


def attach_run_log(output_dir: str) -> str:
    """在输出目录中额外写一份本次运行的完整日志, 与 report.json 放在一起"""
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, RUN_LOG_NAME)
    handler = logging.FileHandler(path, mode='w', encoding='utf-8')
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(_FORMAT, datefmt=_DATEFMT))
    logging.getLogger().addHandler(handler)
    return path
