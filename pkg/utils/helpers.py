"""
通用辅助函数

提供文件校验、配置合并、嵌套取值、JSON 序列化与计时等工具，遵循代码复用原则
"""

import json
import re
import time
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np


def validate_json_schema(data: dict, schema: dict) -> tuple[bool, str]:
    """
    验证JSON数据是否符合Schema

    Args:
        data: 要验证的数据
        schema: 字段名到类型的映射

    Returns:
        (是否有效, 错误信息)
    """
    if not isinstance(data, dict):
        return False, "顶层必须是对象"
    for key, field_type in schema.items():
        if key not in data:
            return False, f"缺少必需字段: {key}"

        if not isinstance(data[key], field_type):
            return False, f"字段类型错误: {key} 应为 {field_type.__name__}"

    return True, "验证通过"


def format_config_value(value: Any) -> str:
    """
    格式化配置值用于显示（TOML 风格）

    Args:
        value: 配置值

    Returns:
        格式化后的字符串
    """
    if value is None:
        return "null"
    elif isinstance(value, bool):
        return "true" if value else "false"
    elif isinstance(value, str):
        return f'"{value}"'
    elif isinstance(value, (list, tuple)):
        return f"[{', '.join(format_config_value(v) for v in value)}]"
    else:
        return str(value)


def deep_merge_dict(dict1: Dict, dict2: Dict) -> Dict:
    """
    深度合并两个字典，dict2 覆盖 dict1

    Args:
        dict1: 字典1
        dict2: 字典2

    Returns:
        合并后的字典
    """
    result = dict1.copy()

    for key, value in dict2.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = deep_merge_dict(result[key], value)
        else:
            result[key] = value

    return result


def to_jsonable(value: Any) -> Any:
    """把 numpy 数组与标量递归转换为 JSON 可序列化对象"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def write_json(path: Union[str, Path], data: Any) -> None:
    """写 JSON 文件；浮点数使用最短往返表示，读回数值不变"""
    Path(path).write_text(json.dumps(to_jsonable(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")


class ConfigHelper:
    """配置辅助类"""

    @staticmethod
    def validate_config_key(key: str) -> bool:
        """验证配置键格式"""
        pattern = r"^[a-zA-Z_][a-zA-Z0-9_]*(\.[a-zA-Z_][a-zA-Z0-9_]*)*$"
        return bool(re.match(pattern, key))

    @staticmethod
    def parse_config_path(path: str) -> List[str]:
        """解析配置路径"""
        return path.split('.') if path else []

    @staticmethod
    def get_nested_value(data: Dict, path: List[str], default=None):
        """获取嵌套字典的值"""
        current = data
        for key in path:
            if isinstance(current, dict) and key in current:
                current = current[key]
            else:
                return default
        return current


class PerformanceMonitor:
    """性能监控辅助类"""

    def __init__(self):
        self.metrics = {}

    def start_timer(self, name: str):
        """开始计时"""
        self.metrics[name] = {"start": time.perf_counter()}

    def end_timer(self, name: str) -> float:
        """结束计时并返回耗时（秒）"""
        if name in self.metrics:
            elapsed = time.perf_counter() - self.metrics[name]["start"]
            self.metrics[name]["elapsed"] = elapsed
            return elapsed
        return 0.0

    def get_metrics(self) -> Dict[str, float]:
        """获取已完成计时的耗时"""
        return {name: m["elapsed"] for name, m in self.metrics.items() if "elapsed" in m}
