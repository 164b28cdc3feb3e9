"""
异常类型

库层只抛出这里定义的异常，命令层负责捕获并转换为退出码。
"""

from typing import Optional


class ShellError(Exception):
    """所有壳体计算异常的基类"""


class CellError(ShellError, ValueError):
    """单胞数据违反不变量

    Attributes:
        invariant: 第一个被违反的不变量名称
    """

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        self.detail = detail
        message = invariant if not detail else f"{invariant}: {detail}"
        super().__init__(message)


class SolverError(ShellError, RuntimeError):
    """线性求解失败，附带条件数诊断"""

    def __init__(self, message: str, condition: Optional[float] = None):
        self.condition = condition
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)


class NotCanonicalError(ShellError):
    """Poisson 恒等式所需的模态不是对角形式"""

    def __init__(self, message: str = "not in canonical form", pairing_residual: float = 0.0):
        self.pairing_residual = pairing_residual
        super().__init__(message)


class ConfigError(ShellError, ValueError):
    """配置文件错误"""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")
