"""
Command基类

所有子命令共享的约定：
- command_name / command_help / command_examples 描述命令
- add_arguments 向 argparse 子解析器注册参数
- execute 为协程，返回 (是否成功, 错误信息)，并设置 exit_code
- get_config 按 "section.key" 读取已合并的配置
"""

import argparse
import logging
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, TextIO, Tuple

from utils.helpers import ConfigHelper

logger = logging.getLogger(__name__)

# 退出码约定
EXIT_OK = 0
EXIT_IO = 1
EXIT_AMBIGUOUS = 2
EXIT_STALLED = 3


@dataclass(frozen=True)
class CommandInfo:
    """组件注册信息"""

    name: str
    description: str
    examples: List[str] = field(default_factory=list)
    component_type: str = "command"


class BaseCommand(ABC):
    command_name: str = ""
    command_help: str = ""
    command_examples: List[str] = []
    # 控制该命令的功能开关
    feature_switch: str = ""

    def __init__(
        self,
        config: Optional[Dict[str, Any]] = None,
        args: Optional[argparse.Namespace] = None,
        stream: Optional[TextIO] = None,
    ):
        self.config = config or {}
        self.args = args if args is not None else argparse.Namespace()
        self.stream = stream
        self.exit_code = EXIT_OK

    @classmethod
    def get_command_info(cls) -> CommandInfo:
        return CommandInfo(cls.command_name, cls.command_help, list(cls.command_examples))

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        """注册子命令参数，子类覆盖"""

    def get_config(self, key: str, default: Any = None) -> Any:
        return ConfigHelper.get_nested_value(self.config, ConfigHelper.parse_config_path(key), default)

    def arg(self, name: str, config_key: str, default: Any = None) -> Any:
        """命令行参数优先，未给出时回落到配置"""
        value = getattr(self.args, name, None)
        return value if value is not None else self.get_config(config_key, default)

    async def send_text(self, text: str) -> None:
        stream = self.stream if self.stream is not None else sys.stdout
        print(text, file=stream)
        logger.debug("[%s] %s", self.command_name, text)

    async def fail(self, message: str, exit_code: int = EXIT_IO) -> Tuple[bool, Optional[str]]:
        self.exit_code = exit_code
        await self.send_text(f"❌ {message}")
        return False, message

    def format_number(self, value: float) -> str:
        digits = int(self.get_config("commands.float_digits", 17))
        return f"{value:.{digits}g}"

    async def execute(self) -> Tuple[bool, Optional[str]]:
        if self.feature_switch and not self.get_config(self.feature_switch, True):
            return await self.fail(f"{self.command_name} 命令已禁用")
        try:
            return await self.run()
        except Exception as e:
            logger.debug("command %s failed", self.command_name, exc_info=True)
            return await self.fail(f"{self.command_name} 执行失败: {e}")

    @abstractmethod
    async def run(self) -> Tuple[bool, Optional[str]]:
        """命令主体"""
