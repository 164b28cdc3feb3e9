"""
周期壳单胞计数插件
=================

计算周期三角化壳单胞的等效膜/弯曲刚度张量，统计宏观等距变形的个数，
检验其代数推论，并通过调整节点高程最小化等效膜刚度。

- Schema驱动的配置系统（TOML 文件合并到默认值）
- 按功能开关注册的 Command 组件
- 统一的日志与退出码约定
"""

import argparse
import asyncio
import logging
import sys
from typing import List, Optional, Sequence, Tuple, Type

from components.commands.analyze_command import AnalyzeCommand
from components.commands.base_command import EXIT_IO, BaseCommand, CommandInfo
from components.commands.export_command import ExportCommand
from components.commands.generate_command import GenerateCommand
from components.commands.optimize_command import OptimizeCommand
from components.mechanics.errors import ConfigError
from utils.config_types import ConfigField, PluginConfig

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class ShellCountingPlugin:
    """插件入口：配置、组件注册与命令行"""

    # ==================== 插件基本信息 ====================
    plugin_name = "shell_counting_plugin"
    plugin_description = "周期壳单胞的等效刚度、宏观等距模态计数与高程优化"
    plugin_version = "1.0.0"
    plugin_author = "MaiBot开发团队"
    enable_plugin = True
    config_file_name = "config.toml"

    # ==================== 配置定义 ====================
    config_section_descriptions = {
        "plugin": "插件基本配置",
        "features": "功能开关配置",
        "analysis": "核空间分析配置",
        "optimize": "高程优化配置",
        "export": "网格导出配置",
        "commands": "Command组件配置",
    }

    config_schema = {
        "plugin": {
            "enabled": ConfigField(type=bool, default=True, description="是否启用插件"),
            "config_version": ConfigField(type=str, default="1.0.0", description="配置文件版本"),
            "debug_mode": ConfigField(type=bool, default=False, description="是否启用调试模式（强制 DEBUG 日志）"),
            "log_level": ConfigField(
                type=str,
                default="INFO",
                description="日志记录级别",
                choices=["DEBUG", "INFO", "WARNING", "ERROR"],
            ),
        },
        "features": {
            "enable_generate_command": ConfigField(type=bool, default=True, description="是否启用 generate 命令"),
            "enable_analyze_command": ConfigField(type=bool, default=True, description="是否启用 analyze 命令"),
            "enable_optimize_command": ConfigField(type=bool, default=True, description="是否启用 optimize 命令"),
            "enable_export_command": ConfigField(type=bool, default=True, description="是否启用 export 命令"),
        },
        "analysis": {
            "tol_rel": ConfigField(type=float, default=1e-8, description="核空间相对阈值 λ < tol_rel·λ_max"),
            "gap_threshold": ConfigField(type=float, default=1e4, description="谱间隙比低于该值时标记 ambiguous"),
            "classify_tol": ConfigField(type=float, default=1e-6, description="纯膜/纯弯曲模态的主角阈值（弧度）"),
            "poisson_tol": ConfigField(type=float, default=1e-6, description="Poisson 恒等式的对角形式容差"),
        },
        "optimize": {
            "iters": ConfigField(type=int, default=5000, description="最大迭代次数"),
            "initial_step": ConfigField(type=float, default=1e-2, description="初始步长"),
            "armijo": ConfigField(type=float, default=1e-4, description="Armijo 充分下降常数"),
            "max_halvings": ConfigField(type=int, default=60, description="单次线搜索的最大减半次数"),
            "step_rule": ConfigField(
                type=str, default="adaptive", description="步长规则", choices=["adaptive", "fixed"]
            ),
            "log_objective": ConfigField(type=bool, default=True, description="是否对 log tr A_EE 下降"),
            "rel_floor": ConfigField(type=float, default=1e-20, description="目标降到初始值的该倍数以下即收敛"),
        },
        "export": {
            "tiles": ConfigField(type=list, default=[3, 3], description="OBJ 导出的铺排数"),
        },
        "commands": {
            "float_digits": ConfigField(type=int, default=17, description="终端输出数值的有效数字"),
            "jobs": ConfigField(type=int, default=1, description="批量分析的并行进程数"),
        },
    }

    def __init__(self, config: Optional[PluginConfig] = None):
        self.config = config or PluginConfig(self.config_schema)

    @classmethod
    def from_config_file(cls, path: Optional[str]) -> "ShellCountingPlugin":
        return cls(PluginConfig.from_file(cls.config_schema, path))

    def get_config(self, key: str, default=None):
        return self.config.get(key, default)

    # ==================== 组件注册 ====================
    def get_plugin_components(self) -> List[Tuple[CommandInfo, Type[BaseCommand]]]:
        """根据功能开关注册 Command 组件"""
        components = []
        if not self.get_config("plugin.enabled", True):
            return components
        for command in (GenerateCommand, AnalyzeCommand, OptimizeCommand, ExportCommand):
            if self.get_config(command.feature_switch, True):
                components.append((command.get_command_info(), command))
        return components

    # ==================== 日志 ====================
    def configure_logging(self) -> int:
        level_name = "DEBUG" if self.get_config("plugin.debug_mode", False) else self.get_config("plugin.log_level", "INFO")
        level = getattr(logging, level_name)
        logging.basicConfig(level=level, format=LOG_FORMAT)
        logging.getLogger().setLevel(level)
        return level

    # ==================== 命令行 ====================
    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog="shell-counting", description=self.plugin_description)
        add_global_arguments(parser)
        subparsers = parser.add_subparsers(dest="command")
        for info, command in self.get_plugin_components():
            sub = subparsers.add_parser(info.name, help=info.description, epilog="\n".join(info.examples))
            command.add_arguments(sub)
            sub.set_defaults(command_class=command)
        return parser

    async def run(self, args: argparse.Namespace) -> int:
        command_class = getattr(args, "command_class", None)
        if command_class is None:
            self.build_parser().print_help()
            return EXIT_IO
        command = command_class(config=self.config.values, args=args)
        ok, message = await command.execute()
        if not ok:
            logger.debug("%s finished with exit code %d: %s", command.command_name, command.exit_code, message)
        return command.exit_code


def add_global_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="TOML 配置文件")
    parser.add_argument("--show-config", action="store_true", help="打印合并后的配置并退出")


def main(argv: Optional[Sequence[str]] = None) -> int:
    # 先读 --config，子命令集合依赖功能开关
    pre = argparse.ArgumentParser(add_help=False)
    add_global_arguments(pre)
    known, _ = pre.parse_known_args(argv)
    try:
        plugin = ShellCountingPlugin.from_config_file(known.config)
    except ConfigError as e:
        print(f"❌ 配置错误: {e}", file=sys.stderr)
        return EXIT_IO
    plugin.configure_logging()

    if known.show_config:
        print(plugin.config.to_toml(plugin.config_section_descriptions))
        return 0
    args = plugin.build_parser().parse_args(argv)
    return asyncio.run(plugin.run(args))


if __name__ == "__main__":
    sys.exit(main())
