"""
Schema驱动的配置类型

ConfigField 描述单个配置项；PluginConfig 从 TOML 文件读取用户配置，
深度合并到 Schema 默认值上并做类型与取值校验。
"""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from components.mechanics.errors import ConfigError
from utils.helpers import ConfigHelper, deep_merge_dict, format_config_value

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfigField:
    """单个配置项"""

    type: type
    default: Any
    description: str = ""
    choices: Optional[List[Any]] = field(default=None)

    def check(self, key: str, value: Any) -> Any:
        """校验并返回规范化后的值"""
        if self.type is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if self.type is not bool and isinstance(value, bool):
            raise ConfigError(key, f"应为 {self.type.__name__}，实际为 bool")
        if not isinstance(value, self.type):
            raise ConfigError(key, f"应为 {self.type.__name__}，实际为 {type(value).__name__}")
        if self.choices is not None and value not in self.choices:
            raise ConfigError(key, f"取值 {value!r} 不在 {self.choices} 中")
        return value


Schema = Dict[str, Dict[str, ConfigField]]


class PluginConfig:
    """按 Schema 生成默认值，合并 TOML 用户配置"""

    def __init__(self, schema: Schema, overrides: Optional[Dict[str, Any]] = None):
        self.schema = schema
        defaults = {section: {k: f.default for k, f in fields.items()} for section, fields in schema.items()}
        merged = deep_merge_dict(defaults, overrides or {})
        self.values = self._validate(merged)

    @classmethod
    def from_file(cls, schema: Schema, path: Optional[Union[str, Path]]) -> "PluginConfig":
        if path is None:
            return cls(schema)
        try:
            with open(path, "rb") as f:
                data = tomllib.load(f)
        except FileNotFoundError as e:
            raise ConfigError(str(path), "配置文件不存在") from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(str(path), f"TOML 解析失败: {e}") from e
        return cls(schema, data)

    def _validate(self, merged: Dict[str, Any]) -> Dict[str, Any]:
        result: Dict[str, Any] = {}
        for section, values in merged.items():
            if section not in self.schema:
                logger.warning("未知配置节: [%s]", section)
                continue
            if not isinstance(values, dict):
                raise ConfigError(section, "配置节必须是表")
            result[section] = {}
            for key, value in values.items():
                fld = self.schema[section].get(key)
                if fld is None:
                    logger.warning("未知配置项: %s.%s", section, key)
                    continue
                result[section][key] = fld.check(f"{section}.{key}", value)
        return result

    def get(self, key: str, default: Any = None) -> Any:
        """按 "section.key" 取值"""
        if not ConfigHelper.validate_config_key(key):
            raise ConfigError(key, "无效的配置键格式")
        return ConfigHelper.get_nested_value(self.values, ConfigHelper.parse_config_path(key), default)

    def to_toml(self, descriptions: Optional[Dict[str, str]] = None) -> str:
        """导出为带注释的 TOML 文本"""
        lines = []
        for section, fields in self.schema.items():
            if descriptions and section in descriptions:
                lines.append(f"# {descriptions[section]}")
            lines.append(f"[{section}]")
            for key, fld in fields.items():
                if fld.description:
                    lines.append(f"# {fld.description}")
                lines.append(f"{key} = {format_config_value(self.values[section][key])}")
            lines.append("")
        return "\n".join(lines)
