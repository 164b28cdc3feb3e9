#!/usr/bin/env python3
"""
插件Manifest验证脚本
验证_manifest.json的字段完整性，并检查声明的组件与插件实际注册的 Command 一致
"""

import json
import os
import re
import sys
from typing import Any, Dict, Iterable, List, Optional

SEMVER = re.compile(r'^\d+\.\d+\.\d+$')


class ManifestValidator:
    """_manifest.json 验证器"""

    def __init__(self, manifest_path: str, registered: Optional[Iterable[str]] = None):
        self.manifest_path = manifest_path
        self.registered = set(registered) if registered is not None else None
        self.errors: List[str] = []
        self.warnings: List[str] = []

    def validate(self) -> bool:
        try:
            with open(self.manifest_path, 'r', encoding='utf-8') as f:
                self.manifest = json.load(f)
        except (FileNotFoundError, json.JSONDecodeError) as e:
            self.errors.append(f"无法读取manifest文件: {e}")
            return False

        self._validate_manifest_version()
        self._validate_basic_info()
        self._validate_author()
        self._validate_host_application()
        self._validate_plugin_info()

        return len(self.errors) == 0

    def _validate_manifest_version(self):
        version = self.manifest.get('manifest_version')
        if version != 1:
            self.errors.append(f"manifest_version必须为1，当前为: {version}")

    def _validate_basic_info(self):
        for field in ['name', 'version', 'description']:
            value = self.manifest.get(field)
            if not value or not isinstance(value, str):
                self.errors.append(f"必填字段 '{field}' 缺失或不是字符串")

        version = self.manifest.get('version', '')
        if not SEMVER.match(str(version)):
            self.errors.append(f"版本号格式无效: {version}，应为 x.y.z 格式")

    def _validate_author(self):
        author = self.manifest.get('author')
        if not author or not isinstance(author, dict):
            self.errors.append("author字段必须是对象")
        elif not author.get('name'):
            self.errors.append("author.name是必填字段")

    def _validate_host_application(self):
        host_app = self.manifest.get('host_application')
        if not isinstance(host_app, dict):
            self.warnings.append("建议指定host_application版本要求")
            return
        for key in ('min_version', 'max_version'):
            value = host_app.get(key)
            if value and not SEMVER.match(value):
                self.errors.append(f"{key}格式无效: {value}")

    def _validate_plugin_info(self):
        plugin_info = self.manifest.get('plugin_info')
        if not plugin_info or not isinstance(plugin_info, dict):
            self.errors.append("plugin_info字段是必需的")
            return

        if not isinstance(plugin_info.get('is_built_in'), bool):
            self.errors.append("plugin_info.is_built_in必须是布尔值")

        components = plugin_info.get('components', [])
        if not isinstance(components, list):
            self.errors.append("plugin_info.components必须是数组")
        else:
            self._validate_components(components)

    def _validate_components(self, components: List[Dict[str, Any]]):
        if len(components) == 0:
            self.warnings.append("插件没有定义任何组件")

        names = []
        for i, component in enumerate(components):
            if not isinstance(component, dict):
                self.errors.append(f"组件{i}必须是对象")
                continue
            if component.get('type') != 'command':
                self.errors.append(f"组件{i}类型无效: {component.get('type')}")
            name = component.get('name')
            if not name or not isinstance(name, str):
                self.errors.append(f"组件{i}缺少有效的name字段")
                continue
            if not component.get('description'):
                self.warnings.append(f"组件{i}建议添加description字段")
            names.append(name)

        if len(set(names)) != len(names):
            self.errors.append("组件名称重复")
        if self.registered is not None:
            for name in sorted(set(names) - self.registered):
                self.errors.append(f"manifest声明了未注册的组件: {name}")
            for name in sorted(self.registered - set(names)):
                self.errors.append(f"已注册的组件未在manifest中声明: {name}")

    def print_results(self):
        print("=" * 60)
        print("插件Manifest验证结果")
        print("=" * 60)

        if self.errors:
            print(f"\n❌ 发现 {len(self.errors)} 个错误:")
            for i, error in enumerate(self.errors, 1):
                print(f"  {i}. {error}")

        if self.warnings:
            print(f"\n⚠️ 发现 {len(self.warnings)} 个警告:")
            for i, warning in enumerate(self.warnings, 1):
                print(f"  {i}. {warning}")

        if not self.errors and not self.warnings:
            print("\n✅ Manifest验证通过！没有发现任何问题。")
        elif not self.errors:
            print("\n✅ Manifest基本有效，但有一些建议改进的地方。")
        else:
            print("\n❌ Manifest验证失败，请修复上述错误。")

        print("\n" + "=" * 60)


def registered_components() -> List[str]:
    """默认配置下插件注册的组件名称"""
    from plugin import ShellCountingPlugin

    return [info.name for info, _ in ShellCountingPlugin().get_plugin_components()]


def main() -> int:
    script_dir = os.path.dirname(os.path.abspath(__file__))
    plugin_dir = os.path.dirname(script_dir)
    manifest_path = os.path.join(plugin_dir, '_manifest.json')

    if not os.path.exists(manifest_path):
        print(f"❌ 未找到manifest文件: {manifest_path}")
        return 1

    sys.path.insert(0, plugin_dir)
    validator = ManifestValidator(manifest_path, registered_components())
    is_valid = validator.validate()
    validator.print_results()
    return 0 if is_valid else 1


if __name__ == "__main__":
    sys.exit(main())
