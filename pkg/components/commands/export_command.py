"""
导出Command - 将单胞按周期铺排写为 OBJ 三角网格
"""

import argparse
from pathlib import Path
from typing import Optional, Tuple

from components.commands.base_command import BaseCommand
from components.mechanics.cell import export_obj, load_cell
from components.mechanics.errors import ShellError


class ExportCommand(BaseCommand):
    command_name = "export"
    command_help = "把单胞铺排为 OBJ 网格，用于外部查看"
    command_examples = ["export cell.json --tiles 3 3 --out cell.obj"]
    feature_switch = "features.enable_export_command"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("cell")
        parser.add_argument("--tiles", type=int, nargs=2, default=None, metavar=("T1", "T2"))
        parser.add_argument("--out", default=None)

    async def run(self) -> Tuple[bool, Optional[str]]:
        a = self.args
        out = a.out or str(Path(a.cell).with_suffix(".obj"))
        tiles = tuple(self.arg("tiles", "export.tiles", [3, 3]))
        try:
            cell = load_cell(a.cell)
            vertices, faces = export_obj(cell, tiles, out)
        except (OSError, ShellError) as e:
            return await self.fail(f"导出失败: {e}")
        except ValueError as e:
            return await self.fail(f"参数无效: {e}")
        await self.send_text(f"✅ {vertices} vertices, {faces} faces -> {out}")
        return True, None
