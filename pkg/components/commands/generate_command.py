"""
生成Command - 按预设写出单胞文件

预设：flat, corrugation, random, hole, handle
"""

import argparse
import logging
from typing import List, Optional, Tuple

from components.commands.base_command import BaseCommand
from components.mechanics.cell import (
    UnitCell,
    generate_corrugation,
    generate_flat,
    generate_handle,
    generate_random,
    punch_hole,
    save_cell,
)

logger = logging.getLogger(__name__)

PRESETS = ("flat", "corrugation", "random", "hole", "handle")


def center_node(nx: int, ny: int) -> int:
    """网格中心节点编号"""
    return (ny // 2) * nx + nx // 2


def build_preset(
    preset: str,
    nx: int,
    ny: int,
    h: float = 0.3,
    seed: int = 0,
    gap: float = 0.5,
    tube: float = 0.4,
    nodes: Optional[List[int]] = None,
) -> UnitCell:
    if preset == "flat":
        return generate_flat(nx, ny)
    if preset == "corrugation":
        return generate_corrugation(nx, ny, h)
    if preset == "random":
        return generate_random(nx, ny, h, seed)
    if preset == "hole":
        base = generate_random(nx, ny, h, seed) if h > 0 else generate_flat(nx, ny)
        return punch_hole(base, nodes if nodes else [center_node(nx, ny)])
    if preset == "handle":
        return generate_handle(nx, ny, gap, tube)
    raise ValueError(f"unknown preset: {preset}")


class GenerateCommand(BaseCommand):
    command_name = "generate"
    command_help = "生成参数化单胞并写入 JSON 文件"
    command_examples = [
        "generate flat --nx 2 --ny 2",
        "generate random --nx 4 --ny 4 --h 0.3 --seed 7",
        "generate handle --nx 4 --ny 4 --gap 0.5 --tube 0.4",
    ]
    feature_switch = "features.enable_generate_command"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("preset", choices=PRESETS)
        parser.add_argument("--nx", type=int, default=2)
        parser.add_argument("--ny", type=int, default=2)
        parser.add_argument("--h", type=float, default=0.3, help="高程幅值")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--gap", type=float, default=0.5, help="handle 两层间距")
        parser.add_argument("--tube", type=float, default=0.4, help="handle 方管中环边长")
        parser.add_argument("--nodes", type=int, nargs="+", help="hole 删除的节点编号")
        parser.add_argument("--out", default="cell.json")

    async def run(self) -> Tuple[bool, Optional[str]]:
        a = self.args
        try:
            cell = build_preset(a.preset, a.nx, a.ny, a.h, a.seed, a.gap, a.tube, a.nodes)
        except ValueError as e:
            return await self.fail(f"参数无效: {e}")

        try:
            save_cell(cell, a.out)
        except OSError as e:
            return await self.fail(f"无法写入 {a.out}: {e}")

        logger.info("generated %s cell: %s", a.preset, cell.summary())
        await self.send_text(f"✅ {a.preset}: {cell.summary()} -> {a.out}")
        return True, None
