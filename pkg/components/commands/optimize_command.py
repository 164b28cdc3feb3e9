"""
优化Command - 最小化 tr A_EE，写出优化后单胞与迭代日志

停滞时退出码为 3，结果照常写出。
"""

import argparse
import logging
from pathlib import Path
from typing import Optional, Tuple

from components.commands.base_command import EXIT_OK, EXIT_STALLED, BaseCommand
from components.mechanics.cell import load_cell, save_cell
from components.mechanics.errors import ShellError
from components.mechanics.optimize import STEP_RULES, minimize

logger = logging.getLogger(__name__)


class OptimizeCommand(BaseCommand):
    command_name = "optimize"
    command_help = "调整节点高程以最小化等效膜刚度的迹"
    command_examples = [
        "optimize random.json --iters 5000 --seed 0 --out opt.json --log trace.csv",
        "optimize random.json --bound 0.2",
    ]
    feature_switch = "features.enable_optimize_command"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("cell")
        parser.add_argument("--iters", type=int, default=None)
        parser.add_argument("--bound", type=float, default=None, help="高程变化上限 |z − z0| ≤ bound")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--step-rule", dest="step_rule", choices=STEP_RULES, default=None)
        parser.add_argument("--jitter", type=float, default=0.0, help="初始高程随机扰动幅值")
        parser.add_argument("--out", default=None)
        parser.add_argument("--log", default=None)

    async def run(self) -> Tuple[bool, Optional[str]]:
        a = self.args
        stem = Path(a.cell).with_suffix("")
        out = a.out or f"{stem}.optimized.json"
        log = a.log or f"{stem}.trace.csv"

        try:
            cell = load_cell(a.cell)
        except (OSError, ShellError) as e:
            return await self.fail(f"无法读取 {a.cell}: {e}")

        iters = int(self.arg("iters", "optimize.iters", 5000))
        try:
            optimized, trace = minimize(
                cell,
                iters,
                step_rule=self.arg("step_rule", "optimize.step_rule", "adaptive"),
                seed=a.seed,
                bound=a.bound,
                initial_step=float(self.get_config("optimize.initial_step", 1e-2)),
                armijo=float(self.get_config("optimize.armijo", 1e-4)),
                max_halvings=int(self.get_config("optimize.max_halvings", 60)),
                log_objective=bool(self.get_config("optimize.log_objective", True)),
                rel_floor=float(self.get_config("optimize.rel_floor", 1e-20)),
                jitter=a.jitter,
            )
        except ValueError as e:
            return await self.fail(f"参数无效: {e}")

        try:
            save_cell(optimized, out)
            trace.write_csv(log)
        except OSError as e:
            return await self.fail(f"无法写入结果: {e}")

        await self.send_text(
            f"objective {self.format_number(trace.initial_objective)} -> {self.format_number(trace.final_objective)} "
            f"ratio {self.format_number(trace.reduction)} ({len(trace.rows) - 1} steps) -> {out}, {log}"
        )
        if trace.stalled:
            logger.warning("line search stalled after %d steps on %s", len(trace.rows) - 1, a.cell)
            self.exit_code = EXIT_STALLED
            await self.send_text("⚠️ 线搜索停滞，结果已写出")
            return False, "optimizer stalled"
        self.exit_code = EXIT_OK
        return True, None
