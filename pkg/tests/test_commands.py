"""
Command组件测试

测试Command组件的功能：
- 参数解析与配置回落
- 文件输出与退出码约定
- 报告往返与确定性
- 错误处理
"""

import csv
import io
import json
import os
import sys
import tempfile
import unittest
from unittest.mock import Mock

# 添加插件路径到Python路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from components.commands.analyze_command import AnalysisReport, AnalyzeCommand, analyze
from components.commands.base_command import EXIT_AMBIGUOUS, EXIT_IO, EXIT_OK, EXIT_STALLED
from components.commands.export_command import ExportCommand
from components.commands.generate_command import GenerateCommand, build_preset, center_node
from components.commands.optimize_command import OptimizeCommand
from components.mechanics.cell import generate_corrugation, generate_random, load_cell, punch_hole, save_cell
from components.mechanics.optimize import CSV_HEADER
from plugin import ShellCountingPlugin
from utils.config_types import PluginConfig


class CommandTestCase(unittest.IsolatedAsyncioTestCase):
    """通过插件解析器构造命令并执行"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name
        self.plugin = ShellCountingPlugin()

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.dir, name)

    async def run_command(self, argv, plugin=None):
        plugin = plugin or self.plugin
        args = plugin.build_parser().parse_args(argv)
        stream = io.StringIO()
        command = args.command_class(config=plugin.config.values, args=args, stream=stream)
        ok, message = await command.execute()
        return command, ok, message, stream.getvalue()


class TestGenerateCommand(CommandTestCase):
    """生成Command测试类"""

    def test_command_basic_properties(self):
        self.assertEqual(GenerateCommand.command_name, "generate")
        self.assertIsNotNone(GenerateCommand.command_help)
        self.assertIsInstance(GenerateCommand.command_examples, list)
        self.assertEqual(GenerateCommand.get_command_info().name, "generate")

    async def test_flat(self):
        out = self.path("flat.json")
        command, ok, _, text = await self.run_command(["generate", "flat", "--nx", "2", "--ny", "2", "--out", out])
        self.assertTrue(ok)
        self.assertEqual(command.exit_code, EXIT_OK)
        cell = load_cell(out)
        self.assertEqual((cell.n_nodes, cell.n_bars), (4, 12))
        self.assertIn("nodes=4 bars=12", text)

    async def test_random_deterministic(self):
        outs = [self.path("a.json"), self.path("b.json")]
        for out in outs:
            await self.run_command(["generate", "random", "--nx", "4", "--ny", "4", "--h", "0.3", "--seed", "7", "--out", out])
        with open(outs[0], "rb") as a, open(outs[1], "rb") as b:
            self.assertEqual(a.read(), b.read())

    async def test_handle(self):
        out = self.path("handle.json")
        _, ok, _, _ = await self.run_command(
            ["generate", "handle", "--nx", "4", "--ny", "4", "--gap", "0.5", "--tube", "0.4", "--out", out]
        )
        self.assertTrue(ok)
        self.assertEqual(load_cell(out).metadata["euler_characteristic"], "-2")

    async def test_hole_default_center(self):
        out = self.path("hole.json")
        await self.run_command(["generate", "hole", "--nx", "4", "--ny", "4", "--h", "0", "--out", out])
        cell = load_cell(out)
        self.assertEqual(cell.n_nodes, 15)
        self.assertEqual(cell.metadata["hole"], str(center_node(4, 4)))

    async def test_bad_parameters(self):
        command, ok, message, text = await self.run_command(["generate", "flat", "--nx", "0", "--out", self.path("x.json")])
        self.assertFalse(ok)
        self.assertEqual(command.exit_code, EXIT_IO)
        self.assertIn("❌", text)
        self.assertFalse(os.path.exists(self.path("x.json")))

    async def test_disabled_feature(self):
        """功能开关关闭时命令拒绝执行"""
        command = GenerateCommand(config={}, args=Mock())
        command.get_config = Mock(return_value=False)
        ok, message = await command.execute()
        self.assertFalse(ok)
        self.assertEqual(command.exit_code, EXIT_IO)

    def test_build_preset_unknown(self):
        with self.assertRaises(ValueError):
            build_preset("sphere", 2, 2)


class TestAnalyzeCommand(CommandTestCase):
    """分析Command测试类"""

    def write_cell(self, name, cell):
        path = self.path(name)
        save_cell(cell, path)
        return path

    async def test_flat_report(self):
        await self.run_command(["generate", "flat", "--nx", "2", "--ny", "2", "--out", self.path("flat.json")])
        report_path = self.path("flat.report.json")
        command, ok, _, text = await self.run_command(["analyze", self.path("flat.json"), "--report", report_path])
        self.assertTrue(ok)
        self.assertEqual(command.exit_code, EXIT_OK)
        report = AnalysisReport.load(report_path)
        self.assertEqual(report.kernel_dim, 3)
        self.assertEqual(report.classification, {"pure_membrane": 0, "pure_flexure": 3, "mixed": 0})
        self.assertIsNone(report.poisson)
        self.assertIn("not canonical", report.flags)
        self.assertIn("kernel_dim=3", text)

    async def test_corrugation_report(self):
        path = self.write_cell("corr.json", generate_corrugation(8, 2, 0.3))
        command, ok, _, _ = await self.run_command(["analyze", path])
        self.assertTrue(ok)
        report = AnalysisReport.load(self.path("corr.report.json"))
        self.assertEqual(report.classification, {"pure_membrane": 1, "pure_flexure": 2, "mixed": 0})
        self.assertLessEqual(abs(report.poisson["residual"]), 1e-6)

    async def test_hole_report(self):
        """开孔单胞：A 只剩舍入误差，报告 6 个模态并带 degenerate cell 标记"""
        path = self.write_cell("hole.json", punch_hole(generate_random(4, 4, 0.3, 1), [5]))
        command, ok, _, _ = await self.run_command(["analyze", path])
        self.assertTrue(ok)
        self.assertEqual(command.exit_code, EXIT_OK)
        report = AnalysisReport.load(self.path("hole.report.json"))
        self.assertEqual(report.kernel_dim, 6)
        self.assertIn("degenerate cell", report.flags)
        self.assertGreater(report.solver["scale"], 0.0)

    async def test_report_round_trip(self):
        """报告读回数值不变，再写出字节相同"""
        path = self.write_cell("rand.json", generate_random(4, 4, 0.3, 7))
        first = self.path("first.json")
        await self.run_command(["analyze", path, "--report", first])
        report = AnalysisReport.load(first)
        with open(first, encoding="utf-8") as f:
            self.assertEqual(report.to_dict(), json.load(f))
        second = self.path("second.json")
        report.save(second)
        with open(first, "rb") as a, open(second, "rb") as b:
            self.assertEqual(a.read(), b.read())
        self.assertEqual(AnalysisReport.from_dict(report.to_dict()), report)

    async def test_deterministic_apart_from_run(self):
        path = self.write_cell("rand.json", generate_random(2, 2, 0.3, 1))
        outs = [self.path("r1.json"), self.path("r2.json")]
        for out in outs:
            await self.run_command(["analyze", path, "--report", out])
        a, b = (AnalysisReport.load(o).to_dict() for o in outs)
        a.pop("run")
        b.pop("run")
        self.assertEqual(a, b)

    async def test_ambiguous_exit_code(self):
        path = self.write_cell("rand.json", generate_random(2, 2, 0.3, 0))
        config = PluginConfig(ShellCountingPlugin.config_schema, {"analysis": {"gap_threshold": float("inf")}})
        command, ok, _, text = await self.run_command(["analyze", path], plugin=ShellCountingPlugin(config))
        self.assertFalse(ok)
        self.assertEqual(command.exit_code, EXIT_AMBIGUOUS)
        self.assertIn("ambiguous", text)
        self.assertTrue(AnalysisReport.load(self.path("rand.report.json")).ambiguous)

    async def test_missing_file(self):
        command, ok, _, text = await self.run_command(["analyze", self.path("missing.json")])
        self.assertFalse(ok)
        self.assertEqual(command.exit_code, EXIT_IO)
        self.assertIn("❌", text)

    async def test_parallel_batch(self):
        """--jobs 2 并行分析多个文件，报告写入目录"""
        paths = [self.write_cell(f"c{k}.json", generate_random(2, 2, 0.3, k)) for k in range(3)]
        report_dir = self.path("reports")
        command, ok, _, _ = await self.run_command(["analyze", *paths, "--report", report_dir, "--jobs", "2"])
        self.assertTrue(ok)
        for k in range(3):
            report = AnalysisReport.load(os.path.join(report_dir, f"c{k}.report.json"))
            self.assertEqual(report.kernel_dim, 3)

    def test_analyze_in_memory(self):
        report = analyze(generate_random(2, 2, 0.3, 0))
        self.assertEqual(report.maxwell["zero_modes"] - report.maxwell["self_stresses"], report.maxwell["dof"] - report.maxwell["bars"])
        self.assertIn("timings", report.run)
        self.assertIn("timestamp", report.run)


class TestOptimizeCommand(CommandTestCase):
    """优化Command测试类"""

    def setUp(self):
        super().setUp()
        self.cell_path = self.path("rand.json")
        save_cell(generate_random(2, 2, 0.3, 0), self.cell_path)

    async def test_writes_outputs(self):
        out, log = self.path("opt.json"), self.path("trace.csv")
        command, ok, _, text = await self.run_command(
            ["optimize", self.cell_path, "--iters", "10", "--seed", "0", "--out", out, "--log", log]
        )
        self.assertIn(command.exit_code, (EXIT_OK, EXIT_STALLED))
        self.assertIn("ratio", text)
        self.assertEqual(load_cell(out).n_nodes, 4)
        with open(log, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], CSV_HEADER)
        self.assertGreater(len(rows), 1)

    async def test_zero_iterations_rejected(self):
        command, ok, _, _ = await self.run_command(["optimize", self.cell_path, "--iters", "0"])
        self.assertFalse(ok)
        self.assertEqual(command.exit_code, EXIT_IO)

    async def test_missing_file(self):
        command, ok, _, _ = await self.run_command(["optimize", self.path("missing.json")])
        self.assertEqual(command.exit_code, EXIT_IO)

    async def test_stall_exit_code(self):
        """线搜索无法接受任何步长时退出码为 3，结果照常写出"""
        config = PluginConfig(
            ShellCountingPlugin.config_schema, {"optimize": {"max_halvings": 0, "initial_step": 1e6}}
        )
        out, log = self.path("stall.json"), self.path("stall.csv")
        command, ok, _, _ = await self.run_command(
            ["optimize", self.cell_path, "--iters", "5", "--out", out, "--log", log, "--step-rule", "fixed"],
            plugin=ShellCountingPlugin(config),
        )
        self.assertFalse(ok)
        self.assertEqual(command.exit_code, EXIT_STALLED)
        self.assertTrue(os.path.exists(out))
        self.assertTrue(os.path.exists(log))


class TestExportCommand(CommandTestCase):
    """导出Command测试类"""

    async def test_tiled_flat(self):
        await self.run_command(["generate", "flat", "--nx", "2", "--ny", "2", "--out", self.path("flat.json")])
        out = self.path("flat.obj")
        command, ok, _, text = await self.run_command(["export", self.path("flat.json"), "--tiles", "3", "3", "--out", out])
        self.assertTrue(ok)
        with open(out, encoding="utf-8") as f:
            vertices = [line for line in f if line.startswith("v ")]
        self.assertEqual(len(vertices), 36)
        self.assertIn("36 vertices", text)

    async def test_default_tiles_from_config(self):
        await self.run_command(["generate", "flat", "--nx", "2", "--ny", "2", "--out", self.path("flat.json")])
        command, ok, _, text = await self.run_command(["export", self.path("flat.json")])
        self.assertTrue(ok)
        self.assertTrue(os.path.exists(self.path("flat.obj")))
        self.assertIn("36 vertices", text)

    async def test_missing_file(self):
        command, ok, _, _ = await self.run_command(["export", self.path("missing.json")])
        self.assertFalse(ok)
        self.assertEqual(command.exit_code, EXIT_IO)


if __name__ == "__main__":
    unittest.main()
