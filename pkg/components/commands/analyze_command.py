"""
分析Command - 对单胞文件计算等效张量、核空间计数并写出报告

展示内容：
- assemble → effective_tensor → kernel_count → 分类 → 精确关系与辛配对 → Poisson
- 报告为单个 JSON 文档，数值按最短往返表示写出，读回数值不变
- --jobs N 时多个文件通过 ProcessPoolExecutor 并行，每个任务只依赖自己的文件
"""

import argparse
import asyncio
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from components.commands.base_command import EXIT_AMBIGUOUS, EXIT_IO, EXIT_OK, BaseCommand
from components.mechanics.analysis import kernel_count, maxwell_count, poisson_identity
from components.mechanics.assembly import assemble
from components.mechanics.cell import UnitCell, load_cell
from components.mechanics.effective import CorrectionSolver, effective_tensor
from components.mechanics.errors import NotCanonicalError, ShellError
from utils.helpers import PerformanceMonitor, to_jsonable, write_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnalysisSettings:
    tol_rel: float = 1e-8
    gap_threshold: float = 1e4
    classify_tol: float = 1e-6
    poisson_tol: float = 1e-6


@dataclass
class AnalysisReport:
    cell: Dict[str, Any]
    A: List[List[float]]
    eigenvalues: List[float]
    kernel_dim: int
    gap_ratio: float
    tol_rel: float
    kernel_basis: List[List[float]]
    classification: Dict[str, int]
    residual_AJA: float
    symplectic_residual: float
    pairing_matrix: List[List[float]]
    iso_min_angle: float
    maxwell: Dict[str, int]
    solver: Dict[str, Any]
    poisson: Optional[Dict[str, float]] = None
    flags: List[str] = field(default_factory=list)
    run: Dict[str, Any] = field(default_factory=dict)

    @property
    def ambiguous(self) -> bool:
        return "ambiguous" in self.flags

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable(asdict(self))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AnalysisReport":
        return cls(**data)

    def save(self, path: Union[str, Path]) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "AnalysisReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def analyze(cell: UnitCell, settings: AnalysisSettings = AnalysisSettings()) -> AnalysisReport:
    """对内存中的单胞执行完整分析流程"""
    monitor = PerformanceMonitor()

    monitor.start_timer("assemble")
    system = assemble(cell)
    monitor.end_timer("assemble")

    monitor.start_timer("effective")
    solver = CorrectionSolver(system)
    tensor = effective_tensor(system, solver)
    monitor.end_timer("effective")

    monitor.start_timer("kernel")
    report = kernel_count(tensor, settings.tol_rel, settings.gap_threshold, settings.classify_tol)
    counts = maxwell_count(system)
    monitor.end_timer("kernel")

    flags = list(report.flags)
    try:
        p = poisson_identity(report, settings.poisson_tol)
        poisson = {"nu_membrane": p.nu_membrane, "nu_flexure": p.nu_flexure, "residual": p.residual}
    except NotCanonicalError as e:
        poisson = None
        flags.append("not canonical")
        logger.debug("poisson identity undefined: %s (pairing residual %.3e)", e, e.pairing_residual)

    return AnalysisReport(
        cell={
            "metadata": dict(cell.metadata),
            "nodes": cell.n_nodes,
            "bars": cell.n_bars,
            "area": cell.lattice.area,
        },
        A=tensor.A.tolist(),
        eigenvalues=report.eigenvalues.tolist(),
        kernel_dim=report.kernel_dim,
        gap_ratio=report.gap_ratio,
        tol_rel=report.tol_rel,
        kernel_basis=report.kernel_basis.tolist(),
        classification={
            "pure_membrane": report.pure_membrane_dim,
            "pure_flexure": report.pure_flexure_dim,
            "mixed": report.mixed_dim,
        },
        residual_AJA=report.residual_AJA,
        symplectic_residual=report.symplectic_residual,
        pairing_matrix=report.pairing_matrix.tolist(),
        iso_min_angle=report.iso_min_angle,
        maxwell=asdict(counts),
        solver={
            "method": solver.method,
            "scale": tensor.scale,
            "condition": None if solver.condition is None or not np.isfinite(solver.condition) else float(solver.condition),
        },
        poisson=poisson,
        flags=flags,
        run={
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "timings": monitor.get_metrics(),
        },
    )


def analyze_file(path: str, report_path: str, settings: AnalysisSettings) -> Tuple[str, Optional[Dict[str, Any]], Optional[str]]:
    """进程池任务：读单胞、分析、写报告；返回 (路径, 摘要, 错误信息)"""
    try:
        cell = load_cell(path)
        report = analyze(cell, settings)
        report.save(report_path)
    except (OSError, ShellError) as e:
        return path, None, str(e)
    summary = {
        "kernel_dim": report.kernel_dim,
        "gap_ratio": report.gap_ratio,
        "classification": report.classification,
        "residual_AJA": report.residual_AJA,
        "poisson": report.poisson,
        "ambiguous": report.ambiguous,
    }
    return path, summary, None


def report_path_for(cell_path: str, report: Optional[str], multiple: bool) -> str:
    """单个文件时 --report 为文件名；多个文件时为目录"""
    stem = Path(cell_path).stem
    if report is None:
        return str(Path(cell_path).with_name(f"{stem}.report.json"))
    if multiple:
        Path(report).mkdir(parents=True, exist_ok=True)
        return str(Path(report) / f"{stem}.report.json")
    return report


class AnalyzeCommand(BaseCommand):
    command_name = "analyze"
    command_help = "分析单胞：等效张量、宏观等距模态计数与恒等式残差"
    command_examples = [
        "analyze cell.json --report cell.report.json",
        "analyze a.json b.json c.json --report reports/ --jobs 3",
    ]
    feature_switch = "features.enable_analyze_command"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("cells", nargs="+", help="单胞 JSON 文件")
        parser.add_argument("--tol", type=float, default=None, help="核空间相对阈值")
        parser.add_argument("--report", default=None, help="报告文件（多个单胞时为目录）")
        parser.add_argument("--jobs", type=int, default=None)

    def settings(self) -> AnalysisSettings:
        return AnalysisSettings(
            tol_rel=float(self.arg("tol", "analysis.tol_rel", 1e-8)),
            gap_threshold=float(self.get_config("analysis.gap_threshold", 1e4)),
            classify_tol=float(self.get_config("analysis.classify_tol", 1e-6)),
            poisson_tol=float(self.get_config("analysis.poisson_tol", 1e-6)),
        )

    async def run(self) -> Tuple[bool, Optional[str]]:
        cells: List[str] = list(self.args.cells)
        settings = self.settings()
        if not settings.tol_rel > 0:
            return await self.fail("--tol 必须为正数")
        jobs = int(self.arg("jobs", "commands.jobs", 1))
        multiple = len(cells) > 1
        targets = [(c, report_path_for(c, self.args.report, multiple)) for c in cells]

        if jobs > 1 and multiple:
            loop = asyncio.get_running_loop()
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = await asyncio.gather(
                    *(loop.run_in_executor(pool, analyze_file, c, r, settings) for c, r in targets)
                )
        else:
            results = [analyze_file(c, r, settings) for c, r in targets]

        failed, ambiguous = [], []
        for (path, summary, error), (_, report_path) in zip(results, targets):
            if error is not None:
                failed.append(path)
                await self.send_text(f"❌ {path}: {error}")
                continue
            cls = summary["classification"]
            line = (
                f"{path}: kernel_dim={summary['kernel_dim']} gap_ratio={self.format_number(summary['gap_ratio'])} "
                f"classification=({cls['pure_membrane']},{cls['pure_flexure']},{cls['mixed']}) "
                f"residual_AJA={self.format_number(summary['residual_AJA'])}"
            )
            if summary["poisson"] is not None:
                line += f" poisson_residual={self.format_number(summary['poisson']['residual'])}"
            if summary["ambiguous"]:
                ambiguous.append(path)
                await self.send_text(f"⚠️ {line} [ambiguous] -> {report_path}")
            else:
                await self.send_text(f"✅ {line} -> {report_path}")

        if failed:
            self.exit_code = EXIT_IO
            return False, f"{len(failed)} 个单胞分析失败"
        if ambiguous:
            self.exit_code = EXIT_AMBIGUOUS
            return False, f"{len(ambiguous)} 个单胞的谱间隙不足"
        self.exit_code = EXIT_OK
        return True, None
