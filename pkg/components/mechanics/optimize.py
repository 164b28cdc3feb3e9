"""
高程优化：最小化等效膜刚度的迹 tr A_EE

展示内容：
- 目标函数与包络定理梯度（固定最优修正求导，无需逐分量重解）
- 带 Armijo 条件的回溯梯度下降，仅改变节点高程
- 可选盒约束 |z − z0| ≤ r（投影），退化杆长步长被拒绝
- 迭代日志写为 CSV：iter,objective,grad_norm,step,max_dz
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from components.mechanics.assembly import assemble
from components.mechanics.cell import UnitCell
from components.mechanics.effective import CorrectionSolver, effective_tensor
from components.mechanics.errors import ShellError

logger = logging.getLogger(__name__)

STEP_RULES = ("adaptive", "fixed")
CSV_HEADER = ["iter", "objective", "grad_norm", "step", "max_dz"]
# 目标降到初始值的该倍数以下即视为收敛
DEFAULT_REL_FLOOR = 1e-20


# ==================== 目标函数与梯度 ====================
def objective(cell: UnitCell) -> float:
    """tr A_EE（Mandel 编码下膜分块的迹）"""
    return effective_tensor(assemble(cell)).membrane_trace


def objective_and_gradient(cell: UnitCell) -> Tuple[float, np.ndarray]:
    """目标值及其对各节点高程的精确梯度

    三个单位膜载荷下，宏观位移只依赖平面坐标，杆件伸长差 Δd 在固定修正下与 z 无关；
    z 只通过杆向 t̂_b 与刚度 k_b = c_b / L_b 进入能量。
    """
    system = assemble(cell)
    solver = CorrectionSolver(system)
    U, E = solver.solve_loadings(np.eye(6)[:, :3])
    k = system.weights
    value = float(np.sum(k[:, None] * E**2)) / system.area

    i, j, _ = cell.bar_index_arrays()
    ell = cell.bar_vectors()
    L = np.linalg.norm(ell, axis=1)
    Uz = U[2::3, :]
    dz = Uz[j, :] - Uz[i, :]
    per_bar = k[:, None] * (2.0 * E * dz - 3.0 * E**2 * (ell[:, 2] / L)[:, None]) / L[:, None]
    g_bar = per_bar.sum(axis=1) / system.area

    grad = np.zeros(cell.n_nodes)
    np.add.at(grad, j, g_bar)
    np.add.at(grad, i, -g_bar)
    return value, grad


def gradient(cell: UnitCell) -> np.ndarray:
    return objective_and_gradient(cell)[1]


# ==================== 迭代记录 ====================
@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    grad_norm: float
    step: float
    max_dz: float

    def as_list(self) -> list:
        return [self.iteration, self.objective, self.grad_norm, self.step, self.max_dz]


@dataclass
class OptimizationTrace:
    rows: List[TraceRow] = field(default_factory=list)
    initial_cell: Optional[UnitCell] = None
    final_cell: Optional[UnitCell] = None
    seed: int = 0
    flags: List[str] = field(default_factory=list)
    # 未加扰动的输入单胞的目标值；缺省取第 0 行
    baseline: Optional[float] = None

    @property
    def initial_objective(self) -> float:
        return self.baseline if self.baseline is not None else self.rows[0].objective

    @property
    def final_objective(self) -> float:
        return self.rows[-1].objective

    @property
    def reduction(self) -> float:
        """初始目标 / 最终目标"""
        final = self.final_objective
        return self.initial_objective / final if final > 0 else float("inf")

    @property
    def stalled(self) -> bool:
        return "stalled" in self.flags

    def write_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_HEADER)
            for row in self.rows:
                writer.writerow([row.iteration] + [repr(float(x)) for x in row.as_list()[1:]])


# ==================== 梯度下降 ====================
def _phi(value: float, log_objective: bool) -> float:
    return float(np.log(value)) if log_objective else value


def minimize(
    cell: UnitCell,
    iters: int,
    step_rule: str = "adaptive",
    seed: int = 0,
    bound: Optional[float] = None,
    initial_step: float = 1e-2,
    armijo: float = 1e-4,
    max_halvings: int = 60,
    log_objective: bool = True,
    jitter: float = 0.0,
    rel_floor: float = DEFAULT_REL_FLOOR,
) -> Tuple[UnitCell, OptimizationTrace]:
    """回溯梯度下降优化节点高程，平面坐标与连接关系保持不变

    step_rule:
        adaptive: 每次从上一次接受步长的两倍开始回溯
        fixed: 每次从 initial_step 开始回溯
    目标不超过 rel_floor × 初始目标时记 "converged"；
    连续 max_halvings 次减半仍不满足 Armijo 条件时记 "stalled" 并终止。
    jitter > 0 时第 0 行为扰动后的起点，降幅仍以输入单胞的目标为基准。
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if step_rule not in STEP_RULES:
        raise ValueError(f"unknown step rule: {step_rule}")
    if bound is not None and bound < 0:
        raise ValueError("bound must be nonnegative")
    if rel_floor < 0:
        raise ValueError("rel_floor must be nonnegative")

    rng = np.random.default_rng(seed)
    z0 = cell.elevations()
    lo, hi = (z0 - bound, z0 + bound) if bound is not None else (None, None)

    def project(z: np.ndarray) -> np.ndarray:
        return np.clip(z, lo, hi) if bound is not None else z

    z = z0.copy()
    if jitter > 0:
        z = project(z + rng.uniform(-jitter, jitter, size=z.shape))
    current = cell.with_elevations(z)
    eps_len = cell.lattice.eps_len

    value, grad = objective_and_gradient(current)
    scale = 1.0 / value if log_objective and value > 0 else 1.0
    trace = OptimizationTrace(initial_cell=cell, seed=seed)
    if jitter > 0:
        trace.baseline = objective(cell)
    trace.rows.append(TraceRow(0, value, float(np.linalg.norm(grad * scale)), 0.0, float(np.max(np.abs(z - z0), initial=0.0))))
    floor = rel_floor * trace.initial_objective

    step = initial_step
    for it in range(1, iters + 1):
        if value <= 0.0 or value <= floor:
            trace.flags.append("converged")
            break
        g = grad / value if log_objective else grad
        if not np.any(g):
            trace.flags.append("converged")
            break

        t = step if step_rule == "adaptive" else initial_step
        if not np.any(project(z - t * g) - z):
            # 投影梯度为零：已在盒约束的 KKT 点
            trace.flags.append("converged")
            break
        phi_current = _phi(value, log_objective)
        accepted = None
        for _ in range(max_halvings + 1):
            z_trial = project(z - t * g)
            dz = z_trial - z
            trial = current.with_elevations(z_trial)
            if np.any(trial.bar_lengths() <= eps_len) or not np.any(dz):
                t *= 0.5
                continue
            try:
                v_trial, g_trial = objective_and_gradient(trial)
            except ShellError as e:
                logger.debug("rejected trial step %.3e: %s", t, e)
                t *= 0.5
                continue
            if v_trial > 0 and _phi(v_trial, log_objective) <= phi_current + armijo * float(g @ dz):
                accepted = (trial, z_trial, v_trial, g_trial)
                break
            t *= 0.5

        if accepted is None:
            trace.flags.append("stalled")
            logger.warning("line search stalled at iteration %d (objective %.6e)", it, value)
            break

        current, z, value, grad = accepted
        step = 2.0 * t
        g_next = grad / value if log_objective else grad
        trace.rows.append(
            TraceRow(it, value, float(np.linalg.norm(g_next)), t, float(np.max(np.abs(z - z0))))
        )
        if it % 100 == 0:
            logger.info("iteration %d: objective %.6e (reduction %.3e)", it, value, trace.reduction)

    if not trace.flags and value <= floor:
        trace.flags.append("converged")
    trace.final_cell = current
    return current, trace
