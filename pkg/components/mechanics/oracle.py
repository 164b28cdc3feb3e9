"""
稠密参考实现（仅用于测试交叉校验）

与主路径只共享单胞数据模型：逐杆构造稠密行、显式 Schur 补、SVD 零空间、
中心差分梯度。
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from components.mechanics.cell import UnitCell

MAX_NODES = 200
SCHUR_RCOND = 1e-12
NULL_RTOL = 1e-7
PROJECTION_TOL = 1e-6

_R2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class DenseSystem:
    matrix: np.ndarray
    weights: np.ndarray
    area: float
    n_nodes: int


def _guard(cell: UnitCell) -> None:
    if cell.n_nodes > MAX_NODES:
        raise ValueError(f"oracle limited to {MAX_NODES} nodes, got {cell.n_nodes}")


def _macro_jacobian(x1: float, x2: float, z: float) -> np.ndarray:
    """(3, 6)：位移 (u1, u2, w) 对 (E11, E22, √2E12, χ11, χ22, √2χ12) 的导数"""
    return np.array(
        [
            [x1, 0.0, x2 * _R2, z * x1, 0.0, z * x2 * _R2],
            [0.0, x2, x1 * _R2, 0.0, z * x2, z * x1 * _R2],
            [0.0, 0.0, 0.0, -0.5 * x1 * x1, -0.5 * x2 * x2, -x1 * x2 * _R2],
        ]
    )


def dense_system(cell: UnitCell) -> DenseSystem:
    _guard(cell)
    n = cell.n_nodes
    a1, a2 = cell.lattice.a1, cell.lattice.a2
    rows = np.zeros((cell.n_bars, 6 + 3 * n))
    weights = np.zeros(cell.n_bars)
    for b, bar in enumerate(cell.bars):
        ni, nj = cell.nodes[bar.i], cell.nodes[bar.j]
        pi = np.array([ni.x[0], ni.x[1], ni.z])
        pj = np.array(
            [
                nj.x[0] + bar.shift[0] * a1[0] + bar.shift[1] * a2[0],
                nj.x[1] + bar.shift[0] * a1[1] + bar.shift[1] * a2[1],
                nj.z,
            ]
        )
        d = pj - pi
        t = d / math.sqrt(float(d @ d))
        rows[b, :6] = t @ (_macro_jacobian(*pj) - _macro_jacobian(*pi))
        rows[b, 6 + 3 * bar.j : 9 + 3 * bar.j] += t
        rows[b, 6 + 3 * bar.i : 9 + 3 * bar.i] -= t
        weights[b] = bar.k
    area = a1[0] * a2[1] - a1[1] * a2[0]
    return DenseSystem(rows, weights, area, n)


def oracle_effective(cell: UnitCell) -> np.ndarray:
    """稠密 Schur 补：A = (H_mm − H_mp H_pp⁺ H_pm) / area"""
    ds = dense_system(cell)
    H = ds.matrix.T @ (ds.weights[:, None] * ds.matrix)
    H_mm, H_mp, H_pp = H[:6, :6], H[:6, 6:], H[6:, 6:]
    A = (H_mm - H_mp @ np.linalg.pinv(H_pp, rcond=SCHUR_RCOND, hermitian=True) @ H_mp.T) / ds.area
    return 0.5 * (A + A.T)


def oracle_kernel_dim(cell: UnitCell) -> int:
    """完整伸长映射零空间在 6 个宏观分量上投影的秩"""
    ds = dense_system(cell)
    M = np.sqrt(ds.weights)[:, None] * ds.matrix
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    s_full = np.zeros(Vt.shape[0])
    s_full[: s.size] = s
    null = Vt[s_full <= NULL_RTOL * s.max()].T
    if null.shape[1] == 0:
        return 0
    sv = np.linalg.svd(null[:6, :], compute_uv=False)
    return int(np.sum(sv > PROJECTION_TOL))


def fd_gradient(cell: UnitCell, step: float = 1e-6) -> np.ndarray:
    """tr A_EE 对各节点高程的中心差分"""
    if step <= 0:
        raise ValueError("step must be positive")
    z = cell.elevations()
    grad = np.zeros_like(z)
    for n in range(z.size):
        up, down = z.copy(), z.copy()
        up[n] += step
        down[n] -= step
        grad[n] = (_trace(cell.with_elevations(up)) - _trace(cell.with_elevations(down))) / (2.0 * step)
    return grad


def _trace(cell: UnitCell) -> float:
    """三个单位膜载荷下的最小能量之和，用加权最小二乘直接求残差"""
    ds = dense_system(cell)
    sw = np.sqrt(ds.weights)[:, None]
    macro, periodic = sw * ds.matrix[:, :6], sw * ds.matrix[:, 6:]
    total = 0.0
    for p in range(3):
        u, *_ = np.linalg.lstsq(periodic, -macro[:, p], rcond=None)
        r = macro[:, p] + periodic @ u
        total += float(r @ r)
    return total / ds.area
