"""
周期桁架的线化伸长算子

展示内容：
- 宏观应变 (E, χ) 的正交 Mandel 编码
- 宏观位移假设 u_α = E_αβ x_β + z χ_αβ x_β，w = −½ χ_μν x_μ x_ν
- 每根杆件的伸长行：宏观部分（6 列）+ 周期修正部分（稀疏，3N 列）
- 组装为 ElongationSystem，能量为 Σ k_b e_b²
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from components.mechanics.cell import Bar, UnitCell
from components.mechanics.errors import CellError

SQRT2 = math.sqrt(2.0)

Vector = Union[Sequence[float], np.ndarray]


# ==================== Mandel 编码 ====================
def mandel(S: np.ndarray) -> np.ndarray:
    """对称 2×2 张量 → (S11, S22, √2·S12)"""
    S = np.asarray(S, dtype=float)
    return np.array([S[0, 0], S[1, 1], SQRT2 * S[0, 1]])


def unmandel(v: Vector) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    off = v[2] / SQRT2
    return np.array([[v[0], off], [off, v[1]]])


@dataclass(frozen=True)
class MacroStrain:
    """宏观膜应变 e 与弯曲应变 chi，均为 Mandel 3 向量"""

    e: Tuple[float, float, float]
    chi: Tuple[float, float, float]

    @classmethod
    def from_vector(cls, v: Vector) -> "MacroStrain":
        v = np.asarray(v, dtype=float).reshape(6)
        return cls(tuple(float(x) for x in v[:3]), tuple(float(x) for x in v[3:]))

    @classmethod
    def from_tensors(cls, E: np.ndarray, chi: np.ndarray) -> "MacroStrain":
        return cls.from_vector(np.concatenate([mandel(E), mandel(chi)]))

    @classmethod
    def unit(cls, p: int) -> "MacroStrain":
        v = np.zeros(6)
        v[p] = 1.0
        return cls.from_vector(v)

    def as_vector(self) -> np.ndarray:
        return np.array(self.e + self.chi, dtype=float)

    @property
    def E(self) -> np.ndarray:
        return unmandel(self.e)

    @property
    def Chi(self) -> np.ndarray:
        return unmandel(self.chi)


def as_strain_vector(m: Union[MacroStrain, Vector]) -> np.ndarray:
    if isinstance(m, MacroStrain):
        return m.as_vector()
    return np.asarray(m, dtype=float).reshape(6)


# ==================== 宏观位移 ====================
def macro_displacement(point: Vector, m: Union[MacroStrain, Vector]) -> np.ndarray:
    """节点实际位置 (x1, x2, z) 处的宏观位移 (u1, u2, w)"""
    p = np.asarray(point, dtype=float)
    v = as_strain_vector(m)
    E, chi = unmandel(v[:3]), unmandel(v[3:])
    x, z = p[:2], p[2]
    u = E @ x + z * (chi @ x)
    w = -0.5 * x @ chi @ x
    return np.array([u[0], u[1], w])


def macro_displacement_basis(points: np.ndarray) -> np.ndarray:
    """(P, 3, 6)：每个点在 6 个单位宏观应变下的位移"""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    basis = np.empty((points.shape[0], 3, 6))
    for p in range(6):
        unit = np.zeros(6)
        unit[p] = 1.0
        E, chi = unmandel(unit[:3]), unmandel(unit[3:])
        x, z = points[:, :2], points[:, 2:3]
        basis[:, :2, p] = x @ E.T + z * (x @ chi.T)
        basis[:, 2, p] = -0.5 * np.einsum("pa,ab,pb->p", x, chi, x)
    return basis


# ==================== 伸长算子 ====================
@dataclass(frozen=True)
class ElongationSystem:
    C_macro: np.ndarray
    C_per: csr_matrix
    weights: np.ndarray
    area: float

    @property
    def n_bars(self) -> int:
        return self.C_macro.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.C_per.shape[1] // 3

    def elongations(self, m: Union[MacroStrain, Vector], correction: Vector = None) -> np.ndarray:
        e = self.C_macro @ as_strain_vector(m)
        if correction is not None:
            e = e + self.C_per @ np.asarray(correction, dtype=float)
        return e

    def energy(self, m: Union[MacroStrain, Vector], correction: Vector = None) -> float:
        """单位面积应变能 Σ k_b e_b² / area"""
        e = self.elongations(m, correction)
        return float(e @ (self.weights * e)) / self.area


def _bar_geometry(cell: UnitCell) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    p, q = cell.endpoint_positions()
    lengths = np.linalg.norm(q - p, axis=1)
    bad = np.flatnonzero(lengths <= cell.lattice.eps_len)
    if bad.size:
        raise CellError("degenerate bar", f"bar {int(bad[0])} length={lengths[bad[0]]:.3e}")
    return p, q, (q - p) / lengths[:, None]


def bar_elongation_row(cell: UnitCell, bar: Union[Bar, int]) -> Tuple[np.ndarray, csr_matrix]:
    """单根杆件的伸长行：(宏观 6 向量, 1×3N 稀疏周期部分)"""
    if isinstance(bar, int):
        bar = cell.bars[bar]
    pos = cell.positions()
    p = pos[bar.i]
    q = pos[bar.j] + cell.lattice.shift_vector(bar.shift)
    length = float(np.linalg.norm(q - p))
    if length <= cell.lattice.eps_len:
        raise CellError("degenerate bar", f"({bar.i}, {bar.j}, {tuple(bar.shift)}) length={length:.3e}")
    t = (q - p) / length

    basis = macro_displacement_basis(np.vstack([p, q]))
    macro = t @ (basis[1] - basis[0])

    n = cell.n_nodes
    cols = np.concatenate([3 * bar.j + np.arange(3), 3 * bar.i + np.arange(3)])
    vals = np.concatenate([t, -t])
    periodic = coo_matrix((vals, (np.zeros(6, dtype=int), cols)), shape=(1, 3 * n)).tocsr()
    return macro, periodic


def assemble(cell: UnitCell) -> ElongationSystem:
    """逐杆堆叠伸长行；各行相互独立，这里一次性向量化计算"""
    p, q, t = _bar_geometry(cell)
    i, j, _ = cell.bar_index_arrays()
    n_bars, n = cell.n_bars, cell.n_nodes

    dp = macro_displacement_basis(p)
    dq = macro_displacement_basis(q)
    C_macro = np.einsum("bk,bkp->bp", t, dq - dp)

    rows = np.repeat(np.arange(n_bars), 6)
    cols = np.concatenate([3 * j[:, None] + np.arange(3), 3 * i[:, None] + np.arange(3)], axis=1).ravel()
    vals = np.concatenate([t, -t], axis=1).ravel()
    C_per = coo_matrix((vals, (rows, cols)), shape=(n_bars, 3 * n)).tocsr()

    return ElongationSystem(C_macro, C_per, cell.stiffnesses(), float(cell.lattice.area))
