"""
等效刚度张量 A

对周期修正位移最小化应变能：
    [E; χ]ᵀ A [E; χ] = min_u Σ_b k_b e_b(m, u)² / area

法方程 K u = −C_perᵀ W C_macro m 用对称分解求解，三个整体平移从修正空间中投影掉；
近奇异时退回到特征分解伪逆（相对截断 1e-12），给出最小范数解。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg as la
from scipy.sparse import diags

from components.mechanics.assembly import ElongationSystem, MacroStrain, Vector, as_strain_vector
from components.mechanics.errors import SolverError

logger = logging.getLogger(__name__)

PINV_CUTOFF = 1e-12
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


def translation_basis(n_nodes: int) -> np.ndarray:
    """(3N, 3) 正交归一的整体平移基"""
    T = np.zeros((3 * n_nodes, 3))
    for c in range(3):
        T[c::3, c] = 1.0 / np.sqrt(n_nodes)
    return T


class CorrectionSolver:
    """周期修正法方程的分解，构造后只读共享"""

    def __init__(self, system: ElongationSystem, cutoff: float = PINV_CUTOFF):
        self.system = system
        self.cutoff = cutoff
        Cp = system.C_per
        K = (Cp.T @ diags(system.weights) @ Cp).toarray()
        K = 0.5 * (K + K.T)
        self.T = translation_basis(system.n_nodes)
        self.method = "cholesky"
        self.condition: Optional[float] = None

        scale = max(float(np.trace(K)) / max(K.shape[0], 1), np.finfo(float).tiny)
        deflated = K + scale * (self.T @ self.T.T)
        try:
            factor = la.cho_factor(deflated, lower=True, check_finite=True)
            diag = np.abs(np.diag(factor[0]))
            rcond = (diag.min() / diag.max()) ** 2 if diag.max() > 0 else 0.0
            self.condition = 1.0 / rcond if rcond > 0 else np.inf
            if rcond < cutoff:
                raise la.LinAlgError("near-singular factor")
            self._factor = factor
        except la.LinAlgError:
            self._init_pseudoinverse(K)

    def _init_pseudoinverse(self, K: np.ndarray) -> None:
        self.method = "pseudoinverse"
        try:
            lam, V = la.eigh(K)
        except la.LinAlgError as e:
            raise SolverError(f"eigendecomposition failed: {e}", self.condition) from e
        lam_max = float(lam.max()) if lam.size else 0.0
        keep = lam > self.cutoff * lam_max if lam_max > 0 else np.zeros_like(lam, dtype=bool)
        self._V = V[:, keep]
        self._inv_lam = 1.0 / lam[keep]
        if keep.any():
            self.condition = lam_max / float(lam[keep].min())
        logger.debug(
            "correction solver fell back to pseudoinverse: rank %d of %d, condition %.3e",
            int(keep.sum()), K.shape[0], self.condition or 0.0,
        )

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """求解 K u = rhs，返回与平移正交的最小范数解"""
        rhs = np.asarray(rhs, dtype=float)
        if self.method == "cholesky":
            u = la.cho_solve(self._factor, rhs)
        else:
            u = self._V @ (self._inv_lam[:, None] * (self._V.T @ rhs.reshape(rhs.shape[0], -1)))
            u = u.reshape(rhs.shape)
        u = u - self.T @ (self.T.T @ u)
        if not np.all(np.isfinite(u)):
            raise SolverError("correction solve produced non-finite values", self.condition)
        return u

    def solve_loadings(self, strains: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """多个宏观应变（6×k 列）的修正场与伸长"""
        sys = self.system
        strains = np.asarray(strains, dtype=float).reshape(6, -1)
        e_macro = sys.C_macro @ strains
        rhs = -(sys.C_per.T @ (sys.weights[:, None] * e_macro))
        U = self.solve(rhs)
        return U, e_macro + sys.C_per @ U


@dataclass(frozen=True)
class CorrectionResult:
    correction: np.ndarray
    elongations: np.ndarray
    energy: float


def solve_correction(
    system: ElongationSystem, m: Union[MacroStrain, Vector], solver: Optional[CorrectionSolver] = None
) -> CorrectionResult:
    """对给定宏观应变求最优周期修正，能量按单胞面积归一"""
    solver = solver or CorrectionSolver(system)
    v = as_strain_vector(m)
    U, e = solver.solve_loadings(v[:, None])
    energy = float(e[:, 0] @ (system.weights * e[:, 0])) / system.area
    return CorrectionResult(U[:, 0], e[:, 0], energy)


@dataclass(frozen=True)
class EffectiveTensor:
    """单位面积的 6×6 等效刚度；分块 A_EE、A_Eχ、A_χχ"""

    A: np.ndarray
    corrections: np.ndarray
    elongations: np.ndarray
    area: float
    method: str = "cholesky"
    # 未松弛能量 C_macroᵀ W C_macro / area 的最大特征值，作为 A 的绝对量级
    scale: float = 0.0

    @property
    def A_EE(self) -> np.ndarray:
        return self.A[:3, :3]

    @property
    def A_Echi(self) -> np.ndarray:
        return self.A[:3, 3:]

    @property
    def A_chichi(self) -> np.ndarray:
        return self.A[3:, 3:]

    @property
    def membrane_trace(self) -> float:
        return float(np.trace(self.A_EE))

    def energy(self, m: Union[MacroStrain, Vector]) -> float:
        v = as_strain_vector(m)
        return float(v @ self.A @ v)


def reference_scale(system: ElongationSystem) -> float:
    """不做周期修正时的最大单位面积刚度 λ_max(C_macroᵀ W C_macro) / area"""
    H = system.C_macro.T @ (system.weights[:, None] * system.C_macro) / system.area
    return float(la.eigvalsh(0.5 * (H + H.T))[-1])


def effective_tensor(system: ElongationSystem, solver: Optional[CorrectionSolver] = None) -> EffectiveTensor:
    """六个单位载荷下的最优修正能量组成 A"""
    solver = solver or CorrectionSolver(system)
    U, E = solver.solve_loadings(np.eye(6))
    A = E.T @ (system.weights[:, None] * E) / system.area
    scale = reference_scale(system)

    norm = np.linalg.norm(A)
    asym = np.linalg.norm(A - A.T)
    if asym > SYMMETRY_TOL * max(norm, scale, np.finfo(float).tiny):
        raise SolverError(f"effective tensor not symmetric (relative {asym / norm:.3e})", solver.condition)
    A = 0.5 * (A + A.T)
    lam = la.eigvalsh(A)
    if lam.size and lam.min() < -PSD_TOL * max(lam.max(), scale):
        raise SolverError(f"effective tensor not positive semidefinite (min eigenvalue {lam.min():.3e})", solver.condition)
    return EffectiveTensor(A, U, E, system.area, solver.method, scale)


def macro_stress(tensor: EffectiveTensor, m: Union[MacroStrain, Vector]) -> Tuple[np.ndarray, np.ndarray]:
    """宏观膜力 Σ 与弯矩 M（Mandel 编码）"""
    s = tensor.A @ as_strain_vector(m)
    return s[:3], s[3:]


def bar_tensions(system: ElongationSystem, tensor: EffectiveTensor, m: Union[MacroStrain, Vector]) -> np.ndarray:
    """最优修正下的杆件拉力 k_b e_b，对周期修正自平衡"""
    return system.weights * (tensor.elongations @ as_strain_vector(m))


def hill_mandel_check(
    system: ElongationSystem,
    m1: Union[MacroStrain, Vector],
    m2: Union[MacroStrain, Vector],
    correction2: Optional[Vector] = None,
    tensor: Optional[EffectiveTensor] = None,
) -> float:
    """m1 的平衡拉力对 m2 的任意容许伸长所做的功，减去宏观功 m2ᵀ A m1

    correction2 缺省为零修正。
    """
    tensor = tensor or effective_tensor(system)
    tensions = bar_tensions(system, tensor, m1)
    e2 = system.elongations(m2, correction2)
    cross = float(tensions @ e2) / system.area
    macro = float(as_strain_vector(m2) @ tensor.A @ as_strain_vector(m1))
    return cross - macro
