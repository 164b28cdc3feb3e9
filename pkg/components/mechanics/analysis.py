"""
等效张量的核空间分析

展示内容：
- 特征分解 + 相对阈值 + 谱间隙比，给出宏观等距模态的个数
- 按主角判断纯膜 / 纯弯曲模态
- 精确关系 A J A = 0、辛配对、Poisson 恒等式
- Maxwell–Calladine 计数（自应力态与零模态）
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg as la

from components.mechanics.assembly import ElongationSystem, MacroStrain, Vector, as_strain_vector
from components.mechanics.effective import EffectiveTensor
from components.mechanics.errors import NotCanonicalError

logger = logging.getLogger(__name__)

DEFAULT_TOL_REL = 1e-8
DEFAULT_GAP_THRESHOLD = 1e4
DEFAULT_CLASSIFY_TOL = 1e-6
# λ_max 不超过该倍数的参考量级时整个 A 视为零
DEGENERATE_REL = 1e-12

# Mandel 编码下的 cof 映射
COF = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])

_MEMBRANE = np.eye(6)[:, :3]
_FLEXURE = np.eye(6)[:, 3:]


def cofactor(S: np.ndarray) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    return np.array([[S[1, 1], -S[0, 1]], [-S[1, 0], S[0, 0]]])


@dataclass(frozen=True)
class SymplecticJ:
    """J = [[0, −C], [C, 0]]，C 为 cof 的矩阵"""

    C: np.ndarray = field(default_factory=lambda: COF.copy())

    @property
    def J(self) -> np.ndarray:
        Z = np.zeros((3, 3))
        return np.block([[Z, -self.C], [self.C, Z]])


def symplectic_j() -> np.ndarray:
    return SymplecticJ().J


def _as_matrix(A: Union[EffectiveTensor, np.ndarray]) -> np.ndarray:
    if isinstance(A, EffectiveTensor):
        return A.A
    return np.asarray(A, dtype=float)


@dataclass(frozen=True)
class KernelReport:
    eigenvalues: np.ndarray
    kernel_dim: int
    kernel_basis: np.ndarray
    gap_ratio: float
    tol_rel: float
    pure_membrane_dim: int = 0
    pure_flexure_dim: int = 0
    mixed_dim: int = 0
    residual_AJA: float = 0.0
    symplectic_residual: float = 0.0
    pairing_matrix: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    iso_min_angle: float = float(np.pi / 2)
    flags: Tuple[str, ...] = ()

    @property
    def rank(self) -> int:
        return 6 - self.kernel_dim

    @property
    def ambiguous(self) -> bool:
        return "ambiguous" in self.flags


# ==================== 核空间计数 ====================
def kernel_count(
    A: Union[EffectiveTensor, np.ndarray],
    tol_rel: float = DEFAULT_TOL_REL,
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
    classify_tol: float = DEFAULT_CLASSIFY_TOL,
    scale: Optional[float] = None,
) -> KernelReport:
    """特征值 λ < tol_rel·λ_max 的特征向量张成核空间

    gap_ratio 为截断两侧特征值之比（最小保留值 / 最大舍弃值）；
    小于 gap_threshold 时标记 "ambiguous"。
    scale 为 A 的绝对量级（缺省取 EffectiveTensor.scale）；
    λ_max ≤ DEGENERATE_REL·scale 时 A 只剩舍入误差，kernel_dim = 6 并标记 "degenerate cell"。
    """
    if scale is None:
        scale = A.scale if isinstance(A, EffectiveTensor) else 0.0
    M = _as_matrix(A)
    M = 0.5 * (M + M.T)
    lam, V = la.eigh(M)
    lam = np.clip(lam, 0.0, None)
    lam_max = float(lam[-1])
    flags = []

    if lam_max <= DEGENERATE_REL * max(scale, 0.0):
        k = 6
        basis = np.eye(6)
        gap = float("inf")
        flags.append("degenerate cell")
    else:
        kernel = lam < tol_rel * lam_max
        k = int(kernel.sum())
        basis = V[:, :k]
        floor = np.finfo(float).eps ** 2 * lam_max
        if k == 0:
            gap = float(lam[0] / (tol_rel * lam_max))
        else:
            gap = float(lam[k] / max(lam[k - 1], floor)) if k < 6 else float("inf")

    if gap < gap_threshold:
        flags.append("ambiguous")
        logger.warning("ambiguous kernel cut: dim %d with gap ratio %.3e", k, gap)

    report = KernelReport(
        eigenvalues=lam,
        kernel_dim=k,
        kernel_basis=basis,
        gap_ratio=gap,
        tol_rel=tol_rel,
        flags=tuple(flags),
    )
    membrane, flexure, mixed = classify_kernel(report, classify_tol)
    pairing = pairing_matrix(basis)
    report = replace(
        report,
        pure_membrane_dim=membrane,
        pure_flexure_dim=flexure,
        mixed_dim=mixed,
        residual_AJA=exact_relation_residual(M),
        pairing_matrix=pairing,
        symplectic_residual=float(np.abs(pairing).max()) if pairing.size else 0.0,
    )
    return replace(report, iso_min_angle=isomorphism_angle(report))


# ==================== 精确关系与辛配对 ====================
def exact_relation_residual(A: Union[EffectiveTensor, np.ndarray], J: Optional[np.ndarray] = None) -> float:
    """‖A J A‖_F / ‖A‖_F²，A = 0 时为 0"""
    M = _as_matrix(A)
    J = symplectic_j() if J is None else np.asarray(J, dtype=float)
    norm = np.linalg.norm(M)
    if norm == 0.0:
        return 0.0
    return float(np.linalg.norm(M @ J @ M) / norm**2)


def symplectic_pairing(
    m1: Union[MacroStrain, Vector], m2: Union[MacroStrain, Vector], J: Optional[np.ndarray] = None
) -> float:
    """E_1 : cof χ_2 − χ_1 : cof E_2"""
    C = COF if J is None else np.asarray(J, dtype=float)[3:, :3]
    v1, v2 = as_strain_vector(m1), as_strain_vector(m2)
    return float(v1[:3] @ C @ v2[3:] - v1[3:] @ C @ v2[:3])


def pairing_matrix(basis: np.ndarray, J: Optional[np.ndarray] = None) -> np.ndarray:
    """核基两两之间的辛配对（反对称 k×k）"""
    k = basis.shape[1]
    P = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            P[a, b] = symplectic_pairing(basis[:, a], basis[:, b], J)
    return P


def isomorphism_angle(report: KernelReport, J: Optional[np.ndarray] = None) -> float:
    """J·Ker A 的各列与 Ker A 之间的最小夹角（弧度）"""
    K = report.kernel_basis
    if K.shape[1] == 0 or K.shape[1] == 6:
        return float(np.pi / 2) if K.shape[1] == 0 else 0.0
    J = symplectic_j() if J is None else np.asarray(J, dtype=float)
    angles = []
    for v in (J @ K).T:
        s = np.linalg.norm(K.T @ v) / np.linalg.norm(v)
        angles.append(np.pi / 2 - np.arcsin(min(s, 1.0)))
    return float(min(angles))


# ==================== 模态分类 ====================
def _intersection(kernel: np.ndarray, subspace: np.ndarray, tol: float) -> np.ndarray:
    """核空间与坐标子空间的交（主角 < tol 的方向），返回正交基"""
    if kernel.shape[1] == 0:
        return np.zeros((6, 0))
    angles = la.subspace_angles(kernel, subspace)
    count = int(np.sum(angles < tol))
    if count == 0:
        return np.zeros((6, 0))
    U, _, _ = la.svd(kernel.T @ subspace)
    return kernel @ U[:, :count]


def pure_mode_bases(report: KernelReport, tol: float = DEFAULT_CLASSIFY_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """(纯膜模态基, 纯弯曲模态基)"""
    K = report.kernel_basis
    return _intersection(K, _MEMBRANE, tol), _intersection(K, _FLEXURE, tol)


def classify_kernel(report: KernelReport, tol: float = DEFAULT_CLASSIFY_TOL) -> Tuple[int, int, int]:
    """返回 (纯膜维数, 纯弯曲维数, 混合维数)"""
    membrane, flexure = pure_mode_bases(report, tol)
    pm, pf = membrane.shape[1], flexure.shape[1]
    return pm, pf, report.kernel_dim - pm - pf


# ==================== Poisson 恒等式 ====================
@dataclass(frozen=True)
class PoissonResult:
    nu_membrane: float
    nu_flexure: float
    residual: float


def poisson_identity(report: KernelReport, tol: float = DEFAULT_CLASSIFY_TOL) -> PoissonResult:
    """唯一纯膜模态 E ∝ diag(1, −ν_m) 与对角纯弯曲模态 χ ∝ diag(1, −ν_f)

    residual = ν_m + ν_f；模态不满足对角形式时抛出 NotCanonicalError。
    """
    membrane, flexure = pure_mode_bases(report, tol)
    fail = NotCanonicalError(pairing_residual=report.symplectic_residual)
    if membrane.shape[1] != 1 or flexure.shape[1] == 0:
        raise fail

    E = membrane[:3, 0]
    if abs(E[2]) > tol * np.linalg.norm(E) or abs(E[0]) <= tol * np.linalg.norm(E):
        raise fail
    nu_m = -E[1] / E[0]

    F = flexure[3:, :]
    if F.shape[1] == 1:
        chi = F[:, 0]
    else:
        # 弯曲子空间中扭转分量为零的方向
        combos = la.null_space(F[2:3, :], rcond=tol)
        if combos.shape[1] != 1:
            raise fail
        chi = F @ combos[:, 0]
    if abs(chi[2]) > tol * np.linalg.norm(chi) or abs(chi[0]) <= tol * np.linalg.norm(chi):
        raise fail
    nu_f = -chi[1] / chi[0]
    return PoissonResult(float(nu_m), float(nu_f), float(nu_m + nu_f))


# ==================== Maxwell–Calladine 计数 ====================
@dataclass(frozen=True)
class MaxwellCount:
    bars: int
    dof: int
    rank: int
    self_stresses: int
    zero_modes: int


def maxwell_count(system: ElongationSystem, tol: float = 1e-10) -> MaxwellCount:
    """[C_macro | C_per] 的秩、自应力态与零模态个数（平移不计）

    zero_modes − self_stresses = dof − bars。
    """
    full = np.hstack([system.C_macro, system.C_per.toarray()])
    s = la.svdvals(full) if full.size else np.zeros(0)
    rank = int(np.sum(s > tol * s.max())) if s.size and s.max() > 0 else 0
    dof = full.shape[1] - 3
    return MaxwellCount(
        bars=system.n_bars,
        dof=dof,
        rank=rank,
        self_stresses=system.n_bars - rank,
        zero_modes=dof - rank,
    )
