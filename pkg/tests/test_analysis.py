"""
核空间分析测试

测试内容：
- 核维数、谱间隙与 ambiguous 标记
- 纯膜 / 纯弯曲 / 混合模态分类
- 精确关系 A J A = 0 与辛配对
- Poisson 恒等式与 Maxwell–Calladine 计数
- 开孔与柄的计数界，核空间的缩放协变与刚度无关性
"""

import os
import sys
import unittest
from dataclasses import replace

import numpy as np
from scipy.linalg import subspace_angles

# 添加插件路径到Python路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from components.mechanics.analysis import (
    COF,
    classify_kernel,
    cofactor,
    exact_relation_residual,
    isomorphism_angle,
    kernel_count,
    maxwell_count,
    pairing_matrix,
    poisson_identity,
    pure_mode_bases,
    symplectic_j,
    symplectic_pairing,
)
from components.mechanics.assembly import MacroStrain, assemble, mandel
from components.mechanics.cell import (
    Bar,
    generate_corrugation,
    generate_flat,
    generate_handle,
    generate_random,
    punch_hole,
)
from components.mechanics.effective import effective_tensor
from components.mechanics.errors import NotCanonicalError


def report_for(cell, **kwargs):
    return kernel_count(effective_tensor(assemble(cell)), **kwargs)


class TestSymplecticStructure(unittest.TestCase):
    """cof 与 J 的代数性质"""

    def test_cofactor_in_mandel(self):
        """cof 在 Mandel 编码下为矩阵 COF，且 S:cof T 对称"""
        S = np.array([[1.0, 0.4], [0.4, -0.5]])
        T = np.array([[0.2, -0.3], [-0.3, 1.5]])
        np.testing.assert_allclose(mandel(cofactor(S)), COF @ mandel(S))
        self.assertAlmostEqual(float(np.sum(S * cofactor(T))), float(np.sum(T * cofactor(S))))

    def test_j_antisymmetric(self):
        J = symplectic_j()
        np.testing.assert_array_equal(J, -J.T)
        np.testing.assert_allclose(J @ J, -np.eye(6))

    def test_pairing_antisymmetric(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=6), rng.normal(size=6)
        self.assertAlmostEqual(symplectic_pairing(a, b), -symplectic_pairing(b, a))
        self.assertAlmostEqual(symplectic_pairing(a, b), -float(a @ symplectic_j() @ b))
        self.assertEqual(symplectic_pairing(MacroStrain.from_vector(a), b), symplectic_pairing(a, b))

    def test_exact_relation_zero_tensor(self):
        self.assertEqual(exact_relation_residual(np.zeros((6, 6))), 0.0)


class TestKernelCount(unittest.TestCase):
    """核空间计数测试类"""

    def test_flat(self):
        """平面：3 个纯弯曲模态"""
        for n in (1, 2, 4):
            report = report_for(generate_flat(n, n))
            self.assertEqual(report.kernel_dim, 3)
            self.assertEqual(report.rank, 3)
            self.assertGreaterEqual(report.gap_ratio, 1e4)
            self.assertEqual(classify_kernel(report), (0, 3, 0))
            self.assertEqual(
                (report.pure_membrane_dim, report.pure_flexure_dim, report.mixed_dim), (0, 3, 0)
            )

    def test_random_cells(self):
        """单连通随机单胞：恰好 3 个宏观等距模态"""
        for n, seed in [(2, 0), (2, 1), (4, 2), (4, 3), (6, 4)]:
            report = report_for(generate_random(n, n, 0.3, seed))
            self.assertEqual(report.kernel_dim, 3, f"n={n} seed={seed}")
            self.assertGreaterEqual(report.gap_ratio, 1e4)
            self.assertFalse(report.ambiguous)
            self.assertLessEqual(report.residual_AJA, 1e-8)
            self.assertLessEqual(report.symplectic_residual, 1e-8)
            self.assertGreaterEqual(report.iso_min_angle, np.pi / 2 - 1e-6)

    def test_corrugation(self):
        """单向波纹：1 个纯膜、2 个纯弯曲模态"""
        report = report_for(generate_corrugation(8, 2, 0.3))
        self.assertEqual(report.kernel_dim, 3)
        self.assertEqual(classify_kernel(report), (1, 2, 0))
        membrane, flexure = pure_mode_bases(report)
        self.assertEqual(membrane.shape, (6, 1))
        self.assertEqual(flexure.shape, (6, 2))
        np.testing.assert_allclose(membrane[3:, 0], 0.0, atol=1e-6)

    def test_ambiguous_flag(self):
        """间隙阈值为无穷大时总是标记 ambiguous"""
        report = report_for(generate_random(4, 4, 0.3, 0), gap_threshold=np.inf)
        self.assertTrue(report.ambiguous)

    def test_degenerate_zero_tensor(self):
        report = kernel_count(np.zeros((6, 6)))
        self.assertEqual(report.kernel_dim, 6)
        self.assertIn("degenerate cell", report.flags)
        self.assertEqual(report.gap_ratio, float("inf"))

    def test_full_rank_tensor(self):
        """满秩张量：核为空，间隙比相对于阈值"""
        A = np.diag([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        report = kernel_count(A, tol_rel=1e-8)
        self.assertEqual(report.kernel_dim, 0)
        self.assertAlmostEqual(report.gap_ratio, 1.0 / (1e-8 * 6.0), delta=1e-3 * report.gap_ratio)
        self.assertEqual(report.pairing_matrix.shape, (0, 0))

    def test_pairing_matrix_antisymmetric(self):
        report = report_for(generate_random(4, 4, 0.3, 6))
        P = pairing_matrix(report.kernel_basis)
        np.testing.assert_allclose(P, -P.T, atol=1e-15)
        self.assertEqual(P.shape, (3, 3))


class TestPoisson(unittest.TestCase):
    """Poisson 恒等式测试类"""

    def test_corrugation_identity(self):
        """ν_membrane + ν_flexure = 0"""
        result = poisson_identity(report_for(generate_corrugation(8, 2, 0.3)))
        self.assertLessEqual(abs(result.residual), 1e-6)
        self.assertAlmostEqual(result.residual, result.nu_membrane + result.nu_flexure)

    def test_flat_not_canonical(self):
        """平面没有纯膜模态"""
        with self.assertRaises(NotCanonicalError) as ctx:
            poisson_identity(report_for(generate_flat(2, 2)))
        self.assertEqual(str(ctx.exception), "not in canonical form")


class TestTopology(unittest.TestCase):
    """开孔与柄的计数界"""

    def test_hole_at_least_three(self):
        """删去内部节点后 A 只剩舍入误差：6 个等距模态"""
        for cell in (punch_hole(generate_random(4, 4, 0.3, 1), [5]), punch_hole(generate_random(6, 6, 0.3, 2), [14, 21])):
            report = report_for(cell)
            self.assertGreaterEqual(report.kernel_dim, 3, cell.metadata)
            self.assertEqual(report.kernel_dim, 6)
            self.assertIn("degenerate cell", report.flags)
            self.assertFalse(report.ambiguous)

    def test_degenerate_needs_absolute_scale(self):
        """仅有相对阈值时，舍入量级的张量会被读成满秩"""
        tensor = effective_tensor(assemble(punch_hole(generate_random(4, 4, 0.3, 1), [5])))
        self.assertGreater(tensor.scale, 0.0)
        self.assertLessEqual(np.linalg.eigvalsh(tensor.A).max(), 1e-12 * tensor.scale)
        self.assertEqual(kernel_count(tensor.A, scale=tensor.scale).kernel_dim, 6)
        self.assertEqual(kernel_count(tensor).kernel_dim, 6)

    def test_random_cell_not_degenerate(self):
        tensor = effective_tensor(assemble(generate_random(4, 4, 0.3, 1)))
        report = kernel_count(tensor)
        self.assertNotIn("degenerate cell", report.flags)
        self.assertEqual(report.kernel_dim, 3)

    def test_handle_at_most_three(self):
        """柄：等距模态不超过 3 个，精确关系不再成立"""
        report = report_for(generate_handle(4, 4, 0.5, 0.4))
        self.assertLessEqual(report.kernel_dim, 3)
        self.assertGreater(report.residual_AJA, 1e-2)
        self.assertTrue(np.isfinite(isomorphism_angle(report)))


class TestKernelInvariance(unittest.TestCase):
    """核空间在高程缩放与刚度扰动下的不变性"""

    def setUp(self):
        self.cell = generate_random(4, 4, 0.3, 2)
        self.kernel = report_for(self.cell).kernel_basis

    def test_elevation_scale_covariance(self):
        """z ↦ s·z 时核空间按 (E, χ) ↦ (E, χ/s) 变换"""
        for s in (2.0, 0.5, -1.0):
            scaled = self.cell.with_elevations(s * self.cell.elevations())
            report = report_for(scaled)
            self.assertEqual(report.kernel_dim, 3)
            mapped = np.diag([1.0, 1.0, 1.0, 1.0 / s, 1.0 / s, 1.0 / s]) @ self.kernel
            angles = subspace_angles(mapped, report.kernel_basis)
            self.assertLessEqual(angles.max(), 1e-6, f"s={s}")

    def test_stiffness_independence(self):
        """逐杆随机缩放刚度：A 改变而核空间不变"""
        rng = np.random.default_rng(11)
        factors = rng.uniform(0.2, 5.0, size=self.cell.n_bars)
        bars = tuple(Bar(b.i, b.j, b.shift, b.k * f) for b, f in zip(self.cell.bars, factors))
        perturbed = replace(self.cell, bars=bars)
        A0 = effective_tensor(assemble(self.cell)).A
        A1 = effective_tensor(assemble(perturbed)).A
        self.assertGreater(np.linalg.norm(A1 - A0), 1e-3 * np.linalg.norm(A0))
        report = kernel_count(A1)
        self.assertEqual(report.kernel_dim, 3)
        self.assertLessEqual(subspace_angles(self.kernel, report.kernel_basis).max(), 1e-6)


class TestMaxwell(unittest.TestCase):
    """Maxwell–Calladine 计数测试类"""

    def test_index_identity(self):
        for cell in (generate_flat(3, 3), generate_random(3, 3, 0.3, 2), generate_handle(2, 2, 0.5, 0.3)):
            counts = maxwell_count(assemble(cell))
            self.assertEqual(counts.bars, cell.n_bars)
            self.assertEqual(counts.dof, 6 + 3 * cell.n_nodes - 3)
            self.assertEqual(counts.zero_modes - counts.self_stresses, counts.dof - counts.bars)

    def test_random_cell_three_zero_modes(self):
        counts = maxwell_count(assemble(generate_random(4, 4, 0.3, 3)))
        self.assertEqual(counts.self_stresses, 0)
        self.assertEqual(counts.zero_modes, 3)


if __name__ == "__main__":
    unittest.main()
