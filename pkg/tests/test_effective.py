"""
等效刚度张量测试

测试内容：
- A 对称半正定、与修正场最优能量一致
- 平面单胞的弯曲块为零，求解器退回伪逆
- Hill–Mandel 交叉功（任意容许修正）
- 与稠密 Schur 补参考实现一致
"""

import os
import sys
import unittest

import numpy as np

# 添加插件路径到Python路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from components.mechanics.analysis import kernel_count
from components.mechanics.assembly import MacroStrain, assemble
from components.mechanics.cell import generate_corrugation, generate_flat, generate_random
from components.mechanics.effective import (
    CorrectionSolver,
    bar_tensions,
    effective_tensor,
    hill_mandel_check,
    macro_stress,
    solve_correction,
    translation_basis,
)
from components.mechanics.errors import ShellError, SolverError
from components.mechanics.oracle import oracle_effective


def relative_frobenius(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), np.finfo(float).tiny)


class TestEffectiveTensor(unittest.TestCase):
    """等效张量测试类"""

    def setUp(self):
        self.cell = generate_random(4, 4, 0.3, 5)
        self.system = assemble(self.cell)
        self.tensor = effective_tensor(self.system)

    def test_symmetric_psd(self):
        A = self.tensor.A
        np.testing.assert_array_equal(A, A.T)
        self.assertGreaterEqual(np.linalg.eigvalsh(A).min(), -1e-10 * np.abs(A).max())
        self.assertEqual(self.tensor.method, "cholesky")

    def test_energy_matches_correction(self):
        """单个载荷的最优能量 = mᵀ A m"""
        rng = np.random.default_rng(1)
        for _ in range(5):
            m = rng.normal(size=6)
            result = solve_correction(self.system, m)
            self.assertAlmostEqual(result.energy, self.tensor.energy(m), delta=1e-10 * max(result.energy, 1.0))
            self.assertAlmostEqual(self.system.energy(m, result.correction), result.energy, delta=1e-12)

    def test_correction_is_minimizer(self):
        """扰动最优修正只会增加能量"""
        m = MacroStrain.unit(0)
        result = solve_correction(self.system, m)
        rng = np.random.default_rng(2)
        for _ in range(5):
            du = 1e-3 * rng.normal(size=result.correction.size)
            self.assertGreaterEqual(self.system.energy(m, result.correction + du), result.energy)

    def test_corrections_orthogonal_to_translations(self):
        T = translation_basis(self.cell.n_nodes)
        np.testing.assert_allclose(T.T @ self.tensor.corrections, 0.0, atol=1e-12)

    def test_blocks(self):
        A = self.tensor.A
        np.testing.assert_array_equal(self.tensor.A_EE, A[:3, :3])
        np.testing.assert_array_equal(self.tensor.A_Echi, A[:3, 3:])
        np.testing.assert_array_equal(self.tensor.A_chichi, A[3:, 3:])
        self.assertAlmostEqual(self.tensor.membrane_trace, float(np.trace(A[:3, :3])))

    def test_macro_stress(self):
        m = np.arange(1.0, 7.0)
        sigma, moment = macro_stress(self.tensor, m)
        np.testing.assert_allclose(np.concatenate([sigma, moment]), self.tensor.A @ m)

    def test_tensions_self_equilibrated(self):
        """最优修正下的拉力对周期修正自平衡"""
        tensions = bar_tensions(self.system, self.tensor, np.eye(6)[1])
        residual = self.system.C_per.T @ tensions
        self.assertLess(np.abs(residual).max(), 1e-10 * np.abs(tensions).max())

    def test_matches_oracle(self):
        self.assertLess(relative_frobenius(self.tensor.A, oracle_effective(self.cell)), 1e-8)

    def test_stiffness_scaling(self):
        """刚度整体放大 f 倍，A 放大 f 倍"""
        scaled = effective_tensor(assemble(self.cell.with_stiffness_scaled(3.0)))
        np.testing.assert_allclose(scaled.A, 3.0 * self.tensor.A, rtol=1e-9, atol=1e-12)


class TestFlatCell(unittest.TestCase):
    """平面单胞测试类"""

    def test_bending_blocks_vanish(self):
        for n in (1, 2, 4):
            system = assemble(generate_flat(n, n))
            solver = CorrectionSolver(system)
            tensor = effective_tensor(system, solver)
            scale = np.linalg.norm(tensor.A)
            self.assertLessEqual(np.linalg.norm(tensor.A_chichi), 1e-12 * scale)
            self.assertLessEqual(np.linalg.norm(tensor.A_Echi), 1e-12 * scale)
            self.assertEqual(np.linalg.matrix_rank(tensor.A_EE), 3)

    def test_pseudoinverse_fallback(self):
        """面外方向奇异，求解器改用伪逆"""
        solver = CorrectionSolver(assemble(generate_flat(3, 3)))
        self.assertEqual(solver.method, "pseudoinverse")
        self.assertIsNotNone(solver.condition)

    def test_matches_oracle(self):
        cell = generate_corrugation(4, 2, 0.3)
        A = effective_tensor(assemble(cell)).A
        self.assertLess(relative_frobenius(A, oracle_effective(cell)), 1e-8)


class TestHillMandel(unittest.TestCase):
    """Hill–Mandel 交叉功测试类"""

    def test_random_pairs(self):
        """任意周期修正下交叉功等于宏观功"""
        cell = generate_random(4, 4, 0.3, 9)
        system = assemble(cell)
        tensor = effective_tensor(system)
        scale = np.linalg.norm(tensor.A)
        rng = np.random.default_rng(4)
        for _ in range(20):
            m1, m2 = rng.normal(size=6), rng.normal(size=6)
            u2 = rng.normal(size=3 * cell.n_nodes)
            residual = hill_mandel_check(system, m1, m2, correction2=u2, tensor=tensor)
            self.assertLessEqual(abs(residual), 1e-10 * scale * np.linalg.norm(m1) * np.linalg.norm(m2))

    def test_zero_correction_default(self):
        cell = generate_random(2, 2, 0.3, 0)
        system = assemble(cell)
        residual = hill_mandel_check(system, np.eye(6)[0], np.eye(6)[3])
        self.assertLess(abs(residual), 1e-10 * np.linalg.norm(effective_tensor(system).A))

    def test_isometric_test_strain(self):
        """m2 属于 Ker A：其最优修正下伸长为零，交叉功与宏观功都近似为零"""
        cell = generate_random(4, 4, 0.3, 9)
        system = assemble(cell)
        tensor = effective_tensor(system)
        scale = np.linalg.norm(tensor.A)
        kernel = kernel_count(tensor).kernel_basis
        rng = np.random.default_rng(8)
        for p in range(kernel.shape[1]):
            m1, m2 = rng.normal(size=6), kernel[:, p]
            self.assertLessEqual(np.linalg.norm(tensor.A @ m2), 1e-8 * scale)
            tensions = bar_tensions(system, tensor, m1)
            e2 = system.elongations(m2, tensor.corrections @ m2)
            cross = float(tensions @ e2) / system.area
            self.assertLessEqual(abs(cross), 1e-6 * scale * np.linalg.norm(m1))
            residual = hill_mandel_check(system, m1, m2, correction2=tensor.corrections @ m2, tensor=tensor)
            self.assertLessEqual(abs(residual), 1e-10 * scale * np.linalg.norm(m1))


class TestErrors(unittest.TestCase):
    """求解器异常测试类"""

    def test_solver_error_carries_condition(self):
        e = SolverError("singular", condition=1e20)
        self.assertIsInstance(e, ShellError)
        self.assertIsInstance(e, RuntimeError)
        self.assertEqual(e.condition, 1e20)
        self.assertIn("condition", str(e))


if __name__ == "__main__":
    unittest.main()
