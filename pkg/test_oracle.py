#!/usr/bin/env python3
"""
独立参考求解器测试 - 非凸演示集合、穷举 ℓ₀、标准 OMP
"""
import math

import numpy as np
import pytest

from cmp_recovery.core.constraint import BoxProduct, NonconvexDemo
from cmp_recovery.core.error_handler import BudgetExceededError, InputFormatError, NoSolutionWithinKmaxError
from cmp_recovery.core.oracle import SolutionKind, l0_brute, nonconvex_restricted_solve, omp_reference

DEMO_A = np.array([[0.75, 1.0]])
DEMO_Y = np.array([1.5])


def test_nonconvex_segment_solution():
    """测试秩一情形的最优解集合是线段"""
    print("🧪 测试非凸演示集合的线段解...")
    solution = nonconvex_restricted_solve(DEMO_A, DEMO_Y, [0, 1])
    assert solution.kind == SolutionKind.SEGMENT, "最优解集合应该是线段"
    assert not solution.is_point, "线段解不唯一"
    assert solution.objective <= 1e-18, "线段上 Ax = y"
    assert len(solution.segments) == 1, "只有一段"

    upper, lower = solution.segments[0]
    x2 = (math.sqrt(22.0) - 2.0) / 3.0
    assert np.allclose(upper, [2.0 / 3.0, 1.0], atol=1e-8), "上端点是 (2/3, 1)"
    assert np.allclose(lower, [x2 * x2, x2], atol=1e-8), "下端点在抛物线 x₁ = x₂² 上"
    P = NonconvexDemo()
    for point in (upper, lower, solution.representative):
        assert P.contains(point, 1e-9), "端点应该属于集合"
        assert abs(float(DEMO_A @ point) - 1.5) <= 1e-9, "端点应该满足 Ax = y"
    assert np.allclose(solution.representative, upper), "代表点取 x₂ 较大的端点"
    print("✅ 线段解测试通过")


def test_nonconvex_single_coordinate():
    """测试单坐标子问题的闭式截断"""
    second = nonconvex_restricted_solve(DEMO_A, DEMO_Y, [1])
    assert second.is_point and np.allclose(second.representative, [0.0, 1.0]), "J = {2} 时解为 (0, 1)"
    first = nonconvex_restricted_solve(DEMO_A, DEMO_Y, [0])
    assert np.allclose(first.representative, [1.0, 0.0]), "J = {1} 时截断到 1"
    assert abs(first.objective - 9.0 / 16.0) <= 1e-12, "目标值为 (3/2 − 3/4)² = 9/16"
    empty = nonconvex_restricted_solve(DEMO_A, DEMO_Y, [])
    assert np.all(empty.representative == 0.0), "空支撑返回零向量"


def test_nonconvex_rank_two():
    """测试秩二情形取边界上的最近点"""
    solution = nonconvex_restricted_solve(np.eye(2), np.array([0.5, 0.5]), [0, 1])
    s = 0.25 ** (1.0 / 3.0)
    assert solution.kind == SolutionKind.POINT, "应该是唯一点"
    assert np.allclose(solution.representative, [s * s, s], atol=1e-9), "最近点在抛物线上，4s³ = 1"
    with pytest.raises(InputFormatError):
        nonconvex_restricted_solve(np.eye(3), np.ones(3), [0, 1])


def test_l0_brute_finds_sparse_support():
    """测试穷举 ℓ₀ 求解"""
    print("🧪 测试穷举 ℓ₀...")
    rng = np.random.default_rng(17)
    A = rng.standard_normal((6, 10))
    z = np.zeros(10)
    z[[2, 7]] = [1.5, 0.8]
    progress = []
    solution = l0_brute(A, A @ z, BoxProduct.nonneg(10), k_max=3, max_workers=2,
                        progress_callback=lambda done, total, pct: progress.append((done, total, pct)))
    assert solution.cardinality == 2, "最小基数应该是 2"
    assert solution.supports == [(2, 7)], "唯一支撑是 {3, 8}"
    assert np.allclose(solution.representatives[0], z, atol=1e-8), "应该恢复 z"
    assert solution.subproblems_solved == 1 + 10 + 45, "应该逐层求解到基数 2"
    assert solution.to_dict()['supports'] == [[3, 8]], "序列化下标从 1 开始"
    assert progress and all(0 < pct <= 100 for _, _, pct in progress), "进度回调应该被调用"
    assert max(done for done, _, _ in progress) == 56, "完成数应该等于已求解子问题数"
    print("✅ 穷举 ℓ₀ 测试通过")


def test_l0_brute_errors():
    """测试预算与无解错误"""
    with pytest.raises(BudgetExceededError):
        l0_brute(np.eye(40), np.ones(40), BoxProduct.free(40), k_max=10)
    with pytest.raises(NoSolutionWithinKmaxError):
        l0_brute(np.eye(3), np.array([1.0, 1.0, 0.0]), BoxProduct.free(3), k_max=1)


def test_omp_reference():
    """测试标准 OMP"""
    result = omp_reference(np.eye(4), np.array([0.0, 3.0, 0.0, 1.0]), n_steps=4)
    assert result.indices == [1, 3], "残差为零后停止"
    assert np.allclose(result.x, [0.0, 3.0, 0.0, 1.0]), "应该精确恢复"
    assert np.allclose(result.residual_norms, [math.sqrt(10.0), 1.0, 0.0]), "残差范数序列"


if __name__ == "__main__":
    print("🧪 开始参考求解器测试...")
    test_nonconvex_segment_solution()
    test_nonconvex_single_coordinate()
    test_nonconvex_rank_two()
    test_l0_brute_finds_sparse_support()
    test_l0_brute_errors()
    test_omp_reference()
    print("\n🎉 所有参考求解器测试通过！")
