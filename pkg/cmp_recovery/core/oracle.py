"""
独立参考求解器 - 穷举 ℓ₀ 求解、非凸演示集合的受限子问题、标准 OMP
"""
import concurrent.futures
import logging
import math
import threading
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from .constraint import ConstraintModel, NonconvexDemo
from .error_handler import BudgetExceededError, NoSolutionWithinKmaxError, InputFormatError
from .linalg import as_matrix
from .restricted_solver import solve_restricted
from ..utils.settings import NumericPolicy, get_policy

logger = logging.getLogger(__name__)

L0_BUDGET = 10 ** 6
LINE_GRID_POINTS = 400
SWEEP_BOX = (0.0, 1.5)
BISECTION_STEPS = 80
EXACT_MEMBERSHIP_TOL = 1e-12


# ============== 非凸演示集合 ==============

class SolutionKind(Enum):
    """最优解集合的形态"""
    POINT = "point"
    SEGMENT = "segment"
    FINITE_SET = "finite_set"


@dataclass
class NonconvexSolution:
    """非凸演示集合上受限子问题的最优解集合"""
    kind: SolutionKind
    representative: np.ndarray
    objective: float
    segments: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    candidates: List[np.ndarray] = field(default_factory=list)

    @property
    def is_point(self) -> bool:
        return self.kind == SolutionKind.POINT

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind.value,
            'representative': self.representative.tolist(),
            'objective': self.objective,
            'segments': [[p.tolist(), q.tolist()] for p, q in self.segments],
            'candidates': [c.tolist() for c in self.candidates]
        }


def _objective(A: np.ndarray, y: np.ndarray, x: np.ndarray) -> float:
    r = A @ x - y
    return float(r @ r)


def _single_coordinate(A: np.ndarray, y: np.ndarray, j: int) -> NonconvexSolution:
    """|J| = 1：坐标轴方向可行集为 [0, 1]，闭式截断"""
    a = A[:, j]
    t = float(np.clip((a @ y) / (a @ a), 0.0, 1.0))
    x = np.zeros(2)
    x[j] = t
    return NonconvexSolution(SolutionKind.POINT, x, _objective(A, y, x), candidates=[x.copy()])


def _sweep_line(P: NonconvexDemo, origin: np.ndarray, direction: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    """沿直线 origin + τ·direction 扫描成员区间，端点用二分细化"""
    lo_box, hi_box = SWEEP_BOX
    tau_lo, tau_hi = -math.inf, math.inf
    for i in range(2):
        if abs(direction[i]) < 1e-15:
            if not lo_box - 1e-12 <= origin[i] <= hi_box + 1e-12:
                return []
            continue
        a = (lo_box - 0.25 - origin[i]) / direction[i]
        b = (hi_box - origin[i]) / direction[i]
        tau_lo = max(tau_lo, min(a, b))
        tau_hi = min(tau_hi, max(a, b))
    if not tau_lo < tau_hi:
        return []

    def member(tau: float) -> bool:
        return P.contains(origin + tau * direction, EXACT_MEMBERSHIP_TOL)

    def refine(outside: float, inside: float) -> float:
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (outside + inside)
            if member(mid):
                inside = mid
            else:
                outside = mid
        return inside

    grid = np.linspace(tau_lo, tau_hi, LINE_GRID_POINTS)
    flags = [member(t) for t in grid]
    segments = []
    k = 0
    while k < len(grid):
        if not flags[k]:
            k += 1
            continue
        start = k
        while k + 1 < len(grid) and flags[k + 1]:
            k += 1
        left = grid[start] if start == 0 else refine(grid[start - 1], grid[start])
        right = grid[k] if k == len(grid) - 1 else refine(grid[k + 1], grid[k])
        p = origin + left * direction
        q = origin + right * direction
        # 端点按 x₂ 降序排列
        if p[1] < q[1]:
            p, q = q, p
        segments.append((p, q))
        k += 1
    return segments


def _rank_one_solve(A: np.ndarray, y: np.ndarray, P: NonconvexDemo) -> NonconvexSolution:
    """
    A 秩为 1：目标只依赖 s = vᵀx，最优集合是直线 vᵀx = s_c 与 P 的交
    """
    U, sv, Vt = np.linalg.svd(A, full_matrices=False)
    sigma = sv[0]
    u, v = U[:, 0], Vt[0]
    if v[np.argmax(np.abs(v))] < 0:
        u, v = -u, -v
    s_star = float(u @ y) / sigma

    extremes = [np.array(c, dtype=float) for c in ((0, 0), (1, 0), (0, 1), (1, 1))]
    if v[0] != 0:
        stationary = -v[1] / (2.0 * v[0])
        if 0.0 <= stationary <= 1.0:
            extremes.append(np.array([stationary ** 2, stationary]))
    values = [float(v @ c) for c in extremes]
    s_c = float(np.clip(s_star, min(values), max(values)))

    segments = _sweep_line(P, s_c * v, np.array([-v[1], v[0]]))
    touching = [c for c, val in zip(extremes, values) if abs(val - s_c) <= 1e-12]

    proper = [(p, q) for p, q in segments if np.linalg.norm(p - q) > 1e-9]
    if proper:
        representative = proper[0][0]
        candidates = [pt for seg in proper for pt in seg]
        return NonconvexSolution(SolutionKind.SEGMENT, representative.copy(),
                                 _objective(A, y, representative), segments=proper, candidates=candidates)

    points = [p for p, _ in segments] + touching
    distinct: List[np.ndarray] = []
    for pt in points:
        if all(np.linalg.norm(pt - other) > 1e-9 for other in distinct):
            distinct.append(pt)
    if not distinct:
        raise InputFormatError("非凸演示集合上未找到可行最优点")
    distinct.sort(key=lambda pt: -pt[1])
    kind = SolutionKind.POINT if len(distinct) == 1 else SolutionKind.FINITE_SET
    return NonconvexSolution(kind, distinct[0].copy(), _objective(A, y, distinct[0]), candidates=distinct)


def _boundary_candidates(A: np.ndarray, y: np.ndarray) -> List[np.ndarray]:
    """P 的边界由三条线段与抛物线 x₁ = x₂² 组成，逐段求严格凸二次函数的最小点"""
    candidates = []
    pieces = [
        (np.array([0.0, 0.0]), np.array([0.0, 1.0])),
        (np.array([0.0, 1.0]), np.array([1.0, 0.0])),
        (np.array([0.0, 0.0]), np.array([1.0, 0.0])),
    ]
    for start, direction in pieces:
        Ad = A @ direction
        tau = float(np.clip((Ad @ (y - A @ start)) / (Ad @ Ad), 0.0, 1.0))
        candidates.append(start + tau * direction)

    # 抛物线：f(s) = ‖A₁ s² + A₂ s − y‖²
    f = Polynomial([0.0])
    for i in range(A.shape[0]):
        row = Polynomial([-y[i], A[i, 1], A[i, 0]])
        f = f + row * row
    roots = f.deriv().roots()
    params = [0.0, 1.0] + [float(r.real) for r in roots if abs(r.imag) < 1e-12 and 0.0 <= r.real <= 1.0]
    for s in params:
        candidates.append(np.array([s * s, s]))
    return candidates


def _rank_two_solve(A: np.ndarray, y: np.ndarray, P: NonconvexDemo,
                    policy: NumericPolicy) -> NonconvexSolution:
    candidates = _boundary_candidates(A, y)
    unconstrained = np.linalg.lstsq(A, y, rcond=None)[0]
    if P.contains(unconstrained, EXACT_MEMBERSHIP_TOL):
        candidates.append(unconstrained)
    values = [_objective(A, y, c) for c in candidates]
    best = min(values)
    winners: List[np.ndarray] = []
    for c, val in zip(candidates, values):
        if val <= best + policy.comparison_tol * (1.0 + best):
            if all(np.linalg.norm(c - w) > 1e-9 for w in winners):
                winners.append(c)
    winners.sort(key=lambda pt: -pt[1])
    kind = SolutionKind.POINT if len(winners) == 1 else SolutionKind.FINITE_SET
    return NonconvexSolution(kind, winners[0].copy(), _objective(A, y, winners[0]), candidates=winners)


def nonconvex_restricted_solve(A, y, J: Sequence[int],
                          policy: Optional[NumericPolicy] = None) -> NonconvexSolution:
    """
    非凸演示集合上的受限子问题

    Args:
        A: m×2 测量矩阵
        y: 观测向量
        J: 支撑（0 起，⊆ {0, 1}）
        policy: 数值策略

    Returns:
        NonconvexSolution：唯一点、有限点集或线段
    """
    policy = get_policy(policy)
    A = as_matrix(A).entries
    y = np.asarray(y, dtype=float).reshape(-1)
    J = sorted(set(int(j) for j in J))
    if A.shape[1] != 2 or any(j not in (0, 1) for j in J):
        raise InputFormatError(f"非凸演示集合要求 2 列矩阵且 J ⊆ {{1, 2}}，得到 J = {[j + 1 for j in J]}")
    P = NonconvexDemo()
    if not J:
        x = np.zeros(2)
        return NonconvexSolution(SolutionKind.POINT, x, _objective(A, y, x), candidates=[x.copy()])
    if len(J) == 1:
        return _single_coordinate(A, y, J[0])

    sv = np.linalg.svd(A, compute_uv=False)
    if sv.size < 2 or sv[1] <= policy.rank_tol * sv[0]:
        solution = _rank_one_solve(A, y, P)
    else:
        solution = _rank_two_solve(A, y, P, policy)
    logger.debug(f"非凸子问题: 形态 {solution.kind.value}, 目标值 {solution.objective:.3e}")
    return solution


# ============== 穷举 ℓ₀ 求解 ==============

@dataclass
class L0Solution:
    """最小基数的全部可行支撑"""
    cardinality: int
    supports: List[Tuple[int, ...]]
    representatives: List[np.ndarray]
    subproblems_solved: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'cardinality': self.cardinality,
            'supports': [[i + 1 for i in S] for S in self.supports],
            'representatives': [x.tolist() for x in self.representatives],
            'subproblems_solved': self.subproblems_solved
        }


def l0_brute(A, y, P: ConstraintModel, k_max: int,
             policy: Optional[NumericPolicy] = None,
             max_workers: int = 1,
             progress_callback: Optional[Callable[[int, int, float], None]] = None) -> L0Solution:
    """
    穷举求解 min ‖x‖₀ s.t. Ax = y, x ∈ P

    Args:
        A: 测量矩阵
        y: 观测向量
        P: 约束模型
        k_max: 最大支撑大小
        policy: 数值策略
        max_workers: 线程数
        progress_callback: 进度回调函数 (completed, total, percentage)

    Returns:
        L0Solution

    Raises:
        BudgetExceededError: 子问题总数超过 10⁶
        NoSolutionWithinKmaxError: k_max 以内无可行解
    """
    policy = get_policy(policy)
    matrix = as_matrix(A)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = matrix.n
    k_max = min(int(k_max), n)
    total = sum(math.comb(n, k) for k in range(k_max + 1))
    if total > L0_BUDGET:
        raise BudgetExceededError(f"需要求解 {total} 个子问题，超过预算 {L0_BUDGET}",
                                  {'subproblems': total, 'budget': L0_BUDGET})
    tol = 1e-8 * (1.0 + float(np.linalg.norm(y)))
    solved = 0
    completed = 0
    lock = threading.Lock()

    for k in range(k_max + 1):
        supports = list(combinations(range(n), k))
        results: List[Optional[np.ndarray]] = [None] * len(supports)

        def solve_worker(index: int, S: Tuple[int, ...]):
            nonlocal completed
            solution = solve_restricted(matrix, y, P, S, policy)
            residual = float(np.linalg.norm(matrix @ solution.x - y))
            if residual <= tol:
                results[index] = solution.x
            with lock:
                completed += 1
                if progress_callback:
                    progress_callback(completed, total, completed / total * 100)

        if max_workers > 1 and len(supports) > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
                futures = [executor.submit(solve_worker, i, S) for i, S in enumerate(supports)]
                for future in futures:
                    future.result()
        else:
            for i, S in enumerate(supports):
                solve_worker(i, S)
        solved += len(supports)

        hits = [(S, x) for S, x in zip(supports, results) if x is not None]
        if hits:
            logger.info(f"ℓ₀ 穷举: 最小基数 {k}, {len(hits)} 个支撑, 共求解 {solved} 个子问题")
            return L0Solution(k, [S for S, _ in hits], [x for _, x in hits], solved)

    raise NoSolutionWithinKmaxError(f"支撑大小不超过 {k_max} 时无可行解",
                                    {'k_max': k_max, 'subproblems': solved})


# ============== 标准 OMP ==============

@dataclass
class OMPReference:
    """标准 OMP 的下标序列与迭代点"""
    indices: List[int]
    x: np.ndarray
    residual_norms: List[float] = field(default_factory=list)


def omp_reference(A, y, n_steps: int, tol: float = 0.0) -> OMPReference:
    """
    标准正交匹配追踪：每步选 |⟨r, A_j⟩|/‖A_j‖ 最大的列（并列取最小下标），再在已选列上做最小二乘

    Args:
        A: 测量矩阵
        y: 观测向量
        n_steps: 最大步数
        tol: 残差范数阈值

    Returns:
        OMPReference
    """
    data = as_matrix(A).entries
    y = np.asarray(y, dtype=float).reshape(-1)
    norms = np.linalg.norm(data, axis=0)
    x = np.zeros(data.shape[1])
    r = y.copy()
    chosen: List[int] = []
    history = [float(np.linalg.norm(r))]
    for _ in range(min(n_steps, data.shape[1])):
        if history[-1] <= tol:
            break
        correlation = np.abs(data.T @ r) / norms
        correlation[chosen] = -np.inf
        j = int(np.argmax(correlation))
        chosen.append(j)
        coef = np.linalg.lstsq(data[:, chosen], y, rcond=None)[0]
        x = np.zeros(data.shape[1])
        x[chosen] = coef
        r = y - data @ x
        history.append(float(np.linalg.norm(r)))
    return OMPReference(chosen, x, history)
