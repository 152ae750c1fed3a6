"""
支撑受限的约束最小二乘 min ‖A w − y‖² s.t. w ∈ P, supp(w) ⊆ J

按约束类型分派：QR 最小二乘、Lawson-Hanson NNLS、有界变量 BVLS、
加权单纯形的投影梯度、超平面的零空间消元；非凸演示集合交给 oracle
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constraint import (
    ConstraintModel, BoxProduct, WeightedSimplex, NonconvexDemo, Hyperplane,
    project_weighted_simplex
)
from .error_handler import (
    NotConvergedError, CycleLimitError, RankDeficientError, InputFormatError
)
from .linalg import as_matrix, has_full_column_rank, least_squares
from ..utils.settings import NumericPolicy, get_policy

logger = logging.getLogger(__name__)

SIMPLEX_MAX_ITERATIONS = 100000


@dataclass
class RestrictedSolution:
    """受限子问题的解"""
    x: np.ndarray
    objective: float
    kkt_residual: float
    unique: bool
    alternatives: List[np.ndarray] = field(default_factory=list)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.x))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'x': self.x.tolist(),
            'objective': self.objective,
            'kkt_residual': self.kkt_residual,
            'unique': self.unique,
            'alternatives': [alt.tolist() for alt in self.alternatives]
        }


def _lstsq(A: np.ndarray, y: np.ndarray, policy: Optional[NumericPolicy] = None) -> np.ndarray:
    """列满秩时走 QR，否则取最小范数解"""
    if A.shape[1] == 0:
        return np.zeros(0)
    try:
        return least_squares(A, y, policy)
    except RankDeficientError:
        return np.linalg.lstsq(A, y, rcond=None)[0]


def _dual_tolerance(A: np.ndarray, y: np.ndarray) -> float:
    eps = np.finfo(float).eps
    return 10.0 * eps * max(A.shape) * max(1.0, float(np.max(np.abs(A.T @ y), initial=0.0)))


def nnls(A_J, y, policy: Optional[NumericPolicy] = None, max_outer: Optional[int] = None) -> np.ndarray:
    """
    Lawson-Hanson 非负最小二乘 min ‖A_J x − y‖, x ≥ 0

    Args:
        A_J: m×k 矩阵
        y: 观测向量
        policy: 数值策略
        max_outer: 外循环上限，默认 3k

    Returns:
        非负解，非被动坐标为精确 0

    Raises:
        CycleLimitError: 外循环次数超限
    """
    A = np.asarray(A_J, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    n = A.shape[1]
    if n == 0:
        return np.zeros(0)
    max_outer = 3 * n if max_outer is None else max_outer
    tol = _dual_tolerance(A, y)

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    blocked = set()
    w = A.T @ (y - A @ x)
    outer = 0

    while True:
        candidates = [i for i in range(n) if not passive[i] and i not in blocked and w[i] > tol]
        if not candidates:
            break
        outer += 1
        if outer > max_outer:
            raise CycleLimitError(f"NNLS 外循环超过 {max_outer} 次", {'columns': n})
        # 最大对偶变量，并列取最小下标
        t = max(candidates, key=lambda i: (w[i], -i))
        passive[t] = True

        s = None
        first = True
        while True:
            idx = np.flatnonzero(passive)
            s = np.zeros(n)
            s[idx] = _lstsq(A[:, idx], y, policy)
            if first and s[t] <= 0:
                # 新进入的坐标立即变为非正，暂时屏蔽以防循环
                passive[t] = False
                blocked.add(t)
                s = None
                break
            first = False
            if np.all(s[idx] > 0):
                break
            negative = [i for i in idx if s[i] <= 0]
            ratios = [(x[i] / (x[i] - s[i]) if x[i] != s[i] else 0.0, i) for i in negative]
            alpha, leaving = min(ratios)
            x = x + alpha * (s - x)
            x[leaving] = 0.0
            for i in idx:
                if x[i] <= 0:
                    x[i] = 0.0
                    passive[i] = False

        if s is None:
            continue
        x = s
        x[~passive] = 0.0
        blocked.clear()
        w = A.T @ (y - A @ x)

    logger.debug(f"NNLS 完成: {outer} 次外循环, 被动集 {np.flatnonzero(passive).tolist()}")
    return x


def bvls(A_J, y, lower: Sequence[float], upper: Sequence[float],
         policy: Optional[NumericPolicy] = None, max_iterations: Optional[int] = None) -> np.ndarray:
    """
    有界变量最小二乘 min ‖A_J x − y‖, lower ≤ x ≤ upper（lower ≤ 0 ≤ upper）

    从 x = 0 出发的原始有效集法：自由集上求无约束最小二乘，越界时沿线段回退并固定到边界，
    可行时按梯度释放违反最优性最严重的边界变量

    Raises:
        CycleLimitError: 迭代次数超限
    """
    A = np.asarray(A_J, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    n = A.shape[1]
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if n == 0:
        return np.zeros(0)
    max_iterations = max_iterations or 10 * (n + 1) * (n + 1)
    tol = _dual_tolerance(A, y)

    x = np.zeros(n)
    # 状态：0 自由，-1 位于下界，+1 位于上界
    state = np.zeros(n, dtype=int)
    state[(lo == 0) & (hi > 0)] = -1
    state[(hi == 0) & (lo < 0)] = 1
    state[(lo == 0) & (hi == 0)] = -1
    fixed_both = lo == hi

    for iteration in range(1, max_iterations + 1):
        free = np.flatnonzero(state == 0)
        bound = np.flatnonzero(state != 0)
        x[bound] = np.where(state[bound] < 0, lo[bound], hi[bound])
        rhs = y - A[:, bound] @ x[bound]
        s = x.copy()
        if free.size:
            s[free] = _lstsq(A[:, free], rhs, policy)

        outside = [i for i in free if s[i] < lo[i] or s[i] > hi[i]]
        if outside:
            ratios = []
            for i in outside:
                limit = lo[i] if s[i] < lo[i] else hi[i]
                denom = s[i] - x[i]
                ratios.append(((limit - x[i]) / denom if denom != 0 else 0.0, i))
            alpha, hitting = min(ratios)
            alpha = min(max(alpha, 0.0), 1.0)
            x = x + alpha * (s - x)
            for i in free:
                if x[i] <= lo[i] or i == hitting and s[i] < lo[i]:
                    x[i] = lo[i]
                    state[i] = -1
                elif x[i] >= hi[i] or i == hitting and s[i] > hi[i]:
                    x[i] = hi[i]
                    state[i] = 1
            continue

        x = s
        gradient = A.T @ (y - A @ x)
        violations = []
        for i in np.flatnonzero(state != 0):
            if fixed_both[i]:
                continue
            if state[i] < 0 and gradient[i] > tol:
                violations.append((gradient[i], -i))
            elif state[i] > 0 and gradient[i] < -tol:
                violations.append((-gradient[i], -i))
        if not violations:
            logger.debug(f"BVLS 完成: {iteration} 次迭代")
            return x
        _, neg_index = max(violations)
        state[-neg_index] = 0

    raise CycleLimitError(f"BVLS 迭代超过 {max_iterations} 次", {'columns': n})


def _orthonormal_range(A: np.ndarray, policy: Optional[NumericPolicy] = None) -> np.ndarray:
    """列空间的正交基"""
    if has_full_column_rank(A, policy):
        Q, _ = np.linalg.qr(A, mode='reduced')
        return Q
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    threshold = get_policy(policy).rank_tol * (sv[0] if sv.size else 0.0)
    rank = int(np.sum(sv > threshold))
    return U[:, :rank]


def _mixed_cone_solve(A_free: np.ndarray, A_cone: np.ndarray, y: np.ndarray,
                      policy: Optional[NumericPolicy] = None) -> Tuple[np.ndarray, np.ndarray]:
    """自由块 QR 投影消元，剩余非负块走 NNLS，再回代自由块"""
    Q = _orthonormal_range(A_free, policy)
    A_proj = A_cone - Q @ (Q.T @ A_cone)
    y_proj = y - Q @ (Q.T @ y)
    x_cone = nnls(A_proj, y_proj, policy)
    x_free = _lstsq(A_free, y - A_cone @ x_cone, policy)
    return x_free, x_cone


def _solve_box(A: np.ndarray, y: np.ndarray, P: BoxProduct, J: List[int],
               policy: NumericPolicy) -> np.ndarray:
    x = np.zeros(P.n)
    lo = P.lower_array[J]
    hi = P.upper_array[J]
    if not P.is_cone:
        x[J] = bvls(A[:, J], y, lo, hi, policy)
        return x

    free = [j for j, a, b in zip(J, lo, hi) if a < 0 < b]
    cone = [j for j, a, b in zip(J, lo, hi) if (a == 0) != (b == 0)]
    # I− 列取反化为 I+
    signs = np.array([1.0 if P.upper_array[j] > 0 else -1.0 for j in cone])
    A_cone = A[:, cone] * signs if cone else np.zeros((A.shape[0], 0))

    if not cone:
        x[free] = _lstsq(A[:, free], y, policy)
    elif not free:
        x[cone] = signs * nnls(A_cone, y, policy)
    else:
        x_free, x_cone = _mixed_cone_solve(A[:, free], A_cone, y, policy)
        x[free] = x_free
        x[cone] = signs * x_cone
    return x


def _simplex_gradient_map(H: np.ndarray, b: np.ndarray, x: np.ndarray, L: float,
                          weights: np.ndarray, cap: float) -> float:
    g = H @ x - b
    return float(np.max(np.abs(x - project_weighted_simplex(x - g / L, weights, cap)), initial=0.0))


def _solve_simplex(A: np.ndarray, y: np.ndarray, P: WeightedSimplex, J: List[int],
                   policy: NumericPolicy) -> np.ndarray:
    """带重启的加速投影梯度，步长 1/L"""
    x_full = np.zeros(P.n)
    A_J = A[:, J]
    weights = P.weights[J]
    H = A_J.T @ A_J
    b = A_J.T @ y
    L = float(np.linalg.eigvalsh(H)[-1])
    if L <= 0:
        return x_full
    target = policy.kkt_tol * 1e-2

    def objective(v: np.ndarray) -> float:
        r = A_J @ v - y
        return float(r @ r)

    x = np.zeros(len(J))
    z = x.copy()
    t = 1.0
    residual = math.inf
    for iteration in range(1, SIMPLEX_MAX_ITERATIONS + 1):
        x_new = project_weighted_simplex(z - (H @ z - b) / L, weights, P.cap)
        t_new = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        if objective(x_new) > objective(x):
            # 目标上升时重启动量
            z = x.copy()
            t = 1.0
            continue
        z = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
        residual = _simplex_gradient_map(H, b, x, L, weights, P.cap)
        if residual < target:
            logger.debug(f"单纯形投影梯度 {iteration} 次迭代收敛, 残差 {residual:.3e}")
            break
    else:
        if residual > policy.kkt_tol:
            raise NotConvergedError(f"投影梯度 {SIMPLEX_MAX_ITERATIONS} 次迭代后残差 {residual:.3e}",
                                    {'residual': residual, 'iterations': SIMPLEX_MAX_ITERATIONS})
        logger.warning(f"投影梯度达到迭代上限，残差 {residual:.3e} 在容差内，接受")
    x_full[J] = x
    return x_full


def _null_space(row: np.ndarray) -> np.ndarray:
    """{c : rowᵀc = 0} 的正交基"""
    k = row.size
    if not np.any(row != 0):
        return np.eye(k)
    _, _, Vt = np.linalg.svd(row.reshape(1, -1))
    return Vt[1:].T


def _solve_hyperplane(A: np.ndarray, y: np.ndarray, P: Hyperplane, J: List[int],
                      policy: NumericPolicy) -> np.ndarray:
    x = np.zeros(P.n)
    N = _null_space(P.normal[J])
    if N.shape[1] == 0:
        return x
    c = _lstsq(A[:, J] @ N, y, policy)
    x[J] = N @ c
    return x


def solve_restricted(A, y, P: ConstraintModel, J: Sequence[int],
                     policy: Optional[NumericPolicy] = None,
                     require_unique: bool = False) -> RestrictedSolution:
    """
    求解支撑受限子问题

    Args:
        A: 测量矩阵
        y: 观测向量
        P: 约束模型
        J: 允许的支撑（0 起）
        policy: 数值策略
        require_unique: 为 True 时 A_J 列不满秩直接报错

    Returns:
        RestrictedSolution，J 之外为精确 0

    Raises:
        RankDeficientError: 要求唯一但 A_J 不满秩
        NotConvergedError: 单纯形路径未收敛
    """
    policy = get_policy(policy)
    A = as_matrix(A).entries
    y = np.asarray(y, dtype=float).reshape(-1)
    J = sorted(set(int(j) for j in J))
    if A.shape[1] != P.n:
        raise InputFormatError(f"矩阵列数 {A.shape[1]} 与约束维数 {P.n} 不一致")
    if J and not 0 <= J[0] <= J[-1] < P.n:
        raise InputFormatError(f"支撑下标越界: {[j + 1 for j in J]}")

    full_rank = has_full_column_rank(A[:, J], policy)
    if require_unique and not full_rank:
        raise RankDeficientError(f"A_J 列不满秩, J = {[j + 1 for j in J]}", {'J': [j + 1 for j in J]})

    if not J:
        return RestrictedSolution(np.zeros(P.n), float(y @ y), 0.0, True)

    alternatives: List[np.ndarray] = []
    if isinstance(P, NonconvexDemo):
        from .oracle import nonconvex_restricted_solve
        solution = nonconvex_restricted_solve(A, y, J, policy)
        x = solution.representative
        unique = solution.is_point
        alternatives = [np.asarray(c, dtype=float) for c in solution.candidates]
        kkt = 0.0
    else:
        if isinstance(P, BoxProduct):
            x = _solve_box(A, y, P, J, policy)
        elif isinstance(P, WeightedSimplex):
            x = _solve_simplex(A, y, P, J, policy)
        elif isinstance(P, Hyperplane):
            x = _solve_hyperplane(A, y, P, J, policy)
        else:
            raise InputFormatError(f"不支持的约束类型 {P.type_name}")
        outside = np.ones(P.n, dtype=bool)
        outside[J] = False
        x[outside] = 0.0
        unique = full_rank
        kkt = kkt_residual(A, y, P, J, x, policy)
        if kkt > policy.kkt_tol:
            logger.warning(f"受限子问题 KKT 残差 {kkt:.3e} 超过容差 {policy.kkt_tol:.1e}")

    residual = A @ x - y
    return RestrictedSolution(x, float(residual @ residual), float(kkt), bool(unique), alternatives)


def kkt_residual(A, y, P: ConstraintModel, J: Sequence[int], x,
                 policy: Optional[NumericPolicy] = None) -> float:
    """
    最优性残差

    盒约束：逐坐标互补性违反量的最大值；单纯形：‖x − Π(x − ∇f/L)‖∞；
    超平面：梯度在可行子空间上投影的无穷范数；非凸演示集合返回 0

    Args:
        A: 测量矩阵
        y: 观测向量
        P: 约束模型
        J: 支撑（0 起）
        x: 长度 N 的可行点

    Returns:
        非负残差
    """
    policy = get_policy(policy)
    A = as_matrix(A).entries
    y = np.asarray(y, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float)
    J = sorted(set(int(j) for j in J))
    if not J or isinstance(P, NonconvexDemo):
        return 0.0
    A_J = A[:, J]
    x_J = x[J]
    g = A_J.T @ (A_J @ x_J - y)

    if isinstance(P, BoxProduct):
        tol = policy.membership_tol
        worst = 0.0
        for k, j in enumerate(J):
            lo, hi = P.lower_array[j], P.upper_array[j]
            at_lower = math.isfinite(lo) and x_J[k] <= lo + tol
            at_upper = math.isfinite(hi) and x_J[k] >= hi - tol
            if at_lower and at_upper:
                violation = 0.0
            elif at_lower:
                violation = max(-g[k], 0.0)
            elif at_upper:
                violation = max(g[k], 0.0)
            else:
                violation = abs(g[k])
            worst = max(worst, violation)
        return float(worst)

    if isinstance(P, WeightedSimplex):
        H = A_J.T @ A_J
        L = float(np.linalg.eigvalsh(H)[-1])
        if L <= 0:
            return 0.0
        return _simplex_gradient_map(H, A_J.T @ y, x_J, L, P.weights[J], P.cap)

    if isinstance(P, Hyperplane):
        N = _null_space(P.normal[J])
        return float(np.max(np.abs(N @ (N.T @ g)), initial=0.0))

    raise InputFormatError(f"不支持的约束类型 {P.type_name}")
