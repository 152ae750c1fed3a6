"""
约束匹配追踪 - 逐坐标评分、下标选择、受限重拟合、停止判定与完整轨迹

分支模式按深度优先枚举所有并列选择产生的序列
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constraint import ConstraintModel, ExtendedInterval, NonconvexDemo
from .error_handler import BranchLimitError, InputFormatError
from .linalg import as_matrix, has_full_column_rank
from .restricted_solver import solve_restricted
from ..utils.settings import NumericPolicy, get_policy

logger = logging.getLogger(__name__)

TRACE_SCORE_LIMIT = 64
VECTOR_RECOVERY_TOL = 1e-7


class TerminationReason(Enum):
    """停止原因"""
    RESIDUAL_TOL = "residual_tol"
    MAX_ITER = "max_iter"
    STALL = "stall"


class TieRule(Enum):
    """并列时的选择规则"""
    LOWEST_INDEX = "lowest_index"
    RANDOM = "random"


@dataclass(frozen=True)
class CoordinateScore:
    """坐标 j 的一维最优步长与目标值"""
    j: int
    t_tilde: float
    t_star: float
    g_star: float
    interval: ExtendedInterval

    def to_dict(self) -> Dict[str, Any]:
        return {
            'j': self.j + 1,
            't_tilde': self.t_tilde,
            't_star': self.t_star,
            'g_star': self.g_star,
            'interval': self.interval.to_dict()
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CoordinateScore':
        return cls(int(data['j']) - 1, float(data['t_tilde']), float(data['t_star']),
                   float(data['g_star']), ExtendedInterval.from_dict(data['interval']))


@dataclass
class PursuitConfig:
    """追踪配置"""
    max_iter: Optional[int] = None
    residual_tol: Optional[float] = None
    tie_rule: TieRule = TieRule.LOWEST_INDEX
    max_branches: int = 1000
    seed: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.tie_rule, str):
            self.tie_rule = TieRule(self.tie_rule)
        if self.max_iter is not None and self.max_iter < 0:
            raise InputFormatError(f"max_iter 不能为负: {self.max_iter}")
        if self.max_branches < 1:
            raise InputFormatError(f"max_branches 至少为 1: {self.max_branches}")

    def resolve_max_iter(self, m: int, n: int, P: ConstraintModel) -> int:
        """默认 min(m, N)，非凸演示集合取 N"""
        if self.max_iter is not None:
            return self.max_iter
        if isinstance(P, NonconvexDemo):
            return n
        return min(m, n)

    def resolve_residual_tol(self, y: np.ndarray) -> float:
        if self.residual_tol is not None:
            return self.residual_tol
        return 1e-10 * float(np.linalg.norm(y))


@dataclass
class PursuitStep:
    """单步记录"""
    k: int
    chosen: int
    candidates: List[int]
    J: List[int]
    x: np.ndarray
    residual_sq: float
    scores: List[CoordinateScore] = field(default_factory=list)
    non_informative: bool = False
    unique: bool = True

    def to_dict(self, include_scores: bool = True) -> Dict[str, Any]:
        data = {
            'k': self.k,
            'chosen': self.chosen + 1,
            'candidates': [j + 1 for j in self.candidates],
            'J': [j + 1 for j in self.J],
            'x': self.x.tolist(),
            'residual_sq': self.residual_sq,
            'non_informative': self.non_informative,
            'unique': self.unique
        }
        if include_scores:
            data['scores'] = [s.to_dict() for s in self.scores]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PursuitStep':
        return cls(
            k=int(data['k']),
            chosen=int(data['chosen']) - 1,
            candidates=[int(j) - 1 for j in data.get('candidates', [data['chosen']])],
            J=[int(j) - 1 for j in data['J']],
            x=np.array(data['x'], dtype=float),
            residual_sq=float(data['residual_sq']),
            scores=[CoordinateScore.from_dict(s) for s in data.get('scores', [])],
            non_informative=bool(data.get('non_informative', False)),
            unique=bool(data.get('unique', True))
        )


@dataclass
class PursuitTrace:
    """一次完整运行的轨迹"""
    n: int
    initial_residual_sq: float
    steps: List[PursuitStep] = field(default_factory=list)
    terminated_by: TerminationReason = TerminationReason.MAX_ITER

    @property
    def final_x(self) -> np.ndarray:
        if self.steps:
            return self.steps[-1].x
        return np.zeros(self.n)

    @property
    def final_residual_sq(self) -> float:
        if self.steps:
            return self.steps[-1].residual_sq
        return self.initial_residual_sq

    @property
    def final_support(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.final_x))

    @property
    def index_sequence(self) -> Tuple[int, ...]:
        return tuple(step.chosen for step in self.steps)

    def to_dict(self, full_trace: Optional[bool] = None) -> Dict[str, Any]:
        """
        序列化为 JSON 字典（下标从 1 开始）

        Args:
            full_trace: 是否保留逐坐标评分，None 时 N ≤ 64 保留
        """
        include = full_trace if full_trace is not None else self.n <= TRACE_SCORE_LIMIT
        return {
            'n': self.n,
            'initial_residual_sq': self.initial_residual_sq,
            'terminated_by': self.terminated_by.value,
            'steps': [step.to_dict(include) for step in self.steps],
            'final_x': self.final_x.tolist(),
            'final_residual_sq': self.final_residual_sq
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PursuitTrace':
        return cls(
            n=int(data['n']),
            initial_residual_sq=float(data['initial_residual_sq']),
            steps=[PursuitStep.from_dict(s) for s in data.get('steps', [])],
            terminated_by=TerminationReason(data.get('terminated_by', 'max_iter'))
        )


@dataclass
class RecoveryVerdict:
    """精确支撑恢复与精确向量恢复判定"""
    support: Tuple[int, ...]
    support_recovered: bool
    vector_recovered: bool
    traces: List[PursuitTrace] = field(default_factory=list)

    def to_dict(self, full_trace: Optional[bool] = False) -> Dict[str, Any]:
        return {
            'support': [i + 1 for i in self.support],
            'support_recovered': self.support_recovered,
            'vector_recovered': self.vector_recovered,
            'branches': len(self.traces),
            'traces': [t.to_dict(full_trace) for t in self.traces]
        }


# ============== 评分与选择 ==============

def _score(A: np.ndarray, r: np.ndarray, residual_sq: float, P: ConstraintModel,
           x: np.ndarray, j: int, policy: NumericPolicy) -> CoordinateScore:
    a = A[:, j]
    norm_sq = float(a @ a)
    t_tilde = float(r @ a) / norm_sq
    interval = P.interval_at(x, j, policy)
    t_star = interval.clamp(t_tilde)
    g_star = residual_sq - norm_sq * (2.0 * t_star * t_tilde - t_star * t_star)
    return CoordinateScore(j, t_tilde, t_star, g_star, interval)


def coordinate_score(A, y, P: ConstraintModel, x, j: int,
                     policy: Optional[NumericPolicy] = None) -> CoordinateScore:
    """
    坐标 j 的一维最优值 g*_j = min_{t ∈ I_j(x)} ‖y − A(x + t·e_j)‖²

    截断公式：t̃ = ⟨r, A_j⟩/‖A_j‖²，t* = clamp(t̃, I_j(x))，g* = ‖r‖² − ‖A_j‖²(2t*t̃ − t*²)

    Args:
        A: 测量矩阵
        y: 观测向量
        P: 约束模型
        x: 当前迭代点（∈ P）
        j: 坐标下标（0 起）

    Returns:
        CoordinateScore
    """
    policy = get_policy(policy)
    data = as_matrix(A).entries
    x = np.asarray(x, dtype=float)
    r = np.asarray(y, dtype=float).reshape(-1) - data @ x
    return _score(data, r, float(r @ r), P, x, j, policy)


def score_all(A, y, P: ConstraintModel, x, policy: Optional[NumericPolicy] = None) -> List[CoordinateScore]:
    """全部坐标的评分"""
    policy = get_policy(policy)
    data = as_matrix(A).entries
    x = np.asarray(x, dtype=float)
    r = np.asarray(y, dtype=float).reshape(-1) - data @ x
    residual_sq = float(r @ r)
    return [_score(data, r, residual_sq, P, x, j, policy) for j in range(data.shape[1])]


def select_index(scores: Sequence[CoordinateScore], tie_tol: Optional[float] = None,
                 exclude: Sequence[int] = ()) -> List[int]:
    """
    所有满足 g*_j ≤ min g* + tie_tol·(1 + min g*) 的下标（升序）

    与逐字的 argmin 不同，最小值只在 exclude 之外取。cmp_run 传入已选集合 J：
    x 已是 J 上的受限最优解，j ∈ J 的 g*_j 不小于当前残差平方，重选不会降低残差，
    因此排除只在所有候选都是无信息步时改变选中的下标，不改变恢复判定。

    Args:
        scores: 评分列表
        tie_tol: 相对并列容差
        exclude: 已选下标，不参与最小化

    Returns:
        并列最小的下标列表，可选下标为空时返回空列表
    """
    tie_tol = get_policy().tie_tol if tie_tol is None else tie_tol
    excluded = set(exclude)
    eligible = [s for s in scores if s.j not in excluded]
    if not eligible:
        return []
    best = min(s.g_star for s in eligible)
    threshold = best + tie_tol * (1.0 + abs(best))
    return sorted(s.j for s in eligible if s.g_star <= threshold)


def _is_non_informative(scores: Sequence[CoordinateScore], candidates: Sequence[int],
                        residual_sq: float, tie_tol: float) -> bool:
    """所有候选都无法降低残差时标记为无信息步"""
    best = min(scores[j].g_star for j in candidates)
    return best >= residual_sq - tie_tol * (1.0 + residual_sq)


def _choose(candidates: List[int], config: PursuitConfig, rng: Optional[np.random.Generator]) -> int:
    if config.tie_rule == TieRule.RANDOM and rng is not None and len(candidates) > 1:
        return int(candidates[rng.integers(len(candidates))])
    return candidates[0]


def _termination(previous: float, current: float, tol: float, stall_tol: float) -> Optional[TerminationReason]:
    if current <= tol * tol:
        return TerminationReason.RESIDUAL_TOL
    if previous - current <= stall_tol:
        return TerminationReason.STALL
    return None


# ============== 主循环 ==============

def cmp_run(A, y, P: ConstraintModel, config: Optional[PursuitConfig] = None,
            policy: Optional[NumericPolicy] = None) -> PursuitTrace:
    """
    约束匹配追踪

    x⁰ = 0, J₀ = ∅；每步对全部坐标评分，在未选坐标中取 g* 最小者，
    再在 J_k 上求解受限子问题

    Args:
        A: 测量矩阵
        y: 观测向量
        P: 约束模型
        config: 追踪配置
        policy: 数值策略

    Returns:
        PursuitTrace
    """
    policy = get_policy(policy)
    config = config or PursuitConfig()
    matrix = as_matrix(A)
    y = np.asarray(y, dtype=float).reshape(-1)
    if matrix.n != P.n or matrix.m != y.size:
        raise InputFormatError(f"维数不一致: A 为 {matrix.m}×{matrix.n}, y 长度 {y.size}, 约束维数 {P.n}")
    max_iter = config.resolve_max_iter(matrix.m, matrix.n, P)
    tol = config.resolve_residual_tol(y)
    rng = np.random.default_rng(config.seed) if config.tie_rule == TieRule.RANDOM else None

    x = np.zeros(matrix.n)
    J: List[int] = []
    residual_sq = float(y @ y)
    trace = PursuitTrace(matrix.n, residual_sq)
    if residual_sq <= tol * tol:
        trace.terminated_by = TerminationReason.RESIDUAL_TOL
        return trace

    for k in range(1, max_iter + 1):
        scores = score_all(matrix, y, P, x, policy)
        candidates = select_index(scores, policy.tie_tol, exclude=J)
        if not candidates:
            trace.terminated_by = TerminationReason.STALL
            break
        j = _choose(candidates, config, rng)
        J = J + [j]
        solution = solve_restricted(matrix, y, P, J, policy)
        step = PursuitStep(k, j, candidates, sorted(J), solution.x, solution.objective, scores,
                           _is_non_informative(scores, candidates, residual_sq, policy.tie_tol),
                           solution.unique)
        trace.steps.append(step)
        logger.debug(f"第 {k} 步: 选择 {j + 1}, 候选 {[c + 1 for c in candidates]}, 残差平方 {solution.objective:.3e}")
        reason = _termination(residual_sq, solution.objective, tol, policy.stall_tol)
        x, residual_sq = solution.x, solution.objective
        if reason is not None:
            trace.terminated_by = reason
            break
    else:
        trace.terminated_by = TerminationReason.MAX_ITER

    logger.info(f"追踪结束: {len(trace.steps)} 步, 原因 {trace.terminated_by.value}, "
                f"残差平方 {trace.final_residual_sq:.3e}")
    return trace


def cmp_run_all_branches(A, y, P: ConstraintModel, config: Optional[PursuitConfig] = None,
                         policy: Optional[NumericPolicy] = None) -> List[PursuitTrace]:
    """
    深度优先枚举所有并列选择（非凸演示集合上还枚举受限子问题的候选最优解）

    Args:
        A: 测量矩阵
        y: 观测向量
        P: 约束模型
        config: 追踪配置（max_iter 为深度上限，max_branches 为分支上限）
        policy: 数值策略

    Returns:
        按下标序列去重后的轨迹列表

    Raises:
        BranchLimitError: 分支数超过 max_branches
    """
    policy = get_policy(policy)
    config = config or PursuitConfig()
    matrix = as_matrix(A)
    y = np.asarray(y, dtype=float).reshape(-1)
    if matrix.n != P.n or matrix.m != y.size:
        raise InputFormatError(f"维数不一致: A 为 {matrix.m}×{matrix.n}, y 长度 {y.size}, 约束维数 {P.n}")
    max_depth = config.resolve_max_iter(matrix.m, matrix.n, P)
    tol = config.resolve_residual_tol(y)
    initial = float(y @ y)

    if initial <= tol * tol:
        return [PursuitTrace(matrix.n, initial, [], TerminationReason.RESIDUAL_TOL)]

    finished: List[PursuitTrace] = []
    seen = set()
    # 栈元素: (x, J, 残差平方, 已有步骤)
    stack: List[Tuple[np.ndarray, List[int], float, List[PursuitStep]]] = [(np.zeros(matrix.n), [], initial, [])]

    def finish(steps: List[PursuitStep], reason: TerminationReason) -> None:
        key = tuple(s.chosen for s in steps)
        if key in seen:
            return
        seen.add(key)
        finished.append(PursuitTrace(matrix.n, initial, steps, reason))

    while stack:
        if len(finished) + len(stack) > config.max_branches:
            raise BranchLimitError(f"分支数超过 {config.max_branches}", {'max_branches': config.max_branches})
        x, J, residual_sq, steps = stack.pop()
        k = len(steps) + 1
        scores = score_all(matrix, y, P, x, policy)
        candidates = select_index(scores, policy.tie_tol, exclude=J)
        if not candidates:
            finish(steps, TerminationReason.STALL)
            continue
        non_informative = _is_non_informative(scores, candidates, residual_sq, policy.tie_tol)
        children = []
        for j in candidates:
            J_new = J + [j]
            solution = solve_restricted(matrix, y, P, J_new, policy)
            options = [solution.x]
            if isinstance(P, NonconvexDemo) and not solution.unique:
                for alt in solution.alternatives:
                    if all(np.linalg.norm(alt - o) > 1e-9 for o in options):
                        options.append(alt)
            for x_new in options:
                r = matrix @ x_new - y
                new_sq = float(r @ r)
                step = PursuitStep(k, j, candidates, sorted(J_new), x_new, new_sq, scores,
                                   non_informative, solution.unique)
                children.append((x_new, J_new, new_sq, steps + [step]))

        for x_new, J_new, new_sq, new_steps in reversed(children):
            reason = _termination(residual_sq, new_sq, tol, policy.stall_tol)
            if reason is None and len(new_steps) >= max_depth:
                reason = TerminationReason.MAX_ITER
            if reason is not None:
                finish(new_steps, reason)
            else:
                stack.append((x_new, J_new, new_sq, new_steps))

    # 深度优先顺序与下标字典序一致
    finished.sort(key=lambda t: t.index_sequence)
    logger.info(f"分支枚举完成: {len(finished)} 条轨迹")
    return finished


def verify_exact_recovery(A, z, P: ConstraintModel, config: Optional[PursuitConfig] = None,
                          policy: Optional[NumericPolicy] = None) -> RecoveryVerdict:
    """
    判定对给定 z 是否实现精确支撑恢复与精确向量恢复

    支撑恢复：每条分支在第 s = |supp(z)| 步恰好得到 J_s = supp(z)；
    向量恢复：另外要求 A_{supp(z)} 列满秩且 x^s = z

    Args:
        A: 测量矩阵
        z: 稀疏向量（∈ P）
        P: 约束模型
        config: 追踪配置（仅使用 max_branches 与 tie 设置）
        policy: 数值策略

    Returns:
        RecoveryVerdict
    """
    policy = get_policy(policy)
    matrix = as_matrix(A)
    z = np.asarray(z, dtype=float).reshape(-1)
    if not P.contains(z, policy.membership_tol):
        logger.warning("待恢复向量不属于约束集")
    support = tuple(int(i) for i in np.flatnonzero(z))
    s = len(support)
    y = matrix @ z
    if s == 0:
        trace = PursuitTrace(matrix.n, 0.0, [], TerminationReason.RESIDUAL_TOL)
        return RecoveryVerdict(support, True, True, [trace])

    base = config or PursuitConfig()
    run_config = PursuitConfig(max_iter=s, residual_tol=0.0, tie_rule=base.tie_rule,
                               max_branches=base.max_branches, seed=base.seed)
    traces = cmp_run_all_branches(matrix, y, P, run_config, policy)

    target = set(support)
    support_ok = all(len(t.steps) >= s and set(t.steps[s - 1].J) == target for t in traces)
    vector_ok = False
    if support_ok and has_full_column_rank(matrix.columns(support), policy):
        vector_ok = all(t.steps[s - 1].unique and
                        float(np.max(np.abs(t.steps[s - 1].x - z))) <= VECTOR_RECOVERY_TOL
                        for t in traces)
    return RecoveryVerdict(support, support_ok, vector_ok, traces)


def replay_trace(A, y, P: ConstraintModel, trace: PursuitTrace,
                 policy: Optional[NumericPolicy] = None) -> float:
    """
    由保存的迭代点重新计算评分与残差，返回与记录值的最大偏差

    Args:
        A: 测量矩阵
        y: 观测向量
        P: 约束模型
        trace: 轨迹（可来自 JSON）

    Returns:
        最大绝对偏差
    """
    policy = get_policy(policy)
    matrix = as_matrix(A)
    y = np.asarray(y, dtype=float).reshape(-1)
    previous = np.zeros(matrix.n)
    deviation = abs(float(y @ y) - trace.initial_residual_sq)
    for step in trace.steps:
        if step.scores:
            recomputed = score_all(matrix, y, P, previous, policy)
            for old, new in zip(step.scores, recomputed):
                deviation = max(deviation, abs(old.g_star - new.g_star), abs(old.t_star - new.t_star))
        r = matrix @ step.x - y
        deviation = max(deviation, abs(float(r @ r) - step.residual_sq))
        previous = step.x
    return deviation if math.isfinite(deviation) else math.inf
