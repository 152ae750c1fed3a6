"""
恢复条件认证 - ERC、固定支撑条件、Motzkin 支配性化简、恢复常数、条件 (H) 证伪与反例复现

所有固定支撑条件只依赖 Gram 矩阵 ϑ，因此同一套公式同时适用于 float 与 Fraction
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations, product
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import lp, rational
from .constraint import (
    BoxProduct, ConeClassification, ConstraintModel, classify_cone, conic_hull, coordinate_project
)
from .error_handler import (
    BudgetExceededError, CertificationAssertionError, InputFormatError, NotAConeError, NotBoxProductError,
    NotIrreducibleError, RankDeficientError, SingularBlockError, UnsupportedCombinationError
)
from .linalg import (
    MeasurementMatrix, as_matrix, counterexample_gram_exact, counterexample_matrix, exact_gram,
    extended_counterexample, extended_counterexample_gram_exact, extension_signs, gram, min_eig_sym,
    normalize_columns, support_eigen_extremes
)
from .pursuit import PursuitConfig, coordinate_score, score_all, verify_exact_recovery
from .restricted_solver import solve_restricted
from ..utils.settings import NumericPolicy, SettingsManager, get_policy

logger = logging.getLogger(__name__)

NECESSARY_AND_SUFFICIENT = "necessary+sufficient"
SUFFICIENT = "sufficient"

ABS, PLUS, MINUS = "abs", "plus", "minus"

MAX_GENERAL_SUPPORT = 12
CONSTANTS_BUDGET = 10 ** 6
DEFAULT_RECOVERY_SAMPLES = 200


class Verdict(Enum):
    """条件判定结果"""
    HOLDS = "Holds"
    FAILS = "Fails"
    UNDECIDED_SAMPLED = "UndecidedSampled"


class MarginState(Enum):
    """裕量状态，BOUNDARY 表示落在边界带内"""
    POSITIVE = "positive"
    NEGATIVE = "negative"
    BOUNDARY = "boundary"


def _jsonable(value: Any) -> Any:
    """Fraction 转字符串，numpy 类型转 Python 原生类型"""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def _one_based(indices: Sequence[int]) -> List[int]:
    return [int(i) + 1 for i in indices]


def _set_label(indices: Sequence[int]) -> str:
    return "{" + ",".join(str(i + 1) for i in indices) + "}"


@dataclass(frozen=True)
class MarginValue:
    """带状态的裕量"""
    value: Any
    state: MarginState

    @classmethod
    def of(cls, value: Any, band: float = 0.0) -> 'MarginValue':
        """
        按边界带分类裕量

        Args:
            value: 裕量（float 或 Fraction）
            band: 边界带半宽，精确模式为 0
        """
        if value > band:
            state = MarginState.POSITIVE
        elif value < -band:
            state = MarginState.NEGATIVE
        else:
            state = MarginState.BOUNDARY
        return cls(value, state)

    @property
    def holds(self) -> bool:
        return self.state is MarginState.POSITIVE

    def to_dict(self) -> Dict[str, Any]:
        return {'value': _jsonable(self.value), 'state': self.state.value}


@dataclass
class ConditionReport:
    """
    单个条件的认证结果

    binding 表示属于充分条件合取的一项；necessary 表示失败即意味着恢复失败
    """
    condition_id: str
    verdict: Verdict
    witness: Optional[Dict[str, Any]] = None
    numeric_margins: Dict[str, MarginValue] = field(default_factory=dict)
    binding: bool = True
    necessary: bool = False
    details: Dict[str, Any] = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            'condition_id': self.condition_id,
            'verdict': self.verdict.value,
            'margins': {name: margin.to_dict() for name, margin in self.numeric_margins.items()},
            'witness': _jsonable(self.witness),
            'binding': self.binding,
            'necessary': self.necessary,
            'details': _jsonable(self.details),
            'note': self.note
        }


@dataclass
class SupportCertificate:
    """固定支撑的条件报告集合及汇总判定"""
    support: Tuple[int, ...]
    case: str
    label: str
    mode: str
    reports: List[ConditionReport]
    verdict: Verdict
    notes: List[str] = field(default_factory=list)

    def report(self, condition_id: str) -> ConditionReport:
        for item in self.reports:
            if item.condition_id == condition_id:
                return item
        raise KeyError(condition_id)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'support': _one_based(self.support),
            'case': self.case,
            'label': self.label,
            'mode': self.mode,
            'verdict': self.verdict.value,
            'reports': [item.to_dict() for item in self.reports],
            'notes': list(self.notes)
        }


def _verdict_of(margin: MarginValue) -> Verdict:
    return Verdict.HOLDS if margin.holds else Verdict.FAILS


def _band(exact: bool, policy: NumericPolicy) -> float:
    return 0.0 if exact else policy.boundary_band


# ============== Gram 表与 ERC ==============

def gram_table(A, mode: str = "float") -> List[List[Any]]:
    """
    Gram 矩阵的列表形式

    Args:
        A: 测量矩阵
        mode: float 或 rational（给定浮点数据的精确有理值）

    Returns:
        N×N 列表矩阵
    """
    matrix = as_matrix(A)
    if mode == "float":
        return gram(matrix).theta.tolist()
    if mode == "rational":
        return exact_gram(matrix)
    raise InputFormatError(f"未知计算模式 {mode!r}，应为 float 或 rational")


def _validate_support(S: Sequence[int], n: int) -> List[int]:
    support = sorted(set(int(s) for s in S))
    if not support:
        raise InputFormatError("支撑集不能为空")
    if support[0] < 0 or support[-1] >= n:
        raise InputFormatError(f"支撑下标越界: {_one_based(support)}，列数 {n}")
    return support


def _erc_value(T: List[List[Any]], S: Sequence[int], Sc: Sequence[int],
               policy: NumericPolicy) -> Tuple[Any, Optional[int]]:
    """返回 (1-范数, 取到最大列和的 Sᶜ 下标)"""
    if not Sc:
        return (Fraction(0) if rational.matrix_is_exact(T) else 0.0), None
    try:
        inv = rational.inverse(rational.submatrix(T, S, S), policy.rank_tol)
    except SingularBlockError as e:
        raise RankDeficientError(f"A_S 列不满秩, S = {_one_based(S)}", {'support': _one_based(S)}) from e
    product_matrix = rational.matmul(inv, rational.submatrix(T, S, Sc))
    sums = [sum((abs(product_matrix[i][k]) for i in range(len(S))), 0 * product_matrix[0][k])
            for k in range(len(Sc))]
    worst = max(range(len(Sc)), key=lambda k: sums[k])
    return sums[worst], Sc[worst]


def erc_norm(A, S: Sequence[int], mode: str = "float", theta: Optional[List[List[Any]]] = None,
             policy: Optional[NumericPolicy] = None) -> Any:
    """
    ERC 范数 ‖(A_SᵀA_S)⁻¹A_SᵀA_{Sᶜ}‖₁（最大列绝对值和）

    Args:
        A: 测量矩阵
        S: 支撑（0 起）
        mode: float 或 rational
        theta: 预先给定的 Gram 表（如反例的精确 Gram）
        policy: 数值策略

    Returns:
        float 或 Fraction

    Raises:
        RankDeficientError: A_S 列不满秩
    """
    policy = get_policy(policy)
    T = theta if theta is not None else gram_table(A, mode)
    support = _validate_support(S, len(T))
    Sc = [j for j in range(len(T)) if j not in support]
    value, _ = _erc_value(T, support, Sc, policy)
    return value


# ============== Motzkin 支配性 ==============

def _row_score(row: Sequence[Any], kind: str, v: Sequence[Any]) -> Any:
    value = rational.dot(row, v)
    if kind == ABS:
        return abs(value)
    if kind == PLUS:
        return rational.positive_part(value)
    return rational.positive_part(-value)


def dominance_gap(P_rows, P_kinds, Q_rows, Q_kinds, v) -> Any:
    """max_i score(p_i, v) − max_j score(q_j, v)，Q 为空时按 0 计"""
    p_best = max(_row_score(row, kind, v) for row, kind in zip(P_rows, P_kinds))
    q_best = max((_row_score(row, kind, v) for row, kind in zip(Q_rows, Q_kinds)), default=p_best * 0)
    return p_best - q_best


def _target_signs(kind: str, symmetric: bool) -> Tuple[int, ...]:
    if kind == PLUS or (kind == ABS and symmetric):
        return (1,)
    if kind == MINUS:
        return (-1,)
    return (1, -1)


def _columns_to_matrix(columns: List[List[Any]], n: int) -> List[List[Any]]:
    if not columns:
        return [[] for _ in range(n)]
    return rational.transpose(columns)


def motzkin_dominance(P_rows: List[List[Any]], P_kinds: Sequence[str],
                      Q_rows: List[List[Any]], Q_kinds: Sequence[str],
                      sign_free: Sequence[int] = (), policy: Optional[NumericPolicy] = None,
                      condition_id: str = "dominance") -> ConditionReport:
    """
    判定在整个定义域上 max score(P) > max score(Q) 是否严格成立

    定义域：sign_free 中的坐标非零且符号任意，其余坐标为正。评分：abs 为 |p·v|，
    plus 为 (p·v)₊，minus 为 (−p·v)₊。对每个符号模式 σ、每个目标行 q_j 及其符号 τ，
    失败系统 {ṽ > 0, τq·v > 0, τq·v ≥ score_i(v) ∀i} 用择一性判定；另有一个
    "全部 P 评分为 0" 的失败系统

    Args:
        P_rows: 行 p_i
        P_kinds: 每行的评分类型
        Q_rows: 行 q_j
        Q_kinds: 每行的评分类型
        sign_free: 可取任意符号的坐标
        policy: 数值策略
        condition_id: 报告名称

    Returns:
        ConditionReport；Fails 时 witness 含违例向量 v 与支配差

    Raises:
        NumericallyAmbiguousError: 某个线性规划落在模糊带内
    """
    policy = get_policy(policy)
    if not P_rows:
        raise InputFormatError("P 至少需要一行")
    n = len(P_rows[0])
    if any(len(row) != n for row in list(P_rows) + list(Q_rows)):
        raise InputFormatError("P 与 Q 的行维数不一致")
    if len(P_kinds) != len(P_rows) or len(Q_kinds) != len(Q_rows):
        raise InputFormatError("评分类型数量与行数不一致")
    sign_free = sorted(set(int(i) for i in sign_free))
    exact = rational.matrix_is_exact(P_rows) and rational.matrix_is_exact(Q_rows)
    symmetric = (all(k == ABS for k in list(P_kinds) + list(Q_kinds)) and len(sign_free) == n)

    systems = 0
    for pattern in product((1, -1), repeat=len(sign_free)):
        D = [1] * n
        for idx, s in zip(sign_free, pattern):
            D[idx] = s
        P_t = [[D[k] * row[k] for k in range(n)] for row in P_rows]
        Q_t = [[D[k] * row[k] for k in range(n)] for row in Q_rows]

        candidates: List[Tuple[str, List[List[Any]], Optional[List[List[Any]]]]] = []
        for j, (q, q_kind) in enumerate(zip(Q_t, Q_kinds)):
            for tau in _target_signs(q_kind, symmetric):
                target = [tau * value for value in q]
                columns = []
                for p, p_kind in zip(P_t, P_kinds):
                    if p_kind in (ABS, PLUS):
                        columns.append([t - value for t, value in zip(target, p)])
                    if p_kind in (ABS, MINUS):
                        columns.append([t + value for t, value in zip(target, p)])
                strict = [[value] for value in target]
                candidates.append((f"q{j + 1}{'+' if tau > 0 else '-'}",
                                   _columns_to_matrix(columns, n), strict))
        zero_columns = []
        for p, p_kind in zip(P_t, P_kinds):
            if p_kind in (ABS, PLUS):
                zero_columns.append([-value for value in p])
            if p_kind in (ABS, MINUS):
                zero_columns.append(list(p))
        candidates.append(("all_p_zero", _columns_to_matrix(zero_columns, n), None))

        for name, G, C in candidates:
            systems += 1
            result = lp.strict_alternative(G, C, policy)
            if result.exists_witness:
                continue
            v_tilde = lp.positive_dual_solution(G, policy, strict=C)
            witness: Dict[str, Any] = {'sigma': list(pattern), 'system': name,
                                       'sign_free': _one_based(sign_free)}
            margins: Dict[str, MarginValue] = {}
            if v_tilde is not None:
                v = [D[k] * v_tilde[k] for k in range(n)]
                gap = dominance_gap(P_rows, P_kinds, Q_rows, Q_kinds, v)
                witness['v'] = v
                witness['gap'] = gap
                margins['dominance_gap'] = MarginValue.of(gap, _band(exact, policy))
            else:
                logger.warning(f"{condition_id}: 择一性判定失败但未能求出违例向量")
            logger.debug(f"{condition_id}: 符号模式 {list(pattern)} 的系统 {name} 可行，支配性不成立")
            return ConditionReport(condition_id, Verdict.FAILS, witness, margins,
                                   details={'systems_checked': systems})
    return ConditionReport(condition_id, Verdict.HOLDS, details={'systems_checked': systems})


# ============== 固定支撑条件 ==============

@dataclass
class _SupportContext:
    """按 I− 符号翻转后的 Gram 表与下标划分"""
    T: List[List[Any]]
    S: List[int]
    Sc: List[int]
    kinds: Dict[int, str]
    exact: bool
    policy: NumericPolicy

    @property
    def band(self) -> float:
        return _band(self.exact, self.policy)

    @property
    def one(self) -> Any:
        return Fraction(1) if self.exact else 1.0

    def rows(self, rows: Sequence[int], cols: Sequence[int]) -> List[List[Any]]:
        return rational.submatrix(self.T, rows, cols)

    def reduced(self, L: Sequence[int]) -> Tuple[List[int], List[List[Any]], List[List[Any]]]:
        """
        消去 L 后的约化系统

        Returns:
            (I = S∖L, Schur 补 M/M_LL, E 行 ϑ_{j,I} − ϑ_{j,L} M_LL⁻¹ M_{L,I})
        """
        L = sorted(L)
        I = [s for s in self.S if s not in L]
        if not L:
            return I, self.rows(I, I), self.rows(self.Sc, I)
        inv = rational.inverse(self.rows(L, L), self.policy.rank_tol)
        coupling = rational.matmul(inv, self.rows(L, I))
        schur = rational.subtract(self.rows(I, I), rational.matmul(self.rows(I, L), coupling))
        for a in range(len(I)):
            for b in range(a + 1, len(I)):
                schur[b][a] = schur[a][b]
        E = []
        if self.Sc:
            E = rational.subtract(self.rows(self.Sc, I), rational.matmul(self.rows(self.Sc, L), coupling))
        return I, schur, E


def _rank_report(ctx: _SupportContext) -> ConditionReport:
    M = ctx.rows(ctx.S, ctx.S)
    if ctx.exact:
        minors = [rational.determinant(rational.submatrix(M, range(k), range(k)))
                  for k in range(1, len(M) + 1)]
        name, value = "min_leading_minor", min(minors)
        margin = MarginValue.of(value, 0.0)
    else:
        name, value = "min_eigenvalue", min_eig_sym(np.array(M, dtype=float))
        margin = MarginValue.of(value, ctx.policy.rank_tol)
    verdict = _verdict_of(margin)
    witness = None if verdict is Verdict.HOLDS else {name: value, 'support': _one_based(ctx.S)}
    return ConditionReport("rank", verdict, witness, {name: margin}, binding=True, necessary=True)


def _erc_report(ctx: _SupportContext, binding: bool) -> ConditionReport:
    value, column = _erc_value(ctx.T, ctx.S, ctx.Sc, ctx.policy)
    margin = MarginValue.of(ctx.one - value, ctx.band)
    verdict = _verdict_of(margin)
    witness = None
    if verdict is Verdict.FAILS:
        witness = {'column': column + 1, 'column_sum': value}
    if margin.state is MarginState.BOUNDARY:
        logger.warning(f"ERC 裕量落在边界带内: {float(margin.value):.3e}")
    return ConditionReport("erc", verdict, witness, {'erc_margin': margin}, binding=binding,
                           details={'erc_norm': value})


def _dominance_report(ctx: _SupportContext, L: Sequence[int], condition_id: str,
                      binding: bool = True, necessary: bool = False) -> ConditionReport:
    """消去 L 后的支配性：自由坐标按 abs 评分且符号任意，其余按 plus"""
    I, schur, E = ctx.reduced(L)
    P_kinds = [ctx.kinds[i] for i in I]
    Q_kinds = [ctx.kinds[j] for j in ctx.Sc]
    sign_free = [k for k, i in enumerate(I) if ctx.kinds[i] == ABS]
    report = motzkin_dominance(schur, P_kinds, E, Q_kinds, sign_free, ctx.policy, condition_id)
    report.binding = binding
    report.necessary = necessary
    report.details['eliminated'] = _one_based(sorted(L))
    if report.witness is not None and 'v' in report.witness:
        report.witness['coordinates'] = _one_based(I)
    return report


def _two_by_two_margin(ctx: _SupportContext, condition_id: str, value: Any,
                       witness_index: Optional[int], necessary: bool = True) -> ConditionReport:
    margin = MarginValue.of(value, ctx.band)
    verdict = _verdict_of(margin)
    witness = None
    if verdict is Verdict.FAILS:
        witness = {'index': None if witness_index is None else witness_index + 1, 'margin': value}
    return ConditionReport(condition_id, verdict, witness, {'margin': margin},
                           binding=True, necessary=necessary)


def _coherence_report(ctx: _SupportContext, s1: int, s2: int) -> ConditionReport:
    """|ϑ12| < 1"""
    value = ctx.one - abs(ctx.T[s1][s2])
    return _two_by_two_margin(ctx, "i_coherence", value, None)


def _plus_pair_report(ctx: _SupportContext) -> ConditionReport:
    """1 − ϑ12² > max_j max((ϑj2 − ϑ12ϑj1)₊, (ϑj1 − ϑ12ϑj2)₊)"""
    s1, s2 = ctx.S
    t12 = ctx.T[s1][s2]
    best, where = 0 * t12, None
    for j in ctx.Sc:
        t1, t2 = ctx.T[j][s1], ctx.T[j][s2]
        for value in (rational.positive_part(t2 - t12 * t1), rational.positive_part(t1 - t12 * t2)):
            if value > best:
                best, where = value, j
    return _two_by_two_margin(ctx, "iii_second_step", ctx.one - t12 * t12 - best, where)


def _mixed_pair_report(ctx: _SupportContext, s1: int, s2: int) -> ConditionReport:
    """s1 自由、s2 非负时第二步的闭式条件"""
    t12 = ctx.T[s1][s2]
    best, where = 0 * t12, None
    for j in ctx.Sc:
        t1, t2 = ctx.T[j][s1], ctx.T[j][s2]
        after_first = t2 - t12 * t1
        terms = [abs(after_first) if ctx.kinds[j] == ABS else rational.positive_part(after_first),
                 abs(t1 - t12 * t2)]
        for value in terms:
            if value > best:
                best, where = value, j
    return _two_by_two_margin(ctx, "iii_second_step", ctx.one - t12 * t12 - best, where)


def _determinant_reports(ctx: _SupportContext) -> List[ConditionReport]:
    """|S| = 3 非负情形的三个蕴含式"""
    M = ctx.rows(ctx.S, ctx.S)
    det = rational.determinant(M)
    reports = []
    for a, b, c in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
        t_ab = M[a][b]
        delta_ac = M[a][c] - M[a][b] * M[c][b]
        delta_bc = M[b][c] - M[b][a] * M[c][a]
        base = ctx.one - t_ab * t_ab
        hypothesis = MarginValue.of(base - min(delta_ac, delta_bc), ctx.band)
        rhs, where = 0 * det, None
        for i in ctx.Sc:
            row = ctx.T[i]
            value = rational.positive_part(row[ctx.S[c]] * base - row[ctx.S[a]] * delta_ac
                                           - row[ctx.S[b]] * delta_bc)
            if value > rhs:
                rhs, where = value, i
        conclusion = MarginValue.of(det - rhs, ctx.band)
        condition_id = f"iv_pair{_set_label([ctx.S[a], ctx.S[b]])}"
        margins = {'hypothesis': hypothesis, 'conclusion': conclusion}
        if hypothesis.state is MarginState.NEGATIVE:
            reports.append(ConditionReport(condition_id, Verdict.HOLDS, None, margins, binding=True,
                                           necessary=True, note="前提不成立，蕴含式自动成立"))
            continue
        verdict = _verdict_of(conclusion)
        witness = None
        if verdict is Verdict.FAILS:
            witness = {'index': None if where is None else where + 1, 'det': det, 'rhs': rhs}
        reports.append(ConditionReport(condition_id, verdict, witness, margins, binding=True, necessary=True))
    return reports


def _proper_subsets(items: Sequence[int]):
    for size in range(len(items)):
        for subset in combinations(items, size):
            yield list(subset)


def _run_tasks(tasks: List[Callable[[], Any]], max_workers: int = 1) -> List[Any]:
    """并发执行互相独立的检查，结果按任务顺序返回"""
    if max_workers <= 1 or len(tasks) <= 1:
        return [task() for task in tasks]
    results: List[Any] = [None] * len(tasks)
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_index = {executor.submit(task): index for index, task in enumerate(tasks)}
        for future in as_completed(future_to_index):
            results[future_to_index[future]] = future.result()
    return results


def _flatten(results: List[Any]) -> List[ConditionReport]:
    flat: List[ConditionReport] = []
    for item in results:
        if isinstance(item, list):
            flat.extend(item)
        else:
            flat.append(item)
    return flat


def _select_case(ctx: _SupportContext) -> Tuple[str, str]:
    s_kinds = {ctx.kinds[s] for s in ctx.S}
    active = s_kinds | {ctx.kinds[j] for j in ctx.Sc}
    size = len(ctx.S)
    if active == {ABS}:
        if size <= 2:
            return "a", NECESSARY_AND_SUFFICIENT
        return ("b" if size == 3 else "free_sampled"), SUFFICIENT
    if active == {PLUS}:
        if size == 2:
            return "c", NECESSARY_AND_SUFFICIENT
        if size == 3:
            return "d", NECESSARY_AND_SUFFICIENT
        return "e", SUFFICIENT
    if size == 2 and s_kinds == {ABS, PLUS}:
        return "f", NECESSARY_AND_SUFFICIENT
    return "g", SUFFICIENT


def _aggregate(reports: Sequence[ConditionReport], label: str) -> Verdict:
    if any(r.necessary and r.verdict is Verdict.FAILS for r in reports):
        return Verdict.FAILS
    if all(r.verdict is Verdict.HOLDS for r in reports if r.binding):
        return Verdict.HOLDS
    if label == NECESSARY_AND_SUFFICIENT:
        return Verdict.FAILS
    return Verdict.UNDECIDED_SAMPLED


def check_fixed_support(A, S: Sequence[int], P: ConstraintModel, mode: str = "float",
                        policy: Optional[NumericPolicy] = None,
                        theta: Optional[List[List[Any]]] = None,
                        n_samples: Optional[int] = None, seed: int = 0,
                        max_workers: int = 1) -> SupportCertificate:
    """
    固定支撑 S 上的恢复条件检查

    按约束锥的坐标类型分派：
        全自由 |S| ≤ 2 → (a)，|S| = 3 → (b)，更大 → 采样；
        全非负 |S| = 2 → (c)，|S| = 3 → (d)，其余 → (e)；
        混合 |S| = 2 且一自由一非负 → (f)，其余 → (g)。
    I− 坐标通过 Gram 符号翻转化为 I+，Sᶜ 中的 I0 坐标不可被选中而被略去

    Args:
        A: 测量矩阵（单位列）
        S: 支撑（0 起）
        P: 盒锥约束
        mode: float 或 rational
        policy: 数值策略
        theta: 预先给定的 Gram 表
        n_samples: 采样恢复检查的次数，None 时仅在自由 |S| ≥ 3 情形使用默认值
        seed: 采样种子
        max_workers: 并发检查线程数

    Returns:
        SupportCertificate

    Raises:
        UnsupportedCombinationError: 约束不是盒锥或 S 含冻结坐标
        BudgetExceededError: 一般情形 |S| 超过枚举上限
    """
    policy = get_policy(policy)
    matrix = as_matrix(A)
    try:
        classification = classify_cone(P)
    except (NotBoxProductError, NotAConeError) as e:
        raise UnsupportedCombinationError(f"固定支撑检查只支持盒锥约束: {e}",
                                          {'constraint': P.type_name}) from e
    if P.n != matrix.n:
        raise InputFormatError(f"矩阵列数 {matrix.n} 与约束维数 {P.n} 不一致")
    support = _validate_support(S, matrix.n)
    frozen = [s for s in support if classification.kind_of(s) == "zero"]
    if frozen:
        raise UnsupportedCombinationError(f"支撑含冻结坐标 {_one_based(frozen)}",
                                          {'frozen': _one_based(frozen)})

    table = theta if theta is not None else gram_table(matrix, mode)
    if len(table) != matrix.n:
        raise InputFormatError(f"Gram 表维数 {len(table)} 与列数 {matrix.n} 不一致")
    exact = rational.matrix_is_exact(table)
    signs = [-1 if classification.kind_of(i) == "minus" else 1 for i in range(matrix.n)]
    T = [[signs[i] * signs[j] * table[i][j] for j in range(matrix.n)] for i in range(matrix.n)]
    Sc = [j for j in range(matrix.n) if j not in support and classification.kind_of(j) != "zero"]
    kinds = {i: (ABS if classification.kind_of(i) == "free" else PLUS) for i in range(matrix.n)}
    ctx = _SupportContext(T, support, Sc, kinds, exact, policy)

    case, label = _select_case(ctx)
    if case in ("e", "g") and len(support) > MAX_GENERAL_SUPPORT:
        raise BudgetExceededError(f"|S| = {len(support)} 超过一般情形上限 {MAX_GENERAL_SUPPORT}",
                                  {'support_size': len(support)})
    logger.info(f"固定支撑检查: S = {_one_based(support)}, 情形 ({case}), {label}, 模式 {mode}")

    notes: List[str] = []
    # 情形 (f) 中 s1 为自由坐标、s2 为非负坐标
    s1, s2 = (support + support)[:2]
    if case == "f" and kinds[s1] != ABS:
        s1, s2 = s2, s1
    first = _coherence_report(ctx, s1, s2) if case in ("c", "f") else _rank_report(ctx)
    reports = [first]
    if first.verdict is Verdict.FAILS:
        notes.append("Gram 子矩阵非正定，其余条件未计算")
        return SupportCertificate(tuple(support), case, label, mode, reports,
                                  _aggregate(reports, label), notes)

    tasks: List[Callable[[], Any]] = []
    if case == "a":
        tasks.append(lambda: _dominance_report(ctx, [], "ii_dominance", necessary=True))
        tasks.append(lambda: _erc_report(ctx, binding=False))
    elif case in ("b", "free_sampled"):
        tasks.append(lambda: _erc_report(ctx, binding=True))
        tasks.append(lambda: _dominance_report(ctx, [], "claim_step1", binding=False, necessary=True))
        samples = DEFAULT_RECOVERY_SAMPLES if n_samples is None else n_samples
        if samples > 0:
            tasks.append(lambda: recovery_by_sampling(matrix, support, P, samples, seed, policy))
        notes.append("ERC 对 |S| ≥ 3 只是充分条件")
    elif case == "c":
        tasks.append(lambda: _dominance_report(ctx, [], "ii_dominance", necessary=True))
        tasks.append(lambda: _plus_pair_report(ctx))
    elif case == "d":
        tasks.append(lambda: _dominance_report(ctx, [], "ii_dominance", necessary=True))
        for k in support:
            tasks.append(lambda k=k: _dominance_report(ctx, [k], f"iii_schur{_set_label([k])}",
                                                       necessary=True))
        tasks.append(lambda: _determinant_reports(ctx))
    elif case == "f":
        tasks.append(lambda: _dominance_report(ctx, [], "ii_dominance", necessary=True))
        tasks.append(lambda: _mixed_pair_report(ctx, s1, s2))
    else:
        for L in _proper_subsets(support):
            tasks.append(lambda L=L: _dominance_report(ctx, L, f"subset_dominance{_set_label(L)}"))

    if label == SUFFICIENT and case in ("e", "g") and n_samples:
        tasks.append(lambda: recovery_by_sampling(matrix, support, P, n_samples, seed, policy))

    reports.extend(_flatten(_run_tasks(tasks, max_workers)))
    verdict = _aggregate(reports, label)
    logger.info(f"固定支撑检查完成: {verdict.value}（{len(reports)} 项条件）")
    return SupportCertificate(tuple(support), case, label, mode, reports, verdict, notes)


def recovery_by_sampling(A, S: Sequence[int], P: ConstraintModel, n_samples: int = DEFAULT_RECOVERY_SAMPLES,
                         seed: int = 0, policy: Optional[NumericPolicy] = None,
                         magnitude: Tuple[float, float] = (0.1, 2.0),
                         config: Optional[PursuitConfig] = None) -> ConditionReport:
    """
    在支撑 S 上随机取 z，用分支枚举验证精确恢复

    符号按锥分类取：自由坐标随机符号，I+ 为正，I− 为负

    Returns:
        发现失败时为 Fails（witness 为 z），否则为 UndecidedSampled
    """
    policy = get_policy(policy)
    matrix = as_matrix(A)
    classification = classify_cone(P)
    support = _validate_support(S, matrix.n)
    rng = np.random.default_rng(seed)
    low, high = magnitude
    for trial in range(n_samples):
        z = np.zeros(matrix.n)
        for s in support:
            kind = classification.kind_of(s)
            if kind == "zero":
                raise UnsupportedCombinationError(f"支撑含冻结坐标 {s + 1}", {'frozen': [s + 1]})
            if kind == "plus":
                sign = 1.0
            elif kind == "minus":
                sign = -1.0
            else:
                sign = float(rng.choice((-1.0, 1.0)))
            z[s] = sign * rng.uniform(low, high)
        verdict = verify_exact_recovery(matrix, z, P, config, policy)
        if not (verdict.support_recovered and verdict.vector_recovered):
            logger.info(f"采样第 {trial + 1} 次发现恢复失败")
            witness = {'z': z.tolist(), 'support_recovered': verdict.support_recovered,
                       'vector_recovered': verdict.vector_recovered}
            return ConditionReport("recovery_sampled", Verdict.FAILS, witness, binding=False, necessary=True,
                                   details={'samples': trial + 1})
    return ConditionReport("recovery_sampled", Verdict.UNDECIDED_SAMPLED, binding=False, necessary=True,
                           details={'samples': n_samples},
                           note="未发现恢复失败；采样结果不构成证明")


# ============== 条件 (H) ==============

def condition_H_margin(A, P: ConstraintModel, u, J: Sequence[int],
                       policy: Optional[NumericPolicy] = None) -> ConditionReport:
    """
    单个 (u, J) 的严格支配裕量 min_{j∉supp(u)} g*_j − min_{j∈supp(u)∖J} g*_j

    Args:
        A: 测量矩阵
        P: 凸约束
        u: 稀疏向量（∈ P）
        J: supp(u) 的真子集（0 起）
        policy: 数值策略

    Returns:
        ConditionReport，margins['margin'] 为裕量，witness 含受限解 v
    """
    policy = get_policy(policy)
    matrix = as_matrix(A)
    u = np.asarray(u, dtype=float).reshape(-1)
    support = [int(i) for i in np.flatnonzero(u)]
    J = sorted(set(int(j) for j in J))
    if not set(J) < set(support):
        raise InputFormatError(f"J = {_one_based(J)} 不是 supp(u) = {_one_based(support)} 的真子集")
    y = matrix @ u
    v = solve_restricted(matrix, y, P, J, policy).x
    scores = score_all(matrix, y, P, v, policy)
    inside = [scores[j].g_star for j in support if j not in J]
    outside = [scores[j].g_star for j in range(matrix.n) if j not in support]
    residual = y - matrix @ v
    band = policy.boundary_band * max(1.0, float(residual @ residual))
    inside_min = min(inside)
    if not outside:
        margin = MarginValue(math.inf, MarginState.POSITIVE)
    else:
        margin = MarginValue.of(min(outside) - inside_min, band)
    witness = {'u': u.tolist(), 'J': _one_based(J), 'v': v.tolist()}
    details = {'inside_min': inside_min, 'outside_min': min(outside) if outside else None}
    return ConditionReport("condition_H", _verdict_of(margin), witness, {'margin': margin}, details=details)


def condition_H_falsify(A, P: ConstraintModel, K: int, n_samples: Optional[int] = None, seed: int = 0,
                        policy: Optional[NumericPolicy] = None,
                        support: Optional[Sequence[int]] = None) -> ConditionReport:
    """
    随机采样 u ∈ Σ_K ∩ P 并枚举 J ⊊ supp(u) 寻找条件 (H) 的违例

    Args:
        A: 测量矩阵
        P: 盒约束乘积或加权单纯形
        K: 稀疏度
        n_samples: 采样数，默认取设置中的 falsify_samples
        seed: 随机种子
        policy: 数值策略
        support: 给定时只在该支撑上采样

    Returns:
        Fails（witness 为 (u, J, v)）或 UndecidedSampled；边界情形计入 details['boundary_hits']
    """
    policy = get_policy(policy)
    matrix = as_matrix(A)
    conic_hull(P)
    if n_samples is None:
        n_samples = SettingsManager().falsify_samples
    if not 1 <= K <= matrix.n:
        raise InputFormatError(f"稀疏度 K = {K} 超出 [1, {matrix.n}]")
    rng = np.random.default_rng(seed)
    fixed = None if support is None else _validate_support(support, matrix.n)

    worst: Optional[MarginValue] = None
    boundary_hits = 0
    subsets = 0
    for trial in range(n_samples):
        if fixed is None:
            size = int(rng.integers(1, K + 1))
            chosen = sorted(int(i) for i in rng.choice(matrix.n, size=size, replace=False))
        else:
            chosen = fixed
        u = coordinate_project(P.sample_member(rng), chosen)
        supp = [int(i) for i in np.flatnonzero(u)]
        if not supp:
            continue
        for J in _proper_subsets(supp):
            subsets += 1
            report = condition_H_margin(matrix, P, u, J, policy)
            margin = report.numeric_margins['margin']
            if worst is None or margin.value < worst.value:
                worst = margin
            if margin.state is MarginState.BOUNDARY:
                boundary_hits += 1
            elif margin.state is MarginState.NEGATIVE:
                logger.info(f"第 {trial + 1} 次采样发现条件 (H) 违例")
                report.condition_id = "condition_H_falsify"
                report.details.update({'samples': trial + 1, 'subsets_checked': subsets})
                return report

    margins = {'min_margin': worst} if worst is not None else {}
    if boundary_hits:
        logger.warning(f"条件 (H) 采样中 {boundary_hits} 个 (u, J) 落在边界带内")
    return ConditionReport("condition_H_falsify", Verdict.UNDECIDED_SAMPLED, None, margins,
                           details={'samples': n_samples, 'subsets_checked': subsets,
                                    'boundary_hits': boundary_hits},
                           note="未发现严格违例；采样结果不构成证明")


# ============== 恢复常数 ==============

@dataclass
class RecoveryConstants:
    """类 RIP 常数 δ̂_K 与类 ROP 常数 θ̂_K"""
    K: int
    delta_hat: float
    theta_hat: float
    theta_hat_literal: float
    classification: Optional[ConeClassification]
    satisfied: bool
    margin: float
    delta_at_least_one: bool = False
    worst_support: Tuple[int, ...] = ()
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'K': self.K,
            'delta_hat': "ReportedAtLeastOne" if self.delta_at_least_one else self.delta_hat,
            'theta_hat': self.theta_hat,
            'theta_hat_literal': self.theta_hat_literal,
            'classification': None if self.classification is None else self.classification.to_dict(),
            'satisfied': self.satisfied,
            'margin': self.margin,
            'worst_support': _one_based(self.worst_support),
            'notes': list(self.notes)
        }


def _require_unit_columns(matrix: MeasurementMatrix) -> None:
    if not matrix.has_unit_columns(1e-9):
        norms = np.linalg.norm(matrix.entries, axis=0)
        raise InputFormatError("恢复常数要求单位列，请先归一化",
                               {'max_deviation': float(np.max(np.abs(norms - 1.0)))})


def theta_hat_maximizer(A, K: int, classification: Optional[ConeClassification] = None) -> Tuple[int, np.ndarray]:
    """
    取到 θ̂_K 的下标 j 与方向 x（x_i = ϑ_ij，i 取 ϑ²_ij 最大的 K 个）

    在该 x 处 |⟨Ax, A_j⟩| / ‖x‖ = θ̂_K
    """
    matrix = as_matrix(A)
    theta = gram(matrix).theta
    n = matrix.n
    best_value, best_j, best_x = -1.0, 0, np.zeros(n)
    for j in range(n):
        if classification is not None and classification.kind_of(j) == "zero":
            continue
        others = [i for i in range(n) if i != j]
        top = sorted(others, key=lambda i: -theta[i, j] ** 2)[:K]
        value = float(np.sqrt(sum(theta[i, j] ** 2 for i in top)))
        if value > best_value:
            x = np.zeros(n)
            x[top] = theta[top, j]
            best_value, best_j, best_x = value, j, x
    return best_j, best_x


def recovery_constants(A, K: int, classification: Optional[ConeClassification] = None,
                       policy: Optional[NumericPolicy] = None,
                       budget: int = CONSTANTS_BUDGET) -> RecoveryConstants:
    """
    枚举计算 δ̂_K 与 θ̂_K 并判定 1 − δ̂_K > √K·θ̂_K

    θ̂_K 中 j 取在 supp(x) 之外，闭式为 max_j √(前 K 大的 ϑ²_ij 之和, i ≠ j)；
    j 可落在 supp(x) 内的字面值另行给出

    Args:
        A: 单位列测量矩阵
        K: 稀疏度
        classification: 锥分类，I0 坐标不参与 θ̂
        policy: 数值策略
        budget: C(N, K) 枚举上限

    Raises:
        BudgetExceededError: 支撑枚举数超出上限
    """
    policy = get_policy(policy)
    matrix = as_matrix(A)
    _require_unit_columns(matrix)
    n = matrix.n
    if not 1 <= K <= n:
        raise InputFormatError(f"稀疏度 K = {K} 超出 [1, {n}]")
    count = math.comb(n, K)
    if count > budget:
        raise BudgetExceededError(f"C({n}, {K}) = {count} 超过枚举上限 {budget}",
                                  {'supports': count, 'budget': budget})

    theta = gram(matrix).theta
    min_eig, worst = support_eigen_extremes(theta, K)
    delta_hat = max(0.0, 1.0 - min_eig)
    at_least_one = min_eig <= policy.rank_tol

    selectable = [j for j in range(n) if classification is None or classification.kind_of(j) != "zero"]
    theta_hat, literal = 0.0, 0.0
    for j in selectable:
        squares = sorted((theta[i, j] ** 2 for i in range(n) if i != j), reverse=True)
        theta_hat = max(theta_hat, math.sqrt(sum(squares[:K])))
        literal = max(literal, math.sqrt(1.0 + sum(squares[:K - 1])))

    margin = (1.0 - delta_hat) - math.sqrt(K) * theta_hat
    satisfied = (not at_least_one) and margin > 0
    notes = ["θ̂_K 的 j 取在 supp(x) 之外；字面定义允许 j ∈ supp(x)，其值见 theta_hat_literal"]
    if at_least_one:
        notes.append("存在奇异支撑，δ̂_K ≥ 1")
    logger.info(f"恢复常数 K = {K}: δ̂ = {delta_hat:.6g}, θ̂ = {theta_hat:.6g}, 满足 = {satisfied}")
    return RecoveryConstants(K, delta_hat, theta_hat, literal, classification, satisfied, margin,
                             at_least_one, tuple(worst), notes)


# ============== 实例证书 ==============

INDEX_SET_NAMES = ("L0", "L_minus_a", "L_plus_b", "L_zero_a", "L_zero_b", "L_uc")


@dataclass
class InstanceCertificate:
    """单个 (u, J) 上的六类下标划分与两个条件"""
    u: np.ndarray
    J: Tuple[int, ...]
    v: np.ndarray
    index_sets: Dict[str, Tuple[int, ...]]
    t_tilde: Dict[int, float]
    shrink_factor: float
    lhs: float
    rhs: float
    c1_satisfied: bool
    c2_satisfied: bool
    constants: RecoveryConstants
    note: str = "C2 依赖 (u, v)，只能逐实例验证"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'u': self.u.tolist(),
            'J': _one_based(self.J),
            'v': self.v.tolist(),
            'index_sets': {name: _one_based(indices) for name, indices in self.index_sets.items()},
            't_tilde': {str(j + 1): value for j, value in self.t_tilde.items()},
            'shrink_factor': self.shrink_factor,
            'lhs': self.lhs,
            'rhs': self.rhs,
            'c1_satisfied': self.c1_satisfied,
            'c2_satisfied': self.c2_satisfied,
            'constants': self.constants.to_dict(),
            'note': self.note
        }


def _classify_index(t: float, a: float, b: float, tol: float) -> str:
    a_zero = abs(a) <= tol
    b_zero = abs(b) <= tol
    if a_zero and b_zero:
        return "L0"
    if a < -tol and t < a:
        return "L_minus_a"
    if b > tol and t > b:
        return "L_plus_b"
    if a_zero:
        return "L_zero_a"
    if b_zero:
        return "L_zero_b"
    return "L_uc"


def instance_certificate(A, P: ConstraintModel, u, J: Sequence[int], K: Optional[int] = None,
                         policy: Optional[NumericPolicy] = None) -> InstanceCertificate:
    """
    对 j ∈ supp(u)∖J 按 t̃_j 与区间端点 a_j(v)、b_j(v) 的关系分为六类，并评估 C1、C2

    Args:
        A: 单位列测量矩阵
        P: 不可约凸约束
        u: 稀疏向量（∈ P）
        J: supp(u) 的真子集
        K: 稀疏度，默认 |supp(u)|
        policy: 数值策略

    Raises:
        NotIrreducibleError: P 存在冻结坐标
    """
    policy = get_policy(policy)
    matrix = as_matrix(A)
    classification, irreducible = conic_hull(P)
    if not irreducible:
        raise NotIrreducibleError(f"约束存在冻结坐标 {_one_based(classification.I0)}",
                                  {'frozen': _one_based(classification.I0)})
    u = np.asarray(u, dtype=float).reshape(-1)
    support = [int(i) for i in np.flatnonzero(u)]
    J = sorted(set(int(j) for j in J))
    if not set(J) < set(support):
        raise InputFormatError(f"J = {_one_based(J)} 不是 supp(u) = {_one_based(support)} 的真子集")
    K = K or len(support)

    y = matrix @ u
    v = solve_restricted(matrix, y, P, J, policy).x
    sets: Dict[str, List[int]] = {name: [] for name in INDEX_SET_NAMES}
    t_values: Dict[int, float] = {}
    shrink = 1.0
    for j in support:
        if j in J:
            continue
        score = coordinate_score(matrix, y, P, v, j, policy)
        a, b, t = score.interval.lo_float, score.interval.hi_float, score.t_tilde
        name = _classify_index(t, a, b, policy.comparison_tol)
        sets[name].append(j)
        t_values[j] = t
        if name == "L_minus_a":
            shrink = min(shrink, math.sqrt(a / t))
        elif name == "L_plus_b":
            shrink = min(shrink, math.sqrt(b / t))

    c1 = (not sets["L0"] and all(u[j] > 0 for j in sets["L_zero_a"])
          and all(u[j] < 0 for j in sets["L_zero_b"]))
    constants = recovery_constants(matrix, K, classification, policy)
    lhs = (1.0 - constants.delta_hat) * shrink
    rhs = math.sqrt(K) * constants.theta_hat
    c2 = (not constants.delta_at_least_one) and lhs > rhs
    return InstanceCertificate(u, tuple(J), v, {k: tuple(vals) for k, vals in sets.items()}, t_values,
                               shrink, lhs, rhs, bool(c1), bool(c2), constants)


# ============== 扰动稳定性 ==============

@dataclass
class PerturbationPoint:
    eta: float
    trials: int
    satisfied_fraction: float
    mean_margin: float
    min_margin: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'eta': self.eta,
            'trials': self.trials,
            'satisfied_fraction': self.satisfied_fraction,
            'mean_margin': self.mean_margin,
            'min_margin': self.min_margin
        }


@dataclass
class PerturbationReport:
    """扰动下常数不等式的保持情况"""
    base: RecoveryConstants
    lipschitz_constant: float
    certified_radius: float
    points: List[PerturbationPoint]
    largest_stable_eta: float
    radius_ok: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            'base': self.base.to_dict(),
            'lipschitz_constant': self.lipschitz_constant,
            'certified_radius': self.certified_radius,
            'points': [p.to_dict() for p in self.points],
            'largest_stable_eta': self.largest_stable_eta,
            'radius_ok': self.radius_ok
        }


def perturbation_stability(A, K: int, classification: Optional[ConeClassification] = None,
                           eta_grid: Optional[Sequence[float]] = None, trials: int = 50, seed: int = 0,
                           policy: Optional[NumericPolicy] = None) -> PerturbationReport:
    """
    在谱范数为 η 的随机扰动下重新计算恢复常数

    扰动后重新做列归一化；认证半径为 1e-6·margin/c，c = 2‖A‖₂ + 1，且总被加入网格

    Args:
        A: 单位列测量矩阵
        K: 稀疏度
        classification: 锥分类
        eta_grid: 扰动幅度网格
        trials: 每个网格点的随机扰动次数
        seed: 随机种子
        policy: 数值策略

    Returns:
        PerturbationReport
    """
    policy = get_policy(policy)
    matrix = as_matrix(A)
    base = recovery_constants(matrix, K, classification, policy)
    c = 2.0 * matrix.spectral_norm() + 1.0
    radius = 1e-6 * base.margin / c if base.satisfied else 0.0
    if not base.satisfied:
        logger.warning("未扰动矩阵不满足常数不等式，扰动分析只作参考")
    grid = list(eta_grid) if eta_grid is not None else [0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1]
    grid = sorted(set(float(eta) for eta in grid) | {radius})

    points: List[PerturbationPoint] = []
    for index, eta in enumerate(grid):
        count = 1 if eta == 0.0 else trials
        margins, satisfied = [], 0
        for trial in range(count):
            if eta == 0.0:
                constants = base
            else:
                rng = np.random.default_rng([seed, index, trial])
                noise = rng.standard_normal(matrix.shape)
                noise *= eta / np.linalg.norm(noise, 2)
                perturbed, _ = normalize_columns(matrix.entries + noise)
                constants = recovery_constants(perturbed, K, classification, policy)
            margins.append(constants.margin)
            satisfied += int(constants.satisfied)
        points.append(PerturbationPoint(eta, count, satisfied / count, float(np.mean(margins)),
                                        float(np.min(margins))))

    largest = 0.0
    for point in points:
        if point.satisfied_fraction < 1.0:
            break
        largest = point.eta
    radius_ok = base.satisfied and largest >= radius
    logger.info(f"扰动稳定性: 认证半径 {radius:.3e}, 最大稳定 η = {largest:.3e}")
    return PerturbationReport(base, c, radius, points, largest, radius_ok)


# ============== 反例复现 ==============

_RADICANDS = (1, 2, 6, 10)
_THIRD = Fraction(1, 3)
# 反例矩阵第 k 行为 √r_k 乘以有理系数
_RADICAL_COEFFICIENTS = [
    [Fraction(1), -_THIRD, -_THIRD, _THIRD],
    [Fraction(0), 2 * _THIRD, -_THIRD, _THIRD],
    [Fraction(0), Fraction(0), _THIRD, Fraction(-1, 12)],
    [Fraction(0), Fraction(0), Fraction(0), Fraction(1, 4)],
]

COUNTEREXAMPLE_SUPPORT = (0, 1, 2)


def _w(*ones: int) -> List[Fraction]:
    return [Fraction(1) if k in ones else Fraction(0) for k in range(1, 7)]


# (σ, u, w)：u + D_σ H w = 0，H 的列为 h4 ± h_i
COUNTEREXAMPLE_WITNESSES: List[Tuple[Tuple[int, int, int], List[Fraction], List[Fraction]]] = [
    ((1, 1, 1), [Fraction(0), Fraction(0), _THIRD], _w(2, 4)),
    ((1, 1, -1), [Fraction(0), Fraction(0), Fraction(1, 2)], _w(5)),
    ((1, -1, 1), [2 * _THIRD, 2 * _THIRD, Fraction(1, 6)], _w(2)),
    ((-1, 1, 1), [2 * _THIRD, 2 * _THIRD, Fraction(1, 6)], _w(4)),
    ((1, -1, -1), [Fraction(0), Fraction(0), Fraction(1, 2)], _w(5)),
    ((-1, 1, -1), [Fraction(0), Fraction(0), Fraction(1, 2)], _w(5)),
    ((-1, -1, 1), [4 * _THIRD, Fraction(0), Fraction(5, 6)], _w(1)),
    ((-1, -1, -1), [Fraction(0), Fraction(0), Fraction(1, 2)], _w(5)),
]


@dataclass
class ItemResult:
    item: int
    title: str
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {'item': self.item, 'title': self.title, 'passed': self.passed,
                'details': _jsonable(self.details)}


@dataclass
class CounterexampleReport:
    """内置反例的逐项复现结果"""
    items: List[ItemResult]
    grid_points: int
    extension: Tuple[int, int]

    @property
    def all_passed(self) -> bool:
        return all(item.passed for item in self.items)

    def item(self, number: int) -> ItemResult:
        for entry in self.items:
            if entry.item == number:
                return entry
        raise KeyError(number)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'all_passed': self.all_passed,
            'grid_points': self.grid_points,
            'extension': list(self.extension),
            'items': [item.to_dict() for item in self.items]
        }


def radical_gram(coefficients: List[List[Fraction]], radicands: Sequence[int]) -> List[List[Fraction]]:
    """第 k 行为 √r_k·c_k 的矩阵的精确 Gram：Σ_k r_k c_ki c_kj"""
    n = len(coefficients[0])
    return [[sum((r * row[i] * row[j] for r, row in zip(radicands, coefficients)), Fraction(0))
             for j in range(n)] for i in range(n)]


def _extended_radical_form(m: int, n: int) -> Tuple[List[List[Fraction]], List[int]]:
    columns = [[row[j] for row in _RADICAL_COEFFICIENTS] for j in range(4)]
    for sign in extension_signs(n):
        columns.append([sign * value for value in columns[3]])
    coefficients = [[columns[j][k] for j in range(n)] for k in range(4)]
    coefficients += [[Fraction(0)] * n for _ in range(m - 4)]
    return coefficients, list(_RADICANDS) + [1] * (m - 4)


def _h_vectors(T: List[List[Fraction]], S: Sequence[int]) -> List[List[Fraction]]:
    return [[T[i][s] for s in S] for i in range(len(T))]


def _witness_matrix(h: List[List[Fraction]]) -> List[List[Fraction]]:
    """H = [h4+h1, h4−h1, h4+h2, h4−h2, h4+h3, h4−h3]，行为坐标"""
    q = h[3]
    columns = []
    for i in range(3):
        columns.append([a + b for a, b in zip(q, h[i])])
        columns.append([a - b for a, b in zip(q, h[i])])
    return rational.transpose(columns)


def counterexample_grid(grid_points: int) -> List[np.ndarray]:
    """每个坐标取 ±linspace(0.1, 2, (grid_points − 1)/2)，去掉含 0 的点"""
    half = max(1, (grid_points - 1) // 2)
    magnitudes = np.linspace(0.1, 2.0, half)
    values = np.concatenate([-magnitudes[::-1], magnitudes])
    return [np.array(point) for point in product(values, repeat=3)]


def _grid_recovery(matrix: MeasurementMatrix, grid_points: int, policy: NumericPolicy) -> Dict[str, Any]:
    P = BoxProduct.free(matrix.n)
    failures = []
    points = counterexample_grid(grid_points)
    for point in points:
        z = np.zeros(matrix.n)
        z[list(COUNTEREXAMPLE_SUPPORT)] = point
        verdict = verify_exact_recovery(matrix, z, P, policy=policy)
        if not (verdict.support_recovered and verdict.vector_recovered):
            failures.append(point.tolist())
    return {'points': len(points), 'failures': failures[:10], 'failure_count': len(failures)}


def _structure_items(matrix: MeasurementMatrix, T_exact: List[List[Fraction]],
                     coefficients: List[List[Fraction]], radicands: Sequence[int], grid_points: int,
                     policy: NumericPolicy) -> List[ItemResult]:
    """第 1–6 项，对原反例与扩展矩阵共用"""
    S = list(COUNTEREXAMPLE_SUPPORT)
    Sc = [j for j in range(matrix.n) if j not in S]
    items = []

    deviation = float(np.max(np.abs(np.linalg.norm(matrix.entries, axis=0) - 1.0)))
    items.append(ItemResult(1, "unit_columns", matrix.has_unit_columns(1e-12), {'max_deviation': deviation}))

    radical = radical_gram(coefficients, radicands)
    scales = np.sqrt(np.array(radicands, dtype=float))[:, None]
    entry_gap = float(np.max(np.abs(matrix.entries - scales * rational.to_float_matrix(coefficients))))
    float_gap = float(np.max(np.abs(gram(matrix).theta - rational.to_float_matrix(T_exact))))
    items.append(ItemResult(2, "exact_gram", radical == T_exact and entry_gap <= 1e-14 and float_gap <= 1e-12,
                            {'entry_deviation': entry_gap, 'float_deviation': float_gap}))

    erc_exact = erc_norm(None, S, theta=T_exact, policy=policy)
    erc_float = erc_norm(matrix, S, policy=policy)
    inverse = rational.inverse(rational.submatrix(T_exact, S, S))
    expected_inverse = [[Fraction(3, 4) * (2 if i == j else 1) for j in range(3)] for i in range(3)]
    items.append(ItemResult(3, "erc_equals_one",
                            erc_exact == 1 and abs(erc_float - 1.0) <= 1e-12 and inverse == expected_inverse,
                            {'erc_exact': erc_exact, 'erc_float': erc_float, 'support_gram_inverse': inverse}))

    h = _h_vectors(T_exact, S)
    H = _witness_matrix(h[:3] + [h[Sc[0]]])
    checks = []
    for sigma, u, w in COUNTEREXAMPLE_WITNESSES:
        printed = lp.verify_motzkin_witness(H, sigma, u, w)
        solved = lp.motzkin_alternative(H, list(sigma), policy)
        checks.append({'sigma': list(sigma), 'printed_witness': printed, 'solver_witness': solved.exists_witness})
    items.append(ItemResult(4, "motzkin_witnesses",
                            all(c['printed_witness'] and c['solver_witness'] for c in checks),
                            {'patterns': checks}))

    claim = motzkin_dominance(h[:3], [ABS] * 3, [h[j] for j in Sc], [ABS] * len(Sc),
                              sign_free=range(3), policy=policy, condition_id="claim_step1")
    items.append(ItemResult(5, "claim_step1_dominance", claim.verdict is Verdict.HOLDS, claim.to_dict()))

    grid_details = _grid_recovery(matrix, grid_points, policy)
    items.append(ItemResult(6, "grid_recovery", grid_details['failure_count'] == 0, grid_details))
    return items


def _tie_item(T_exact: List[List[Fraction]]) -> ItemResult:
    """v = (1,1,0) 处四个评分相等；第二、三步的闭式值"""
    S = list(COUNTEREXAMPLE_SUPPORT)
    h = _h_vectors(T_exact, S)
    v = [Fraction(1), Fraction(1), Fraction(0)]
    tie = [abs(rational.dot(h[i], v)) for i in range(4)]
    tie_ok = all(value == Fraction(2, 3) for value in tie)

    z2 = Fraction(3, 2)
    v2 = [Fraction(0), z2, -z2]
    step2 = [abs(rational.dot(h[i], v2)) for i in (1, 2, 3)]
    step2_ok = step2 == [Fraction(4, 3) * z2, Fraction(4, 3) * z2, Fraction(5, 6) * z2]

    # J2 = {1, 2} 重拟合后误差方向为 z3·(1/2, 1/2, 1)
    block = rational.submatrix(T_exact, [0, 1], [0, 1])
    rhs = [-T_exact[0][2], -T_exact[1][2]]
    d = rational.matvec(rational.inverse(block), rhs)
    step3_ok = d == [Fraction(1, 2), Fraction(1, 2)]
    return ItemResult(7, "tie_and_step_values", tie_ok and step2_ok and step3_ok,
                      {'tie_scores': tie, 'step2_scores': step2, 'step3_direction': d + [Fraction(1)]})


def verify_counterexample(grid_points: Optional[int] = None, extension: Tuple[int, int] = (6, 6),
                          extension_grid_points: Optional[int] = None,
                          policy: Optional[NumericPolicy] = None,
                          raise_on_failure: bool = True) -> CounterexampleReport:
    """
    复现内置 4×4 反例的全部断言

    (1) 单位列；(2) 精确 Gram 由根式形式精确重算；(3) ERC 恰为 1；(4) 8 个符号模式的见证；
    (5) 支撑内评分支配；(6) 网格上全分支精确恢复；(7) 并列与后续步的闭式值；
    (8) 扩展矩阵重复 (1)–(6)

    Args:
        grid_points: 每坐标网格点数（含 0 后为奇数），默认取设置中的 counterexample_grid
        extension: 扩展矩阵尺寸 (m, N)
        extension_grid_points: 扩展矩阵的网格点数，默认与 grid_points 相同
        policy: 数值策略
        raise_on_failure: 为 True 时第一项失败即抛出

    Raises:
        CertificationAssertionError: 某项检查失败且 raise_on_failure
    """
    policy = get_policy(policy)
    if grid_points is None:
        grid_points = SettingsManager().counterexample_grid
    extension_grid_points = extension_grid_points or grid_points

    base = counterexample_matrix()
    T_exact = counterexample_gram_exact()
    items = _structure_items(base, T_exact, _RADICAL_COEFFICIENTS, _RADICANDS, grid_points, policy)
    items.append(_tie_item(T_exact))

    m, n = extension
    extended = extended_counterexample(m, n)
    coefficients, radicands = _extended_radical_form(m, n)
    sub_items = _structure_items(extended, extended_counterexample_gram_exact(n), coefficients, radicands,
                                 extension_grid_points, policy)
    items.append(ItemResult(8, "extension", all(i.passed for i in sub_items),
                            {'shape': [m, n], 'items': [i.to_dict() for i in sub_items]}))

    report = CounterexampleReport(items, grid_points, (m, n))
    for item in items:
        if item.passed:
            logger.info(f"反例第 {item.item} 项 {item.title}: 通过")
            continue
        logger.error(f"反例第 {item.item} 项 {item.title}: 未通过")
        if raise_on_failure:
            raise CertificationAssertionError(item.item, item.title, {'details': _jsonable(item.details)})
    return report
