"""
线性可行性求解器 - Bland 规则的一阶段单纯形法

同时支持 float 与 fractions.Fraction，后者用于 Gram 层面的精确证书
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from .error_handler import InfeasibleSystemError, NumericallyAmbiguousError, NotConvergedError, InputFormatError
from . import rational
from ..utils.settings import NumericPolicy, get_policy

logger = logging.getLogger(__name__)

FLOAT_PIVOT_EPSILON = 1e-12


@dataclass
class LPStatistics:
    """单次求解的统计信息"""
    rows: int = 0
    cols: int = 0
    pivots: int = 0
    phase1_value: float = 0.0
    exact: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'rows': self.rows,
            'cols': self.cols,
            'pivots': self.pivots,
            'phase1_value': self.phase1_value,
            'exact': self.exact
        }


@dataclass
class FeasibilitySystem:
    """
    可行性系统 E x = d, x ≥ 0

    strict_group 非空时附加 Σ_{i∈group} x_i ≥ 1（齐次系统的归一化）
    """
    E: List[List[Any]]
    d: List[Any]
    strict_group: Optional[List[int]] = None
    exact: Optional[bool] = None

    def __post_init__(self):
        self.E = [list(row) for row in self.E]
        self.d = list(self.d)
        if len(self.E) != len(self.d):
            raise InputFormatError(f"E 有 {len(self.E)} 行，d 长度为 {len(self.d)}")
        widths = {len(row) for row in self.E}
        if len(widths) > 1:
            raise InputFormatError("E 的各行长度不一致")
        if self.exact is None:
            self.exact = rational.matrix_is_exact(self.E) and all(rational.is_exact(v) for v in self.d)
        if self.strict_group is not None:
            self.strict_group = sorted(set(self.strict_group))
            if any(not 0 <= i < self.q for i in self.strict_group):
                raise InputFormatError(f"严格分组下标越界: {self.strict_group}")

    @property
    def p(self) -> int:
        return len(self.E)

    @property
    def q(self) -> int:
        if self.E:
            return len(self.E[0])
        return 0

    def residual(self, x: Sequence[Any]) -> float:
        """‖Ex − d‖∞"""
        values = [abs(float(rational.dot(row, x) - di)) for row, di in zip(self.E, self.d)]
        return max(values, default=0.0)


class SimplexTableau:
    """稠密一阶段单纯形表，每行一个人工变量"""

    def __init__(self, E: List[List[Any]], d: List[Any], exact: bool, max_pivots: Optional[int] = None):
        """
        初始化单纯形表

        Args:
            E: 约束矩阵
            d: 右端项
            exact: 是否使用有理数运算
            max_pivots: 转轴次数上限
        """
        self.logger = logging.getLogger(__name__)
        self.exact = exact
        convert = Fraction if exact else float
        self.epsilon = 0 if exact else FLOAT_PIVOT_EPSILON
        self.m = len(E)
        self.n_original = len(E[0]) if E else 0
        self.n = self.n_original + self.m
        self.rows: List[List[Any]] = []
        self.rhs: List[Any] = []
        for i, (row, di) in enumerate(zip(E, d)):
            row = [convert(v) for v in row]
            di = convert(di)
            # 右端项取非负
            if di < 0:
                row = [-v for v in row]
                di = -di
            artificial = [convert(1) if k == i else convert(0) for k in range(self.m)]
            self.rows.append(row + artificial)
            self.rhs.append(di)
        self.basis = [self.n_original + i for i in range(self.m)]
        self.cost = [-sum((self.rows[i][j] for i in range(self.m)), convert(0)) for j in range(self.n_original)]
        self.cost += [convert(0)] * self.m
        self.objective = sum(self.rhs, convert(0))
        self.pivots = 0
        self.max_pivots = max_pivots or 50 * (self.m + self.n + 1)

    def pivot(self, i: int, j: int) -> None:
        """以 (i, j) 为主元转轴"""
        piv = self.rows[i][j]
        self.rows[i] = [v / piv for v in self.rows[i]]
        self.rhs[i] = self.rhs[i] / piv
        for k in range(self.m):
            if k != i:
                factor = self.rows[k][j]
                if factor != 0:
                    self.rows[k] = [a - factor * b for a, b in zip(self.rows[k], self.rows[i])]
                    self.rhs[k] = self.rhs[k] - factor * self.rhs[i]
                    if not self.exact and self.rhs[k] < 0 and self.rhs[k] > -self.epsilon:
                        self.rhs[k] = 0.0
        cj = self.cost[j]
        self.objective = self.objective + cj * self.rhs[i]
        self.cost = [c - cj * b for c, b in zip(self.cost, self.rows[i])]
        self.basis[i] = j
        self.pivots += 1

    def bland_step(self) -> str:
        """
        Bland 规则单步

        Returns:
            'optimal' 或 'go_on'
        """
        entering = next((j for j in range(self.n) if self.cost[j] < -self.epsilon), None)
        if entering is None:
            return 'optimal'
        candidates = [(self.rhs[i] / self.rows[i][entering], self.basis[i], i)
                      for i in range(self.m) if self.rows[i][entering] > self.epsilon]
        if not candidates:
            # 一阶段目标有下界 0，不会无界
            return 'optimal'
        _, _, leaving = min(candidates)
        self.pivot(leaving, entering)
        return 'go_on'

    def run(self) -> Any:
        """
        执行一阶段

        Returns:
            一阶段最优值 Σ 人工变量

        Raises:
            NotConvergedError: 转轴次数超过上限
        """
        while self.bland_step() == 'go_on':
            if self.pivots > self.max_pivots:
                raise NotConvergedError(f"单纯形转轴超过 {self.max_pivots} 次",
                                        {'pivots': self.pivots})
        return self.objective

    def primal_solution(self) -> List[Any]:
        """原始变量取值（非基变量为 0）"""
        zero = Fraction(0) if self.exact else 0.0
        x = [zero] * self.n_original
        for i, var in enumerate(self.basis):
            if var < self.n_original:
                value = self.rhs[i]
                x[var] = value if value > 0 else zero
        return x


def _augment(system: FeasibilitySystem):
    """把严格分组约束写成等式行 Σ x_group − s = 1"""
    if not system.strict_group:
        return system.E, system.d
    one = Fraction(1) if system.exact else 1.0
    zero = one * 0
    E = [list(row) + [zero] for row in system.E]
    group_row = [one if j in system.strict_group else zero for j in range(system.q)] + [-one]
    E.append(group_row)
    return E, list(system.d) + [one]


def feasible_eq_nonneg(system: FeasibilitySystem, policy: Optional[NumericPolicy] = None) -> List[Any]:
    """
    求 E x = d, x ≥ 0（及严格分组）的可行解

    Args:
        system: 可行性系统
        policy: 数值策略（决定模糊带）

    Returns:
        见证向量 x（长度 q）

    Raises:
        InfeasibleSystemError: 一阶段最优值超过模糊带上界（精确模式下为正）
        NumericallyAmbiguousError: 一阶段最优值落在模糊带内
    """
    policy = get_policy(policy)
    E, d = _augment(system)
    if system.q == 0:
        if any(di != 0 for di in system.d):
            raise InfeasibleSystemError(0.0, {"reason": "无变量且右端非零"})
        return []
    tableau = SimplexTableau(E, d, bool(system.exact))
    value = tableau.run()
    stats = LPStatistics(rows=tableau.m, cols=tableau.n, pivots=tableau.pivots,
                         phase1_value=float(value), exact=bool(system.exact))
    logger.debug(f"一阶段单纯形完成: {stats.to_dict()}")

    low, high = policy.ambiguity_band
    if system.exact:
        if value > 0:
            raise InfeasibleSystemError(float(value))
    else:
        if value > high:
            raise InfeasibleSystemError(float(value))
        if value >= low:
            raise NumericallyAmbiguousError(float(value), (low, high))

    witness = tableau.primal_solution()[:system.q]
    residual = system.residual(witness)
    if residual > policy.comparison_tol:
        logger.warning(f"可行解残差 {residual:.3e} 超过比较容差")
    return witness


@dataclass
class MotzkinResult:
    """u + D_σ H w = 0 的择一性结果"""
    sigma: List[int]
    exists_witness: bool
    u: Optional[List[Any]] = None
    w: Optional[List[Any]] = None
    phase1_value: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        def show(values):
            if values is None:
                return None
            return [str(v) if isinstance(v, Fraction) else float(v) for v in values]
        return {
            'sigma': list(self.sigma),
            'exists_witness': self.exists_witness,
            'u': show(self.u),
            'w': show(self.w),
            'phase1_value': self.phase1_value
        }


def signed_rows(H: List[List[Any]], sigma: Sequence[int]) -> List[List[Any]]:
    """D_σ H：第 i 行乘以 σ_i"""
    return [[s * v for v in row] for s, row in zip(sigma, H)]


def motzkin_alternative(H: List[List[Any]], sigma: Sequence[int],
                        policy: Optional[NumericPolicy] = None) -> MotzkinResult:
    """
    判定是否存在 0 ≠ u ≥ 0, w ≥ 0 使 u + D_σ H w = 0

    Args:
        H: p×q 矩阵（列表形式，可为 Fraction）
        sigma: 长度 p 的符号向量（±1）
        policy: 数值策略

    Returns:
        MotzkinResult，存在时附带 (u, w)

    Raises:
        NumericallyAmbiguousError: 一阶段最优值落在模糊带内
    """
    p = len(H)
    if len(sigma) != p:
        raise InputFormatError(f"符号向量长度 {len(sigma)} 与 H 行数 {p} 不一致")
    exact = rational.matrix_is_exact(H)
    one = Fraction(1) if exact else 1.0
    zero = one * 0
    DH = signed_rows(H, sigma)
    E = [[one if k == i else zero for k in range(p)] + list(DH[i]) for i in range(p)]
    system = FeasibilitySystem(E, [zero] * p, strict_group=list(range(p)), exact=exact)
    try:
        x = feasible_eq_nonneg(system, policy)
    except InfeasibleSystemError as e:
        return MotzkinResult(list(sigma), False, phase1_value=float(e.phase1_value))
    return MotzkinResult(list(sigma), True, u=x[:p], w=x[p:], phase1_value=0.0)


def strict_alternative(G: List[List[Any]], C: Optional[List[List[Any]]] = None,
                       policy: Optional[NumericPolicy] = None) -> MotzkinResult:
    """
    带额外严格列的 Motzkin 择一性

    判定是否存在 (u, β) ≥ 0 且非零、w ≥ 0 使 u + C β + G w = 0；
    它与 {v > 0, Cᵀv > 0, Gᵀv ≥ 0} 恰有一个成立

    Args:
        G: p×q 矩阵（非严格列）
        C: p×c 矩阵（严格列），为空时退化为 motzkin_alternative
        policy: 数值策略

    Returns:
        MotzkinResult，u 为 (u, β) 拼接，w 为非严格乘子；sigma 固定为全 +1
    """
    p = len(G)
    C = C if C is not None else [[] for _ in range(p)]
    exact = rational.matrix_is_exact(G) and rational.matrix_is_exact(C)
    one = Fraction(1) if exact else 1.0
    zero = one * 0
    c = len(C[0]) if C and C[0] else 0
    E = [[one if k == i else zero for k in range(p)] + list(C[i]) + list(G[i]) for i in range(p)]
    system = FeasibilitySystem(E, [zero] * p, strict_group=list(range(p + c)), exact=exact)
    try:
        x = feasible_eq_nonneg(system, policy)
    except InfeasibleSystemError as e:
        return MotzkinResult([1] * p, False, phase1_value=float(e.phase1_value))
    return MotzkinResult([1] * p, True, u=x[:p + c], w=x[p + c:], phase1_value=0.0)


def positive_dual_solution(G: List[List[Any]], policy: Optional[NumericPolicy] = None,
                           strict: Optional[List[List[Any]]] = None) -> Optional[List[Any]]:
    """
    求 v ≥ 1 使 Gᵀ v ≥ 0（Motzkin 择一性的另一侧）

    系统是齐次的，v ≥ 1 等价于 v > 0；给定 strict 时另要求 strictᵀ v ≥ 1

    Args:
        G: p×q 矩阵
        policy: 数值策略
        strict: p×c 矩阵，其列需与 v 严格正相关

    Returns:
        v，不存在时返回 None
    """
    p = len(G)
    strict = strict if strict is not None else [[] for _ in range(p)]
    exact = rational.matrix_is_exact(G) and rational.matrix_is_exact(strict)
    one = Fraction(1) if exact else 1.0
    zero = one * 0
    Gt = rational.transpose(G) if G and G[0] else []
    St = rational.transpose(strict) if strict and strict[0] else []
    rows = [(list(g), zero) for g in Gt] + [(list(s), one) for s in St]
    q = len(rows)
    # v = v' + 1，gᵀv' − s = rhs − gᵀ1
    E = [row + [(-one if k == i else zero) for k in range(q)] for i, (row, _) in enumerate(rows)]
    d = [rhs - sum(row, zero) for row, rhs in rows]
    if not E:
        return [one] * p
    system = FeasibilitySystem(E, d, exact=exact)
    try:
        x = feasible_eq_nonneg(system, policy)
    except InfeasibleSystemError:
        return None
    return [x[i] + one for i in range(p)]


def verify_motzkin_witness(H: List[List[Any]], sigma: Sequence[int], u: Sequence[Any], w: Sequence[Any],
                           tol: float = 1e-9) -> bool:
    """
    用新的运算重新验证见证 (u, w)

    精确输入时容差为 0
    """
    exact = rational.matrix_is_exact(H) and all(rational.is_exact(v) for v in list(u) + list(w))
    tol = 0 if exact else tol
    if any(v < -tol for v in u) or any(v < -tol for v in w):
        return False
    if not sum(u) > tol:
        return False
    DH = signed_rows(H, sigma)
    combo = [ui + rational.dot(row, w) for ui, row in zip(u, DH)]
    return all(abs(v) <= tol for v in combo)


def verify_dual_solution(G: List[List[Any]], v: Sequence[Any], tol: float = 1e-9) -> bool:
    """验证 v > 0 且 Gᵀv ≥ 0"""
    exact = rational.matrix_is_exact(G) and all(rational.is_exact(x) for x in v)
    tol = 0 if exact else tol
    if any(x <= 0 for x in v):
        return False
    products = rational.matvec(rational.transpose(G), v)
    return all(val >= -tol for val in products)
