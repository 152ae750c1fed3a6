"""
约束集模型 - 坐标投影可容许（CP-admissible）集合的表示与代数运算

支持盒约束乘积（涵盖 ℝᴺ、ℝᴺ₊、各类锥和有界盒）、加权单纯形、
二维非凸演示集合，以及作为反例的超平面
"""
import json
import logging
import math
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from functools import total_ordering
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .error_handler import (
    NotMemberError, NotAConeError, NotBoxProductError, InputFormatError
)
from ..utils.settings import NumericPolicy, get_policy

logger = logging.getLogger(__name__)


# ============== 扩展实数 ==============

class BoundKind(Enum):
    """端点类型"""
    NEG_INF = "neg_inf"
    FINITE = "finite"
    POS_INF = "pos_inf"


_KIND_ORDER = {BoundKind.NEG_INF: -1, BoundKind.FINITE: 0, BoundKind.POS_INF: 1}


@total_ordering
@dataclass(frozen=True, eq=False)
class ExtendedReal:
    """扩展实数 ℝ ∪ {±∞}，全序 −∞ < 有限值 < +∞"""
    kind: BoundKind = BoundKind.FINITE
    value: float = 0.0

    def __post_init__(self):
        if self.kind != BoundKind.FINITE:
            object.__setattr__(self, 'value', 0.0)
        elif math.isnan(self.value):
            raise InputFormatError("端点不能为 NaN")
        elif math.isinf(self.value):
            object.__setattr__(self, 'kind', BoundKind.POS_INF if self.value > 0 else BoundKind.NEG_INF)
            object.__setattr__(self, 'value', 0.0)
        else:
            object.__setattr__(self, 'value', float(self.value))

    @classmethod
    def finite(cls, value: float) -> 'ExtendedReal':
        return cls(BoundKind.FINITE, float(value))

    @classmethod
    def pos_inf(cls) -> 'ExtendedReal':
        return cls(BoundKind.POS_INF)

    @classmethod
    def neg_inf(cls) -> 'ExtendedReal':
        return cls(BoundKind.NEG_INF)

    @classmethod
    def of(cls, value: Union['ExtendedReal', float, int, str]) -> 'ExtendedReal':
        """从数值、字符串或扩展实数构造"""
        if isinstance(value, ExtendedReal):
            return value
        if isinstance(value, str):
            return cls.from_json(value)
        return cls(BoundKind.FINITE, float(value))

    @classmethod
    def from_json(cls, value: Any) -> 'ExtendedReal':
        """
        解析 JSON 端点

        Args:
            value: 数值或 "inf" / "-inf" / "+inf" 字符串

        Returns:
            扩展实数
        """
        if isinstance(value, str):
            text = value.strip().lower()
            if text in ("inf", "+inf", "infinity", "+infinity"):
                return cls.pos_inf()
            if text in ("-inf", "-infinity"):
                return cls.neg_inf()
            try:
                return cls.finite(float(text))
            except ValueError:
                raise InputFormatError(f"无法解析端点 {value!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InputFormatError(f"无法解析端点 {value!r}")
        return cls(BoundKind.FINITE, float(value))

    def to_json(self) -> Union[float, str]:
        if self.kind == BoundKind.POS_INF:
            return "inf"
        if self.kind == BoundKind.NEG_INF:
            return "-inf"
        return self.value

    @property
    def is_finite(self) -> bool:
        return self.kind == BoundKind.FINITE

    @property
    def is_zero(self) -> bool:
        return self.is_finite and self.value == 0.0

    def to_float(self) -> float:
        if self.kind == BoundKind.POS_INF:
            return math.inf
        if self.kind == BoundKind.NEG_INF:
            return -math.inf
        return self.value

    def shift(self, delta: float) -> 'ExtendedReal':
        """有限端点平移，无穷端点不变"""
        if not self.is_finite:
            return self
        return ExtendedReal.finite(self.value + delta)

    def scaled(self, factor: float) -> 'ExtendedReal':
        """乘以非零常数，负数时无穷端点变号"""
        if factor == 0:
            raise InputFormatError("缩放因子不能为 0")
        if self.is_finite:
            return ExtendedReal.finite(self.value * factor)
        if factor > 0:
            return self
        return -self

    def __neg__(self) -> 'ExtendedReal':
        if self.kind == BoundKind.POS_INF:
            return ExtendedReal.neg_inf()
        if self.kind == BoundKind.NEG_INF:
            return ExtendedReal.pos_inf()
        return ExtendedReal.finite(-self.value)

    def __add__(self, other: 'ExtendedReal') -> 'ExtendedReal':
        other = ExtendedReal.of(other)
        if self.is_finite and other.is_finite:
            return ExtendedReal.finite(self.value + other.value)
        kinds = {self.kind, other.kind} - {BoundKind.FINITE}
        if len(kinds) > 1:
            raise InputFormatError("+∞ 与 −∞ 相加无定义")
        return ExtendedReal(kinds.pop())

    def _key(self) -> Tuple[int, float]:
        return (_KIND_ORDER[self.kind], self.value)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float)) and not isinstance(other, bool):
            other = ExtendedReal(BoundKind.FINITE, float(other))
        if not isinstance(other, ExtendedReal):
            return NotImplemented
        return self._key() == other._key()

    def __lt__(self, other) -> bool:
        if isinstance(other, (int, float)) and not isinstance(other, bool):
            other = ExtendedReal(BoundKind.FINITE, float(other))
        if not isinstance(other, ExtendedReal):
            return NotImplemented
        return self._key() < other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        if self.kind == BoundKind.POS_INF:
            return "+∞"
        if self.kind == BoundKind.NEG_INF:
            return "-∞"
        return repr(self.value)


ZERO = ExtendedReal.finite(0.0)


@dataclass(frozen=True)
class ExtendedInterval:
    """闭区间 [lo, hi]，端点可为无穷；truncated 表示由非凸并集截取的凸片段"""
    lo: ExtendedReal
    hi: ExtendedReal
    truncated: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'lo', ExtendedReal.of(self.lo))
        object.__setattr__(self, 'hi', ExtendedReal.of(self.hi))
        if self.hi < self.lo:
            raise InputFormatError(f"区间下端点 {self.lo!r} 大于上端点 {self.hi!r}")

    @classmethod
    def from_floats(cls, lo: float, hi: float, truncated: bool = False) -> 'ExtendedInterval':
        return cls(ExtendedReal.of(lo), ExtendedReal.of(hi), truncated)

    @classmethod
    def real_line(cls) -> 'ExtendedInterval':
        return cls(ExtendedReal.neg_inf(), ExtendedReal.pos_inf())

    @classmethod
    def zero(cls) -> 'ExtendedInterval':
        return cls(ZERO, ZERO)

    @property
    def lo_float(self) -> float:
        return self.lo.to_float()

    @property
    def hi_float(self) -> float:
        return self.hi.to_float()

    @property
    def is_zero(self) -> bool:
        return self.lo.is_zero and self.hi.is_zero

    def contains(self, t: float, tol: float = 0.0) -> bool:
        return self.lo_float - tol <= t <= self.hi_float + tol

    def clamp(self, t: float) -> float:
        """把 t 截断到区间内"""
        return float(min(max(t, self.lo_float), self.hi_float))

    def to_dict(self) -> Dict[str, Any]:
        return {'lo': self.lo.to_json(), 'hi': self.hi.to_json(), 'truncated': self.truncated}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExtendedInterval':
        return cls(ExtendedReal.from_json(data['lo']), ExtendedReal.from_json(data['hi']),
                   bool(data.get('truncated', False)))


def _step_interval(lo: float, hi: float, truncated: bool = False) -> ExtendedInterval:
    """步长区间，容差范围内的越界收回到 0"""
    return ExtendedInterval.from_floats(min(lo, 0.0), max(hi, 0.0), truncated)


# ============== 约束模型 ==============

class ConstraintModel(ABC):
    """约束集合 P 的抽象基类，0 ∈ P"""

    type_name = "abstract"

    @property
    @abstractmethod
    def n(self) -> int:
        """环境维数 N"""
        pass

    @abstractmethod
    def contains(self, x: Sequence[float], tol: Optional[float] = None) -> bool:
        """
        判断 x ∈ P（每个定义不等式加性容差）

        Args:
            x: 长度 N 的向量
            tol: 容差，默认取数值策略的 membership_tol

        Returns:
            是否属于 P
        """
        pass

    @abstractmethod
    def _interval(self, v: np.ndarray, j: int) -> ExtendedInterval:
        pass

    @abstractmethod
    def coordinate_range(self, i: int) -> ExtendedInterval:
        """第 i 个坐标在 P 中可取的值域 {x_i : x ∈ P}"""
        pass

    @abstractmethod
    def sample_member(self, rng: np.random.Generator) -> np.ndarray:
        """随机抽取一个成员"""
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass

    @property
    def is_convex(self) -> bool:
        return True

    def _tol(self, tol: Optional[float]) -> float:
        return get_policy().membership_tol if tol is None else tol

    def interval_at(self, v: Sequence[float], j: int,
                    policy: Optional[NumericPolicy] = None) -> ExtendedInterval:
        """
        坐标步长区间 I_j(v) = {t : v + t·e_j ∈ P}

        Args:
            v: P 中的点
            j: 坐标下标（0 起）
            policy: 数值策略

        Returns:
            含 0 的闭区间

        Raises:
            NotMemberError: v 不属于 P
        """
        v = np.asarray(v, dtype=float)
        tol = get_policy(policy).membership_tol
        if not self.contains(v, tol):
            raise NotMemberError(f"点 {v.tolist()} 不属于约束集 {self.type_name}",
                                 {'point': v.tolist(), 'constraint': self.type_name})
        if not 0 <= j < self.n:
            raise InputFormatError(f"坐标下标 {j + 1} 超出范围 1..{self.n}")
        return self._interval(v, j)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({json.dumps(self.to_dict(), ensure_ascii=False)})"


class BoxProduct(ConstraintModel):
    """盒约束乘积 Π [lower_i, upper_i]，lower_i ≤ 0 ≤ upper_i"""

    type_name = "box"

    def __init__(self, lower: Iterable, upper: Iterable):
        """
        初始化盒约束

        Args:
            lower: 下端点序列（数值、"-inf" 或 ExtendedReal）
            upper: 上端点序列
        """
        self.lower: Tuple[ExtendedReal, ...] = tuple(ExtendedReal.of(v) for v in lower)
        self.upper: Tuple[ExtendedReal, ...] = tuple(ExtendedReal.of(v) for v in upper)
        if len(self.lower) != len(self.upper) or not self.lower:
            raise InputFormatError(f"上下端点长度不一致或为空: {len(self.lower)} / {len(self.upper)}")
        for i, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if lo > ZERO or hi < ZERO:
                raise InputFormatError(f"第 {i + 1} 个坐标区间 [{lo!r}, {hi!r}] 不含 0")
        self.lower_array = np.array([v.to_float() for v in self.lower])
        self.upper_array = np.array([v.to_float() for v in self.upper])
        self.lower_array.flags.writeable = False
        self.upper_array.flags.writeable = False

    @classmethod
    def free(cls, n: int) -> 'BoxProduct':
        """ℝᴺ"""
        return cls([ExtendedReal.neg_inf()] * n, [ExtendedReal.pos_inf()] * n)

    @classmethod
    def nonneg(cls, n: int) -> 'BoxProduct':
        """ℝᴺ₊"""
        return cls([ZERO] * n, [ExtendedReal.pos_inf()] * n)

    @classmethod
    def from_bounds(cls, lower: Sequence, upper: Sequence) -> 'BoxProduct':
        return cls(lower, upper)

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def is_cone(self) -> bool:
        """所有端点都属于 {0, ±∞}"""
        return all((lo.is_zero or not lo.is_finite) and (hi.is_zero or not hi.is_finite)
                   for lo, hi in zip(self.lower, self.upper))

    @property
    def is_free(self) -> bool:
        return all(not lo.is_finite and not hi.is_finite for lo, hi in zip(self.lower, self.upper))

    def contains(self, x: Sequence[float], tol: Optional[float] = None) -> bool:
        x = np.asarray(x, dtype=float)
        tol = self._tol(tol)
        if x.shape != (self.n,):
            return False
        return bool(np.all(x >= self.lower_array - tol) and np.all(x <= self.upper_array + tol))

    def _interval(self, v: np.ndarray, j: int) -> ExtendedInterval:
        lo = self.lower[j].shift(-v[j])
        hi = self.upper[j].shift(-v[j])
        return ExtendedInterval(min(lo, ZERO), max(hi, ZERO))

    def coordinate_range(self, i: int) -> ExtendedInterval:
        return ExtendedInterval(self.lower[i], self.upper[i])

    def sample_member(self, rng: np.random.Generator) -> np.ndarray:
        lo = np.maximum(self.lower_array, -2.0)
        hi = np.minimum(self.upper_array, 2.0)
        return rng.uniform(lo, hi)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'type': self.type_name,
            'lower': [v.to_json() for v in self.lower],
            'upper': [v.to_json() for v in self.upper]
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoxProduct):
            return NotImplemented
        return self.lower == other.lower and self.upper == other.upper

    def __hash__(self) -> int:
        return hash((self.lower, self.upper))


class WeightedSimplex(ConstraintModel):
    """加权单纯形 {x ≥ 0, weightsᵀx ≤ cap}"""

    type_name = "simplex"

    def __init__(self, weights: Sequence[float], cap: float = 1.0):
        self.weights = np.array(weights, dtype=float).reshape(-1)
        self.cap = float(cap)
        if self.weights.size == 0 or np.any(self.weights <= 0) or not np.all(np.isfinite(self.weights)):
            raise InputFormatError(f"单纯形权重必须为正数: {self.weights.tolist()}")
        if not self.cap > 0 or math.isinf(self.cap):
            raise InputFormatError(f"单纯形容量必须为正数: {cap}")
        self.weights.flags.writeable = False

    @property
    def n(self) -> int:
        return self.weights.size

    def contains(self, x: Sequence[float], tol: Optional[float] = None) -> bool:
        x = np.asarray(x, dtype=float)
        tol = self._tol(tol)
        if x.shape != (self.n,):
            return False
        return bool(np.all(x >= -tol) and float(self.weights @ x) <= self.cap + tol)

    def _interval(self, v: np.ndarray, j: int) -> ExtendedInterval:
        slack = self.cap - float(self.weights @ v)
        return _step_interval(-v[j], slack / self.weights[j])

    def coordinate_range(self, i: int) -> ExtendedInterval:
        return ExtendedInterval.from_floats(0.0, self.cap / self.weights[i])

    def sample_member(self, rng: np.random.Generator) -> np.ndarray:
        shares = rng.dirichlet(np.ones(self.n + 1))[:self.n]
        return self.cap * shares / self.weights

    def project(self, z: Sequence[float]) -> np.ndarray:
        return project_weighted_simplex(z, self.weights, self.cap)

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.type_name, 'weights': self.weights.tolist(), 'cap': self.cap}


class NonconvexDemo(ConstraintModel):
    """
    二维非凸演示集合 P = C ∪ Seg

    C = {x ≥ 0, x₂ ≤ 1, x₂² ≥ x₁}，Seg = {(x₁, 0) : 0 ≤ x₁ ≤ 1}
    """

    type_name = "nonconvex-demo"

    @property
    def n(self) -> int:
        return 2

    @property
    def is_convex(self) -> bool:
        return False

    def on_curve_branch(self, x: Sequence[float], tol: Optional[float] = None) -> bool:
        tol = self._tol(tol)
        x1, x2 = float(x[0]), float(x[1])
        return x1 >= -tol and -tol <= x2 <= 1 + tol and x2 * x2 >= x1 - tol

    def on_segment_branch(self, x: Sequence[float], tol: Optional[float] = None) -> bool:
        tol = self._tol(tol)
        x1, x2 = float(x[0]), float(x[1])
        return abs(x2) <= tol and -tol <= x1 <= 1 + tol

    def contains(self, x: Sequence[float], tol: Optional[float] = None) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (2,):
            return False
        return self.on_curve_branch(x, tol) or self.on_segment_branch(x, tol)

    def _interval(self, v: np.ndarray, j: int) -> ExtendedInterval:
        tol = self._tol(None)
        v1, v2 = float(v[0]), float(v[1])
        if j == 0:
            if abs(v2) <= tol:
                # 线段分支：x₁ ∈ [0, 1]
                return _step_interval(-v1, 1.0 - v1)
            return _step_interval(-v1, v2 * v2 - v1)
        # j == 1：可行集合为 {0} ∪ [√v₁, 1]，返回包含 v₂ 的凸片段
        if v1 <= tol:
            return _step_interval(-v2, 1.0 - v2)
        if abs(v2) <= tol:
            return _step_interval(-v2, -v2, truncated=True)
        root = math.sqrt(max(v1, 0.0))
        return _step_interval(max(-v2, root - v2), 1.0 - v2, truncated=True)

    def full_coordinate_set(self, v: Sequence[float], j: int) -> List[Tuple[float, float]]:
        """坐标方向上完整的可行 t 集合（凸片段列表）"""
        v1, v2 = float(v[0]), float(v[1])
        if j == 0:
            pieces = [(-v1, max(v2 * v2, 0.0) - v1)] if 0.0 <= v2 <= 1.0 else []
            if v2 == 0.0:
                pieces = [(-v1, 1.0 - v1)]
            return pieces
        if v1 < 0 or v1 > 1:
            return []
        if v1 == 0.0:
            return [(-v2, 1.0 - v2)]
        return [(-v2, -v2), (math.sqrt(v1) - v2, 1.0 - v2)]

    def coordinate_range(self, i: int) -> ExtendedInterval:
        return ExtendedInterval.from_floats(0.0, 1.0)

    def sample_member(self, rng: np.random.Generator) -> np.ndarray:
        if rng.random() < 0.5:
            return np.array([rng.uniform(0.0, 1.0), 0.0])
        x2 = rng.uniform(0.0, 1.0)
        return np.array([rng.uniform(0.0, x2 * x2), x2])

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.type_name}


class Hyperplane(ConstraintModel):
    """超平面 {x : dᵀx = 0}，不是坐标投影可容许集合（用作反例）"""

    type_name = "hyperplane"

    def __init__(self, normal: Sequence[float]):
        self.normal = np.array(normal, dtype=float).reshape(-1)
        if self.normal.size == 0 or not np.any(self.normal != 0):
            raise InputFormatError("超平面法向量不能为零")
        self.normal.flags.writeable = False

    @property
    def n(self) -> int:
        return self.normal.size

    def contains(self, x: Sequence[float], tol: Optional[float] = None) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            return False
        scale = 1.0 + float(np.linalg.norm(self.normal)) * float(np.linalg.norm(x))
        return abs(float(self.normal @ x)) <= self._tol(tol) * scale

    def _interval(self, v: np.ndarray, j: int) -> ExtendedInterval:
        if self.normal[j] != 0:
            return ExtendedInterval.zero()
        return ExtendedInterval.real_line()

    def coordinate_range(self, i: int) -> ExtendedInterval:
        others = np.count_nonzero(np.delete(self.normal, i))
        if self.normal[i] != 0 and others == 0:
            return ExtendedInterval.zero()
        return ExtendedInterval.real_line()

    def project(self, z: Sequence[float]) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        d = self.normal
        return z - (float(d @ z) / float(d @ d)) * d

    def sample_member(self, rng: np.random.Generator) -> np.ndarray:
        return self.project(rng.standard_normal(self.n))

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.type_name, 'normal': self.normal.tolist()}


# ============== 锥分类与分解 ==============

@dataclass(frozen=True)
class ConeClassification:
    """锥的坐标分类：自由 I1、非负 I+、非正 I−、冻结 I0"""
    I1: Tuple[int, ...] = ()
    Iplus: Tuple[int, ...] = ()
    Iminus: Tuple[int, ...] = ()
    I0: Tuple[int, ...] = ()

    def __post_init__(self):
        groups = [tuple(sorted(g)) for g in (self.I1, self.Iplus, self.Iminus, self.I0)]
        for name, group in zip(('I1', 'Iplus', 'Iminus', 'I0'), groups):
            object.__setattr__(self, name, group)
        flat = [i for g in groups for i in g]
        if len(flat) != len(set(flat)):
            raise InputFormatError("锥分类的下标集合必须互不相交")
        if flat and sorted(flat) != list(range(len(flat))):
            raise InputFormatError("锥分类的下标集合必须覆盖 0..N-1")

    @property
    def n(self) -> int:
        return len(self.I1) + len(self.Iplus) + len(self.Iminus) + len(self.I0)

    def kind_of(self, i: int) -> str:
        """坐标所属类别：free / plus / minus / zero"""
        if i in self.I1:
            return "free"
        if i in self.Iplus:
            return "plus"
        if i in self.Iminus:
            return "minus"
        return "zero"

    def to_box(self) -> BoxProduct:
        lower, upper = [], []
        for i in range(self.n):
            kind = self.kind_of(i)
            lower.append(ExtendedReal.neg_inf() if kind in ("free", "minus") else ZERO)
            upper.append(ExtendedReal.pos_inf() if kind in ("free", "plus") else ZERO)
        return BoxProduct(lower, upper)

    def to_dict(self) -> Dict[str, List[int]]:
        return {
            'I1': [i + 1 for i in self.I1],
            'Iplus': [i + 1 for i in self.Iplus],
            'Iminus': [i + 1 for i in self.Iminus],
            'I0': [i + 1 for i in self.I0]
        }


@dataclass(frozen=True)
class Decomposition:
    """P = W + K，W 为有界盒，K 为盒锥"""
    W: BoxProduct
    K: BoxProduct
    classification: ConeClassification = field(default_factory=ConeClassification)

    def split(self, z: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        """
        把 z ∈ P 拆分为 w + k

        Args:
            z: P 中的点

        Returns:
            (w, k)，w ∈ W，k ∈ K
        """
        z = np.asarray(z, dtype=float)
        w = np.zeros_like(z)
        for i in range(z.size):
            kind = self.classification.kind_of(i)
            if kind == "plus":
                w[i] = min(z[i], 0.0)
            elif kind == "minus":
                w[i] = max(z[i], 0.0)
            elif kind == "zero":
                w[i] = z[i]
        return w, z - w


def interval_at(P: ConstraintModel, v: Sequence[float], j: int,
                policy: Optional[NumericPolicy] = None) -> ExtendedInterval:
    """坐标步长区间 I_j(v)"""
    return P.interval_at(v, j, policy)


def contains(P: ConstraintModel, x: Sequence[float], tol: Optional[float] = None) -> bool:
    """成员判定"""
    return P.contains(x, tol)


def coordinate_project(x: Sequence[float], J: Iterable[int]) -> np.ndarray:
    """
    坐标投影 π_J(x)：保留 J 上的分量，其余为精确 0

    Args:
        x: 向量
        J: 下标集合（0 起）

    Returns:
        投影后的新向量
    """
    x = np.asarray(x, dtype=float)
    z = np.zeros_like(x)
    idx = sorted(set(J))
    if idx:
        z[idx] = x[idx]
    return z


def _require_box(P: ConstraintModel, operation: str) -> BoxProduct:
    if not isinstance(P, BoxProduct):
        raise NotBoxProductError(f"{operation} 只支持盒约束乘积，得到 {P.type_name}",
                                 {'constraint': P.type_name, 'operation': operation})
    return P


def classify_cone(P: ConstraintModel) -> ConeClassification:
    """
    盒锥坐标分类

    Raises:
        NotBoxProductError: P 不是盒约束乘积
        NotAConeError: 存在有限非零端点
    """
    box = _require_box(P, "classify_cone")
    groups: Dict[str, List[int]] = {'I1': [], 'Iplus': [], 'Iminus': [], 'I0': []}
    for i, (lo, hi) in enumerate(zip(box.lower, box.upper)):
        if (lo.is_finite and not lo.is_zero) or (hi.is_finite and not hi.is_zero):
            raise NotAConeError(f"第 {i + 1} 个坐标区间 [{lo!r}, {hi!r}] 含有限非零端点",
                                {'coordinate': i + 1})
        if not lo.is_finite and not hi.is_finite:
            groups['I1'].append(i)
        elif lo.is_zero and not hi.is_finite:
            groups['Iplus'].append(i)
        elif not lo.is_finite and hi.is_zero:
            groups['Iminus'].append(i)
        else:
            groups['I0'].append(i)
    return ConeClassification(**{k: tuple(v) for k, v in groups.items()})


def decompose(P: ConstraintModel) -> Decomposition:
    """
    盒约束分解 P = W + K

    每个坐标：ℝ → W {0}, K ℝ；[a,∞) → W [a,0], K ℝ₊；(−∞,b] → W [0,b], K ℝ₋；[a,b] → W [a,b], K {0}
    """
    box = _require_box(P, "decompose")
    w_lo, w_hi, k_lo, k_hi = [], [], [], []
    I1, Iplus, Iminus, I0 = [], [], [], []
    for i, (lo, hi) in enumerate(zip(box.lower, box.upper)):
        if not lo.is_finite and not hi.is_finite:
            w_lo.append(ZERO); w_hi.append(ZERO)
            k_lo.append(lo); k_hi.append(hi)
            I1.append(i)
        elif lo.is_finite and not hi.is_finite:
            w_lo.append(lo); w_hi.append(ZERO)
            k_lo.append(ZERO); k_hi.append(hi)
            Iplus.append(i)
        elif not lo.is_finite and hi.is_finite:
            w_lo.append(ZERO); w_hi.append(hi)
            k_lo.append(lo); k_hi.append(ZERO)
            Iminus.append(i)
        else:
            w_lo.append(lo); w_hi.append(hi)
            k_lo.append(ZERO); k_hi.append(ZERO)
            I0.append(i)
    classification = ConeClassification(tuple(I1), tuple(Iplus), tuple(Iminus), tuple(I0))
    return Decomposition(BoxProduct(w_lo, w_hi), BoxProduct(k_lo, k_hi), classification)


def _require_convex_variant(P: ConstraintModel, operation: str) -> None:
    if not isinstance(P, (BoxProduct, WeightedSimplex)):
        raise NotBoxProductError(f"{operation} 只支持盒约束乘积与加权单纯形，得到 {P.type_name}",
                                 {'constraint': P.type_name, 'operation': operation})


def conic_hull(P: ConstraintModel) -> Tuple[ConeClassification, bool]:
    """
    凸锥包 cone(P) 的坐标分类及不可约性

    Returns:
        (分类 L1/L+/L−/L0, 是否不可约即 L0 为空)
    """
    _require_convex_variant(P, "conic_hull")
    groups: Dict[str, List[int]] = {'I1': [], 'Iplus': [], 'Iminus': [], 'I0': []}
    for i in range(P.n):
        reach = P.coordinate_range(i)
        below = reach.lo < ZERO
        above = reach.hi > ZERO
        if below and above:
            groups['I1'].append(i)
        elif above:
            groups['Iplus'].append(i)
        elif below:
            groups['Iminus'].append(i)
        else:
            groups['I0'].append(i)
    classification = ConeClassification(**{k: tuple(v) for k, v in groups.items()})
    return classification, not classification.I0


def dimension(P: ConstraintModel) -> int:
    """dim(P) = max |supp(x)|，即坐标值域不为 {0} 的坐标个数"""
    _require_convex_variant(P, "dimension")
    return sum(1 for i in range(P.n) if not P.coordinate_range(i).is_zero)


def scale_box(P: ConstraintModel, factor: float) -> BoxProduct:
    """λP，λ < 0 时上下端点互换"""
    box = _require_box(P, "scale_box")
    if factor == 0:
        raise InputFormatError("缩放因子不能为 0")
    lower = [lo.scaled(factor) for lo in box.lower]
    upper = [hi.scaled(factor) for hi in box.upper]
    if factor < 0:
        lower, upper = upper, lower
    return BoxProduct(lower, upper)


def minkowski_sum_box(P: ConstraintModel, Q: ConstraintModel) -> BoxProduct:
    """两个盒约束的 Minkowski 和：端点逐项相加"""
    p = _require_box(P, "minkowski_sum_box")
    q = _require_box(Q, "minkowski_sum_box")
    if p.n != q.n:
        raise InputFormatError(f"维数不一致: {p.n} / {q.n}")
    return BoxProduct([a + b for a, b in zip(p.lower, q.lower)],
                      [a + b for a, b in zip(p.upper, q.upper)])


@dataclass
class AdmissibilityCheck:
    """抽样的坐标投影闭包检查结果"""
    admissible: bool
    samples_checked: int
    witness_point: Optional[List[float]] = None
    witness_indices: Optional[List[int]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'admissible': self.admissible,
            'samples_checked': self.samples_checked,
            'witness_point': self.witness_point,
            'witness_indices': [i + 1 for i in self.witness_indices] if self.witness_indices is not None else None
        }


def sample_admissibility(P: ConstraintModel, n_samples: int, rng: np.random.Generator,
                         policy: Optional[NumericPolicy] = None) -> AdmissibilityCheck:
    """
    抽样检验 π_J(P) ⊆ P

    Args:
        P: 约束集合
        n_samples: 抽样次数
        rng: 随机数生成器
        policy: 数值策略

    Returns:
        检查结果，失败时附带反例点与下标集合
    """
    tol = get_policy(policy).membership_tol
    for count in range(1, n_samples + 1):
        x = P.sample_member(rng)
        support = np.flatnonzero(x)
        J = [int(i) for i in support if rng.random() < 0.5]
        if not P.contains(coordinate_project(x, J), tol):
            logger.debug(f"第 {count} 次抽样发现投影闭包反例: J={J}")
            return AdmissibilityCheck(False, count, x.tolist(), J)
    return AdmissibilityCheck(True, n_samples)


def project_weighted_simplex(z: Sequence[float], weights: Sequence[float], cap: float) -> np.ndarray:
    """
    向 {x ≥ 0, wᵀx ≤ cap} 的精确欧氏投影（断点排序法）

    Args:
        z: 待投影向量
        weights: 正权重
        cap: 容量

    Returns:
        投影点
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(weights, dtype=float)
    clipped = np.maximum(z, 0.0)
    if float(w @ clipped) <= cap:
        return clipped
    positive = np.flatnonzero(z > 0)
    breakpoints = z[positive] / w[positive]
    order = positive[np.argsort(-breakpoints, kind='stable')]
    ratios = z[order] / w[order]
    acc_wz = 0.0
    acc_ww = 0.0
    lam = 0.0
    for k, idx in enumerate(order):
        acc_wz += w[idx] * z[idx]
        acc_ww += w[idx] * w[idx]
        lam = (acc_wz - cap) / acc_ww
        following = ratios[k + 1] if k + 1 < len(order) else 0.0
        if lam >= following:
            break
    return np.maximum(z - lam * w, 0.0)


# ============== 约束工厂 ==============

def _bound_list(data: Dict[str, Any], key: str) -> List[ExtendedReal]:
    values = data.get(key)
    if not isinstance(values, list):
        raise InputFormatError(f"约束字段 {key} 必须是数组")
    return [ExtendedReal.from_json(v) for v in values]


def _dimension_field(data: Dict[str, Any]) -> int:
    n = data.get('n')
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InputFormatError(f"约束字段 n 必须是正整数，得到 {n!r}")
    return n


class ConstraintFactory:
    """约束模型工厂：类型名 → 构造函数"""

    def __init__(self):
        self._builders: Dict[str, Callable[[Dict[str, Any]], ConstraintModel]] = {}

    def register_builder(self, type_name: str, builder: Callable[[Dict[str, Any]], ConstraintModel]) -> None:
        """
        注册约束构造函数

        Args:
            type_name: JSON 中的 type 字段
            builder: 接收 JSON 字典返回约束模型
        """
        self._builders[type_name] = builder

    def create(self, data: Dict[str, Any]) -> ConstraintModel:
        """
        按 JSON 字典构造约束模型

        Raises:
            InputFormatError: 类型未知或字段非法
        """
        if not isinstance(data, dict):
            raise InputFormatError("约束描述必须是 JSON 对象")
        type_name = str(data.get('type', '')).strip().lower()
        builder = self._builders.get(type_name)
        if builder is None:
            raise InputFormatError(f"未知约束类型 {type_name!r}，支持: {', '.join(self.get_supported_types())}",
                                   {'type': type_name})
        try:
            return builder(data)
        except (TypeError, ValueError, KeyError) as e:
            raise InputFormatError(f"约束 {type_name} 字段非法: {e}", {'type': type_name})

    def get_supported_types(self) -> List[str]:
        return list(self._builders.keys())


# 全局约束工厂实例
constraint_factory = ConstraintFactory()
constraint_factory.register_builder("box", lambda d: BoxProduct(_bound_list(d, 'lower'), _bound_list(d, 'upper')))
constraint_factory.register_builder("simplex", lambda d: WeightedSimplex(d['weights'], d.get('cap', 1.0)))
constraint_factory.register_builder("nonconvex-demo", lambda d: NonconvexDemo())
constraint_factory.register_builder("free", lambda d: BoxProduct.free(_dimension_field(d)))
constraint_factory.register_builder("nonneg", lambda d: BoxProduct.nonneg(_dimension_field(d)))
constraint_factory.register_builder("hyperplane", lambda d: Hyperplane(d['normal']))


def parse_constraint(data: Dict[str, Any]) -> ConstraintModel:
    """从 JSON 字典解析约束"""
    return constraint_factory.create(data)


def load_constraint(source: str) -> ConstraintModel:
    """
    从文件路径或内联 JSON 字符串加载约束

    Args:
        source: JSON 文件路径，或以 "{" 开头的 JSON 文本

    Returns:
        约束模型
    """
    text = source.strip()
    try:
        if text.startswith("{"):
            data = json.loads(text)
        else:
            if not os.path.exists(text):
                raise InputFormatError(f"约束文件不存在: {text}", {'path': text})
            with open(text, 'r', encoding='utf-8') as f:
                data = json.load(f)
    except json.JSONDecodeError as e:
        raise InputFormatError(f"约束 JSON 解析失败: {e}", {'source': source})
    return parse_constraint(data)


def get_supported_constraint_types() -> List[str]:
    """获取所有支持的约束类型名"""
    return constraint_factory.get_supported_types()
