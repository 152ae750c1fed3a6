"""
稠密线性代数内核 - 列归一化、Gram 矩阵、QR 最小二乘、对称特征值、Schur 补
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .error_handler import ZeroColumnError, RankDeficientError, SingularBlockError, InputFormatError
from ..utils.settings import NumericPolicy, get_policy

logger = logging.getLogger(__name__)

ZERO_COLUMN_THRESHOLD = 1e-14


@dataclass(frozen=True)
class MeasurementMatrix:
    """稠密测量矩阵 A (m×N)，构造后只读"""
    entries: np.ndarray
    column_norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        data = np.array(self.entries, dtype=float, copy=True)
        if data.ndim == 1:
            data = data.reshape(1, -1)
        if data.ndim != 2 or data.size == 0:
            raise InputFormatError(f"测量矩阵必须是非空二维数组，得到形状 {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InputFormatError("测量矩阵包含非有限值")
        norms = np.linalg.norm(data, axis=0)
        for i, norm in enumerate(norms):
            if norm < ZERO_COLUMN_THRESHOLD:
                raise ZeroColumnError(i, float(norm))
        data.flags.writeable = False
        norms.flags.writeable = False
        object.__setattr__(self, 'entries', data)
        object.__setattr__(self, 'column_norms', norms)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]

    def columns(self, J: Sequence[int]) -> np.ndarray:
        return self.entries[:, list(J)]

    def has_unit_columns(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.column_norms - 1.0) <= tol))

    def spectral_norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def __matmul__(self, x):
        return self.entries @ x


@dataclass(frozen=True)
class GramCache:
    """Gram 矩阵 theta[i][j] = <A_i, A_j>，只计算一次并镜像为严格对称"""
    theta: np.ndarray

    def entry(self, i: int, j: int) -> float:
        return float(self.theta[i, j])

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        return self.theta[np.ix_(list(rows), list(cols))]

    def to_table(self) -> List[List[float]]:
        return [[float(v) for v in row] for row in self.theta]


def as_matrix(A) -> MeasurementMatrix:
    """接受 MeasurementMatrix 或任意二维数组"""
    if isinstance(A, MeasurementMatrix):
        return A
    return MeasurementMatrix(np.asarray(A, dtype=float))


def normalize_columns(A) -> Tuple[MeasurementMatrix, np.ndarray]:
    """
    列归一化

    Args:
        A: 测量矩阵

    Returns:
        (单位列矩阵, 原列范数)，满足 A = A_unit · diag(scales)

    Raises:
        ZeroColumnError: 某列范数小于 1e-14
    """
    data = A.entries if isinstance(A, MeasurementMatrix) else np.asarray(A, dtype=float)
    if data.ndim == 1:
        data = data.reshape(1, -1)
    scales = np.linalg.norm(data, axis=0)
    for i, norm in enumerate(scales):
        if norm < ZERO_COLUMN_THRESHOLD:
            raise ZeroColumnError(i, float(norm))
    return MeasurementMatrix(data / scales), scales.copy()


def gram(A) -> GramCache:
    """计算 Gram 矩阵"""
    data = as_matrix(A).entries
    theta = data.T @ data
    # 上三角镜像到下三角
    theta = np.triu(theta) + np.triu(theta, 1).T
    theta.flags.writeable = False
    return GramCache(theta)


def exact_gram(A) -> List[List[Fraction]]:
    """浮点元素按二进制值精确转换后计算的有理 Gram 矩阵"""
    data = as_matrix(A).entries
    cols = [[Fraction(float(v)) for v in data[:, j]] for j in range(data.shape[1])]
    n = len(cols)
    table = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            value = sum((a * b for a, b in zip(cols[i], cols[j])), Fraction(0))
            table[i][j] = value
            table[j][i] = value
    return table


def rank_threshold(A_J: np.ndarray, policy: Optional[NumericPolicy] = None) -> float:
    policy = get_policy(policy)
    if A_J.size == 0:
        return 0.0
    return policy.rank_tol * float(np.linalg.norm(A_J, 2))


def has_full_column_rank(A_J: np.ndarray, policy: Optional[NumericPolicy] = None) -> bool:
    """QR 的 R 对角元全部超过 1e-10·‖A_J‖ 时认为列满秩"""
    A_J = np.asarray(A_J, dtype=float)
    if A_J.ndim == 1:
        A_J = A_J.reshape(-1, 1)
    k = A_J.shape[1]
    if k == 0:
        return True
    if k > A_J.shape[0]:
        return False
    R = np.linalg.qr(A_J, mode='r')
    return bool(np.min(np.abs(np.diag(R))) > rank_threshold(A_J, policy))


def least_squares(A_J, y, policy: Optional[NumericPolicy] = None) -> np.ndarray:
    """
    QR 最小二乘 min ‖A_J w - y‖

    Args:
        A_J: m×|J| 列子矩阵
        y: 长度 m 的观测向量
        policy: 数值策略

    Returns:
        唯一最小解 w

    Raises:
        RankDeficientError: R 对角元低于秩阈值
    """
    A_J = np.asarray(A_J, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if A_J.ndim == 1:
        A_J = A_J.reshape(-1, 1)
    k = A_J.shape[1]
    if k == 0:
        return np.zeros(0)
    if k > A_J.shape[0]:
        raise RankDeficientError(f"{k} 列多于 {A_J.shape[0]} 行", {'columns': k, 'rows': A_J.shape[0]})
    Q, R = np.linalg.qr(A_J, mode='reduced')
    diag = np.abs(np.diag(R))
    threshold = rank_threshold(A_J, policy)
    if np.min(diag) <= threshold:
        raise RankDeficientError(f"R 最小对角元 {np.min(diag):.3e} 不超过阈值 {threshold:.3e}",
                                 {'min_diag': float(np.min(diag)), 'threshold': threshold})
    return np.linalg.solve(R, Q.T @ y)


def jacobi_eigenvalues(M, tol: Optional[float] = None, max_sweeps: int = 100) -> np.ndarray:
    """
    循环 Jacobi 方法求对称矩阵全部特征值

    Args:
        M: 对称矩阵
        tol: 非对角 Frobenius 范数相对阈值，默认取收敛容差 1e-12
        max_sweeps: 最大扫描轮数

    Returns:
        升序特征值
    """
    A = np.array(M, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputFormatError(f"需要方阵，得到形状 {A.shape}")
    p = A.shape[0]
    if p == 0:
        return np.zeros(0)
    A = (A + A.T) / 2.0
    tol = get_policy().convergence_tol if tol is None else tol
    scale = float(np.linalg.norm(A, 'fro'))
    if scale == 0.0:
        return np.zeros(p)

    for sweep in range(max_sweeps):
        off = math.sqrt(max(float(np.sum(A * A) - np.sum(np.diag(A) ** 2)), 0.0))
        if off < tol * scale:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = A[i, j]
                if aij == 0.0:
                    continue
                theta = (A[j, j] - A[i, i]) / (2.0 * aij)
                sign = 1.0 if theta >= 0 else -1.0
                t = sign / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_i = A[:, i].copy()
                col_j = A[:, j].copy()
                A[:, i] = c * col_i - s * col_j
                A[:, j] = s * col_i + c * col_j
                row_i = A[i, :].copy()
                row_j = A[j, :].copy()
                A[i, :] = c * row_i - s * row_j
                A[j, :] = s * row_i + c * row_j
                A[i, j] = 0.0
                A[j, i] = 0.0
    else:
        logger.warning(f"Jacobi 迭代 {max_sweeps} 轮未达到收敛阈值")

    return np.sort(np.diag(A))


def min_eig_sym(M, tol: Optional[float] = None) -> float:
    """对称矩阵最小特征值（循环 Jacobi）"""
    eigenvalues = jacobi_eigenvalues(M, tol)
    if eigenvalues.size == 0:
        raise InputFormatError("空矩阵没有特征值")
    return float(eigenvalues[0])


def schur_complement(M, J: Sequence[int], policy: Optional[NumericPolicy] = None) -> np.ndarray:
    """
    Schur 补 M/M_JJ = M_cc - M_cJ M_JJ^{-1} M_Jc

    Args:
        M: 对称矩阵
        J: 消去的下标集合
        policy: 数值策略

    Returns:
        补集下标（升序）上的对称矩阵

    Raises:
        SingularBlockError: M_JJ 奇异
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    J = sorted(set(J))
    rest = [i for i in range(n) if i not in J]
    if not J:
        return M[np.ix_(rest, rest)].copy()
    block = M[np.ix_(J, J)]
    threshold = get_policy(policy).rank_tol * max(1.0, float(np.linalg.norm(block, 2)))
    singular_values = np.linalg.svd(block, compute_uv=False)
    if singular_values[-1] <= threshold:
        raise SingularBlockError(f"M_JJ 最小奇异值 {singular_values[-1]:.3e}",
                                 {'block': [j + 1 for j in J]})
    result = M[np.ix_(rest, rest)] - M[np.ix_(rest, J)] @ np.linalg.solve(block, M[np.ix_(J, rest)])
    return (result + result.T) / 2.0


def support_eigen_extremes(theta: np.ndarray, K: int) -> Tuple[float, Tuple[int, ...]]:
    """枚举全部 |S| = K 的支撑，返回最小特征值及其支撑"""
    best = math.inf
    best_support: Tuple[int, ...] = ()
    for S in combinations(range(theta.shape[0]), K):
        value = min_eig_sym(theta[np.ix_(S, S)])
        if value < best:
            best = value
            best_support = S
    return best, best_support


# ============== 内置反例矩阵 ==============

def counterexample_matrix() -> MeasurementMatrix:
    """4×4 反例矩阵：单位列，支撑 {1,2,3} 上 ERC 恰为 1 但 OMP 仍精确恢复"""
    s2, s6, s10 = math.sqrt(2.0), math.sqrt(6.0), math.sqrt(10.0)
    return MeasurementMatrix(np.array([
        [1.0, -1.0 / 3.0, -1.0 / 3.0, 1.0 / 3.0],
        [0.0, 2.0 * s2 / 3.0, -s2 / 3.0, s2 / 3.0],
        [0.0, 0.0, s6 / 3.0, -s6 / 12.0],
        [0.0, 0.0, 0.0, s10 / 4.0],
    ]))


def counterexample_gram_exact() -> List[List[Fraction]]:
    """反例矩阵的精确 Gram 矩阵"""
    third, half = Fraction(1, 3), Fraction(1, 2)
    return [
        [Fraction(1), -third, -third, third],
        [-third, Fraction(1), -third, third],
        [-third, -third, Fraction(1), -half],
        [third, third, -half, Fraction(1)],
    ]


def extension_signs(n: int) -> List[int]:
    if n < 4:
        raise InputFormatError(f"扩展反例至少需要 4 列，得到 {n}")
    # 第 5 列起交替追加 +A4 与 -A4
    return [1 if (k % 2 == 0) else -1 for k in range(n - 4)]


def extended_counterexample(m: int, n: int) -> MeasurementMatrix:
    """
    把反例扩展到 m×N：追加 ±A4 列，并补零行

    Args:
        m: 行数（≥ 4）
        n: 列数（≥ 4）
    """
    if m < 4:
        raise InputFormatError(f"扩展反例至少需要 4 行，得到 {m}")
    base = counterexample_matrix().entries
    columns = [base[:, j] for j in range(4)]
    for sign in extension_signs(n):
        columns.append(sign * base[:, 3])
    block = np.column_stack(columns)
    padded = np.vstack([block, np.zeros((m - 4, n))])
    return MeasurementMatrix(padded)


def extended_counterexample_gram_exact(n: int) -> List[List[Fraction]]:
    """扩展反例的精确 Gram 矩阵"""
    base = counterexample_gram_exact()
    signs = [1, 1, 1, 1]
    source = [0, 1, 2, 3]
    for sign in extension_signs(n):
        signs.append(sign)
        source.append(3)
    return [[signs[i] * signs[j] * base[source[i]][source[j]] for j in range(n)] for i in range(n)]


# ============== 文件读写与随机矩阵 ==============

def load_matrix_csv(path: str) -> MeasurementMatrix:
    """读取无表头 CSV 矩阵，每行一行"""
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as e:
        raise InputFormatError(f"无法读取矩阵文件 {path}: {e}", {'path': path})
    return MeasurementMatrix(data)


def load_vector_csv(path: str) -> np.ndarray:
    """读取单列 CSV 向量"""
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=1)
    except (OSError, ValueError) as e:
        raise InputFormatError(f"无法读取向量文件 {path}: {e}", {'path': path})
    return np.atleast_1d(np.asarray(data, dtype=float)).reshape(-1)


def random_unit_matrix(m: int, n: int, rng: np.random.Generator) -> MeasurementMatrix:
    """高斯随机矩阵再做列归一化"""
    unit, _ = normalize_columns(rng.standard_normal((m, n)))
    return unit
