"""
列表矩阵运算 - 同时适用于 fractions.Fraction 与 float

Gram 层面的条件检查全部走这里，精确模式下得到没有舍入误差的结论
"""
from fractions import Fraction
from typing import List, Sequence, Union

import numpy as np

from .error_handler import SingularBlockError

Scalar = Union[Fraction, float]
ListMatrix = List[List[Scalar]]


def is_exact(value) -> bool:
    """是否为精确有理数（Fraction 或 int）"""
    return isinstance(value, (Fraction, int)) and not isinstance(value, bool)


def matrix_is_exact(M: Sequence[Sequence[Scalar]]) -> bool:
    return all(is_exact(v) for row in M for v in row)


def to_float_matrix(M) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in M], dtype=float)


def identity(n: int, exact: bool = True) -> ListMatrix:
    one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def transpose(M: ListMatrix) -> ListMatrix:
    if not M:
        return []
    return [list(col) for col in zip(*M)]


def submatrix(M: ListMatrix, rows: Sequence[int], cols: Sequence[int]) -> ListMatrix:
    return [[M[i][j] for j in cols] for i in rows]


def matmul(A: ListMatrix, B: ListMatrix) -> ListMatrix:
    if not A or not B:
        return [[] for _ in A]
    inner = len(B)
    cols = len(B[0])
    return [[sum((A[i][k] * B[k][j] for k in range(inner)), 0)
             for j in range(cols)] for i in range(len(A))]


def matvec(A: ListMatrix, x: Sequence[Scalar]) -> List[Scalar]:
    return [sum((a * b for a, b in zip(row, x)), 0) for row in A]


def dot(a: Sequence[Scalar], b: Sequence[Scalar]) -> Scalar:
    return sum((x * y for x, y in zip(a, b)), 0)


def subtract(A: ListMatrix, B: ListMatrix) -> ListMatrix:
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def _pivot_tol(M: ListMatrix, tol: float) -> float:
    if matrix_is_exact(M):
        return 0
    scale = max((abs(float(v)) for row in M for v in row), default=0.0)
    return tol * max(1.0, scale)


def inverse(M: ListMatrix, tol: float = 1e-12) -> ListMatrix:
    """
    Gauss-Jordan 求逆（部分主元）

    Args:
        M: 方阵
        tol: 浮点模式下的主元阈值（相对于最大元素），精确模式下主元为 0 才判奇异

    Returns:
        逆矩阵

    Raises:
        SingularBlockError: 矩阵奇异
    """
    n = len(M)
    exact = matrix_is_exact(M)
    threshold = _pivot_tol(M, tol)
    aug = [list(row) + identity(n, exact)[i] for i, row in enumerate(M)]
    if not exact:
        aug = [[float(v) for v in row] for row in aug]

    for col in range(n):
        # 选取绝对值最大的主元
        pivot_row = max(range(col, n), key=lambda r: abs(aug[r][col]))
        pivot = aug[pivot_row][col]
        if abs(pivot) <= threshold:
            raise SingularBlockError(f"第 {col + 1} 列主元为 {float(pivot):.3e}",
                                     {'column': col, 'pivot': float(pivot)})
        aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        pivot_vals = aug[col]
        aug[col] = [v / pivot for v in pivot_vals]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]

    return [row[n:] for row in aug]


def determinant(M: ListMatrix) -> Scalar:
    """高斯消元求行列式"""
    n = len(M)
    if n == 0:
        return Fraction(1) if matrix_is_exact(M) else 1.0
    work = [list(row) for row in M]
    det = Fraction(1) if matrix_is_exact(M) else 1.0
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(work[r][col]))
        pivot = work[pivot_row][col]
        if pivot == 0:
            return pivot * 0
        if pivot_row != col:
            work[col], work[pivot_row] = work[pivot_row], work[col]
            det = -det
        det = det * pivot
        for r in range(col + 1, n):
            if work[r][col] != 0:
                factor = work[r][col] / pivot
                work[r] = [a - factor * b for a, b in zip(work[r], work[col])]
    return det


def schur_complement(M: ListMatrix, block: Sequence[int], tol: float = 1e-12) -> ListMatrix:
    """
    计算 M/M_JJ = M_cc - M_cJ M_JJ^{-1} M_Jc

    Args:
        M: 对称矩阵
        block: 被消去的下标集合 J
        tol: 浮点模式主元阈值

    Returns:
        补集下标（升序）上的对称矩阵
    """
    n = len(M)
    block = sorted(set(block))
    rest = [i for i in range(n) if i not in block]
    if not block:
        return [list(row) for row in submatrix(M, rest, rest)]
    inv = inverse(submatrix(M, block, block), tol)
    correction = matmul(matmul(submatrix(M, rest, block), inv), submatrix(M, block, rest))
    result = subtract(submatrix(M, rest, rest), correction)
    # 镜像保证严格对称
    for i in range(len(rest)):
        for j in range(i + 1, len(rest)):
            result[j][i] = result[i][j]
    return result


def positive_part(value: Scalar) -> Scalar:
    return value if value > 0 else value * 0
