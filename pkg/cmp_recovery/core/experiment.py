"""
蒙特卡洛实验 - 随机稀疏向量的精确恢复率统计
"""
import csv
import io
import logging
import threading
import concurrent.futures
from dataclasses import dataclass, field, asdict
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from .constraint import BoxProduct, ConstraintModel, WeightedSimplex, conic_hull, load_constraint
from .error_handler import (
    CMPError, ErrorCategory, InputFormatError, global_error_handler, handle_error, handle_exception
)
from .linalg import MeasurementMatrix, counterexample_matrix, load_matrix_csv, random_unit_matrix
from .pursuit import PursuitConfig, verify_exact_recovery
from ..utils.settings import NumericPolicy, get_policy

CSV_COLUMNS = ["m", "N", "K", "constraint", "trials", "support_rate", "vector_rate", "mean_steps", "seed"]

COUNTEREXAMPLE_SOURCE = "counterexample"


@dataclass
class ExperimentConfig:
    """
    实验配置

    matrix_source 为 None 时每次试验生成高斯单位列矩阵；否则为 CSV 路径或 "counterexample"
    """
    m: int = 16
    n: int = 32
    K: int = 2
    trials: int = 100
    seed: int = 0
    constraint: str = "free"
    matrix_source: Optional[str] = None
    support: Optional[Tuple[int, ...]] = None
    magnitude_low: float = 0.1
    magnitude_high: float = 2.0
    max_branches: int = 1000

    def __post_init__(self):
        if self.trials < 0:
            raise InputFormatError(f"试验次数必须非负，得到 {self.trials}")
        if self.support is not None:
            self.support = tuple(sorted(set(int(i) for i in self.support)))
            self.K = len(self.support)
        if not 0 < self.magnitude_low <= self.magnitude_high:
            raise InputFormatError(f"幅值区间非法: ({self.magnitude_low}, {self.magnitude_high}]")

    def load_matrix(self) -> Optional[MeasurementMatrix]:
        """固定矩阵来源；随机矩阵时返回 None"""
        if self.matrix_source is None:
            return None
        if self.matrix_source == COUNTEREXAMPLE_SOURCE:
            return counterexample_matrix()
        return load_matrix_csv(self.matrix_source)

    def build_constraint(self, n: int) -> ConstraintModel:
        """free / nonneg 简写，其余按 JSON 文本或文件解析"""
        if self.constraint == "free":
            return BoxProduct.free(n)
        if self.constraint == "nonneg":
            return BoxProduct.nonneg(n)
        P = load_constraint(self.constraint)
        if P.n != n:
            raise InputFormatError(f"约束维数 {P.n} 与矩阵列数 {n} 不一致")
        return P

    @property
    def constraint_label(self) -> str:
        if self.constraint in ("free", "nonneg"):
            return self.constraint
        return load_constraint(self.constraint).type_name

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if self.support is not None:
            data['support'] = [i + 1 for i in self.support]
        return data


@dataclass
class TrialResult:
    """单次试验结果"""
    index: int
    support: Tuple[int, ...] = ()
    support_recovered: bool = False
    vector_recovered: bool = False
    steps: int = 0
    branches: int = 0
    error: Optional[str] = None

    def is_successful(self) -> bool:
        return self.error is None and self.vector_recovered


@dataclass
class ExperimentSummary:
    """一组试验的统计"""
    config: ExperimentConfig
    m: int = 0
    n: int = 0
    results: List[TrialResult] = field(default_factory=list)
    failed_trials: int = 0
    support_rate: float = 0.0
    vector_rate: float = 0.0
    mean_steps: float = 0.0
    duration: float = 0.0
    failure_codes: Dict[str, int] = field(default_factory=dict)
    start_time: Optional[datetime] = None
    end_time: Optional[datetime] = None

    def update_statistics(self):
        """更新统计信息"""
        total = len(self.results)
        self.failed_trials = len([r for r in self.results if r.error])
        if total:
            self.support_rate = sum(1 for r in self.results if r.support_recovered and not r.error) / total
            self.vector_rate = sum(1 for r in self.results if r.vector_recovered and not r.error) / total
            finished = [r.steps for r in self.results if not r.error]
            self.mean_steps = float(np.mean(finished)) if finished else 0.0
        if self.start_time and self.end_time:
            self.duration = (self.end_time - self.start_time).total_seconds()

    def to_csv_row(self) -> Dict[str, str]:
        return {
            'm': str(self.m),
            'N': str(self.n),
            'K': str(self.config.K),
            'constraint': self.config.constraint_label,
            'trials': str(len(self.results)),
            'support_rate': f"{self.support_rate:.6f}",
            'vector_rate': f"{self.vector_rate:.6f}",
            'mean_steps': f"{self.mean_steps:.6f}",
            'seed': str(self.config.seed)
        }


def plant_sparse_vector(P: ConstraintModel, K: int, rng: np.random.Generator,
                        magnitude: Tuple[float, float] = (0.1, 2.0),
                        support: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    生成 P 中的 K-稀疏向量

    幅值在 magnitude 上均匀分布；符号按 cone(P) 分类：自由坐标随机，L+ 为正，L− 为负。
    有限盒约束截断到坐标区间，加权单纯形超出容量时整体缩放

    Args:
        P: 盒约束乘积或加权单纯形
        K: 稀疏度
        rng: 随机数生成器
        magnitude: 幅值区间
        support: 指定支撑（0 起）

    Returns:
        长度 N 的向量
    """
    classification, _ = conic_hull(P)
    movable = [i for i in range(P.n) if classification.kind_of(i) != "zero"]
    if support is None:
        if K > len(movable):
            raise InputFormatError(f"稀疏度 {K} 超过可用坐标数 {len(movable)}")
        support = sorted(int(i) for i in rng.choice(movable, size=K, replace=False))
    z = np.zeros(P.n)
    low, high = magnitude
    for i in support:
        kind = classification.kind_of(i)
        if kind == "zero":
            raise InputFormatError(f"坐标 {i + 1} 被约束冻结为 0")
        value = rng.uniform(low, high)
        if kind == "minus" or (kind == "free" and rng.random() < 0.5):
            value = -value
        z[i] = value
    if isinstance(P, BoxProduct):
        z = np.clip(z, P.lower_array, P.upper_array)
    elif isinstance(P, WeightedSimplex):
        total = float(P.weights @ z)
        if total > P.cap:
            z *= P.cap / total
    return z


class MonteCarloRunner:
    """蒙特卡洛恢复率实验执行器"""

    def __init__(self, max_workers: int = 1, policy: Optional[NumericPolicy] = None):
        """
        初始化实验执行器

        Args:
            max_workers: 线程数
            policy: 数值策略
        """
        self.max_workers = max(1, int(max_workers))
        self.policy = get_policy(policy)
        self.logger = logging.getLogger(__name__)

    def _run_trial(self, config: ExperimentConfig, index: int,
                   fixed: Optional[MeasurementMatrix]) -> TrialResult:
        rng = np.random.default_rng([config.seed, index])
        matrix = fixed if fixed is not None else random_unit_matrix(config.m, config.n, rng)
        P = config.build_constraint(matrix.n)
        z = plant_sparse_vector(P, config.K, rng, (config.magnitude_low, config.magnitude_high),
                                config.support)
        pursuit_config = PursuitConfig(max_branches=config.max_branches)
        verdict = verify_exact_recovery(matrix, z, P, pursuit_config, self.policy)
        steps = len(verdict.traces[0].steps) if verdict.traces else 0
        return TrialResult(index, verdict.support, verdict.support_recovered, verdict.vector_recovered,
                           steps, len(verdict.traces))

    def run(self, config: ExperimentConfig,
            progress_callback: Optional[Callable[[int, int, float], None]] = None) -> ExperimentSummary:
        """
        执行一组试验

        Args:
            config: 实验配置
            progress_callback: 进度回调函数 (completed, total, percentage)

        Returns:
            实验统计；结果按试验编号排列，与线程调度无关
        """
        fixed = config.load_matrix()
        m, n = fixed.shape if fixed is not None else (config.m, config.n)
        summary = ExperimentSummary(config, m, n, start_time=datetime.now())
        total = config.trials
        results: List[Optional[TrialResult]] = [None] * total
        completed = 0
        lock = threading.Lock()
        error_mark = global_error_handler.mark()

        def trial_worker(index: int):
            nonlocal completed
            try:
                results[index] = self._run_trial(config, index, fixed)
            except CMPError as e:
                # 数值核心异常保留自身错误代码，便于按代码统计
                results[index] = TrialResult(index, error=str(e))
                handle_exception(e.category, e, {'trial': index + 1, 'seed': config.seed})
            except Exception as e:
                results[index] = TrialResult(index, error=str(e))
                handle_error(
                    category=ErrorCategory.PURSUIT,
                    code="pursuit_trial_failed",
                    message=f"第 {index + 1} 次试验失败",
                    context={'trial': index + 1, 'seed': config.seed},
                    exception=e
                )
            with lock:
                completed += 1
                if progress_callback:
                    percentage = (completed / total) * 100
                    progress_callback(completed, total, percentage)

        if self.max_workers == 1:
            for i in range(total):
                trial_worker(i)
        else:
            with concurrent.futures.ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                futures = [executor.submit(trial_worker, i) for i in range(total)]
                concurrent.futures.wait(futures)

        summary.results = [r for r in results if r is not None]
        summary.end_time = datetime.now()
        summary.update_statistics()
        if summary.failed_trials:
            summary.failure_codes = global_error_handler.get_error_statistics(since=error_mark)['by_code']
            self.logger.warning(f"失败试验按错误代码统计: {summary.failure_codes}")
        self.logger.info(f"实验完成 m={m} N={n} K={config.K}: 支撑恢复率 {summary.support_rate:.4f}, "
                         f"向量恢复率 {summary.vector_rate:.4f}, 失败 {summary.failed_trials} 次")
        return summary

    def run_sweep(self, configs: Sequence[ExperimentConfig],
                  progress_callback: Optional[Callable[[int, int, float], None]] = None) -> List[ExperimentSummary]:
        """依次执行多组配置"""
        return [self.run(config, progress_callback) for config in configs]


def write_csv(summaries: Sequence[ExperimentSummary], stream: Optional[TextIO] = None) -> str:
    """
    写出 CSV 表

    Args:
        summaries: 实验统计
        stream: 输出流，None 时只返回文本

    Returns:
        CSV 文本
    """
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for summary in summaries:
        writer.writerow(summary.to_csv_row())
    text = buffer.getvalue()
    if stream is not None:
        stream.write(text)
    return text
