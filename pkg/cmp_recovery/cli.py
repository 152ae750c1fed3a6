"""
命令行入口 - 追踪、认证、反例复现、蒙特卡洛实验与恢复常数

结构化结果写到标准输出或 --out 指定的文件，日志写到标准错误。
退出码：0 成功；2 运行完成但目标未达成（残差超过容差、条件不成立等）；1 输入或求解错误
"""
import argparse
import json
import logging
import math
import sys
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .core.certify import (
    Verdict, check_fixed_support, condition_H_falsify, perturbation_stability, recovery_constants,
    verify_counterexample
)
from .core.constraint import BoxProduct, ConstraintModel, conic_hull, load_constraint
from .core.error_handler import CMPError, ErrorCategory, InputFormatError, global_error_handler, handle_exception
from .core.experiment import COUNTEREXAMPLE_SOURCE, ExperimentConfig, MonteCarloRunner, write_csv
from .core.linalg import (
    MeasurementMatrix, counterexample_gram_exact, counterexample_matrix, load_matrix_csv,
    load_vector_csv, normalize_columns
)
from .core.pursuit import PursuitConfig, TieRule, cmp_run, cmp_run_all_branches
from .utils.settings import NumericPolicy, SettingsManager

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_MET = 2

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

logger = logging.getLogger(__name__)


# ============== 参数解析辅助 ==============

def parse_index_list(text: str) -> List[int]:
    """
    解析 1 起的逗号分隔下标列表，返回 0 起下标

    Args:
        text: 如 "1,2,3"

    Returns:
        0 起下标列表（保持输入顺序）
    """
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InputFormatError(f"下标列表格式错误: {text!r}", {'value': text})
    if not values:
        raise InputFormatError("下标列表为空")
    if any(v < 1 for v in values):
        raise InputFormatError(f"下标从 1 开始: {text!r}", {'value': text})
    return [v - 1 for v in values]


def parse_int_list(text: str) -> List[int]:
    """解析逗号分隔的正整数列表"""
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InputFormatError(f"整数列表格式错误: {text!r}", {'value': text})
    if not values or any(v < 1 for v in values):
        raise InputFormatError(f"需要正整数列表: {text!r}", {'value': text})
    return values


def load_matrix(source: str) -> MeasurementMatrix:
    """CSV 路径或内置反例 "counterexample" """
    if source == COUNTEREXAMPLE_SOURCE:
        return counterexample_matrix()
    return load_matrix_csv(source)


def build_constraint(source: Optional[str], n: int) -> ConstraintModel:
    """
    构造约束：缺省为 ℝᴺ，free / nonneg 为简写，其余按 JSON 文件或内联文本解析

    Raises:
        InputFormatError: 约束维数与矩阵列数不一致
    """
    if source is None or source == "free":
        return BoxProduct.free(n)
    if source == "nonneg":
        return BoxProduct.nonneg(n)
    P = load_constraint(source)
    if P.n != n:
        raise InputFormatError(f"约束维数 {P.n} 与矩阵列数 {n} 不一致", {'constraint_n': P.n, 'n': n})
    return P


def emit(text: str, out: Optional[str]) -> None:
    """写出结果，out 为 None 时写到标准输出"""
    if not text.endswith("\n"):
        text += "\n"
    if out:
        with open(out, 'w', encoding='utf-8', newline="\n") as f:
            f.write(text)
        logger.info(f"结果已写入 {out}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def dump_json(data: Dict[str, Any]) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False)


# ============== 子命令 ==============

def cmd_recover(args: argparse.Namespace, settings: SettingsManager, policy: NumericPolicy) -> int:
    """运行约束匹配追踪并写出轨迹"""
    matrix = load_matrix(args.matrix)
    y = load_vector_csv(args.y)
    if y.size != matrix.m:
        raise InputFormatError(f"y 长度 {y.size} 与矩阵行数 {matrix.m} 不一致")
    P = build_constraint(args.constraint, matrix.n)
    config = PursuitConfig(max_iter=args.max_iter, residual_tol=args.tol, tie_rule=TieRule(args.tie_rule),
                           max_branches=args.max_branches or settings.max_branches, seed=args.seed)
    tol = config.resolve_residual_tol(y)
    full_trace = True if args.full_trace or settings.full_trace else None

    if args.branch_all:
        traces = cmp_run_all_branches(matrix, y, P, config, policy)
    else:
        traces = [cmp_run(matrix, y, P, config, policy)]

    converged = [math.sqrt(max(t.final_residual_sq, 0.0)) <= tol for t in traces]
    result: Dict[str, Any] = {
        'constraint': P.to_dict(),
        'residual_tol': tol,
        'converged': all(converged)
    }
    if args.branch_all:
        result['traces'] = [t.to_dict(full_trace) for t in traces]
    else:
        result['trace'] = traces[0].to_dict(full_trace)
    emit(dump_json(result), args.out)

    if all(converged):
        return EXIT_OK
    logger.warning(f"残差未达到容差 {tol:.3e}")
    return EXIT_NOT_MET


def cmd_certify(args: argparse.Namespace, settings: SettingsManager, policy: NumericPolicy) -> int:
    """固定支撑上的恢复条件认证"""
    matrix = load_matrix(args.matrix)
    S = parse_index_list(args.support)
    P = build_constraint(args.constraint, matrix.n)
    theta = None
    if args.mode == "rational" and args.matrix == COUNTEREXAMPLE_SOURCE:
        theta = counterexample_gram_exact()
    certificate = check_fixed_support(matrix, S, P, mode=args.mode, policy=policy, theta=theta,
                                      n_samples=args.samples, seed=args.seed,
                                      max_workers=settings.resolve_jobs(args.jobs))
    result = {
        'matrix': args.matrix,
        'policy': policy.name,
        'certificate': certificate.to_dict()
    }
    emit(dump_json(result), args.out)
    return EXIT_OK if certificate.verdict is Verdict.HOLDS else EXIT_NOT_MET


def cmd_counterexample(args: argparse.Namespace, settings: SettingsManager, policy: NumericPolicy) -> int:
    """复现内置反例的全部断言"""
    grid_points = args.grid or settings.counterexample_grid
    report = verify_counterexample(grid_points=grid_points, extension=(args.ext_m, args.ext_n),
                                   extension_grid_points=args.ext_grid, policy=policy,
                                   raise_on_failure=False)
    emit(dump_json(report.to_dict()), args.out)
    return EXIT_OK if report.all_passed else EXIT_NOT_MET


def cmd_montecarlo(args: argparse.Namespace, settings: SettingsManager, policy: NumericPolicy) -> int:
    """蒙特卡洛恢复率实验，输出 CSV"""
    low, high = settings.magnitude_range
    support = tuple(parse_index_list(args.support)) if args.support else None
    sparsities = [len(support)] if support is not None else parse_int_list(args.k)
    configs = [
        ExperimentConfig(m=args.m, n=args.n, K=K, trials=args.trials, seed=args.seed,
                         constraint=args.constraint, matrix_source=args.matrix, support=support,
                         magnitude_low=low, magnitude_high=high,
                         max_branches=args.max_branches or settings.max_branches)
        for K in sparsities
    ]
    runner = MonteCarloRunner(max_workers=settings.resolve_jobs(args.jobs), policy=policy)

    def report_progress(completed: int, total: int, percentage: float):
        if completed == total or completed % max(1, total // 10) == 0:
            logger.debug(f"进度 {completed}/{total} ({percentage:.0f}%)")

    error_mark = global_error_handler.mark()
    summaries = runner.run_sweep(configs, report_progress)
    failed = sum(s.failed_trials for s in summaries)
    if failed:
        stats = global_error_handler.get_error_statistics(since=error_mark)
        logger.warning(f"共 {failed} 次试验失败，按类别: {stats['by_category']}，按代码: {stats['by_code']}")
    emit(write_csv(summaries), args.out)
    return EXIT_OK


def cmd_constants(args: argparse.Namespace, settings: SettingsManager, policy: NumericPolicy) -> int:
    """恢复常数、常数不等式判定与可选的扰动/条件 (H) 检查"""
    matrix = load_matrix(args.matrix)
    if args.normalize:
        matrix, _ = normalize_columns(matrix)
    classification = None
    P = None
    if args.classification:
        P = build_constraint(args.classification, matrix.n)
        classification, _ = conic_hull(P)

    result: Dict[str, Any] = {'matrix': args.matrix}
    verdicts: List[bool] = []
    for K in parse_int_list(args.k):
        constants = recovery_constants(matrix, K, classification, policy)
        entry: Dict[str, Any] = {'constants': constants.to_dict()}
        verdicts.append(constants.satisfied)
        if args.perturb:
            entry['perturbation'] = perturbation_stability(matrix, K, classification, trials=args.perturb_trials,
                                                           seed=args.seed, policy=policy).to_dict()
        if args.falsify is not None:
            target = P if P is not None else BoxProduct.free(matrix.n)
            n_samples = args.falsify or settings.falsify_samples
            entry['condition_H'] = condition_H_falsify(matrix, target, K, n_samples=n_samples, seed=args.seed,
                                                       policy=policy).to_dict()
        result[f"K={K}"] = entry
    emit(dump_json(result), args.out)
    return EXIT_OK if all(verdicts) else EXIT_NOT_MET


# ============== 解析器 ==============

def build_parser() -> argparse.ArgumentParser:
    """构造命令行解析器"""
    parser = argparse.ArgumentParser(prog="cmp", description="约束匹配追踪与精确恢复条件认证")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="日志级别（默认取设置文件）")
    parser.add_argument("--settings", default="config/cmp_settings.json", help="设置文件路径")
    parser.add_argument("--jobs", type=int, default=None, help="并发线程数，0 表示 CPU 数")
    parser.add_argument("--policy", choices=["strict", "loose"], default=None,
                        help="数值策略，覆盖 CMP_NUM_POLICY 与设置文件")
    sub = parser.add_subparsers(dest="command", required=True)

    recover = sub.add_parser("recover", help="运行约束匹配追踪")
    recover.add_argument("--matrix", required=True, help="矩阵 CSV 路径或 counterexample")
    recover.add_argument("--y", required=True, help="观测向量 CSV 路径")
    recover.add_argument("--constraint", default=None, help="free / nonneg / JSON 文件或内联 JSON")
    recover.add_argument("--max-iter", type=int, default=None)
    recover.add_argument("--tol", type=float, default=None, help="残差范数容差，默认 1e-10·‖y‖")
    recover.add_argument("--branch-all", action="store_true", help="枚举所有并列分支")
    recover.add_argument("--tie-rule", choices=[rule.value for rule in TieRule], default=TieRule.LOWEST_INDEX.value)
    recover.add_argument("--seed", type=int, default=None)
    recover.add_argument("--max-branches", type=int, default=None)
    recover.add_argument("--full-trace", action="store_true", help="始终保留逐坐标评分")
    recover.add_argument("--out", default=None)
    recover.set_defaults(handler=cmd_recover)

    certify = sub.add_parser("certify", help="固定支撑的恢复条件认证")
    certify.add_argument("--matrix", required=True)
    certify.add_argument("--support", required=True, help="1 起的逗号分隔支撑，如 1,2,3")
    certify.add_argument("--constraint", default=None)
    certify.add_argument("--mode", choices=["float", "rational"], default="float")
    certify.add_argument("--samples", type=int, default=None, help="采样恢复检查次数")
    certify.add_argument("--seed", type=int, default=0)
    certify.add_argument("--out", default=None)
    certify.set_defaults(handler=cmd_certify)

    counter = sub.add_parser("counterexample", help="复现内置反例")
    counter.add_argument("--grid", type=int, default=None, help="每坐标网格点数")
    counter.add_argument("--ext-m", type=int, default=6)
    counter.add_argument("--ext-n", type=int, default=6)
    counter.add_argument("--ext-grid", type=int, default=None)
    counter.add_argument("--out", default=None)
    counter.set_defaults(handler=cmd_counterexample)

    monte = sub.add_parser("montecarlo", help="蒙特卡洛恢复率实验")
    monte.add_argument("--m", type=int, default=16)
    monte.add_argument("--n", type=int, default=32)
    monte.add_argument("--k", default="2", help="逗号分隔的稀疏度列表")
    monte.add_argument("--trials", type=int, default=100)
    monte.add_argument("--seed", type=int, default=0)
    monte.add_argument("--constraint", default="free")
    monte.add_argument("--matrix", default=None, help="固定矩阵；缺省时每次试验生成高斯单位列矩阵")
    monte.add_argument("--support", default=None, help="固定支撑（1 起）")
    monte.add_argument("--max-branches", type=int, default=None)
    monte.add_argument("--out", default=None)
    monte.set_defaults(handler=cmd_montecarlo)

    constants = sub.add_parser("constants", help="恢复常数与常数不等式")
    constants.add_argument("--matrix", required=True)
    constants.add_argument("--k", required=True, help="逗号分隔的稀疏度列表")
    constants.add_argument("--classification", default=None, help="约束来源，用于锥分类")
    constants.add_argument("--normalize", action="store_true", help="先做列归一化")
    constants.add_argument("--perturb", action="store_true", help="附加扰动稳定性分析")
    constants.add_argument("--perturb-trials", type=int, default=50)
    constants.add_argument("--falsify", type=int, nargs="?", const=0, default=None,
                           help="附加条件 (H) 采样证伪，可指定样本数")
    constants.add_argument("--seed", type=int, default=0)
    constants.add_argument("--out", default=None)
    constants.set_defaults(handler=cmd_constants)

    return parser


def configure_logging(level: str) -> None:
    """根日志器输出到标准错误"""
    numeric = getattr(logging, str(level).upper(), logging.INFO)
    logging.basicConfig(level=numeric, format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    命令行主函数

    Args:
        argv: 参数列表，None 时读取 sys.argv

    Returns:
        退出码
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse 的用法错误归为输入错误
        return EXIT_OK if e.code in (0, None) else EXIT_ERROR
    settings = SettingsManager(args.settings)
    configure_logging(args.log_level or settings.log_level)
    policy = NumericPolicy.by_name(args.policy) if args.policy else settings.numeric_policy()
    try:
        return args.handler(args, settings, policy)
    except CMPError as e:
        error_info = handle_exception(e.category, e, {'command': args.command})
        sys.stderr.write(error_info.to_user_message() + "\n")
        return EXIT_ERROR
    except (OSError, ValueError) as e:
        error_info = handle_exception(ErrorCategory.CLI_INPUT, e, {'command': args.command})
        sys.stderr.write(error_info.to_user_message() + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
