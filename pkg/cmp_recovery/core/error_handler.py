"""
错误处理和报告机制
数值核心抛出带错误代码的异常，命令行与批量实验入口统一转换为 ErrorInfo 记录
"""
import logging
import threading
import traceback
from datetime import datetime
from enum import Enum
from typing import Optional, Dict, Any, List
from dataclasses import dataclass


class ErrorSeverity(Enum):
    """错误严重程度"""
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


class ErrorCategory(Enum):
    """错误类别"""
    LINEAR_ALGEBRA = "linear_algebra"
    CONSTRAINT = "constraint"
    RESTRICTED_SOLVER = "restricted_solver"
    PURSUIT = "pursuit"
    LINEAR_PROGRAM = "linear_program"
    CERTIFICATION = "certification"
    ORACLE = "oracle"
    CLI_INPUT = "cli_input"
    CONFIG_PERSISTENCE = "config_persistence"
    UNKNOWN = "unknown"


class CMPError(Exception):
    """数值核心异常基类，携带错误代码和类别"""

    code = "unknown_error"
    category = ErrorCategory.UNKNOWN

    def __init__(self, message: str = "", context: Optional[Dict[str, Any]] = None):
        super().__init__(message or self.code)
        self.context = context or {}


class ZeroColumnError(CMPError):
    """测量矩阵存在零列"""
    code = "linear_algebra_zero_column"
    category = ErrorCategory.LINEAR_ALGEBRA

    def __init__(self, column: int, norm: float = 0.0):
        super().__init__(f"第 {column + 1} 列范数为 {norm:.3e}", {'column': column, 'norm': norm})
        self.column = column


class RankDeficientError(CMPError):
    """子矩阵列不满秩"""
    code = "linear_algebra_rank_deficient"
    category = ErrorCategory.LINEAR_ALGEBRA


class SingularBlockError(CMPError):
    """Schur 补的主块奇异"""
    code = "linear_algebra_singular_block"
    category = ErrorCategory.LINEAR_ALGEBRA


class NotMemberError(CMPError):
    """点不属于约束集"""
    code = "constraint_not_member"
    category = ErrorCategory.CONSTRAINT


class NotAConeError(CMPError):
    """箱体存在有限非零端点，不是锥"""
    code = "constraint_not_a_cone"
    category = ErrorCategory.CONSTRAINT


class NotBoxProductError(CMPError):
    """约束集不是箱体乘积"""
    code = "constraint_not_box_product"
    category = ErrorCategory.CONSTRAINT


class NotIrreducibleError(CMPError):
    """约束集存在恒为零的坐标"""
    code = "constraint_not_irreducible"
    category = ErrorCategory.CONSTRAINT


class NotConvergedError(CMPError):
    """迭代求解未收敛"""
    code = "restricted_solver_not_converged"
    category = ErrorCategory.RESTRICTED_SOLVER


class CycleLimitError(CMPError):
    """有效集外循环次数超限"""
    code = "restricted_solver_cycle_limit"
    category = ErrorCategory.RESTRICTED_SOLVER


class BranchLimitError(CMPError):
    """分支枚举数量超限"""
    code = "pursuit_branch_limit"
    category = ErrorCategory.PURSUIT


class InfeasibleSystemError(CMPError):
    """线性可行性系统无解"""
    code = "linear_program_infeasible"
    category = ErrorCategory.LINEAR_PROGRAM

    def __init__(self, phase1_value: Any, context: Optional[Dict[str, Any]] = None):
        super().__init__(f"第一阶段目标值 {float(phase1_value):.3e}", context)
        self.phase1_value = phase1_value


class NumericallyAmbiguousError(CMPError):
    """第一阶段目标值落入模糊带"""
    code = "linear_program_numerically_ambiguous"
    category = ErrorCategory.LINEAR_PROGRAM

    def __init__(self, phase1_value: Any, band: Any = None, context: Optional[Dict[str, Any]] = None):
        super().__init__(f"第一阶段目标值 {float(phase1_value):.3e} 落入模糊带 {band}", context)
        self.phase1_value = phase1_value
        self.band = band


class UnsupportedCombinationError(CMPError):
    """条件检查不支持该约束组合"""
    code = "certification_unsupported_combination"
    category = ErrorCategory.CERTIFICATION


class CertificationAssertionError(CMPError):
    """反例复现中的某一项断言失败"""
    code = "certification_assertion_failed"
    category = ErrorCategory.CERTIFICATION

    def __init__(self, item: int, message: str = "", context: Optional[Dict[str, Any]] = None):
        merged = {'item': item}
        merged.update(context or {})
        super().__init__(f"第 {item} 项检查失败: {message}", merged)
        self.item = item


class BudgetExceededError(CMPError):
    """枚举规模超出预算"""
    code = "oracle_budget_exceeded"
    category = ErrorCategory.ORACLE


class NoSolutionWithinKmaxError(CMPError):
    """在给定稀疏度上限内无可行解"""
    code = "oracle_no_solution_within_kmax"
    category = ErrorCategory.ORACLE


class InputFormatError(CMPError):
    """输入文件或参数格式错误"""
    code = "cli_input_format_error"
    category = ErrorCategory.CLI_INPUT


@dataclass
class ErrorInfo:
    """错误信息数据结构"""
    category: ErrorCategory
    severity: ErrorSeverity
    code: str
    message: str
    details: Optional[str] = None
    timestamp: Optional[datetime] = None
    context: Optional[Dict[str, Any]] = None
    suggestions: Optional[List[str]] = None

    def __post_init__(self):
        if self.timestamp is None:
            self.timestamp = datetime.now()

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        return {
            'category': self.category.value,
            'severity': self.severity.value,
            'code': self.code,
            'message': self.message,
            'details': self.details,
            'timestamp': self.timestamp.isoformat() if self.timestamp else None,
            'context': self.context,
            'suggestions': self.suggestions
        }

    def to_user_message(self) -> str:
        """生成用户友好的错误消息"""
        message = f"[{self.severity.value.upper()}] {self.message}"

        if self.details:
            message += f"\n详细信息: {self.details}"

        if self.suggestions:
            message += "\n建议解决方案:"
            for i, suggestion in enumerate(self.suggestions, 1):
                message += f"\n{i}. {suggestion}"

        return message


class ErrorHandler:
    """错误处理器"""

    def __init__(self):
        """初始化错误处理器"""
        self.logger = logging.getLogger(__name__)
        self._error_history: List[ErrorInfo] = []
        self._max_history = 1000
        # 累计记录数，历史截断后仍单调递增
        self._recorded = 0
        self._lock = threading.Lock()

        # 预定义的错误信息
        self._error_definitions = self._initialize_error_definitions()

    def mark(self) -> int:
        """当前记录位置，供 get_error_history(since=...) 截取之后的记录"""
        with self._lock:
            return self._recorded

    def handle_error(self,
                     category: ErrorCategory,
                     code: str,
                     message: Optional[str] = None,
                     details: Optional[str] = None,
                     context: Optional[Dict[str, Any]] = None,
                     exception: Optional[Exception] = None) -> ErrorInfo:
        """
        处理错误

        Args:
            category: 错误类别
            code: 错误代码
            message: 自定义错误消息
            details: 错误详细信息
            context: 错误上下文
            exception: 异常对象

        Returns:
            错误信息对象
        """
        error_def = self._error_definitions.get(code)
        if error_def:
            severity = error_def['severity']
            default_message = error_def['message']
            suggestions = error_def.get('suggestions', [])
        else:
            severity = ErrorSeverity.ERROR
            default_message = "未知错误"
            suggestions = []

        final_message = message or default_message

        if exception:
            exception_details = f"{type(exception).__name__}: {str(exception)}"
            if details:
                details = f"{details}\n异常信息: {exception_details}"
            else:
                details = f"异常信息: {exception_details}"

            # 调试模式下附带堆栈
            if self.logger.isEnabledFor(logging.DEBUG):
                details += f"\n堆栈跟踪:\n{traceback.format_exc()}"

        error_info = ErrorInfo(
            category=category,
            severity=severity,
            code=code,
            message=final_message,
            details=details,
            context=context,
            suggestions=suggestions
        )

        self._log_error(error_info)
        self._add_to_history(error_info)

        return error_info

    def handle_exception(self,
                         category: ErrorCategory,
                         exception: Exception,
                         context: Optional[Dict[str, Any]] = None) -> ErrorInfo:
        """
        处理异常

        Args:
            category: 错误类别
            exception: 异常对象
            context: 错误上下文

        Returns:
            错误信息对象
        """
        exception_type = type(exception).__name__
        if isinstance(exception, CMPError):
            code = exception.code
            merged = dict(exception.context)
            merged.update(context or {})
            context = merged
            # 预定义消息在前，异常文本放入详细信息
            message = None
        else:
            code = f"{category.value}_{exception_type.lower()}"
            message = f"{exception_type}: {str(exception)}"

        return self.handle_error(
            category=category,
            code=code,
            message=message,
            context=context,
            exception=exception
        )

    def get_error_history(self,
                          since: int = 0,
                          category: Optional[ErrorCategory] = None,
                          code: Optional[str] = None) -> List[ErrorInfo]:
        """
        获取错误历史记录

        Args:
            since: mark() 返回的位置，只取其后的记录；早于保留窗口的部分已丢弃
            category: 过滤错误类别
            code: 过滤错误代码

        Returns:
            错误信息列表，按记录顺序
        """
        with self._lock:
            count = max(0, self._recorded - since)
            errors = self._error_history[-count:] if count else []

        if category:
            errors = [e for e in errors if e.category == category]
        if code:
            errors = [e for e in errors if e.code == code]
        return errors

    def get_error_statistics(self, since: int = 0) -> Dict[str, Any]:
        """
        按错误代码与类别统计 since 之后的记录

        Returns:
            {'total_errors', 'by_code', 'by_category'}
        """
        errors = self.get_error_history(since)
        stats = {'total_errors': len(errors), 'by_code': {}, 'by_category': {}}
        for error in errors:
            stats['by_code'][error.code] = stats['by_code'].get(error.code, 0) + 1
            category_key = error.category.value
            stats['by_category'][category_key] = stats['by_category'].get(category_key, 0) + 1
        return stats

    def get_definition(self, code: str) -> Optional[Dict[str, Any]]:
        """获取预定义错误信息"""
        return self._error_definitions.get(code)

    def _initialize_error_definitions(self) -> Dict[str, Dict[str, Any]]:
        """初始化错误定义"""
        return {
            # 线性代数错误
            'linear_algebra_zero_column': {
                'severity': ErrorSeverity.ERROR,
                'message': '测量矩阵存在零列',
                'suggestions': [
                    '删除全零列后重新输入',
                    '检查矩阵文件的分隔符与列数'
                ]
            },
            'linear_algebra_rank_deficient': {
                'severity': ErrorSeverity.ERROR,
                'message': '支撑子矩阵列不满秩',
                'suggestions': [
                    '缩小支撑集',
                    '检查是否存在平行或重复的列',
                    '改用不要求唯一解的求解模式'
                ]
            },
            'linear_algebra_singular_block': {
                'severity': ErrorSeverity.ERROR,
                'message': 'Schur 补的主块奇异',
                'suggestions': [
                    '确认对应 Gram 子块正定',
                    '检查支撑集内列是否线性相关'
                ]
            },

            # 约束集错误
            'constraint_not_member': {
                'severity': ErrorSeverity.ERROR,
                'message': '给定点不属于约束集',
                'suggestions': [
                    '检查当前迭代点是否满足约束',
                    '放宽成员判定容差'
                ]
            },
            'constraint_not_a_cone': {
                'severity': ErrorSeverity.ERROR,
                'message': '约束集不是锥（存在有限非零端点）',
                'suggestions': [
                    '端点只能取 0 或 ±inf',
                    '先调用 decompose 提取回收锥'
                ]
            },
            'constraint_not_box_product': {
                'severity': ErrorSeverity.ERROR,
                'message': '该操作只支持箱体乘积约束',
                'suggestions': [
                    '使用 box/free/nonneg 类型的约束文件'
                ]
            },
            'constraint_not_irreducible': {
                'severity': ErrorSeverity.ERROR,
                'message': '约束集不可约条件不满足',
                'suggestions': [
                    '移除恒为零的坐标后重试'
                ]
            },

            # 受限最小二乘错误
            'restricted_solver_not_converged': {
                'severity': ErrorSeverity.ERROR,
                'message': '投影梯度法未在迭代上限内收敛',
                'suggestions': [
                    '检查支撑子矩阵条件数',
                    '放宽 KKT 容差'
                ]
            },
            'restricted_solver_cycle_limit': {
                'severity': ErrorSeverity.ERROR,
                'message': '有效集方法外循环次数超限',
                'suggestions': [
                    '检查数据是否存在严重退化',
                    '缩放测量矩阵后重试'
                ]
            },

            # 追踪错误
            'pursuit_branch_limit': {
                'severity': ErrorSeverity.WARNING,
                'message': '分支枚举数量超过上限',
                'suggestions': [
                    '增大 max_branches',
                    '缩小实例规模或关闭全分支模式'
                ]
            },
            'pursuit_trial_failed': {
                'severity': ErrorSeverity.WARNING,
                'message': '蒙特卡洛单次试验失败',
                'suggestions': [
                    '查看该试验的随机种子并单独复现'
                ]
            },

            # 线性规划错误
            'linear_program_infeasible': {
                'severity': ErrorSeverity.INFO,
                'message': '线性可行性系统无解',
                'suggestions': []
            },
            'linear_program_numerically_ambiguous': {
                'severity': ErrorSeverity.WARNING,
                'message': '第一阶段目标值落入数值模糊带',
                'suggestions': [
                    '改用有理数模式 --mode rational',
                    '设置 CMP_NUM_POLICY=loose 调整模糊带'
                ]
            },

            # 条件验证错误
            'certification_unsupported_combination': {
                'severity': ErrorSeverity.ERROR,
                'message': '该约束与支撑集组合没有对应的恢复条件',
                'suggestions': [
                    '约束需为箱体乘积锥',
                    '支撑集不能包含恒为零的坐标'
                ]
            },
            'certification_assertion_failed': {
                'severity': ErrorSeverity.ERROR,
                'message': '反例复现检查未通过',
                'suggestions': [
                    '查看报告中失败项的上下文',
                    '确认使用内置反例矩阵与精确 Gram 矩阵'
                ]
            },

            # 暴力求解错误
            'oracle_budget_exceeded': {
                'severity': ErrorSeverity.ERROR,
                'message': '枚举规模超出预算',
                'suggestions': [
                    '减小 k_max 或列数',
                    '改用抽样检验'
                ]
            },
            'oracle_no_solution_within_kmax': {
                'severity': ErrorSeverity.WARNING,
                'message': '在稀疏度上限内未找到可行解',
                'suggestions': [
                    '增大 k_max',
                    '确认观测向量在约束像集内'
                ]
            },

            # 命令行输入错误
            'cli_input_format_error': {
                'severity': ErrorSeverity.ERROR,
                'message': '输入文件或参数格式错误',
                'suggestions': [
                    '矩阵使用逗号分隔、无表头的 CSV',
                    '约束使用 JSON 对象描述',
                    '支撑集使用从 1 开始的逗号分隔下标'
                ]
            },

            # 配置持久化错误
            'config_persistence_file_corrupted': {
                'severity': ErrorSeverity.WARNING,
                'message': '配置文件已损坏，已使用默认设置',
                'suggestions': [
                    '删除损坏的配置文件',
                    '重新保存设置'
                ]
            },
            'config_persistence_save_failed': {
                'severity': ErrorSeverity.ERROR,
                'message': '配置文件保存失败',
                'suggestions': [
                    '检查文件权限',
                    '检查磁盘空间'
                ]
            }
        }

    def _log_error(self, error_info: ErrorInfo):
        """记录错误到日志"""
        log_level = {
            ErrorSeverity.INFO: logging.INFO,
            ErrorSeverity.WARNING: logging.WARNING,
            ErrorSeverity.ERROR: logging.ERROR,
            ErrorSeverity.CRITICAL: logging.CRITICAL
        }.get(error_info.severity, logging.ERROR)

        log_message = f"[{error_info.category.value}] {error_info.code}: {error_info.message}"
        if error_info.details:
            log_message += f" | Details: {error_info.details}"

        self.logger.log(log_level, log_message)

    def _add_to_history(self, error_info: ErrorInfo):
        """添加错误到历史记录"""
        with self._lock:
            self._error_history.append(error_info)
            self._recorded += 1

            if len(self._error_history) > self._max_history:
                self._error_history = self._error_history[-self._max_history:]


# 全局错误处理器实例
global_error_handler = ErrorHandler()


def handle_error(category: ErrorCategory,
                 code: str,
                 message: Optional[str] = None,
                 details: Optional[str] = None,
                 context: Optional[Dict[str, Any]] = None,
                 exception: Optional[Exception] = None) -> ErrorInfo:
    """全局错误处理函数"""
    return global_error_handler.handle_error(
        category=category,
        code=code,
        message=message,
        details=details,
        context=context,
        exception=exception
    )


def handle_exception(category: ErrorCategory,
                     exception: Exception,
                     context: Optional[Dict[str, Any]] = None) -> ErrorInfo:
    """全局异常处理函数"""
    return global_error_handler.handle_exception(
        category=category,
        exception=exception,
        context=context
    )

