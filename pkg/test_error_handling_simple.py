#!/usr/bin/env python3
"""
错误处理测试 - 错误代码、用户消息、历史窗口统计
"""
import json

import pytest

from cmp_recovery.core.error_handler import (
    CMPError,
    CertificationAssertionError,
    ErrorHandler,
    ErrorInfo,
    ErrorSeverity,
    ErrorCategory,
    InfeasibleSystemError,
    InputFormatError,
    NumericallyAmbiguousError,
    RankDeficientError,
    ZeroColumnError,
    global_error_handler,
    handle_error,
    handle_exception
)
from cmp_recovery.core.experiment import ExperimentConfig, MonteCarloRunner


def all_error_codes():
    """收集全部 CMPError 子类的错误代码"""
    codes = set()
    pending = list(CMPError.__subclasses__())
    while pending:
        cls = pending.pop()
        codes.add(cls.code)
        pending.extend(cls.__subclasses__())
    return codes


def test_typed_exception_codes():
    """测试数值核心异常使用自身的错误代码与上下文"""
    print("🧪 测试数值核心异常...")
    handler = ErrorHandler()

    cases = [
        (ZeroColumnError(2, 0.0), "linear_algebra_zero_column", ErrorCategory.LINEAR_ALGEBRA),
        (RankDeficientError("rank 1 < 2", {'support': [1, 2]}), "linear_algebra_rank_deficient",
         ErrorCategory.LINEAR_ALGEBRA),
        (InfeasibleSystemError(0.5), "linear_program_infeasible", ErrorCategory.LINEAR_PROGRAM),
        (NumericallyAmbiguousError(3e-10, (1e-11, 1e-9)), "linear_program_numerically_ambiguous",
         ErrorCategory.LINEAR_PROGRAM),
        (InputFormatError("bad csv", {'path': 'y.csv'}), "cli_input_format_error", ErrorCategory.CLI_INPUT),
        (CertificationAssertionError(3, "erc_equals_one"), "certification_assertion_failed",
         ErrorCategory.CERTIFICATION)
    ]

    for exception, code, category in cases:
        assert exception.code == code and exception.category == category, f"{type(exception).__name__} 代码或类别错误"
        info = handler.handle_exception(exception.category, exception, {'command': 'certify'})
        assert info.code == code, "应该使用异常自带的错误代码"
        assert info.message == handler.get_definition(code)['message'], "应该使用预定义消息"
        assert info.context['command'] == 'certify', "调用方上下文应该保留"
        assert str(exception) in info.details, "异常文本应该放入详细信息"

    zero = ZeroColumnError(2, 0.0)
    assert zero.column == 2 and "第 3 列" in str(zero), "列号以 1 起显示"
    assertion = CertificationAssertionError(4, "motzkin_witnesses", {'sigma': [1, -1, 1]})
    assert assertion.context == {'item': 4, 'sigma': [1, -1, 1]}, "上下文应该合并项编号"
    ambiguous = NumericallyAmbiguousError(3e-10, (1e-11, 1e-9))
    assert ambiguous.band == (1e-11, 1e-9), "应该记录模糊带"
    print("✅ 数值核心异常测试通过")


def test_user_message_and_serialization():
    """测试用户消息与字典序列化"""
    info = handle_error(
        category=ErrorCategory.LINEAR_PROGRAM,
        code="linear_program_numerically_ambiguous",
        details="phase1 = 3e-10",
        context={'band': [1e-11, 1e-9]}
    )
    assert info.severity == ErrorSeverity.WARNING, "模糊带为警告级别"
    message = info.to_user_message()
    assert message.startswith("[WARNING]"), "消息以严重程度开头"
    assert "详细信息: phase1 = 3e-10" in message, "应该包含详细信息段"
    assert "--mode rational" in message, "应该给出有理数模式的建议"

    data = info.to_dict()
    assert data['category'] == "linear_program" and data['severity'] == "warning", "枚举序列化为取值"
    json.dumps(data)

    unknown = ErrorHandler().handle_error(ErrorCategory.ORACLE, "oracle_not_defined")
    assert unknown.severity == ErrorSeverity.ERROR and unknown.message == "未知错误", "未定义代码按未知错误处理"
    assert "建议解决方案" not in unknown.to_user_message(), "没有建议时不输出建议段"


def test_plain_exception_codes():
    """测试普通异常按类别与异常类型拼接代码"""
    info = handle_exception(ErrorCategory.CLI_INPUT, FileNotFoundError("A.csv"))
    assert isinstance(info, ErrorInfo), "应该返回 ErrorInfo"
    assert info.code == "cli_input_filenotfounderror", "代码为类别加异常类型"
    assert "FileNotFoundError: A.csv" == info.message, "消息包含异常类型与文本"

    info = ErrorHandler().handle_exception(ErrorCategory.RESTRICTED_SOLVER, ZeroDivisionError("division by zero"))
    assert info.code == "restricted_solver_zerodivisionerror", "代码为类别加异常类型"
    assert "ZeroDivisionError" in info.details, "详细信息包含异常类型"


def test_history_window_statistics():
    """测试按标记截取的历史记录与统计"""
    print("🧪 测试历史窗口统计...")
    handler = ErrorHandler()
    handler.handle_error(ErrorCategory.ORACLE, "oracle_budget_exceeded")
    mark = handler.mark()
    assert mark == 1, "标记为累计记录数"

    handler.handle_exception(ErrorCategory.CLI_INPUT, InputFormatError("bad"))
    handler.handle_exception(ErrorCategory.CLI_INPUT, InputFormatError("worse"))
    handler.handle_error(ErrorCategory.PURSUIT, "pursuit_trial_failed")

    window = handler.get_error_history(since=mark)
    assert [e.code for e in window] == ["cli_input_format_error", "cli_input_format_error", "pursuit_trial_failed"], \
        "只返回标记之后的记录"
    assert len(handler.get_error_history()) == 4, "缺省返回全部记录"
    assert len(handler.get_error_history(since=mark, category=ErrorCategory.PURSUIT)) == 1, "按类别过滤"
    assert len(handler.get_error_history(code="oracle_budget_exceeded")) == 1, "按代码过滤"
    assert handler.get_error_history(since=handler.mark()) == [], "最新标记之后没有记录"

    stats = handler.get_error_statistics(since=mark)
    assert stats['total_errors'] == 3, "窗口内共 3 条"
    assert stats['by_code'] == {"cli_input_format_error": 2, "pursuit_trial_failed": 1}, "按代码统计"
    assert stats['by_category'] == {"cli_input": 2, "pursuit": 1}, "按类别统计"
    print("✅ 历史窗口统计测试通过")


def test_history_truncation_keeps_mark_monotone():
    """测试历史截断后标记仍然单调"""
    handler = ErrorHandler()
    handler._max_history = 5
    for i in range(8):
        handler.handle_error(ErrorCategory.CERTIFICATION, "certification_assertion_failed", context={'item': i})
    assert handler.mark() == 8, "标记不受截断影响"
    assert len(handler.get_error_history()) == 5, "只保留最近 5 条"
    window = handler.get_error_history(since=6)
    assert [e.context['item'] for e in window] == [6, 7], "窗口对齐到累计编号"


def test_trial_failures_counted_by_code():
    """测试蒙特卡洛失败试验按错误代码汇总"""
    print("🧪 测试失败试验统计...")
    bad = json.dumps({'type': 'box', 'lower': [0, 0, 0], 'upper': ['inf', 'inf', 'inf']})
    mark = global_error_handler.mark()
    summary = MonteCarloRunner().run(ExperimentConfig(m=6, n=9, K=1, trials=3, seed=4, constraint=bad))
    assert summary.failed_trials == 3, "约束维数不符时每次试验都失败"
    assert summary.failure_codes == {"cli_input_format_error": 3}, "保留数值核心异常自身的代码"

    recorded = global_error_handler.get_error_history(since=mark, code="cli_input_format_error")
    assert [e.context['trial'] for e in recorded] == [1, 2, 3], "每次失败的试验编号以 1 起记录"
    assert all(e.context['seed'] == 4 for e in recorded), "记录实验种子"

    clean = MonteCarloRunner().run(ExperimentConfig(m=6, n=9, K=1, trials=2, seed=4))
    assert clean.failure_codes == {}, "没有失败时不统计"
    print("✅ 失败试验统计测试通过")


@pytest.mark.parametrize("code", sorted(all_error_codes() | {
    'pursuit_trial_failed', 'config_persistence_file_corrupted', 'config_persistence_save_failed'
}))
def test_every_code_has_definition(code):
    """测试每个错误代码都有预定义消息与建议"""
    definition = ErrorHandler().get_definition(code)
    assert definition is not None, f"{code} 应该有预定义错误"
    assert definition['message'], "预定义消息不应该为空"
    assert isinstance(definition['severity'], ErrorSeverity), "严重程度应该是 ErrorSeverity"
    assert all(isinstance(s, str) and s for s in definition.get('suggestions', [])), "建议应该是非空字符串"


if __name__ == "__main__":
    print("🧪 开始错误处理测试...")
    pytest.main([__file__, "-v"])
