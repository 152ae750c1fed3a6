#!/usr/bin/env python3
"""
简化的设置管理器与数值策略单元测试
"""
import tempfile
import shutil
import os
import json

import psutil

from cmp_recovery.utils.settings import POLICY_ENV_VAR, NumericPolicy, SettingsManager, get_policy


def test_settings_manager_unit_tests():
    """运行设置管理器的单元测试"""
    temp_dir = tempfile.mkdtemp()

    try:
        config_path = os.path.join(temp_dir, "nested", "cmp_settings.json")
        settings = SettingsManager(config_path)

        print("1. 测试默认设置...")

        loaded = settings.load()
        assert loaded == SettingsManager.DEFAULT_SETTINGS, "配置文件不存在时应该使用默认设置"
        assert settings.counterexample_grid == 17, "默认反例网格应该是 17"
        assert settings.falsify_samples == 10000, "默认证伪采样数应该是 10000"
        assert settings.magnitude_range == (0.1, 2.0), "默认幅值区间应该是 (0.1, 2.0)"
        assert settings.max_branches == 1000, "默认分支上限应该是 1000"
        assert settings.full_trace is False, "默认不保留完整轨迹"
        assert not os.path.exists(config_path), "只读取时不应该创建配置文件"

        print("✅ 默认设置测试通过")

        print("2. 测试设置保存和加载...")

        settings.set("counterexample_grid", 9)
        assert os.path.exists(config_path), "自动保存应该创建配置文件（含目录）"
        settings.update({"log_level": "DEBUG", "falsify_samples": 500})

        reloaded = SettingsManager(config_path)
        assert reloaded.counterexample_grid == 9, "重新加载后网格设置应该一致"
        assert reloaded.log_level == "DEBUG", "重新加载后日志级别应该一致"
        assert reloaded.falsify_samples == 500, "重新加载后采样数应该一致"
        assert reloaded.max_branches == 1000, "未设置的项应该保留默认值"

        settings.update({"max_branches": 50}, auto_save=False)
        assert SettingsManager(config_path).max_branches == 1000, "不自动保存时文件不应该改变"
        assert settings.max_branches == 50, "内存中的设置应该已更新"

        print("✅ 设置保存和加载测试通过")

        print("3. 测试损坏配置处理...")

        with open(config_path, 'w', encoding='utf-8') as f:
            f.write("invalid json content {")
        corrupted = SettingsManager(config_path)
        assert corrupted.load() == SettingsManager.DEFAULT_SETTINGS, "配置损坏时应该回退到默认设置"

        from cmp_recovery.core.error_handler import global_error_handler, ErrorCategory
        history = global_error_handler.get_error_history(category=ErrorCategory.CONFIG_PERSISTENCE)
        assert any(e.code == "config_persistence_file_corrupted" for e in history), "应该记录配置损坏错误"

        print("✅ 损坏配置处理测试通过")

        print("4. 测试重置为默认设置...")

        corrupted.reset_to_defaults()
        with open(config_path, 'r', encoding='utf-8') as f:
            data = json.load(f)
        assert data == SettingsManager.DEFAULT_SETTINGS, "重置后文件内容应该是默认设置"
        assert corrupted.get_all() == SettingsManager.DEFAULT_SETTINGS, "重置后内存设置应该是默认设置"

        print("✅ 重置测试通过")

        print("\n🎉 所有设置管理器单元测试都通过了！")

    finally:
        shutil.rmtree(temp_dir, ignore_errors=True)


def test_resolve_jobs():
    """测试并发线程数解析"""
    temp_dir = tempfile.mkdtemp()
    try:
        settings = SettingsManager(os.path.join(temp_dir, "settings.json"))
        assert settings.resolve_jobs(3) == 3, "命令行指定值优先"
        assert settings.resolve_jobs(None) == max(1, psutil.cpu_count(logical=True) or 1), "默认取 CPU 数"
        settings.set("default_jobs", 2)
        assert settings.resolve_jobs(0) == 2, "0 表示使用设置中的线程数"
        print("✅ 并发线程数解析测试通过")
    finally:
        shutil.rmtree(temp_dir, ignore_errors=True)


def test_numeric_policy():
    """测试数值策略与环境变量"""
    strict = NumericPolicy.strict()
    loose = NumericPolicy.loose()
    assert strict.ambiguity_band == (1e-11, 1e-9), "strict 模糊带应该是 (1e-11, 1e-9)"
    assert loose.ambiguity_band == (1e-9, 1e-7), "loose 模糊带应该是 (1e-9, 1e-7)"
    assert strict.rank_tol == loose.rank_tol == 1e-10, "两种策略只在模糊带上不同"
    assert NumericPolicy.by_name("LOOSE") == loose, "策略名不区分大小写"
    assert NumericPolicy.by_name("unknown") == strict, "未知策略名回退到 strict"
    assert strict.with_overrides(tie_tol=1e-6).tie_tol == 1e-6, "覆盖后应该生效"
    assert strict.to_dict()['kkt_tol'] == 1e-8, "序列化应该包含全部容差"

    previous = os.environ.get(POLICY_ENV_VAR)
    try:
        os.environ[POLICY_ENV_VAR] = "loose"
        assert get_policy() == loose, "环境变量应该决定默认策略"
        assert get_policy(strict) == strict, "显式传入的策略优先"

        temp_dir = tempfile.mkdtemp()
        try:
            settings = SettingsManager(os.path.join(temp_dir, "settings.json"))
            settings.set("numeric_policy", "strict")
            assert settings.numeric_policy() == loose, "环境变量优先于配置文件"
            del os.environ[POLICY_ENV_VAR]
            assert settings.numeric_policy() == strict, "无环境变量时使用配置文件"
        finally:
            shutil.rmtree(temp_dir, ignore_errors=True)
    finally:
        if previous is None:
            os.environ.pop(POLICY_ENV_VAR, None)
        else:
            os.environ[POLICY_ENV_VAR] = previous

    print("✅ 数值策略测试通过")


if __name__ == "__main__":
    print("🧪 开始设置管理器测试...")
    test_settings_manager_unit_tests()
    test_resolve_jobs()
    test_numeric_policy()
    print("\n🎉 所有设置测试通过！")
