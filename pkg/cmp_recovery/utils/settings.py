"""
设置管理器 - 用户配置持久化与数值策略
"""
import json
import logging
import os
from dataclasses import dataclass, asdict, replace
from typing import Any, Dict, Optional, Tuple

import psutil


POLICY_ENV_VAR = "CMP_NUM_POLICY"


@dataclass(frozen=True)
class NumericPolicy:
    """
    数值策略 - 所有容差集中于此

    strict 与 loose 只在线性规划模糊带上不同
    """
    name: str = "strict"
    rank_tol: float = 1e-10
    comparison_tol: float = 1e-9
    convergence_tol: float = 1e-12
    membership_tol: float = 1e-9
    tie_tol: float = 1e-9
    kkt_tol: float = 1e-8
    stall_tol: float = 1e-14
    boundary_band: float = 1e-9
    ambiguity_low: float = 1e-11
    ambiguity_high: float = 1e-9

    @classmethod
    def strict(cls) -> 'NumericPolicy':
        return cls()

    @classmethod
    def loose(cls) -> 'NumericPolicy':
        return cls(name="loose", ambiguity_low=1e-9, ambiguity_high=1e-7)

    @classmethod
    def by_name(cls, name: str) -> 'NumericPolicy':
        """
        按名称获取策略

        Args:
            name: strict 或 loose

        Returns:
            数值策略
        """
        normalized = (name or "strict").strip().lower()
        if normalized == "loose":
            return cls.loose()
        if normalized != "strict":
            logging.getLogger(__name__).warning(f"未知数值策略 {name!r}，使用 strict")
        return cls.strict()

    @classmethod
    def from_env(cls, default: str = "strict") -> 'NumericPolicy':
        """从环境变量 CMP_NUM_POLICY 读取策略"""
        return cls.by_name(os.environ.get(POLICY_ENV_VAR, default))

    @property
    def ambiguity_band(self) -> Tuple[float, float]:
        return (self.ambiguity_low, self.ambiguity_high)

    def with_overrides(self, **kwargs) -> 'NumericPolicy':
        return replace(self, **kwargs)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def get_policy(policy: Optional[NumericPolicy] = None) -> NumericPolicy:
    """返回显式传入的策略，否则读取环境变量"""
    return policy if policy is not None else NumericPolicy.from_env()


class SettingsManager:
    """命令行默认设置管理器"""

    DEFAULT_SETTINGS = {
        "numeric_policy": "strict",
        "log_level": "INFO",
        "max_branches": 1000,
        "default_jobs": 0,
        "full_trace": False,
        "counterexample_grid": 17,
        "falsify_samples": 10000,
        "magnitude_low": 0.1,
        "magnitude_high": 2.0
    }

    def __init__(self, config_path: str = "config/cmp_settings.json"):
        """
        初始化设置管理器

        Args:
            config_path: 配置文件路径
        """
        self.config_path = config_path
        self.logger = logging.getLogger(__name__)
        self._settings: Dict[str, Any] = {}
        self._loaded = False

    def _ensure_directory(self) -> None:
        """确保配置目录存在"""
        directory = os.path.dirname(self.config_path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory, exist_ok=True)

    def load(self) -> Dict[str, Any]:
        """
        加载设置

        Returns:
            设置字典
        """
        try:
            if os.path.exists(self.config_path):
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    loaded = json.load(f)
                    # 合并默认设置和加载的设置
                    self._settings = {**self.DEFAULT_SETTINGS, **loaded}
            else:
                self._settings = self.DEFAULT_SETTINGS.copy()

            self._loaded = True
            return self._settings.copy()

        except (json.JSONDecodeError, TypeError):
            # 配置文件损坏，使用默认值
            from ..core.error_handler import handle_error, ErrorCategory
            handle_error(
                category=ErrorCategory.CONFIG_PERSISTENCE,
                code="config_persistence_file_corrupted",
                context={'config_path': self.config_path}
            )
            self._settings = self.DEFAULT_SETTINGS.copy()
            self._loaded = True
            return self._settings.copy()
        except OSError as e:
            self.logger.warning(f"读取配置失败: {e}")
            self._settings = self.DEFAULT_SETTINGS.copy()
            self._loaded = True
            return self._settings.copy()

    def save(self) -> bool:
        """
        保存设置

        Returns:
            是否保存成功
        """
        try:
            self._ensure_directory()
            with open(self.config_path, 'w', encoding='utf-8') as f:
                json.dump(self._settings, f, indent=2, ensure_ascii=False)
            return True
        except OSError as e:
            from ..core.error_handler import handle_error, ErrorCategory
            handle_error(
                category=ErrorCategory.CONFIG_PERSISTENCE,
                code="config_persistence_save_failed",
                details=str(e),
                context={'config_path': self.config_path}
            )
            return False

    def get(self, key: str, default: Any = None) -> Any:
        """
        获取设置项

        Args:
            key: 设置键
            default: 默认值

        Returns:
            设置值
        """
        if not self._loaded:
            self.load()
        return self._settings.get(key, default)

    def set(self, key: str, value: Any, auto_save: bool = True) -> None:
        """
        设置配置项

        Args:
            key: 设置键
            value: 设置值
            auto_save: 是否自动保存
        """
        if not self._loaded:
            self.load()
        self._settings[key] = value
        if auto_save:
            self.save()

    def get_all(self) -> Dict[str, Any]:
        """获取所有设置副本"""
        if not self._loaded:
            self.load()
        return self._settings.copy()

    def reset_to_defaults(self) -> None:
        """重置为默认设置"""
        self._settings = self.DEFAULT_SETTINGS.copy()
        self._loaded = True
        self.save()

    def update(self, settings: Dict[str, Any], auto_save: bool = True) -> None:
        """
        批量更新设置

        Args:
            settings: 设置字典
            auto_save: 是否自动保存
        """
        if not self._loaded:
            self.load()
        self._settings.update(settings)
        if auto_save:
            self.save()

    def numeric_policy(self) -> NumericPolicy:
        """环境变量优先，其次为配置文件中的策略名"""
        return NumericPolicy.from_env(default=self.get("numeric_policy", "strict"))

    def resolve_jobs(self, jobs: Optional[int] = None) -> int:
        """
        解析并发线程数

        Args:
            jobs: 命令行指定值，None 或 0 表示使用设置或 CPU 数

        Returns:
            线程数（至少为 1）
        """
        if jobs:
            return max(1, int(jobs))
        configured = int(self.get("default_jobs", 0) or 0)
        if configured > 0:
            return configured
        return max(1, psutil.cpu_count(logical=True) or 1)

    # 便捷属性访问
    @property
    def log_level(self) -> str:
        return self.get("log_level", "INFO")

    @log_level.setter
    def log_level(self, value: str):
        self.set("log_level", value)

    @property
    def max_branches(self) -> int:
        return int(self.get("max_branches", 1000))

    @max_branches.setter
    def max_branches(self, value: int):
        self.set("max_branches", value)

    @property
    def full_trace(self) -> bool:
        return bool(self.get("full_trace", False))

    @full_trace.setter
    def full_trace(self, value: bool):
        self.set("full_trace", value)

    @property
    def counterexample_grid(self) -> int:
        return int(self.get("counterexample_grid", 17))

    @property
    def falsify_samples(self) -> int:
        return int(self.get("falsify_samples", 10000))

    @property
    def magnitude_range(self) -> Tuple[float, float]:
        return (float(self.get("magnitude_low", 0.1)), float(self.get("magnitude_high", 2.0)))
