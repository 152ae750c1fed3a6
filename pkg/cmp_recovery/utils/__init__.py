"""
工具模块
"""
from .settings import SettingsManager, NumericPolicy, get_policy

__all__ = ['SettingsManager', 'NumericPolicy', 'get_policy']
