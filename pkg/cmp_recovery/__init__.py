# CMP Recovery
# 约束匹配追踪与精确恢复条件验证工具

__version__ = "1.0.0"
__author__ = "CMP Recovery"
