#!/usr/bin/env python3
"""
CMP Recovery Manager - 命令行入口
约束匹配追踪、精确恢复条件认证与反例复现
"""
import sys

from cmp_recovery.cli import main

if __name__ == "__main__":
    sys.exit(main())
