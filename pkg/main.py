#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
trackguard 命令行启动脚本

使用方法:
    python main.py gen-data --out data
    python main.py train --data data --out model.nnw --constrained

或者以模块方式启动:
    python -m trackguard verify --model model.nnw --spec robust.prop
"""

from trackguard.cli import main

if __name__ == "__main__":
    main()
