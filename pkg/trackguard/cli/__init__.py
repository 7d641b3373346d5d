# 命令行包
# 参数解析、配置文件与子命令路由
from .app import build_parser, main, run

__all__ = ["build_parser", "main", "run"]
