import argparse
import logging
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from .. import __version__
from ..errors import TrackGuardError, UsageError
from .config import load_config_file
from .routers import routers
from .routing import ArgumentParser, Command, check_required

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def build_parser() -> Tuple[ArgumentParser, Dict[str, Tuple[argparse.ArgumentParser, Command]]]:
    """创建解析器，挂上所有路由器登记的子命令"""
    parser = ArgumentParser(
        prog="trackguard",
        description="赛道中心回归网络的约束训练与鲁棒性验证",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands = {}
    for router in routers:
        for command in router.commands:
            sub = subparsers.add_parser(
                command.name, help=command.help, description=command.help,
                formatter_class=argparse.ArgumentDefaultsHelpFormatter,
            )
            for item in command.arguments:
                sub.add_argument(*item.flags, **item.kwargs)
            sub.add_argument("--config", default=None, help="key=value 配置文件，命令行参数优先")
            sub.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                             help="日志级别")
            sub.set_defaults(handler=command.handler)
            commands[command.name] = (sub, command)
    return parser, commands


def configure_logging(level: str) -> None:
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger("trackguard").setLevel(level)


def _report(component: str, message: str) -> None:
    print(f"error[{component}]: {message}", file=sys.stderr)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """命令行入口

    Returns:
        int: 0 成功；1 用法、配置或参数校验错误；2 运行时错误（带出错组件名）
    """
    argv: List[str] = list(sys.argv[1:] if argv is None else argv)
    parser, commands = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return int(e.code or 0)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        sub, command = commands[args.command]
        if args.config:
            sub.set_defaults(**load_config_file(args.config, sub, argv))
            args = parser.parse_args(argv)
        check_required(command, args)
        configure_logging(args.log_level)
        return args.handler(args)
    except UsageError as e:
        _report("cli", str(e))
        return 1
    except ValidationError as e:
        _report("cli", f"参数非法: {e}")
        return 1
    except TrackGuardError as e:
        logger.debug("运行失败", exc_info=True)
        _report(e.component, str(e))
        return 2
    except OSError as e:
        _report("io", str(e))
        return 2


def main() -> None:
    sys.exit(run())
