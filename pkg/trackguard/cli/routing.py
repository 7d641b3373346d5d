import argparse
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from ..errors import UsageError


@dataclass
class Arg:
    """一个命令行参数；required 在合并配置文件之后才检查"""

    flags: List[str]
    kwargs: Dict[str, Any] = field(default_factory=dict)
    required: bool = False

    @property
    def dest(self) -> str:
        return self.kwargs.get("dest") or self.flags[-1].lstrip("-").replace("-", "_")


def arg(*flags: str, required: bool = False, **kwargs) -> Arg:
    return Arg(list(flags), kwargs, required)


@dataclass
class Command:
    name: str
    help: str
    handler: Callable[[argparse.Namespace], int]
    arguments: List[Arg]


class CommandRouter:
    """子命令路由器：用装饰器登记子命令，由应用统一挂到解析器上"""

    def __init__(self):
        self.commands: List[Command] = []

    def command(self, name: str, help: str, arguments: Optional[List[Arg]] = None):
        def decorator(handler: Callable[[argparse.Namespace], int]):
            self.commands.append(Command(name, help, handler, list(arguments or [])))
            return handler

        return decorator


class ArgumentParser(argparse.ArgumentParser):
    """用法错误抛出 UsageError（退出码 1），不直接退出进程"""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def check_required(command: Command, args: argparse.Namespace) -> None:
    missing = [a.flags[-1] for a in command.arguments if a.required and getattr(args, a.dest, None) in (None, [])]
    if missing:
        raise UsageError(f"{command.name}: 缺少必需参数 {', '.join(missing)}")
