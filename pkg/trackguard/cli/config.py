import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Sequence

from dotenv import dotenv_values

from ..errors import UsageError

logger = logging.getLogger(__name__)

TRUE_VALUES = {"1", "true", "yes", "on"}
FALSE_VALUES = {"0", "false", "no", "off"}


def _actions(parser: argparse.ArgumentParser) -> Dict[str, argparse.Action]:
    return {action.dest: action for action in parser._actions if action.dest != "help"}


def _convert(action: argparse.Action, key: str, raw: str) -> Any:
    if action.nargs == 0:
        value = raw.strip().lower()
        if value in TRUE_VALUES:
            return True
        if value in FALSE_VALUES:
            return False
        raise UsageError(f"配置项 {key} 应为布尔值，实际 {raw!r}")
    convert = action.type or str
    try:
        if isinstance(action, argparse._AppendAction):
            return [convert(part.strip()) for part in raw.split(",") if part.strip()]
        return convert(raw)
    except (TypeError, ValueError) as e:
        raise UsageError(f"配置项 {key} 的值 {raw!r} 非法: {e}") from None


def load_config_file(path: str, parser: argparse.ArgumentParser, argv: Sequence[str] = ()) -> Dict[str, Any]:
    """读取 key=value 配置文件，返回可直接 set_defaults 的字典

    键名即参数名（batch、pgd-steps 或 pgd_steps 均可）；未知键是用法错误。
    命令行上已出现的参数跳过，命令行优先。
    只读取文件本身，不读写进程环境变量，值中的 ${VAR} 原样保留。

    Args:
        path: 配置文件路径
        parser: 当前子命令的解析器
        argv: 命令行参数

    Returns:
        Dict[str, Any]: dest -> 转换后的值
    """
    if not Path(path).is_file():
        raise UsageError(f"配置文件不存在: {path}")
    actions = _actions(parser)
    values = {}
    try:
        entries = dotenv_values(path, interpolate=False)
    except UnicodeDecodeError as e:
        raise UsageError(f"配置文件 {path} 不是 UTF-8 文本（第 {e.start} 字节）") from None
    for key, raw in entries.items():
        dest = key.strip().lstrip("-").replace("-", "_")
        if dest not in actions or dest in ("config", "command"):
            raise UsageError(f"配置文件 {path} 中有未知配置项: {key}")
        if raw is None:
            raise UsageError(f"配置项 {key} 缺少值")
        action = actions[dest]
        if any(token == flag or token.startswith(flag + "=") for token in argv for flag in action.option_strings):
            continue
        values[dest] = _convert(action, key, raw)
    logger.debug(f"从 {path} 读取配置: {sorted(values)}")
    return values
