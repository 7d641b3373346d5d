import argparse
from typing import Dict, List, Optional

from ...errors import UsageError
from ...models import PgdConfig
from ..routing import Arg, arg


def pgd_arguments(random_start: bool = False) -> List[Arg]:
    arguments = [
        arg("--pgd-steps", type=int, default=10, help="PGD 迭代步数"),
        arg("--pgd-step-size", type=float, default=None, help="PGD 步长，留空取 epsilon/4"),
        arg("--sharpness", type=float, default=None, help="比较原子的模糊化尺度，留空取 delta"),
    ]
    if random_start:
        arguments.append(arg("--random-start", action="store_true", help="PGD 从球内随机点出发"))
    return arguments


def param_arguments() -> List[Arg]:
    return [arg("--param", action="append", default=None, metavar="NAME=VALUE", help="覆盖属性文件中的参数")]


def pgd_config(args: argparse.Namespace, epsilon: float = 0.0) -> PgdConfig:
    return PgdConfig(
        epsilon=epsilon,
        steps=args.pgd_steps,
        step_size=args.pgd_step_size,
        random_start=getattr(args, "random_start", False),
        seed=args.seed,
    )


def parse_overrides(values: Optional[List[str]]) -> Dict[str, float]:
    overrides = {}
    for item in values or []:
        name, sep, raw = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"--param 应为 NAME=VALUE，实际 {item!r}")
        try:
            overrides[name.strip()] = float(raw)
        except ValueError:
            raise UsageError(f"--param {name} 的值不是数字: {raw!r}") from None
    return overrides
