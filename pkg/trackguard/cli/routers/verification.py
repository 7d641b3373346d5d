from ...models import VerifyConfig
from ...services import VerificationService
from ..routing import CommandRouter, arg
from .common import param_arguments, parse_overrides, pgd_arguments, pgd_config

router = CommandRouter()

verification_service = VerificationService()

DEFAULT_BOUND_EPSILONS = [0.001, 0.01]


@router.command("attack", help="在属性锚点处做 PGD 反例搜索并写出反例图像", arguments=[
    arg("--model", required=True, help="权重文件"),
    arg("--spec", required=True, help="属性文件"),
    arg("--out", required=True, help="反例 PGM 路径"),
    arg("--data", default=None, help="查找输入图像的数据集目录"),
    *param_arguments(),
    *pgd_arguments(random_start=True),
    arg("--seed", type=int, default=0, help="随机种子"),
])
def attack(args) -> int:
    """反例搜索"""
    result = verification_service.attack(
        args.model, args.spec, args.out, pgd_config(args), args.data, args.sharpness, parse_overrides(args.param),
    )
    print(f"constraint_loss: {result.constraint_loss:.8g}")
    print(f"satisfied: {'true' if result.satisfied else 'false'}")
    print(f"deviation: {result.deviation:.8g}")
    print(f"counterexample: {args.out}")
    return 0


@router.command("verify", help="验证局部鲁棒性属性", arguments=[
    arg("--model", required=True, help="权重文件"),
    arg("--spec", required=True, help="属性文件"),
    arg("--data", default=None, help="查找输入图像的数据集目录"),
    *param_arguments(),
    arg("--split-budget", type=int, default=0, help="输入划分的叶子盒上限，0 表示只做区间传播"),
    *pgd_arguments(),
    arg("--report", default=None, help="报告文件路径"),
    arg("--counterexample", default=None, help="反例 PGM 路径，默认写在报告旁边"),
    arg("--seed", type=int, default=0, help="随机种子"),
])
def verify(args) -> int:
    """验证属性"""
    config = VerifyConfig(split_budget=args.split_budget, pgd=pgd_config(args), sharpness=args.sharpness)
    _, report = verification_service.verify(
        args.model, args.spec, config, args.data, args.report, args.counterexample, parse_overrides(args.param),
    )
    print(report, end="")
    return 0


@router.command("bounds", help="输出像素坐标下的网络输出界（可比较多个模型）", arguments=[
    arg("--model", required=True, action="extend", nargs="+", default=None, help="权重文件，可给多个"),
    arg("--epsilon", action="extend", nargs="+", type=float, default=None,
        help=f"输入扰动半径，可给多个（默认 {DEFAULT_BOUND_EPSILONS}）"),
    arg("--spec", default=None, help="属性文件，取其锚点图像"),
    arg("--image", default=None, help="锚点图像（PGM/PPM）"),
    arg("--data", default=None, help="查找输入图像的数据集目录"),
])
def bounds(args) -> int:
    """输出界表"""
    table = verification_service.bounds(
        args.model, args.epsilon or DEFAULT_BOUND_EPSILONS, spec_path=args.spec, image_path=args.image,
        data_dir=args.data,
    )
    print(table, end="")
    return 0
