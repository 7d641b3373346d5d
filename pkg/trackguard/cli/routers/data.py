from ...models import GenConfig
from ...services import DataService
from ..routing import CommandRouter, arg

router = CommandRouter()

data_service = DataService()


@router.command("gen-data", help="生成合成赛道数据集（PGM/PPM 图像 + labels.csv）", arguments=[
    arg("--out", required=True, help="输出目录"),
    arg("--count", type=int, default=385, help="图像数量"),
    arg("--side", type=int, default=112, help="网络输入边长（像素）"),
    arg("--noise", type=float, default=0.02, help="加性高斯噪声标准差"),
    arg("--color", action="store_true", help="以两倍分辨率写出 RGB(P6) 图像"),
    arg("--seed", type=int, default=0, help="随机种子"),
])
def gen_data(args) -> int:
    """生成数据集"""
    config = GenConfig(count=args.count, side=args.side, noise_sigma=args.noise, color=args.color, seed=args.seed)
    dataset = data_service.generate(config, args.out)
    print(f"wrote {len(dataset)} samples to {args.out}")
    return 0
