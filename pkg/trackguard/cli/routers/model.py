from pathlib import Path

from ...models import GradNormConfig, OptimizerConfig, PgdConfig, TrainConfig
from ...netcore import load_weights
from ...artifacts import artifact_manager
from ...services import TrainingService
from ..routing import CommandRouter, arg
from .common import pgd_arguments, pgd_config

router = CommandRouter()

training_service = TrainingService()

DEFAULT_EPSILON_TRAIN = 4.0 / 255.0


@router.command("train", help="训练网络（--constrained 启用约束训练）", arguments=[
    arg("--data", required=True, help="训练数据集目录"),
    arg("--test-data", default=None, help="测试数据集目录，留空时从训练集划分"),
    arg("--test-fraction", type=float, default=0.2, help="划分给测试集的比例"),
    arg("--side", type=int, default=None, help="网络输入边长，默认与数据集一致"),
    arg("--epochs", type=int, default=100, help="训练轮数"),
    arg("--batch", type=int, default=16, help="批大小"),
    arg("--constrained", action="store_true", help="加入约束损失（PGD 反例 + GradNorm）"),
    arg("--delta", type=float, default=0.1, help="鲁棒性约束的输出阈值"),
    arg("--epsilon-train", type=float, default=DEFAULT_EPSILON_TRAIN, help="训练与评估用的 PGD 半径"),
    *pgd_arguments(),
    arg("--alpha", type=float, default=1.5, help="GradNorm 非对称系数"),
    arg("--gradnorm-lr", type=float, default=0.025, help="GradNorm 权重学习率"),
    arg("--max-lambda", type=float, default=2.0, help="λ = w1/w0 的上限，0 表示不设上限"),
    arg("--optimizer", choices=["adam", "sgd"], default="adam", help="优化器"),
    arg("--lr", type=float, default=1e-3, help="学习率"),
    arg("--spec", default=None, help="属性文件，用其约束体代替默认鲁棒性约束"),
    arg("--out", required=True, help="输出权重文件（.nnw），清单写在同名 .json"),
    arg("--metrics", default=None, help="指标 CSV 路径"),
    arg("--seed", type=int, default=0, help="随机种子"),
])
def train(args) -> int:
    """训练模型"""
    pgd = PgdConfig(epsilon=args.epsilon_train, steps=args.pgd_steps, step_size=args.pgd_step_size,
                    random_start=True, seed=args.seed)
    config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        constrained=args.constrained,
        delta=args.delta,
        sharpness=args.sharpness,
        pgd=pgd,
        eval_pgd=pgd.model_copy(update={"random_start": False}),
        gradnorm=GradNormConfig(alpha=args.alpha, learning_rate=args.gradnorm_lr,
                                max_lambda=args.max_lambda or None),
        optimizer=OptimizerConfig(kind=args.optimizer, learning_rate=args.lr),
        seed=args.seed,
    )
    manifest = training_service.train(
        config, args.data, args.out, test_dir=args.test_data, test_fraction=args.test_fraction,
        metrics_path=args.metrics, spec_path=args.spec, side=args.side,
    )
    last = manifest.metrics[-1]
    print(f"Train-P-Loss: {last.train_p_loss:.8g}")
    print(f"Test-P-Loss: {last.test_p_loss:.8g}")
    print(f"Test-C-Acc: {last.test_c_acc:.8g}")
    print(f"saved model to {args.out}")
    return 0


@router.command("eval", help="评估预测损失与约束准确率", arguments=[
    arg("--model", required=True, help="权重文件"),
    arg("--data", required=True, help="数据集目录"),
    arg("--spec", default=None, help="属性文件，用其约束体代替默认鲁棒性约束"),
    arg("--delta", type=float, default=0.1, help="鲁棒性约束的输出阈值"),
    arg("--epsilon", type=float, default=None, help="PGD 半径，默认取属性半径或 4/255"),
    *pgd_arguments(random_start=True),
    arg("--seed", type=int, default=0, help="随机种子"),
])
def evaluate(args) -> int:
    """评估模型"""
    epsilon = args.epsilon if args.epsilon is not None or args.spec else DEFAULT_EPSILON_TRAIN
    result = training_service.evaluate(args.model, args.data, pgd_config(args), args.delta, args.spec,
                                       args.sharpness, epsilon)
    print(f"Test-P-Loss: {result.p_loss:.8g}")
    print(f"Test-C-Acc: {result.c_acc:.8g}")
    print(f"Adv-P-Loss: {result.adversarial_p_loss:.8g}")
    return 0


@router.command("export-weights", help="把 NNW 权重导出为 npz 或 json", arguments=[
    arg("--model", required=True, help="权重文件"),
    arg("--out", required=True, help="输出文件"),
    arg("--format", choices=["npz", "json"], default=None, help="导出格式，默认按输出后缀判断"),
])
def export_weights(args) -> int:
    """导出权重"""
    fmt = args.format or ("json" if Path(args.out).suffix.lower() == ".json" else "npz")
    net = load_weights(args.model)
    artifact_manager.export_weights(net, args.out, fmt)
    print(f"exported {sum(net.parameter_counts())} parameters to {args.out}")
    return 0
