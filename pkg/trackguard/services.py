import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .artifacts import ArtifactManager, artifact_manager
from .data import Dataset, generate_synthetic, load_dataset, preprocess_image, read_pnm
from .errors import InstantiationError, SpecError
from .logic import (
    EXACT,
    FUZZY,
    constant_value,
    evaluate_constraint,
    output_variables,
    robustness_body,
    substitute,
)
from .models import EvaluationResult, GenConfig, PgdConfig, RunManifest, TrainConfig, VerifyConfig
from .netcore import Network, init_network, load_weights, save_weights
from .speclang import PropertySpec, VerificationProblem, instantiate, parse_property
from .train import evaluate, pgd_attack, write_metrics_csv
from .train.trainer import Trainer
from .verify import IntervalTensor, Verdict, check_property, format_report, propagate_bounds
from .verify.report import format_bounds_table

# 配置日志
logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def read_property(spec_path: PathLike) -> PropertySpec:
    content = Path(spec_path).read_bytes()
    try:
        text = content.decode("utf-8")
    except UnicodeDecodeError as e:
        line_start = content.rfind(b"\n", 0, e.start) + 1
        raise SpecError("lexical", f"不是 UTF-8 文本（第 {e.start} 字节）", content.count(b"\n", 0, e.start) + 1,
                        e.start - line_start + 1) from None
    return parse_property(text)


def load_property(spec_path: PathLike, net: Network, data_dir: Optional[PathLike] = None,
                  overrides: Optional[Dict[str, float]] = None) -> VerificationProblem:
    """读取属性文件并针对网络实例化；相对图像路径先相对属性文件目录查找，再在数据集目录查找"""
    spec = read_property(spec_path)
    return instantiate(spec, net, data_dir, overrides=overrides, base_dir=Path(spec_path).parent)


class DataService:
    """数据集服务"""

    def generate(self, config: GenConfig, out_dir: PathLike) -> Dataset:
        return generate_synthetic(config, out_dir)

    def load_split(self, data_dir: PathLike, test_dir: Optional[PathLike], test_fraction: float,
                   seed: int, side: Optional[int] = None) -> Tuple[Dataset, Dataset]:
        """训练/测试集：给了测试目录就直接加载，否则按种子从训练目录划分"""
        train_set = load_dataset(data_dir, side)
        if test_dir is not None:
            test_set = load_dataset(test_dir, train_set.side, split="test")
            return train_set, test_set
        return train_set.split_off(test_fraction, seed)


class TrainingService:
    """训练服务

    负责把数据集、约束与训练配置组装起来，训练后写出权重、清单与指标。
    """

    def __init__(self, artifacts: ArtifactManager = artifact_manager):
        self.artifacts = artifacts
        self.data = DataService()

    def train(self, config: TrainConfig, data_dir: PathLike, out: PathLike, *, test_dir: Optional[PathLike] = None,
              test_fraction: float = 0.2, metrics_path: Optional[PathLike] = None,
              spec_path: Optional[PathLike] = None, side: Optional[int] = None) -> RunManifest:
        """
        训练并保存模型

        Args:
            config: 训练配置
            data_dir: 训练数据集目录
            out: 权重文件路径（清单写在同名 .json）
            test_dir: 测试集目录，留空时从训练集划分
            test_fraction: 划分比例
            metrics_path: 指标 CSV 路径
            spec_path: 属性文件，给定时用其约束体训练（半径取 config.pgd.epsilon）
            side: 网络输入边长，默认与数据集一致

        Returns:
            RunManifest: 运行清单
        """
        train_set, test_set = self.data.load_split(data_dir, test_dir, test_fraction, config.seed, side)
        net = init_network(config.seed, train_set.side)
        info = net.get_network_info()
        logger.info(f"网络输入形状 {info['input_shape']}，共 {info['parameters']} 个参数")
        for layer in info["layers"]:
            logger.debug(f"  {layer['kind']}: {layer['parameters']} 个参数")
        options = {}
        body = None
        if spec_path is not None:
            body, options = self.training_constraint(read_property(spec_path))
        trainer = Trainer(config, net, body, **options)

        if metrics_path is not None:
            # 每个 epoch 后重写 CSV，中途中断也保留已完成的行
            history: List = []

            def on_epoch(metrics):
                history.append(metrics)
                write_metrics_csv(metrics_path, history)
        else:
            on_epoch = None
        metrics = trainer.fit(train_set, test_set, on_epoch)
        save_weights(trainer.net, out)
        manifest = RunManifest(
            config=config,
            input_side=train_set.side,
            parameter_counts=trainer.net.parameter_counts(),
            train_samples=len(train_set),
            test_samples=len(test_set),
            metrics=metrics,
        )
        self.artifacts.write_manifest(out, manifest)
        return manifest

    @staticmethod
    def training_constraint(spec: PropertySpec) -> Tuple[object, Dict[str, str]]:
        """训练时每个样本都是球心，属性文件只提供约束体与变量名"""
        body = substitute(spec.body, spec.params)
        extra = set(output_variables(body)) - {spec.var, spec.anchor}
        if extra:
            raise InstantiationError(f"训练约束只能引用量化变量与球心，实际还引用了 {sorted(extra)}")
        return body, {"var": spec.var, "anchor": spec.anchor}

    def evaluate(self, model: PathLike, data_dir: PathLike, pgd: PgdConfig, delta: float,
                 spec_path: Optional[PathLike] = None, sharpness: Optional[float] = None,
                 epsilon: Optional[float] = None) -> EvaluationResult:
        """
        在数据集上评估模型

        Args:
            pgd: PGD 配置（epsilon 字段被 epsilon 参数或属性半径取代）
            delta: 没有属性文件时鲁棒性约束的阈值
            spec_path: 属性文件，给定时用其约束体
            epsilon: PGD 半径，默认取属性半径，再默认取 4/255
        """
        net = load_weights(model)
        dataset = load_dataset(data_dir, net.input_side, split="test")
        if spec_path is not None:
            spec = read_property(spec_path)
            body, options = self.training_constraint(spec)
            radius = constant_value(spec.radius, spec.params) if epsilon is None else epsilon
            pgd = pgd.model_copy(update={"epsilon": radius})
            return evaluate(net, dataset, body, pgd, sharpness=sharpness, **options)
        if epsilon is not None:
            pgd = pgd.model_copy(update={"epsilon": epsilon})
        return evaluate(net, dataset, robustness_body(delta, net.output_dim), pgd, sharpness=sharpness)


@dataclass
class AttackResult:
    counterexample: np.ndarray
    constraint_loss: float
    satisfied: bool
    deviation: float


class VerificationService:
    """验证服务：反例搜索、鲁棒性验证与输出界"""

    def __init__(self, artifacts: ArtifactManager = artifact_manager):
        self.artifacts = artifacts

    def attack(self, model: PathLike, spec_path: PathLike, out: PathLike, pgd: PgdConfig,
               data_dir: Optional[PathLike] = None, sharpness: Optional[float] = None,
               overrides: Optional[Dict[str, float]] = None) -> AttackResult:
        """在属性锚点处做 PGD，写出反例图像"""
        net = load_weights(model)
        problem = load_property(spec_path, net, data_dir, overrides)
        epsilon = problem.epsilon
        x_star = pgd_attack(net, problem.body, problem.anchor, epsilon, pgd.steps, pgd.step_size, pgd.seed,
                            pgd.random_start, var=problem.var, anchor=problem.anchor_name,
                            extra_env=problem.images, sharpness=sharpness)
        env = problem.env(x_star)
        fuzzy = evaluate_constraint(problem.body, env, net, sharpness, mode=FUZZY)
        exact = evaluate_constraint(problem.body, env, net, mode=EXACT)
        deviation = 0.0
        if problem.var in fuzzy.outputs:
            center = net.forward_batch(net.as_batch(problem.anchor, batched=False))
            deviation = float(np.max(np.abs(fuzzy.outputs[problem.var] - center)))
        self.artifacts.write_counterexample(out, x_star)
        return AttackResult(x_star, float(fuzzy.loss[0]), bool(exact.truth[0]), deviation)

    def verify(self, model: PathLike, spec_path: PathLike, config: VerifyConfig, data_dir: Optional[PathLike] = None,
               report_path: Optional[PathLike] = None,
               counterexample_path: Optional[PathLike] = None,
               overrides: Optional[Dict[str, float]] = None) -> Tuple[Verdict, str]:
        """
        验证属性并生成报告

        Returns:
            (Verdict, 报告文本)；falsified 时反例写在报告旁边
        """
        net = load_weights(model)
        problem = load_property(spec_path, net, data_dir, overrides)
        verdict = check_property(net, problem.body, problem.anchor, problem.epsilon, config, var=problem.var,
                                 anchor=problem.anchor_name, extra_env=problem.images, delta=problem.delta)
        written = None
        if verdict.falsified:
            written = self.artifacts.write_counterexample(
                counterexample_path or self.artifacts.default_counterexample_path(report_path),
                verdict.counterexample,
            )
        report = format_report(verdict, net.input_side, written)
        if report_path is not None:
            self.artifacts.write_text(report_path, report)
        return verdict, report

    def bounds(self, models: Sequence[PathLike], epsilons: Sequence[float], *, spec_path: Optional[PathLike] = None,
               image_path: Optional[PathLike] = None, data_dir: Optional[PathLike] = None) -> str:
        """多个模型在多个 epsilon 下的像素输出界表"""
        nets = [load_weights(m) for m in models]
        anchors = [self._anchor(net, spec_path, image_path, data_dir) for net in nets]
        rows = []
        for epsilon in epsilons:
            rows.append([propagate_bounds(net, IntervalTensor.ball(x0, epsilon)) for net, x0 in zip(nets, anchors)])
        names = [Path(m).stem for m in models]
        return format_bounds_table(epsilons, names, rows, nets[0].input_side)

    @staticmethod
    def _anchor(net: Network, spec_path, image_path, data_dir) -> np.ndarray:
        if image_path is not None:
            return preprocess_image(read_pnm(image_path), net.input_side)
        if spec_path is not None:
            return load_property(spec_path, net, data_dir).anchor
        raise InstantiationError("需要 --spec 或 --image 指定锚点图像")
