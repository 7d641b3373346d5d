import logging
import math
from typing import Any, Callable, List, Mapping, Optional, Tuple

import numpy as np

from ..data import Dataset
from ..errors import TrackGuardError
from ..logic import FUZZY, evaluate_constraint, resolve_sharpness, robustness_body
from ..models import EpochMetrics, GradNormState, LossBreakdown, TrainConfig
from ..netcore import ForwardTrace, Network, OptimizerState, init_network, optimizer_step
from .evaluation import evaluate
from .gradnorm import gradnorm_update
from .losses import mse_loss_with_grad
from .pgd import attack_box, pgd_attack_batch

logger = logging.getLogger(__name__)


def steps_per_epoch(samples: int, batch_size: int) -> int:
    return math.ceil(samples / batch_size)


class Trainer:
    """训练循环

    vanilla 模式只最小化 L_MSE；constrained 模式每个批次先用 PGD 在参数更新前的网络上找反例 x*，
    在 x* 处计算约束损失（x* 不参与 L_MSE），再用 GradNorm 权重合并两个梯度后做一步优化。
    """

    def __init__(self, config: TrainConfig, net: Network, body=None, *, var: str = "x", anchor: str = "x0",
                 extra_env: Optional[Mapping[str, Any]] = None):
        self.config = config
        self.net = net
        self.body = body if body is not None else robustness_body(config.delta, net.output_dim, var=var, anchor=anchor)
        self.var = var
        self.anchor = anchor
        self.extra_env = dict(extra_env or {})
        self.sharpness = resolve_sharpness(config.sharpness, self.body, self.extra_env)
        self.optimizer = OptimizerState.create(net, config.optimizer)
        self.gradnorm = GradNormState()
        self.steps_taken = 0

    def _constraint_env(self, x: np.ndarray, anchors: np.ndarray) -> dict:
        env = dict(self.extra_env)
        env.update({self.var: x, self.anchor: anchors})
        return env

    def train_batch(self, images: np.ndarray, labels: np.ndarray, rng_seed: List[int]) -> LossBreakdown:
        """一个批次的前向、反向与参数更新"""
        cfg = self.config
        trace = ForwardTrace()
        pred = self.net.forward_batch(images, trace)
        mse, mse_upstream = mse_loss_with_grad(pred, labels)
        mse_grads, _ = self.net.backward_trace(trace, mse_upstream)

        if not cfg.constrained:
            # 只报告：球内均匀随机点处的约束损失，不求导
            lo, hi = attack_box(images, cfg.pgd.epsilon)
            sampled = np.random.default_rng(rng_seed).uniform(lo, hi)
            phi = evaluate_constraint(self.body, self._constraint_env(sampled, images), self.net, self.sharpness,
                                      batched=True)
            self.apply_gradients(mse_grads)
            return LossBreakdown(prediction_loss=mse, constraint_loss=float(np.mean(phi.loss)), combined=mse)

        pgd = cfg.pgd
        x_star, _ = pgd_attack_batch(
            self.net, self.body, images, pgd.epsilon, pgd.steps, pgd.step_size, rng_seed, pgd.random_start,
            var=self.var, anchor=self.anchor, extra_env=self.extra_env, sharpness=self.sharpness,
        )
        phi = evaluate_constraint(self.body, self._constraint_env(x_star, images), self.net, self.sharpness,
                                  mode=FUZZY, batched=True, parameter_grads=True)
        phi_loss = float(np.mean(phi.loss))
        w0, w1 = self.gradnorm.weights
        shared = self.net.last_parametric_index()
        self.gradnorm = gradnorm_update(
            self.gradnorm,
            [mse, phi_loss],
            [mse_grads.tensors[shared]["weight"], phi.parameter_grads.tensors[shared]["weight"]],
            cfg.gradnorm,
        )
        self.apply_gradients(mse_grads.scaled(w0) + phi.parameter_grads.scaled(w1))
        return LossBreakdown(prediction_loss=mse, constraint_loss=phi_loss, combined=w0 * mse + w1 * phi_loss)

    def apply_gradients(self, grads) -> None:
        optimizer_step(self.net, grads, self.optimizer)
        self.steps_taken += 1

    def train_epoch(self, epoch: int, train_set: Dataset) -> Tuple[float, float]:
        """一个 epoch；返回按样本数加权的平均 (L_MSE, L_phi)"""
        order = np.random.default_rng([self.config.seed, epoch]).permutation(len(train_set))
        batch_size = self.config.batch_size
        p_total = c_total = 0.0
        for batch_index in range(steps_per_epoch(len(train_set), batch_size)):
            indices = order[batch_index * batch_size:(batch_index + 1) * batch_size]
            losses = self.train_batch(
                train_set.images(indices),
                train_set.labels(indices),
                [self.config.pgd.seed, self.config.seed, epoch, batch_index],
            )
            p_total += losses.prediction_loss * len(indices)
            c_total += losses.constraint_loss * len(indices)
            logger.debug(f"epoch {epoch} batch {batch_index}: {losses}")
        return p_total / len(train_set), c_total / len(train_set)

    def fit(self, train_set: Dataset, test_set: Dataset,
            on_epoch: Optional[Callable[[EpochMetrics], None]] = None) -> List[EpochMetrics]:
        if len(train_set) == 0 or len(test_set) == 0:
            raise TrackGuardError("训练集和测试集都不能为空", component="train")
        history = []
        mode = "constrained" if self.config.constrained else "vanilla"
        logger.info(f"开始训练（{mode}）: {len(train_set)} 训练样本, {len(test_set)} 测试样本, "
                    f"{self.config.epochs} epochs, batch {self.config.batch_size}")
        for epoch in range(1, self.config.epochs + 1):
            train_p, train_c = self.train_epoch(epoch, train_set)
            result = evaluate(self.net, test_set, self.body, self.config.eval_pgd, var=self.var, anchor=self.anchor,
                              extra_env=self.extra_env, sharpness=self.sharpness)
            metrics = EpochMetrics(
                epoch=epoch,
                train_p_loss=train_p,
                train_c_loss=train_c,
                test_p_loss=result.p_loss,
                test_c_acc=result.c_acc,
                lambda_=self.gradnorm.lambda_ if self.config.constrained else 0.0,
            )
            history.append(metrics)
            logger.info(
                f"epoch {epoch}/{self.config.epochs}: Train-P-Loss={train_p:.6g} Train-C-Loss={train_c:.6g} "
                f"Test-P-Loss={result.p_loss:.6g} Test-C-Acc={result.c_acc:.4f} lambda={metrics.lambda_:.4g}"
            )
            if on_epoch is not None:
                on_epoch(metrics)
        return history


def train_epochs(config: TrainConfig, train_set: Dataset, test_set: Dataset, body=None,
                 net: Optional[Network] = None, **options) -> Tuple[Network, List[EpochMetrics]]:
    """训练网络

    Args:
        config: 训练配置
        train_set: 训练集
        test_set: 测试集
        body: 约束公式，默认是每个输出分量的鲁棒性约束（阈值 config.delta）
        net: 初始网络，默认按 config.seed 初始化与数据集边长相同的标准结构
        **options: 传给 Trainer 的变量名与额外绑定

    Returns:
        训练后的网络与每个 epoch 的指标
    """
    if net is None:
        net = init_network(config.seed, train_set.side)
    trainer = Trainer(config, net, body, **options)
    history = trainer.fit(train_set, test_set)
    return trainer.net, history
