import logging
from typing import Any, Mapping, Optional

import numpy as np

from ..data import Dataset
from ..logic import EXACT, evaluate_constraint
from ..models import EvaluationResult, PgdConfig
from ..netcore import Network
from .losses import mse_per_sample
from .pgd import pgd_attack_batch

logger = logging.getLogger(__name__)

EVAL_CHUNK = 64


def evaluate(net: Network, dataset: Dataset, body, pgd: PgdConfig = PgdConfig(), *, var: str = "x",
             anchor: str = "x0", extra_env: Optional[Mapping[str, Any]] = None,
             sharpness: Optional[float] = None) -> EvaluationResult:
    """在数据集上评估预测损失与约束准确率

    约束准确率是 PGD 找到的 x* 处经典语义成立的样本比例；同时给出 x* 处的预测损失。

    Args:
        net: 网络
        dataset: 非空数据集
        body: 约束公式（每个样本作为锚点）
        pgd: 评估用的 PGD 配置
        var: 扰动变量名
        anchor: 锚点变量名

    Returns:
        EvaluationResult: 评估结果
    """
    p_losses, adv_losses, satisfied = [], [], 0
    for start in range(0, len(dataset), EVAL_CHUNK):
        indices = list(range(start, min(start + EVAL_CHUNK, len(dataset))))
        images, labels = dataset.images(indices), dataset.labels(indices)
        p_losses.append(mse_per_sample(net.forward_batch(images), labels))
        x_star, _ = pgd_attack_batch(
            net, body, images, pgd.epsilon, pgd.steps, pgd.step_size, [pgd.seed, start], pgd.random_start,
            var=var, anchor=anchor, extra_env=extra_env, sharpness=sharpness,
        )
        env = dict(extra_env or {})
        env.update({var: x_star, anchor: images})
        exact = evaluate_constraint(body, env, net, mode=EXACT, batched=True)
        satisfied += int(np.count_nonzero(exact.truth))
        adv_losses.append(mse_per_sample(exact.outputs[var], labels) if var in exact.outputs
                          else mse_per_sample(net.forward_batch(x_star), labels))
    result = EvaluationResult(
        p_loss=float(np.mean(np.concatenate(p_losses))),
        c_acc=satisfied / len(dataset),
        adversarial_p_loss=float(np.mean(np.concatenate(adv_losses))),
    )
    logger.debug(f"评估 {len(dataset)} 个样本: {result}")
    return result
