import logging
from typing import Sequence

import numpy as np

from ..models import GradNormConfig, GradNormState

logger = logging.getLogger(__name__)

MIN_WEIGHT = 1e-4
MIN_INITIAL_LOSS = 1e-12


def gradnorm_update(state: GradNormState, losses: Sequence[float], shared_grads: Sequence[np.ndarray],
                    config: GradNormConfig = GradNormConfig()) -> GradNormState:
    """一步 GradNorm 任务权重更新

    G_i = w_i * ||∇_W L_i||（W 为共享层，即最后一个全连接层的权重），
    目标 Ḡ * r_i^alpha 视为常数，对 |G_i - 目标| 做一步次梯度下降，
    之后截断到不小于 1e-4，约束项权重截断到不超过 max_lambda * w0，
    最后归一化使权重之和等于任务数。

    Args:
        state: 当前状态，首次调用时记录初始损失
        losses: 各任务未加权的损失
        shared_grads: 各任务未加权损失对共享层权重的梯度
        config: alpha、权重学习率与 λ 上限

    Returns:
        GradNormState: 新状态
    """
    losses = np.asarray(losses, dtype=np.float64)
    if not np.all(np.isfinite(losses)):
        raise ValueError(f"GradNorm 收到非有限损失: {losses.tolist()}")
    initial = np.asarray(state.initial_losses if state.initial_losses is not None else losses, dtype=np.float64)
    weights = np.asarray(state.weights, dtype=np.float64)
    norms = np.array([np.linalg.norm(np.asarray(g, dtype=np.float64)) for g in shared_grads])

    ratios = np.where(initial < MIN_INITIAL_LOSS, 1.0, losses / np.maximum(initial, MIN_INITIAL_LOSS))
    mean_ratio = ratios.mean()
    rates = ratios / mean_ratio if mean_ratio > 0 else np.ones_like(ratios)
    g = weights * norms
    targets = g.mean() * rates ** config.alpha

    weights = weights - config.learning_rate * np.sign(g - targets) * norms
    weights = np.maximum(weights, MIN_WEIGHT)
    if config.max_lambda is not None:
        # λ ≤ max_lambda
        weights[1:] = np.minimum(weights[1:], weights[0] * config.max_lambda)
    weights = weights * (len(weights) / weights.sum())
    logger.debug(f"GradNorm: G={g.tolist()} 目标={targets.tolist()} 新权重={weights.tolist()}")
    return GradNormState(weights=weights.tolist(), initial_losses=initial.tolist(), step=state.step + 1)
