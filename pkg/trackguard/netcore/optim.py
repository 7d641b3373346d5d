from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from ..errors import ShapeMismatchError
from ..models import OptimizerConfig
from .network import Gradients, Network


@dataclass
class OptimizerState:
    """优化器状态：一阶/二阶矩累积量、步数与超参数"""

    config: OptimizerConfig
    first_moments: List[Dict[str, np.ndarray]] = field(default_factory=list)
    second_moments: List[Dict[str, np.ndarray]] = field(default_factory=list)
    step: int = 0

    @classmethod
    def create(cls, net: Network, config: OptimizerConfig = OptimizerConfig()) -> "OptimizerState":
        zeros = [{n: np.zeros(p.shape) for n, p in layer.params.items()} for layer in net.layers]
        return cls(
            config=config,
            first_moments=zeros,
            second_moments=[{n: z.copy() for n, z in layer.items()} for layer in zeros],
        )


def optimizer_step(net: Network, grads: Gradients, state: OptimizerState) -> Tuple[Network, OptimizerState]:
    """按梯度原地更新网络参数

    Adam 使用带偏差修正的矩估计；SGD 直接按学习率下降。

    Args:
        net: 网络（参数被原地修改）
        grads: 与网络参数同形的梯度
        state: 优化器状态（原地更新）

    Returns:
        更新后的网络与状态
    """
    cfg = state.config
    state.step += 1
    t = state.step
    for index, name, grad in grads:
        layer = net.layers[index]
        param = layer.params[name]
        if grad.shape != param.shape:
            raise ShapeMismatchError(f"第 {index} 层 {name} 梯度形状 {grad.shape} 与参数 {param.shape} 不一致")
        if cfg.kind == "sgd":
            update = cfg.learning_rate * grad
        else:
            m = state.first_moments[index][name]
            v = state.second_moments[index][name]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * grad
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * grad ** 2
            m_hat = m / (1.0 - cfg.beta1 ** t)
            v_hat = v / (1.0 - cfg.beta2 ** t)
            update = cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
        layer.params[name] = (param.astype(np.float64) - update).astype(param.dtype)
    return net, state
