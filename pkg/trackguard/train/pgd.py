import logging
from typing import Any, Mapping, Optional, Tuple

import numpy as np

from ..logic import FUZZY, SURROGATE, evaluate_constraint, resolve_sharpness
from ..netcore import Network

logger = logging.getLogger(__name__)


def attack_box(x0: np.ndarray, epsilon: float, lower: Optional[np.ndarray] = None,
               upper: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """L∞ 球与 [0,1] 像素范围（以及可选子盒）的交"""
    x0 = np.asarray(x0, dtype=np.float64)
    lo = np.maximum(x0 - epsilon, 0.0)
    hi = np.minimum(x0 + epsilon, 1.0)
    if lower is not None:
        lo = np.maximum(lo, lower)
    if upper is not None:
        hi = np.minimum(hi, upper)
    return lo, np.maximum(hi, lo)


def pgd_attack_batch(net: Network, body, anchors: np.ndarray, epsilon: float, steps: int = 10,
                     step_size: Optional[float] = None, seed: Any = 0, random_start: bool = False, *,
                     var: str = "x", anchor: str = "x0", extra_env: Optional[Mapping[str, Any]] = None,
                     sharpness: Optional[float] = None, abs_tiebreak: float = 1.0,
                     lower: Optional[np.ndarray] = None, upper: Optional[np.ndarray] = None,
                     ) -> Tuple[np.ndarray, np.ndarray]:
    """对一批锚点同时做 PGD 反例搜索

    沿不截断约束损失梯度的符号上升并投影回搜索盒，返回每个样本约束损失最大的迭代点
    （损失相同时取不截断损失更大者）。

    Args:
        net: 网络快照（只读）
        body: 约束公式，var 为扰动变量，anchor 为锚点
        anchors: 锚点图像 (B, ...)
        epsilon: L∞ 半径
        steps: 迭代步数
        step_size: 步长，默认 epsilon / 4
        seed: 随机起点的种子（可为整数序列）
        random_start: 是否从盒内均匀随机点出发
        extra_env: 其他标量参数或图像绑定
        abs_tiebreak: abs 在 0 处的次梯度
        lower: 可选的子盒下界（按样本形状广播）
        upper: 可选的子盒上界

    Returns:
        (x*, 约束损失)：x* 为 float64 (B, ...)，损失为 (B,)
    """
    anchors = np.asarray(anchors, dtype=np.float64)
    lo, hi = attack_box(anchors, epsilon, lower, upper)
    alpha = epsilon / 4.0 if step_size is None else step_size
    env = dict(extra_env or {})
    env[anchor] = anchors
    gamma = resolve_sharpness(sharpness, body, env)
    fixed = {anchor: net.forward_batch(anchors)}
    x = np.random.default_rng(seed).uniform(lo, hi) if random_start else np.clip(anchors, lo, hi)

    best_x = x.copy()
    best_loss = np.full(len(anchors), -np.inf)
    best_surrogate = np.full(len(anchors), -np.inf)
    for step in range(steps + 1):
        env[var] = x
        last = step == steps or alpha == 0
        surrogate = evaluate_constraint(body, env, net, gamma, mode=SURROGATE, batched=True,
                                        fixed_outputs=fixed, abs_tiebreak=abs_tiebreak, input_grads=not last)
        fuzzy = evaluate_constraint(body, env, net, gamma, mode=FUZZY, batched=True,
                                    fixed_outputs={**fixed, **surrogate.outputs})
        better = (fuzzy.loss > best_loss) | ((fuzzy.loss == best_loss) & (surrogate.loss > best_surrogate))
        best_x[better] = x[better]
        best_loss = np.where(better, fuzzy.loss, best_loss)
        best_surrogate = np.where(better, surrogate.loss, best_surrogate)
        if last:
            break
        grad = surrogate.input_grads.get(var)
        if grad is None:
            break
        x = np.clip(x + alpha * np.sign(grad.reshape(x.shape)), lo, hi)
    logger.debug(f"PGD 完成: {len(anchors)} 个样本，最大约束损失 {float(best_loss.max()):.6g}")
    return best_x, best_loss


def pgd_attack(net: Network, body, x0: np.ndarray, epsilon: float, steps: int = 10,
               step_size: Optional[float] = None, seed: Any = 0, random_start: bool = False,
               **options) -> np.ndarray:
    """单个锚点的 PGD 反例搜索，返回 ||x* - x0||∞ <= epsilon 的 x*（float64）"""
    x0 = np.asarray(x0, dtype=np.float64)
    if options.get("lower") is not None:
        options["lower"] = np.asarray(options["lower"])[None]
    if options.get("upper") is not None:
        options["upper"] = np.asarray(options["upper"])[None]
    best, _ = pgd_attack_batch(net, body, x0[None], epsilon, steps, step_size, seed, random_start, **options)
    return best[0]
