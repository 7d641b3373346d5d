from typing import Tuple

import numpy as np


def mse_loss(pred: np.ndarray, label: np.ndarray) -> float:
    """均方误差：对输出分量取平均，批量输入时再对样本取平均"""
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(label, dtype=np.float64)
    return float(np.mean(diff ** 2))


def mse_per_sample(pred: np.ndarray, label: np.ndarray) -> np.ndarray:
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(label, dtype=np.float64)
    return np.mean(diff ** 2, axis=-1)


def mse_loss_with_grad(pred: np.ndarray, label: np.ndarray) -> Tuple[float, np.ndarray]:
    """批量均方误差及其对预测 (B, D) 的梯度"""
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(label, dtype=np.float64)
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size
