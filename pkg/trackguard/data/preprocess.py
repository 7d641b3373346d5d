from typing import Tuple

import numpy as np

from ..errors import ShapeMismatchError

LUMA = np.array([0.299, 0.587, 0.114])


def preprocess_image(raw: np.ndarray, side: int = 112) -> np.ndarray:
    """把原始图像转换为网络输入

    彩色图按 0.299R + 0.587G + 0.114B 转灰度，每次 2x2 均值池化把边长减半直到 side，最后除以 255。

    Args:
        raw: (H, W, 3) 或 (H, W) 数组，数值 0..255
        side: 目标边长

    Returns:
        np.ndarray: (side, side) 的 float32 数组，取值 [0, 1]

    Raises:
        ShapeMismatchError: 边长不是 side 的 2 的幂倍
    """
    image = np.asarray(raw, dtype=np.float64)
    original = image.shape[0] if image.ndim else 0
    if image.ndim == 3 and image.shape[2] == 3:
        image = image @ LUMA
    elif image.ndim != 2:
        raise ShapeMismatchError(f"不支持的图像形状 {image.shape}")
    if image.shape[0] != image.shape[1]:
        raise ShapeMismatchError(f"图像必须是方形，实际 {image.shape[:2]}")
    size = image.shape[0]
    while size > side and size % 2 == 0:
        image = image.reshape(size // 2, 2, size // 2, 2).mean(axis=(1, 3))
        size //= 2
    if size != side:
        raise ShapeMismatchError(f"图像边长 {original} 不是 {side} 的 2 的幂倍")
    return np.clip(image / 255.0, 0.0, 1.0).astype(np.float32)


def normalize_label(pixels: Tuple[float, float], side: int = 112) -> np.ndarray:
    """像素坐标 -> [-1, 1]：p / (side/2) - 1"""
    return np.asarray(pixels, dtype=np.float64) / (side / 2.0) - 1.0


def denormalize_label(norm: np.ndarray, side: int = 112) -> np.ndarray:
    """[-1, 1] -> 像素坐标"""
    return (np.asarray(norm, dtype=np.float64) + 1.0) * (side / 2.0)
