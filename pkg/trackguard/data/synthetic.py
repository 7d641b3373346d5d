import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..models import GenConfig
from .dataset import Dataset, Sample, write_labels
from .pnm import write_pnm
from .preprocess import preprocess_image

logger = logging.getLogger(__name__)

# 未乘亮度系数前各区域的灰度范围
BACKGROUND_LEVEL = (0.45, 0.65)
ROAD_LEVEL = (0.12, 0.32)
# 中心线峰值乘以最大亮度系数后仍低于 1，避免饱和
LINE_LEVEL = (0.74, 0.8)


@dataclass
class TrackScene:
    """一张合成图像的场景参数（网络分辨率下的像素单位）"""

    center_x: float  # 中心线与参考行交点的列坐标
    reference_y: float  # 参考行
    angle: float  # 弧度，相对竖直方向
    track_width: float
    line_width: float
    background: float
    road: float
    line: float
    brightness: float
    tint: np.ndarray  # 彩色图像各通道系数

    @property
    def label(self):
        return (self.center_x, self.reference_y)


def draw_scene(cfg: GenConfig, rng: np.random.Generator) -> TrackScene:
    """按配置随机抽取一个场景"""
    return TrackScene(
        center_x=cfg.side / 2.0 + rng.uniform(*cfg.offset),
        reference_y=cfg.reference_row * cfg.side,
        angle=np.deg2rad(rng.uniform(*cfg.angle)),
        track_width=rng.uniform(*cfg.track_width),
        line_width=rng.uniform(*cfg.line_width),
        background=rng.uniform(*BACKGROUND_LEVEL),
        road=rng.uniform(*ROAD_LEVEL),
        line=rng.uniform(*LINE_LEVEL),
        brightness=rng.uniform(*cfg.brightness),
        tint=rng.uniform(0.9, 1.1, size=3),
    )


def render_scene(scene: TrackScene, side: int, scale: int = 1) -> np.ndarray:
    """渲染无噪声灰度图像

    像素 (i, j) 的中心位于 (x=j, y=i)。路面边缘按覆盖率抗锯齿，中心线为高斯截面，
    因此路面内每一行最亮的列就是离中心线最近的列。

    Args:
        scene: 场景参数
        side: 网络分辨率边长
        scale: 渲染倍数（彩色存储时为 2）

    Returns:
        np.ndarray: (side*scale, side*scale) 的 [0,1] 灰度数组
    """
    size = side * scale
    coords = (np.arange(size) + 0.5) / scale - 0.5
    ys, xs = np.meshgrid(coords, coords, indexing="ij")
    distance = np.abs((xs - scene.center_x) * np.cos(scene.angle) - (ys - scene.reference_y) * np.sin(scene.angle))
    road_cover = np.clip(scene.track_width / 2.0 - distance + 0.5, 0.0, 1.0)
    line_cover = np.exp(-0.5 * (distance / (scene.line_width / 2.0)) ** 2)
    image = scene.background * (1.0 - road_cover) + scene.road * road_cover
    image = image * (1.0 - line_cover) + scene.line * line_cover
    return np.clip(image * scene.brightness, 0.0, 1.0)


def generate_synthetic(cfg: GenConfig, out_dir: Optional[Union[str, Path]] = None) -> Dataset:
    """生成合成赛道数据集

    每张图是较暗路面上的一条亮中心线，角度、偏移、宽度、亮度、噪声随机；
    标签是中心线与参考行（默认 75% 高度）的交点。同一种子结果逐位相同。

    Args:
        cfg: 生成配置
        out_dir: 给定时写出图像文件与 labels.csv

    Returns:
        Dataset: 数据集（图像为网络分辨率、标签为网络分辨率像素）
    """
    rng = np.random.default_rng(cfg.seed)
    scale = 2 if cfg.color else 1
    samples = []
    stored = []
    for index in range(cfg.count):
        scene = draw_scene(cfg, rng)
        gray = render_scene(scene, cfg.side, scale)
        if cfg.noise_sigma > 0:
            gray = gray + rng.normal(0.0, cfg.noise_sigma, size=gray.shape)
        gray = np.clip(gray, 0.0, 1.0)
        if cfg.color:
            raster = np.clip(np.rint(gray[..., None] * scene.tint * 255.0), 0, 255)
            filename = f"image_{index}.ppm"
        else:
            raster = np.rint(gray * 255.0)
            filename = f"image_{index}.pgm"
        image = preprocess_image(raster, cfg.side)
        samples.append(Sample(image=image, label_pixels=scene.label, filename=filename))
        stored.append((filename, raster, (scene.center_x * scale, scene.reference_y * scale)))
    dataset = Dataset(samples=samples, side=cfg.side)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for filename, raster, _ in stored:
            write_pnm(out_dir / filename, raster)
        write_labels(out_dir, [(name, label) for name, _, label in stored])
        logger.info(f"已生成 {cfg.count} 张图像到 {out_dir}")
    return dataset
