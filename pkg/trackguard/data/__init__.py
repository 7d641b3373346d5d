# 数据包
# 图像读写、预处理、合成赛道生成与数据集目录
from .dataset import Dataset, Sample, load_dataset, write_labels
from .pnm import read_pnm, write_pnm, write_unit_image
from .preprocess import denormalize_label, normalize_label, preprocess_image
from .synthetic import TrackScene, draw_scene, generate_synthetic, render_scene

__all__ = [
    "Dataset",
    "Sample",
    "TrackScene",
    "denormalize_label",
    "draw_scene",
    "generate_synthetic",
    "load_dataset",
    "normalize_label",
    "preprocess_image",
    "read_pnm",
    "render_scene",
    "write_labels",
    "write_pnm",
    "write_unit_image",
]
