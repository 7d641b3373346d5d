import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import DatasetError, ShapeMismatchError
from .pnm import read_pnm
from .preprocess import normalize_label, preprocess_image

logger = logging.getLogger(__name__)

LABELS_FILE = "labels.csv"
LABELS_HEADER = ["filename", "x", "y"]
CANONICAL_SIDE = 112


@dataclass
class Sample:
    """一个样本：网络分辨率的灰度图像与赛道中心标签"""

    image: np.ndarray  # (side, side) float32，取值 [0,1]
    label_pixels: Tuple[float, float]  # 网络分辨率下的像素坐标
    filename: str = ""

    def label_norm(self, side: Optional[int] = None) -> np.ndarray:
        return normalize_label(self.label_pixels, side or self.image.shape[0])


@dataclass
class Dataset:
    """样本集合，所有图像形状相同"""

    samples: List[Sample]
    side: int = CANONICAL_SIDE
    split: str = "train"
    directory: Optional[Path] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.samples:
            raise DatasetError("数据集为空")
        shapes = {s.image.shape for s in self.samples}
        if shapes != {(self.side, self.side)}:
            raise ShapeMismatchError(f"图像形状不一致: {sorted(shapes)}，期望 {(self.side, self.side)}")

    def __len__(self) -> int:
        return len(self.samples)

    def images(self, indices: Optional[Sequence[int]] = None) -> np.ndarray:
        chosen = self.samples if indices is None else [self.samples[i] for i in indices]
        return np.stack([s.image for s in chosen])

    def labels(self, indices: Optional[Sequence[int]] = None) -> np.ndarray:
        """归一化标签 (N, 2)"""
        chosen = self.samples if indices is None else [self.samples[i] for i in indices]
        return np.stack([s.label_norm(self.side) for s in chosen])

    def split_off(self, test_fraction: float, seed: int) -> Tuple["Dataset", "Dataset"]:
        """按种子随机划分训练集与测试集（两者都非空）"""
        if len(self) < 2:
            raise DatasetError("样本少于 2 个，无法划分训练/测试集")
        order = np.random.default_rng(seed).permutation(len(self))
        n_test = min(len(self) - 1, max(1, int(round(len(self) * test_fraction))))
        test = [self.samples[i] for i in sorted(order[:n_test])]
        train = [self.samples[i] for i in sorted(order[n_test:])]
        return Dataset(train, self.side, "train", self.directory), Dataset(test, self.side, "test", self.directory)


def write_labels(directory: Path, rows: Sequence[Tuple[str, Tuple[float, float]]]) -> None:
    """写 labels.csv（坐标为存储分辨率像素，repr 保证精确往返）"""
    with open(directory / LABELS_FILE, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(LABELS_HEADER)
        for filename, (x, y) in rows:
            writer.writerow([filename, repr(float(x)), repr(float(y))])


def _target_side(raw: np.ndarray, side: Optional[int]) -> int:
    """彩色图像按两倍分辨率存储，灰度图像按网络分辨率存储"""
    if side is not None:
        return side
    height = raw.shape[0]
    return height // 2 if raw.ndim == 3 and height % 2 == 0 else height


def load_dataset(directory: Union[str, Path], side: Optional[int] = None, split: str = "train") -> Dataset:
    """加载数据集目录

    Args:
        directory: 包含 labels.csv 与图像文件的目录
        side: 网络输入边长；留空时灰度图取存储边长，彩色图取存储边长的一半
        split: 数据集标签（train/test）

    Returns:
        Dataset: 按 labels.csv 行顺序排列的样本

    Raises:
        DatasetError: 文件缺失、CSV 行格式错误或标签越界，错误中带行号
    """
    directory = Path(directory)
    labels_path = directory / LABELS_FILE
    if not labels_path.is_file():
        raise DatasetError(f"缺少 {LABELS_FILE}: {directory}", path=str(labels_path))
    samples = []
    content = labels_path.read_bytes()
    try:
        text = content.decode("utf-8")
    except UnicodeDecodeError as e:
        row = content[:e.start].count(b"\n") + 1
        raise DatasetError(f"不是 UTF-8 文本（第 {e.start} 字节）", row=row, path=str(labels_path)) from None
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != LABELS_HEADER:
        raise DatasetError(f"表头应为 {','.join(LABELS_HEADER)}，实际 {header}", row=1)
    for row_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise DatasetError(f"应有 3 列，实际 {len(row)} 列", row=row_number)
        filename = row[0].strip()
        try:
            x, y = float(row[1]), float(row[2])
        except ValueError:
            raise DatasetError(f"坐标不是数值: {row[1:]}", row=row_number) from None
        image_path = directory / filename
        if not image_path.is_file():
            raise DatasetError(f"引用的图像不存在: {filename}", row=row_number, path=str(image_path))
        raw = read_pnm(image_path)
        height, width = raw.shape[:2]
        if not (0.0 <= x <= width and 0.0 <= y <= height):
            raise DatasetError(f"标签 ({x}, {y}) 超出图像范围 [0, {width}]x[0, {height}]", row=row_number)
        target = _target_side(raw, side)
        try:
            image = preprocess_image(raw, target)
        except ShapeMismatchError as e:
            raise DatasetError(f"{filename}: {e}", row=row_number) from None
        factor = target / height
        samples.append(Sample(image=image, label_pixels=(x * factor, y * factor), filename=filename))
    if not samples:
        raise DatasetError(f"{LABELS_FILE} 中没有样本", path=str(labels_path))
    dataset = Dataset(samples=samples, side=samples[0].image.shape[0], split=split, directory=directory)
    logger.info(f"已加载数据集 {directory}: {len(dataset)} 个样本，边长 {dataset.side}")
    return dataset
