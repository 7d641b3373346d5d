from pathlib import Path
from typing import Tuple, Union

import numpy as np

from ..errors import DatasetError

_WHITESPACE = b" \t\r\n\v\f"


def _header_tokens(data: bytes, count: int, path: str) -> Tuple[list, int]:
    """读取 count 个头部字段，跳过 # 注释；返回字段与像素数据起始位置"""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos] in _WHITESPACE:
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos] not in _WHITESPACE:
            pos += 1
        if start == pos:
            raise DatasetError(f"{path}: 文件头不完整", path=path)
        tokens.append(data[start:pos])
    # maxval 之后恰好一个空白字符
    return tokens, pos + 1


def read_pnm(path: Union[str, Path]) -> np.ndarray:
    """读取二进制 PGM(P5) 或 PPM(P6) 图像

    Returns:
        np.ndarray: 灰度 (H, W) 或彩色 (H, W, 3)，数值按 maxval 换算到 0..255 的 float64

    Raises:
        DatasetError: 文件不存在或格式不支持
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"图像文件不存在: {path.name}", path=str(path))
    data = path.read_bytes()
    tokens, pos = _header_tokens(data, 4, path.name)
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise DatasetError(f"{path.name}: 不支持的格式 {magic!r}", path=str(path))
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DatasetError(f"{path.name}: 文件头字段不是整数", path=str(path)) from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise DatasetError(f"{path.name}: 非法尺寸或 maxval", path=str(path))
    channels = 1 if magic == b"P5" else 3
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    expected = width * height * channels * dtype.itemsize
    raster = data[pos:pos + expected]
    if len(raster) != expected:
        raise DatasetError(f"{path.name}: 像素数据被截断", path=str(path))
    pixels = np.frombuffer(raster, dtype=dtype).astype(np.float64) * (255.0 / maxval)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return pixels.reshape(shape)


def write_pnm(path: Union[str, Path], pixels: np.ndarray) -> None:
    """写出 8 位 PGM(P5)（二维数组）或 PPM(P6)（(H, W, 3) 数组），数值 0..255"""
    pixels = np.asarray(pixels)
    if pixels.ndim == 2:
        magic = b"P5"
    elif pixels.ndim == 3 and pixels.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"不支持的图像形状 {pixels.shape}")
    raster = np.clip(np.rint(pixels), 0, 255).astype(np.uint8)
    height, width = raster.shape[:2]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(magic + b"\n%d %d\n255\n" % (width, height) + raster.tobytes())


def write_unit_image(path: Union[str, Path], image: np.ndarray) -> None:
    """把 [0,1] 灰度图像写成 PGM"""
    write_pnm(path, np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) * 255.0)
