import logging
import struct
import zlib
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from ..errors import WeightFormatError
from ..models import LayerKind
from .layers import layer_loader
from .network import Network

logger = logging.getLogger(__name__)

MAGIC = b"NNW1"


def encode_weights(net: Network) -> bytes:
    """把网络编码成 NNW 字节串

    格式：magic "NNW1"，u32 记录数，每条记录为 u8 类型标签、u8 维度个数、若干 u32 维度，
    带参数的层随后是 weight 与 bias 的小端 float32 行优先数据；末尾是前面所有字节的 CRC32。
    """
    out = bytearray(MAGIC)
    out += struct.pack("<I", len(net.layers))
    for layer in net.layers:
        dims = layer.record_dims()
        out += struct.pack("<BB", int(layer.kind), len(dims))
        out += struct.pack(f"<{len(dims)}I", *dims)
        for name in ("weight", "bias"):
            if name in layer.params:
                out += np.ascontiguousarray(layer.params[name], dtype="<f4").tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int, record) -> bytes:
        if self.pos + size > len(self.data):
            raise WeightFormatError(f"文件被截断：需要 {size} 字节，剩余 {len(self.data) - self.pos}", record=record)
        chunk = self.data[self.pos:self.pos + size]
        self.pos += size
        return chunk


def decode_weights(data: bytes, input_shape: Tuple[int, ...] = None) -> Network:
    """从 NNW 字节串还原网络

    Args:
        data: 文件内容
        input_shape: 输入形状；留空时由第一个卷积/全连接层推断方形单通道输入

    Raises:
        WeightFormatError: magic、版本、长度、形状或校验和不合法，不返回部分结果
    """
    if len(data) < len(MAGIC) + 8:
        raise WeightFormatError(f"文件过短（{len(data)} 字节）")
    if data[:4] != MAGIC:
        raise WeightFormatError(f"magic 不符：{data[:4]!r}")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise WeightFormatError("CRC32 校验失败")
    reader = _Reader(body)
    reader.take(4, None)
    (count,) = struct.unpack("<I", reader.take(4, None))
    if count == 0:
        raise WeightFormatError("层记录数为 0")
    layers = []
    for record in range(count):
        tag, ndim = struct.unpack("<BB", reader.take(2, record))
        dims = struct.unpack(f"<{ndim}I", reader.take(4 * ndim, record))
        layer = layer_loader.build_from_record(record, tag, dims)
        for name, shape in layer.parameter_shapes().items():
            size = int(np.prod(shape))
            raw = reader.take(4 * size, record)
            param = np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(shape)
            if not np.isfinite(param).all():
                raise WeightFormatError(f"{name} 含有 NaN 或 Inf", record=record)
            layer.params[name] = param
        layers.append(layer)
    if reader.pos != len(body):
        raise WeightFormatError(f"记录之后有 {len(body) - reader.pos} 字节多余数据")
    shape = input_shape or _infer_input_shape(layers)
    try:
        return Network(layers, shape)
    except ValueError as e:
        raise WeightFormatError(f"层形状无法衔接: {e}") from None


def _infer_input_shape(layers: List) -> Tuple[int, ...]:
    first = layers[0]
    if first.kind == LayerKind.LINEAR:
        return (first.spec.in_features,)
    # 卷积网络：由 Flatten 的元素个数倒推方形输入边长
    kinds = [layer.kind for layer in layers]
    if LayerKind.FLATTEN not in kinds:
        raise WeightFormatError("无法推断输入形状：没有 Flatten 层")
    head = layers[:kinds.index(LayerKind.FLATTEN)]
    convs = [layer.spec for layer in head if layer.kind == LayerKind.CONV2D]
    channels_out = convs[-1].out_channels if convs else 1
    side = int(round(np.sqrt(layers[len(head)].spec.in_features / channels_out)))
    for layer in reversed(head):
        s = layer.spec
        if layer.kind == LayerKind.MAXPOOL2D:
            side = (side - 1) * s.stride + s.kernel_size
        elif layer.kind == LayerKind.CONV2D:
            side = (side - 1) * s.stride + s.kernel_size - 2 * s.padding
    return (convs[0].in_channels if convs else 1, side, side)


def save_weights(net: Network, path: Union[str, Path]) -> None:
    """保存网络到 NNW 文件"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_weights(net))
    logger.info(f"权重已保存: {path}（{sum(net.parameter_counts())} 个参数）")


def load_weights(path: Union[str, Path]) -> Network:
    """从 NNW 文件加载网络"""
    path = Path(path)
    net = decode_weights(path.read_bytes())
    logger.info(f"权重已加载: {path}（输入形状 {net.input_shape}）")
    return net
