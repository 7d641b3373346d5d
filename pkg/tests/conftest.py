from typing import Sequence

import numpy as np
import pytest

from trackguard.data import Dataset, Sample
from trackguard.models import GenConfig, LayerKind, LayerSpec
from trackguard.netcore import Network, build_network, init_network


def dense_net(*layers: Sequence, activations: Sequence[str] = (), dtype=np.float32) -> Network:
    """由 (weight, bias) 序列构造全连接网络，层之间插入给定激活（relu/tanh，None 表示无）"""
    specs = []
    params = []
    for index, (weight, bias) in enumerate(layers):
        weight = np.asarray(weight, dtype=np.float64)
        specs.append(LayerSpec(kind=LayerKind.LINEAR, in_features=weight.shape[1], out_features=weight.shape[0]))
        params.append((weight, np.asarray(bias, dtype=np.float64)))
        activation = activations[index] if index < len(activations) else None
        if activation == "relu":
            specs.append(LayerSpec(kind=LayerKind.RELU))
            params.append(None)
        elif activation == "tanh":
            specs.append(LayerSpec(kind=LayerKind.TANH))
            params.append(None)
    first = np.asarray(layers[0][0])
    net = build_network(specs, (first.shape[1],))
    for layer, values in zip(net.layers, params):
        if values is not None:
            layer.params["weight"] = values[0].astype(dtype)
            layer.params["bias"] = values[1].astype(dtype)
    return net


@pytest.fixture
def small_net() -> Network:
    """8x8 输入的缩小版标准网络"""
    return init_network(7, side=8)


@pytest.fixture
def small_dataset() -> Dataset:
    rng = np.random.default_rng(3)
    samples = [
        Sample(image=rng.uniform(size=(8, 8)).astype(np.float32), label_pixels=tuple(rng.uniform(1, 7, size=2)),
               filename=f"image_{i}.pgm")
        for i in range(10)
    ]
    return Dataset(samples, side=8)


@pytest.fixture
def tiny_gen_config() -> GenConfig:
    return GenConfig(count=6, side=16, seed=5)
