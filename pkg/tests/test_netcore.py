import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trackguard.errors import ShapeMismatchError, WeightFormatError
from trackguard.models import LayerKind, LayerSpec, OptimizerConfig
from trackguard.netcore import (
    CANONICAL_PARAMETER_COUNTS,
    ForwardTrace,
    Gradients,
    OptimizerState,
    backward,
    build_network,
    canonical_layer_specs,
    decode_weights,
    encode_weights,
    forward,
    init_network,
    input_gradient,
    load_weights,
    optimizer_step,
    save_weights,
)
from trackguard.netcore.layers import layer_loader
from trackguard.netcore.rng import SplitMix64


def test_canonical_parameter_counts():
    net = init_network(0)
    assert net.parameter_counts() == CANONICAL_PARAMETER_COUNTS
    assert net.input_shape == (1, 112, 112)
    assert net.output_dim == 2
    info = net.get_network_info()
    assert info["parameters"] == 234134
    assert [layer["kind"] for layer in info["layers"]][:3] == ["CONV2D", "RELU", "MAXPOOL2D"]
    assert len(info["layers"]) == 13


def test_canonical_forward_shape_and_range():
    net = init_network(11)
    image = np.random.default_rng(0).uniform(size=(112, 112)).astype(np.float32)
    out = forward(net, image)
    assert out.shape == (2,)
    assert out.dtype == np.float32
    assert np.all(np.abs(out) < 1.0)


@pytest.mark.parametrize("bias", [10.0, 40.0])
def test_saturated_outputs_stay_inside_open_interval(bias):
    net = init_network(0, side=8)
    last = net.layers[net.last_parametric_index()]
    last.params["weight"][:] = 0.0
    last.params["bias"][:] = [bias, -bias]
    image = np.full((8, 8), 0.5)
    out = forward(net, image)
    assert out.dtype == np.float32
    assert np.all(np.abs(out) < 1.0)
    assert out[0] > 0.999 and out[1] < -0.999
    assert np.all(np.abs(net.forward_batch(image[None])) < 1.0)


def test_reduced_network_layout():
    specs = canonical_layer_specs(56)
    assert specs[6].kind == LayerKind.FLATTEN and specs[6].in_features == 196
    with pytest.raises(ShapeMismatchError):
        canonical_layer_specs(30)


def test_init_is_deterministic_per_seed():
    a, b, c = init_network(5, side=8), init_network(5, side=8), init_network(6, side=8)
    assert encode_weights(a) == encode_weights(b)
    assert encode_weights(a) != encode_weights(c)


def test_splitmix_reference_values():
    # 种子 0 的前两个输出
    values = SplitMix64(0).next_u64(2)
    assert int(values[0]) == 0xE220A8397B1DCDAF
    assert int(values[1]) == 0x6E789E6AA1B965F4


def test_forward_rejects_wrong_shape(small_net):
    with pytest.raises(ShapeMismatchError):
        forward(small_net, np.zeros((9, 9)))


def test_relu_interval_transfer():
    relu = layer_loader.build(LayerSpec(kind=LayerKind.RELU))
    lo, hi = relu.propagate_interval(np.array([[-1.0]]), np.array([[2.0]]))
    assert lo.tolist() == [[0.0]] and hi.tolist() == [[2.0]]


def _flat_objective(net, image, upstream):
    return float(net.forward_batch(net.as_batch(image, batched=False))[0] @ upstream)


@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_parameter_gradients_match_central_differences(seed):
    net = init_network(seed, side=8).astype(np.float64)
    assert sum(net.parameter_counts()) <= 40000
    rng = np.random.default_rng(seed)
    image = rng.uniform(size=(8, 8))
    upstream = rng.normal(size=2)
    grads = backward(net, image, upstream)
    h = 1e-3
    worst = 0.0
    for index, name, param in net.parameters():
        flat = param.reshape(-1)
        for position in rng.choice(flat.size, size=min(6, flat.size), replace=False):
            original = flat[position]
            patterns = []
            values = []
            for shift in (-h, 0.0, h):
                flat[position] = original + shift
                patterns.append(net.kink_patterns(image))
                values.append(_flat_objective(net, image, upstream))
            flat[position] = original
            crosses = any(
                not np.array_equal(p, q) for other in (patterns[0], patterns[2]) for p, q in zip(other, patterns[1])
            )
            if crosses:
                continue
            numeric = (values[2] - values[0]) / (2 * h)
            analytic = grads.tensors[index][name].reshape(-1)[position]
            worst = max(worst, abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-2))
    assert worst < 1e-4


def test_input_gradient_matches_central_differences(small_net):
    net = small_net.astype(np.float64)
    rng = np.random.default_rng(0)
    image = rng.uniform(size=(8, 8))
    upstream = np.array([1.0, -0.5])
    grad = input_gradient(net, image, upstream).reshape(8, 8)
    h = 1e-4
    for i, j in [(0, 0), (3, 4), (7, 7), (5, 1)]:
        plus, minus = image.copy(), image.copy()
        plus[i, j] += h
        minus[i, j] -= h
        if any(not np.array_equal(p, q) for p, q in zip(net.kink_patterns(plus), net.kink_patterns(minus))):
            continue
        numeric = (_flat_objective(net, plus, upstream) - _flat_objective(net, minus, upstream)) / (2 * h)
        assert grad[i, j] == pytest.approx(numeric, rel=1e-4, abs=1e-6)


def test_batch_backward_sums_per_sample_gradients(small_net):
    rng = np.random.default_rng(4)
    images = rng.uniform(size=(3, 8, 8))
    upstream = rng.normal(size=(3, 2))
    trace = ForwardTrace()
    small_net.forward_batch(images, trace)
    batch_grads, _ = small_net.backward_trace(trace, upstream)
    total = Gradients.zeros_like(small_net)
    for image, up in zip(images, upstream):
        total = total + backward(small_net, image, up)
    for (_, _, a), (_, _, b) in zip(batch_grads, total):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def test_sgd_step_moves_against_gradient(small_net):
    grads = Gradients.zeros_like(small_net)
    last = small_net.last_parametric_index()
    grads.tensors[last]["bias"][:] = [1.0, -2.0]
    before = small_net.layers[last].params["bias"].copy()
    state = OptimizerState.create(small_net, OptimizerConfig(kind="sgd", learning_rate=0.5))
    optimizer_step(small_net, grads, state)
    np.testing.assert_allclose(small_net.layers[last].params["bias"], before - np.array([0.5, -1.0]), rtol=1e-6)
    assert state.step == 1


def test_adam_first_step_has_learning_rate_magnitude(small_net):
    grads = Gradients.zeros_like(small_net)
    last = small_net.last_parametric_index()
    grads.tensors[last]["bias"][:] = [3.0, -0.25]
    before = small_net.layers[last].params["bias"].astype(np.float64)
    optimizer_step(small_net, grads, OptimizerState.create(small_net, OptimizerConfig(learning_rate=1e-2)))
    delta = small_net.layers[last].params["bias"] - before
    np.testing.assert_allclose(delta, [-1e-2, 1e-2], rtol=1e-4)


def test_weights_round_trip_bytes(small_net, tmp_path):
    path = tmp_path / "m.nnw"
    save_weights(small_net, path)
    restored = load_weights(path)
    assert restored.input_shape == (1, 8, 8)
    assert encode_weights(restored) == path.read_bytes()
    image = np.random.default_rng(1).uniform(size=(8, 8))
    np.testing.assert_array_equal(forward(restored, image), forward(small_net, image))


def test_decode_rejects_bad_magic(small_net):
    data = bytearray(encode_weights(small_net))
    data[:4] = b"XXXX"
    with pytest.raises(WeightFormatError, match="magic"):
        decode_weights(bytes(data))


def _resealed(body: bytes) -> bytes:
    """重新计算 CRC32 尾部，让损坏只出现在记录内容里"""
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def test_decode_rejects_crc_mismatch(small_net):
    data = bytearray(encode_weights(small_net))
    ndim = data[9]
    # 第一个卷积层 weight 的第二个字节，记录结构本身仍然合法
    data[10 + 4 * ndim + 1] ^= 0x01
    with pytest.raises(WeightFormatError, match="CRC32"):
        decode_weights(bytes(data))


def test_decode_checks_crc_before_parsing_records(small_net):
    data = bytearray(encode_weights(small_net))
    data[9] ^= 0x01
    with pytest.raises(WeightFormatError, match="CRC32"):
        decode_weights(bytes(data))


def test_decode_names_truncated_record(small_net):
    data = encode_weights(small_net)
    with pytest.raises(WeightFormatError, match="记录 #"):
        decode_weights(_resealed(data[:200]))


@pytest.mark.parametrize("value", [np.nan, np.inf, -np.inf])
def test_decode_rejects_non_finite_parameters(small_net, value):
    data = bytearray(encode_weights(small_net))
    ndim = data[9]
    start = 10 + 4 * ndim
    data[start:start + 4] = np.array([value], dtype="<f4").tobytes()
    with pytest.raises(WeightFormatError, match="记录 #0: weight 含有 NaN 或 Inf") as info:
        decode_weights(_resealed(bytes(data[:-4])))
    assert info.value.record == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 64 - 1))
def test_any_seed_gives_finite_parameters(seed):
    net = init_network(seed, side=8)
    for _, _, param in net.parameters():
        assert np.all(np.isfinite(param))
        assert param.dtype == np.float32


def test_zero_network_outputs_zero():
    net = init_network(0, side=8)
    for layer in net.layers:
        layer.params = {n: np.zeros_like(p) for n, p in layer.params.items()}
    np.testing.assert_array_equal(forward(net, np.random.default_rng(0).uniform(size=(8, 8))), [0.0, 0.0])


def test_reduced_stack_matches_hand_computation():
    specs = [
        LayerSpec(kind=LayerKind.CONV2D, in_channels=1, out_channels=1, kernel_size=3, stride=1, padding=1),
        LayerSpec(kind=LayerKind.RELU),
        LayerSpec(kind=LayerKind.MAXPOOL2D, kernel_size=2, stride=2),
        LayerSpec(kind=LayerKind.FLATTEN, in_features=4),
        LayerSpec(kind=LayerKind.LINEAR, in_features=4, out_features=2),
        LayerSpec(kind=LayerKind.TANH),
    ]
    net = build_network(specs, (1, 4, 4))
    kernel = np.zeros((1, 1, 3, 3), dtype=np.float32)
    kernel[0, 0, 1, 1] = 2.0  # 只取中心像素并乘 2
    net.layers[0].params["weight"] = kernel
    net.layers[0].params["bias"] = np.array([-0.5], dtype=np.float32)
    net.layers[4].params["weight"] = np.array([[1, 0, 0, 0], [0.25, 0.25, 0.25, 0.25]], dtype=np.float32)
    net.layers[4].params["bias"] = np.array([0.0, -0.1], dtype=np.float32)
    image = np.arange(16, dtype=np.float64).reshape(4, 4) / 16.0
    conv = np.maximum(2.0 * image - 0.5, 0.0)
    pooled = conv.reshape(2, 2, 2, 2).max(axis=(1, 3)).reshape(-1)
    expected = np.tanh(np.array([pooled[0], pooled.mean() - 0.1]))
    np.testing.assert_allclose(forward(net, image), expected, rtol=1e-6)


def test_backward_is_linear_in_upstream(small_net):
    image = np.random.default_rng(2).uniform(size=(8, 8))
    once = backward(small_net, image, np.array([0.3, -0.7]))
    twice = backward(small_net, image, np.array([0.6, -1.4]))
    zero = backward(small_net, image, np.zeros(2))
    for (_, _, a), (_, _, b), (_, _, z) in zip(once, twice, zero):
        np.testing.assert_allclose(b, 2.0 * a, rtol=1e-12, atol=1e-15)
        assert not np.any(z)


def test_zero_gradients_leave_parameters_unchanged(small_net):
    before = encode_weights(small_net)
    optimizer_step(small_net, Gradients.zeros_like(small_net), OptimizerState.create(small_net))
    assert encode_weights(small_net) == before


def test_sgd_on_scalar_quadratic_converges():
    net = build_network([LayerSpec(kind=LayerKind.LINEAR, in_features=1, out_features=1)], (1,))
    net.layers[0].params["weight"] = np.ones((1, 1), dtype=np.float32)
    state = OptimizerState.create(net, OptimizerConfig(kind="sgd", learning_rate=0.1))
    for _ in range(100):
        grads = Gradients.zeros_like(net)
        grads.tensors[0]["weight"] = 2.0 * net.layers[0].params["weight"].astype(np.float64)
        optimizer_step(net, grads, state)
    assert abs(float(net.layers[0].params["weight"][0, 0])) < 0.1


@pytest.mark.parametrize("kind", ["sgd", "adam"])
def test_zero_learning_rate_leaves_parameters_unchanged(small_net, kind):
    before = encode_weights(small_net)
    grads = Gradients.zeros_like(small_net)
    for _, _, grad in grads:
        grad[...] = 1.0
    state = OptimizerState.create(small_net, OptimizerConfig(kind=kind, learning_rate=0.0))
    for _ in range(3):
        optimizer_step(small_net, grads, state)
    assert encode_weights(small_net) == before
    assert state.step == 3


def test_default_adam_on_scalar_quadratic_converges():
    net = build_network([LayerSpec(kind=LayerKind.LINEAR, in_features=1, out_features=1)], (1,))
    net.layers[0].params["weight"] = np.ones((1, 1), dtype=np.float32)
    state = OptimizerState.create(net, OptimizerConfig())
    for _ in range(3000):
        grads = Gradients.zeros_like(net)
        grads.tensors[0]["weight"] = 2.0 * net.layers[0].params["weight"].astype(np.float64)
        optimizer_step(net, grads, state)
    assert abs(float(net.layers[0].params["weight"][0, 0])) < 0.05


def test_zero_layer_file_is_rejected():
    body = b"NNW1" + struct.pack("<I", 0)
    with pytest.raises(WeightFormatError):
        decode_weights(body + struct.pack("<I", zlib.crc32(body)))
