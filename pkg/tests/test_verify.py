import numpy as np
import pytest

from conftest import dense_net
from trackguard.data import generate_synthetic
from trackguard.errors import TrackGuardError
from trackguard.logic import Cmp, Const, Output, eval_exact, robustness_body
from trackguard.models import GenConfig, LayerKind, LayerSpec, PgdConfig, VerifyConfig
from trackguard.netcore import forward, init_network
from trackguard.netcore.layers import layer_loader
from trackguard.train import pgd_attack
from trackguard.verify import (
    FALSIFIED,
    UNKNOWN,
    VERIFIED,
    IntervalTensor,
    RobustnessChecker,
    Verdict,
    check_property,
    check_robustness,
    denormalize_bounds,
    format_bounds_table,
    format_pixel_bounds,
    format_report,
    formula_holds,
    propagate_bounds,
)


def test_point_interval_matches_forward(small_net):
    x0 = np.random.default_rng(0).uniform(size=(8, 8))
    bounds = propagate_bounds(small_net, IntervalTensor(x0, x0))
    out = forward(small_net, x0)
    np.testing.assert_allclose(bounds.lower, out, atol=1e-6)
    np.testing.assert_allclose(bounds.upper, out, atol=1e-6)
    assert bounds.contains(out)


def test_relu_transfer():
    relu = layer_loader.build(LayerSpec(kind=LayerKind.RELU))
    lo, hi = relu.propagate_interval(np.array([-1.0]), np.array([2.0]))
    assert (float(lo[0]), float(hi[0])) == (0.0, 2.0)


def test_interval_validation():
    with pytest.raises(TrackGuardError):
        IntervalTensor(np.array([1.0]), np.array([0.0]))
    with pytest.raises(TrackGuardError):
        IntervalTensor(np.array([np.nan]), np.array([0.0]))
    box = IntervalTensor.ball(np.array([0.02, 0.5]), 0.1)
    np.testing.assert_allclose(box.lower, [0.0, 0.4])
    np.testing.assert_allclose(box.upper, [0.12, 0.6])


def test_grid_lies_inside_bounds():
    net = dense_net(([[1.5, -2.0]], [0.3]), ([[-0.7]], [0.1]), activations=["relu", "tanh"])
    box = IntervalTensor(np.array([0.2, 0.1]), np.array([0.6, 0.9]))
    bounds = propagate_bounds(net, box)
    grid = np.stack(np.meshgrid(np.linspace(0.2, 0.6, 101), np.linspace(0.1, 0.9, 101)), axis=-1).reshape(-1, 2)
    outputs = net.forward_batch(grid)
    assert np.all(outputs >= bounds.lower) and np.all(outputs <= bounds.upper)


@pytest.mark.parametrize("epsilon", [0.001, 0.01])
def test_sampled_ball_points_lie_inside_bounds(epsilon):
    rng = np.random.default_rng(int(epsilon * 1000))
    for seed in range(5):
        net = init_network(seed, side=8)
        x0 = rng.uniform(size=(8, 8))
        box = IntervalTensor.ball(x0, epsilon)
        bounds = propagate_bounds(net, box)
        samples = rng.uniform(box.lower, box.upper, size=(200, 8, 8))
        outputs = net.forward_batch(samples)
        assert np.all(outputs >= bounds.lower) and np.all(outputs <= bounds.upper)
        assert all(bounds.contains(forward(net, s)) for s in samples[:20])


def test_bounds_are_nested_in_epsilon(small_net):
    rng = np.random.default_rng(5)
    for _ in range(10):
        x0 = rng.uniform(size=(8, 8))
        narrow = propagate_bounds(small_net, IntervalTensor.ball(x0, 0.001))
        wide = propagate_bounds(small_net, IntervalTensor.ball(x0, 0.01))
        assert narrow.within(wide)


@pytest.mark.parametrize("bias", [10.0, 40.0])
def test_saturated_outputs_stay_inside_bounds(bias):
    net = init_network(0, side=8)
    last = net.layers[net.last_parametric_index()]
    last.params["weight"][:] = 0.0
    last.params["bias"][:] = [bias, -bias]
    x0 = np.full((8, 8), 0.5)
    bounds = propagate_bounds(net, IntervalTensor.ball(x0, 0.01))
    out = forward(net, x0)
    assert bounds.contains(out)
    assert bounds.lower[0] > 0.999 and bounds.upper[1] < -0.999


def _check_ball_soundness(net, images, epsilons, rng, samples=200):
    """每张图、每个半径随机采样球内点，返回各半径下的平均输出界宽度"""
    widths = {epsilon: [] for epsilon in epsilons}
    for x0 in images:
        previous = None
        for epsilon in sorted(epsilons):
            box = IntervalTensor.ball(x0, epsilon)
            bounds = propagate_bounds(net, box)
            points = rng.uniform(box.lower, box.upper, size=(samples,) + x0.shape)
            outputs = net.forward_batch(np.concatenate([x0[None], points]))
            assert np.all(outputs >= bounds.lower) and np.all(outputs <= bounds.upper)
            if previous is not None:
                assert previous.within(bounds)
            previous = bounds
            widths[epsilon].append(float(np.mean(bounds.upper - bounds.lower)))
    return {epsilon: float(np.mean(values)) for epsilon, values in widths.items()}


def test_synthetic_ball_points_lie_inside_nested_bounds():
    dataset = generate_synthetic(GenConfig(count=10, side=16, seed=4))
    net = init_network(2, side=16)
    widths = _check_ball_soundness(net, [s.image for s in dataset.samples], [0.001, 0.01],
                                   np.random.default_rng(4))
    assert 0.0 < widths[0.001] < widths[0.01]


@pytest.mark.slow
def test_synthetic_ball_soundness_at_reduced_resolution():
    """56x56 缩小结构上 100 张合成图像、每个半径 200 个采样点"""
    dataset = generate_synthetic(GenConfig(count=100, side=56, seed=11))
    net = init_network(11, side=56)
    widths = _check_ball_soundness(net, [s.image for s in dataset.samples], [0.001, 0.01],
                                   np.random.default_rng(11))
    print(f"平均输出界宽度: {widths}")
    assert 0.0 < widths[0.001] < widths[0.01]


def test_zero_radius_is_verified(small_net):
    x0 = np.random.default_rng(1).uniform(size=(8, 8))
    assert check_robustness(small_net, x0, 0.0, 1e-9).result == VERIFIED
    assert check_robustness(small_net, x0, 0.0, 0.0).result == VERIFIED


def test_full_output_range_is_verified(small_net):
    x0 = np.random.default_rng(2).uniform(size=(8, 8))
    verdict = check_robustness(small_net, x0, 0.5, 2.0)
    assert verdict.result == VERIFIED
    assert verdict.checker == "ibp"


def _line_scan_deviation(weight, bias, x0, epsilon):
    xs = np.linspace(max(0.0, x0 - epsilon), min(1.0, x0 + epsilon), 10001)
    return float(np.max(np.abs(np.tanh(weight * xs + bias) - np.tanh(weight * x0 + bias))))


def test_one_dimensional_verdicts_match_line_scan():
    rng = np.random.default_rng(11)
    checked = {VERIFIED: 0, FALSIFIED: 0}
    while sum(checked.values()) < 24:
        weight, bias = float(rng.uniform(-4, 4)), float(rng.uniform(-1, 1))
        x0, epsilon, delta = float(rng.uniform(0, 1)), float(rng.uniform(0.01, 0.3)), float(rng.uniform(0.01, 0.5))
        net = dense_net(([[weight]], [bias]), activations=["tanh"], dtype=np.float64)
        deviation = _line_scan_deviation(weight, bias, x0, epsilon)
        if abs(deviation - delta) < 1e-3:
            continue
        verdict = check_robustness(net, np.array([x0]), epsilon, delta, VerifyConfig(pgd=PgdConfig(steps=20)))
        expected = VERIFIED if deviation <= delta else FALSIFIED
        assert verdict.result == expected, (weight, bias, x0, epsilon, delta, deviation)
        checked[expected] += 1
    assert checked[VERIFIED] > 0 and checked[FALSIFIED] > 0


def test_hand_picked_line_cases():
    net = dense_net(([[2.0]], [0.1]), activations=["tanh"])
    x0 = np.array([0.5])
    assert check_robustness(net, x0, 0.1, 0.1).result == VERIFIED
    falsified = check_robustness(net, x0, 0.1, 0.05)
    assert falsified.result == FALSIFIED
    assert abs(falsified.counterexample[0] - 0.5) <= 0.1 + 1e-12
    assert falsified.violation > 0.05


def test_denormalize_examples():
    full = IntervalTensor(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    assert denormalize_bounds(full) == [(0, 112), (0, 112)]
    center = IntervalTensor(np.zeros(2), np.zeros(2))
    assert format_pixel_bounds(denormalize_bounds(center)) == "[56 -- 56] [56 -- 56]"
    mixed = IntervalTensor(np.array([-0.5, -0.5]), np.array([0.25, 0.25]))
    assert denormalize_bounds(mixed) == [(28, 70), (28, 70)]


def _cancelling_net():
    """relu(x) - relu(x)：输出恒为 0，但区间传播会丢失两条路径的相关性"""
    return dense_net(([[1.0], [1.0]], [0.0, 0.0]), ([[1.0, -1.0]], [0.0]), activations=["relu"])


def test_splitting_verifies_what_plain_intervals_cannot():
    net = _cancelling_net()
    x0 = np.array([0.5])
    plain = check_robustness(net, x0, 0.1, 0.06)
    assert plain.result == UNKNOWN
    assert plain.bounds.lower[0] < -0.06 and plain.bounds.upper[0] > 0.06
    split = check_robustness(net, x0, 0.1, 0.06, VerifyConfig(split_budget=4))
    assert split.result == VERIFIED
    assert split.checker == "bab"
    assert split.boxes == 4


def test_small_budget_stays_unknown():
    verdict = check_robustness(_cancelling_net(), np.array([0.5]), 0.1, 0.06, VerifyConfig(split_budget=2))
    assert verdict.result == UNKNOWN
    assert verdict.boxes == 2 and verdict.checker == "bab"


def test_split_children_refine_parent_bounds():
    net = init_network(4, side=8)
    x0 = np.random.default_rng(4).uniform(size=(8, 8))
    checker = RobustnessChecker(net, robustness_body(0.01), x0, 0.05)
    box = IntervalTensor.ball(x0, 0.05)
    parent = checker.bound_box(box)
    left, right = checker.split(box)
    np.testing.assert_array_equal(np.minimum(left.lower, right.lower), box.lower)
    np.testing.assert_array_equal(np.maximum(left.upper, right.upper), box.upper)
    hull = IntervalTensor.hull([checker.bound_box(left, parent), checker.bound_box(right, parent)])
    assert hull.within(parent)
    assert checker.split(IntervalTensor(x0, x0)) is None


def test_verdicts_never_contradict_found_counterexamples():
    rng = np.random.default_rng(21)
    for case in range(50):
        net = dense_net(
            (rng.normal(size=(4, 3)), rng.normal(size=4)),
            (rng.normal(size=(2, 4)), rng.normal(size=2) * 0.1),
            activations=["relu", "tanh"],
        )
        x0 = rng.uniform(size=3)
        epsilon, delta = float(rng.uniform(0.0, 0.2)), float(rng.uniform(0.0, 0.3))
        verdict = check_robustness(net, x0, epsilon, delta, VerifyConfig(split_budget=int(rng.integers(0, 6))))
        body = robustness_body(delta)
        if verdict.result == FALSIFIED:
            assert np.max(np.abs(verdict.counterexample - x0)) <= epsilon + 1e-12
            assert not eval_exact(body, {"x": verdict.counterexample, "x0": x0}, net)
            continue
        for seed in range(3):
            x_star = pgd_attack(net, body, x0, epsilon, steps=15, seed=[case, seed], random_start=seed > 0)
            if not eval_exact(body, {"x": x_star, "x0": x0}, net):
                assert verdict.result != VERIFIED, case


def test_general_property_uses_three_valued_bounds():
    net = dense_net(([[1.0, 1.0]], [0.0]), activations=["tanh"])
    x0 = np.array([0.2, 0.2])
    assert check_property(net, Cmp("<=", Output("N", "x", 0), Const(0.9)), x0, 0.05).result == VERIFIED
    falsified = check_property(net, Cmp(">=", Output("N", "x", 0), Const(0.4)), x0, 0.05)
    assert falsified.result == FALSIFIED
    assert falsified.violation > 0


def test_formula_holds_three_values():
    outputs = {"x": (np.array([0.1]), np.array([0.3]))}
    assert formula_holds(Cmp("<=", Output("N", "x", 0), Const(0.5)), outputs) is True
    assert formula_holds(Cmp(">", Output("N", "x", 0), Const(0.5)), outputs) is False
    assert formula_holds(Cmp("<=", Output("N", "x", 0), Const(0.2)), outputs) is None


def test_report_lines():
    verdict = Verdict(UNKNOWN, IntervalTensor(np.array([-1.0, 0.0]), np.array([1.0, 0.0])), elapsed=0.25)
    text = format_report(verdict)
    assert text.splitlines()[:3] == ["trackguard.verify.ibp", "  result: unknown", "  time: 0.2500"]
    assert "  pixel_bounds: [0 -- 112] [56 -- 56]" in text
    falsified = Verdict(FALSIFIED, counterexample=np.zeros(2), violation=0.5, boxes=3, checker="bab")
    lines = format_report(falsified, counterexample_path="out.pgm").splitlines()
    assert lines[0] == "trackguard.verify.bab"
    assert "  boxes: 3" in lines and "  violation: 0.5" in lines and "  counterexample: out.pgm" in lines


def test_bounds_table_layout():
    bounds = IntervalTensor(np.array([-0.5, 0.0]), np.array([0.25, 0.0]))
    table = format_bounds_table([0.001], ["m"], [[bounds]])
    header, row = table.splitlines()
    assert header.split("\t") == ["epsilon", "m:x", "m:y", "m:width"]
    assert row.split("\t") == ["0.001", "[28 -- 70]", "[56 -- 56]", "42 0"]
