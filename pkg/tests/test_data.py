import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trackguard.data import (
    denormalize_label,
    generate_synthetic,
    load_dataset,
    normalize_label,
    preprocess_image,
    read_pnm,
    render_scene,
    write_labels,
    write_pnm,
)
from trackguard.data.synthetic import TrackScene, draw_scene
from trackguard.errors import DatasetError, ShapeMismatchError
from trackguard.models import GenConfig


def test_pure_red_color_image_becomes_luma_gray():
    raw = np.zeros((224, 224, 3))
    raw[..., 0] = 255
    image = preprocess_image(raw, 112)
    assert image.shape == (112, 112)
    assert image.dtype == np.float32
    np.testing.assert_allclose(image, 0.299, atol=1e-6)


def test_grayscale_at_target_side_is_scaled_only():
    raw = np.arange(64, dtype=np.float64).reshape(8, 8) * 4
    np.testing.assert_allclose(preprocess_image(raw, 8), raw / 255.0, atol=1e-7)


def test_downsampling_averages_blocks():
    raw = np.array([[0, 255], [255, 255]], dtype=np.float64)
    assert preprocess_image(raw, 1)[0, 0] == pytest.approx(0.75)


def test_preprocess_rejects_bad_side():
    with pytest.raises(ShapeMismatchError):
        preprocess_image(np.zeros((100, 100)), 112)


def test_label_normalization_examples():
    np.testing.assert_allclose(normalize_label((56.0, 56.0)), [0.0, 0.0])
    np.testing.assert_allclose(normalize_label((0.0, 112.0)), [-1.0, 1.0])
    np.testing.assert_allclose(denormalize_label([0.5, -0.5]), [84.0, 28.0])


@given(st.floats(0.0, 112.0), st.floats(0.0, 112.0))
def test_label_normalization_is_a_bijection(x, y):
    back = denormalize_label(normalize_label((x, y)))
    np.testing.assert_allclose(back, [x, y], atol=1e-9)


def test_generator_count_and_determinism(tmp_path):
    cfg = GenConfig(count=5, side=16, seed=9)
    first = generate_synthetic(cfg, tmp_path / "a")
    second = generate_synthetic(cfg, tmp_path / "b")
    assert len(first) == 5
    for a, b in zip(first.samples, second.samples):
        assert np.array_equal(a.image, b.image)
        assert a.label_pixels == b.label_pixels
    for name in ["labels.csv"] + [f"image_{i}.pgm" for i in range(5)]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_generator_labels_stay_inside_margin():
    dataset = generate_synthetic(GenConfig(count=50, side=32, seed=1))
    for sample in dataset.samples:
        x, y = sample.label_pixels
        assert 4.0 <= x <= 28.0
        assert y == pytest.approx(24.0)


def test_vertical_centered_line_label_and_brightest_column():
    cfg = GenConfig(count=1, side=112, angle=(0.0, 0.0), offset=(0.0, 0.0), noise_sigma=0.0, seed=3)
    dataset = generate_synthetic(cfg)
    sample = dataset.samples[0]
    assert sample.label_pixels == pytest.approx((56.0, 84.0))
    assert int(np.argmax(sample.image[84])) == 56


def test_render_line_is_brighter_than_road():
    scene = TrackScene(center_x=8.0, reference_y=12.0, angle=0.0, track_width=6.0, line_width=1.0,
                       background=0.5, road=0.2, line=0.78, brightness=1.0, tint=np.ones(3))
    image = render_scene(scene, 16)
    assert image[12, 8] > image[12, 6] < image[12, 0]


@settings(max_examples=100, deadline=None)
@given(
    side=st.sampled_from([16, 32, 56]),
    angle=st.floats(-30.0, 30.0),
    offset=st.floats(-1.0, 1.0),
    seed=st.integers(0, 2 ** 32 - 1),
)
def test_label_lies_on_rendered_centerline(side, angle, offset, seed):
    reach = min(side * 0.32, side / 2 - 4)
    cfg = GenConfig(count=1, side=side, angle=(angle, angle), offset=(offset * reach, offset * reach),
                    noise_sigma=0.0, seed=seed)
    sample = generate_synthetic(cfg).samples[0]
    x, y = sample.label_pixels
    assert x == pytest.approx(side / 2 + offset * reach)
    assert y == pytest.approx(0.75 * side)
    scene = draw_scene(cfg, np.random.default_rng(seed))
    slope = np.tan(np.deg2rad(angle))
    # 路面内部亮度随到中心线的距离单调下降，离中心线最近的列最亮
    for row in (int(y), int(y) - side // 4):
        line_x = x + (row - y) * slope
        nearest = int(round(line_x))
        if not 0 <= nearest < side:
            continue
        columns = np.arange(side)
        inside = np.abs(columns - line_x) * np.cos(np.deg2rad(angle)) <= scene.track_width / 2 - 1
        values = sample.image[row, inside]
        assert sample.image[row, nearest] == values.max()


def test_load_round_trip_matches_generated(tmp_path):
    generated = generate_synthetic(GenConfig(count=4, side=16, seed=2), tmp_path)
    loaded = load_dataset(tmp_path)
    assert loaded.side == 16
    for a, b in zip(generated.samples, loaded.samples):
        assert a.filename == b.filename
        np.testing.assert_allclose(a.image, b.image, atol=1e-7)
        assert a.label_pixels == pytest.approx(b.label_pixels)


def test_color_round_trip_halves_resolution(tmp_path):
    generated = generate_synthetic(GenConfig(count=3, side=16, seed=4, color=True), tmp_path)
    assert read_pnm(tmp_path / "image_0.ppm").shape == (32, 32, 3)
    loaded = load_dataset(tmp_path)
    assert loaded.side == 16
    for a, b in zip(generated.samples, loaded.samples):
        np.testing.assert_allclose(a.image, b.image, atol=1e-6)
        assert a.label_pixels == pytest.approx(b.label_pixels)


def test_missing_image_names_the_row(tmp_path):
    write_pnm(tmp_path / "a.pgm", np.zeros((8, 8)))
    write_labels(tmp_path, [("a.pgm", (1.0, 1.0)), ("missing.pgm", (1.0, 1.0))])
    with pytest.raises(DatasetError) as info:
        load_dataset(tmp_path)
    assert info.value.row == 3
    assert "missing.pgm" in str(info.value)


def test_label_outside_image_is_rejected(tmp_path):
    write_pnm(tmp_path / "a.pgm", np.zeros((112, 112)))
    write_labels(tmp_path, [("a.pgm", (300.0, 10.0))])
    with pytest.raises(DatasetError) as info:
        load_dataset(tmp_path)
    assert info.value.row == 2


def test_non_numeric_label_is_rejected(tmp_path):
    write_pnm(tmp_path / "a.pgm", np.zeros((8, 8)))
    (tmp_path / "labels.csv").write_text("filename,x,y\na.pgm,left,3\n")
    with pytest.raises(DatasetError, match="第 2 行"):
        load_dataset(tmp_path)


def test_missing_labels_file(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path)


def test_split_off_is_seeded_and_non_empty(small_dataset):
    train, test = small_dataset.split_off(0.2, seed=1)
    again_train, _ = small_dataset.split_off(0.2, seed=1)
    assert len(train) == 8 and len(test) == 2
    assert [s.filename for s in train.samples] == [s.filename for s in again_train.samples]
    assert test.split == "test"


def test_white_color_image_becomes_all_ones():
    np.testing.assert_allclose(preprocess_image(np.full((224, 224, 3), 255.0), 112), 1.0, atol=1e-6)


def test_checkerboard_pools_to_half():
    board = (np.indices((224, 224)).sum(axis=0) % 2) * 255.0
    np.testing.assert_allclose(preprocess_image(board, 112), 0.5, atol=1e-7)


def test_gray_at_network_side_keeps_values():
    np.testing.assert_allclose(preprocess_image(np.full((112, 112), 128.0), 112), 128 / 255, atol=1e-7)
