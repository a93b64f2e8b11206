import numpy as np
import pytest

import oracles
from attnfilter import (
    DetectorSpec,
    VitConfig,
    atf_embed,
    detect,
    dilate,
    encode,
    filter_tokens,
    init_weights,
    rasterize_to_tokens,
    save_archive,
    tokenize,
    union_masks,
    write_pgm,
)
from attnfilter.errors import (
    EmptyTokenSetError,
    FormatError,
    InputError,
    ShapeError,
)
from attnfilter.filtering import resolve_aux


def test_detector_spec_validation():
    spec = DetectorSpec(kind="luminance")
    assert spec.threshold == 0.4 and spec.dilation_radius == 12
    with pytest.raises(ValueError):
        DetectorSpec(kind="sobel")
    with pytest.raises(ValueError):
        DetectorSpec(kind="luminance", threshold=1.5)
    with pytest.raises(ValueError):
        DetectorSpec(kind="luminance", dilation_radius=-1)


def test_dilate_radius_zero_is_identity(backend, rng):
    mask = rng.random((9, 7)) < 0.3
    out = dilate(mask, 0)
    assert np.array_equal(out, mask)
    assert out is not mask


def test_dilate_single_pixel(backend):
    mask = np.zeros((5, 5), dtype=bool)
    mask[2, 2] = True
    out = dilate(mask, 1)
    expected = np.zeros((5, 5), dtype=bool)
    expected[1:4, 1:4] = True
    assert np.array_equal(out, expected)


def test_dilate_clips_at_borders(backend):
    mask = np.zeros((4, 4), dtype=bool)
    mask[0, 0] = True
    out = dilate(mask, 2)
    expected = np.zeros((4, 4), dtype=bool)
    expected[:3, :3] = True
    assert np.array_equal(out, expected)


def test_dilate_saturation(backend):
    mask = np.ones((6, 3), dtype=bool)
    assert dilate(mask, 4).all()


def test_dilate_matches_bruteforce(backend, rng):
    for radius in (1, 2, 5):
        mask = rng.random((12, 18)) < 0.08
        assert np.array_equal(dilate(mask, radius), oracles.dilate(mask, radius))


def test_dilate_composes(backend, rng):
    mask = rng.random((15, 10)) < 0.05
    assert np.array_equal(dilate(mask, 3), dilate(dilate(mask, 1), 2))
    assert np.array_equal(dilate(dilate(mask, 2), 0), dilate(mask, 2))


def test_dilate_monotone(backend, rng):
    mask = rng.random((11, 11)) < 0.1
    out = dilate(mask, 2)
    assert (out | mask).sum() == out.sum()  # input subset of output


def test_dilate_rejects_bad_input():
    with pytest.raises(ShapeError):
        dilate(np.zeros(5, dtype=bool), 1)
    with pytest.raises(ValueError):
        dilate(np.zeros((2, 2), dtype=bool), -3)


def test_detect_ground_truth(tmp_path):
    aux = tmp_path / "m.pgm"
    write_pgm(np.zeros((8, 8), np.uint8), aux)
    spec = DetectorSpec(kind="ground_truth", dilation_radius=0)
    out = detect(np.zeros((8, 8), np.uint8), spec, aux)
    assert out.shape == (8, 8) and not out.any()

    raw = np.zeros((8, 8), np.uint8)
    raw[3, 4] = 7  # any nonzero counts as detected
    write_pgm(raw, aux)
    out = detect(np.zeros((8, 8), np.uint8), spec, aux)
    assert out.sum() == 1 and out[3, 4]


def test_detect_ground_truth_errors(tmp_path):
    spec = DetectorSpec(kind="ground_truth")
    with pytest.raises(InputError):
        detect(np.zeros((8, 8), np.uint8), spec, None)
    aux = tmp_path / "m.pgm"
    write_pgm(np.zeros((4, 4), np.uint8), aux)
    with pytest.raises(InputError):
        detect(np.zeros((8, 8), np.uint8), spec, aux)


def test_detect_luminance_threshold_inclusive():
    spec = DetectorSpec(kind="luminance", threshold=0.4, dilation_radius=0)
    image = np.full((4, 4), 128, np.uint8)  # intensity 0.502
    assert detect(image, spec).all()
    # 102/255 == 0.4 exactly at float64, and the comparison is >=.
    assert detect(np.full((4, 4), 102, np.uint8), spec).all()
    assert not detect(np.full((4, 4), 101, np.uint8), spec).any()


def test_detect_luminance_rgb_uses_channel_mean():
    spec = DetectorSpec(kind="luminance", threshold=0.5, dilation_radius=0)
    image = np.zeros((2, 2, 3), np.uint8)
    image[0, 0] = (255, 255, 0)  # mean 170 -> 0.667
    image[1, 1] = (255, 0, 0)    # mean 85 -> 0.333
    out = detect(image, spec)
    assert out[0, 0] and not out[1, 1]


def test_detect_score_map(tmp_path):
    scores = np.zeros((6, 6), dtype=np.float32)
    scores[2, 3] = 1.0
    aux = tmp_path / "s.json"
    save_archive({"scores": scores}, aux)
    spec = DetectorSpec(kind="score_map", threshold=0.4, dilation_radius=0)
    out = detect(np.zeros((6, 6), np.uint8), spec, aux)
    assert out.sum() == 1 and out[2, 3]


def test_detect_score_map_errors(tmp_path):
    spec = DetectorSpec(kind="score_map")
    with pytest.raises(InputError):
        detect(np.zeros((6, 6), np.uint8), spec, None)
    aux = tmp_path / "s.json"
    save_archive({"a": np.zeros((6, 6), np.float32), "b": np.zeros(2, np.float32)}, aux)
    with pytest.raises(FormatError):
        detect(np.zeros((6, 6), np.uint8), spec, aux)
    save_archive({"a": np.zeros((3, 6), np.float32)}, aux)
    with pytest.raises(InputError):
        detect(np.zeros((6, 6), np.uint8), spec, aux)


def test_detect_applies_dilation(tmp_path):
    scores = np.zeros((8, 8), dtype=np.float32)
    scores[4, 4] = 0.9
    aux = tmp_path / "s.json"
    save_archive({"scores": scores}, aux)
    spec = DetectorSpec(kind="score_map", threshold=0.4, dilation_radius=2)
    out = detect(np.zeros((8, 8), np.uint8), spec, aux)
    assert out.sum() == 25  # 5x5 Chebyshev ball


def test_rasterize_single_pixel():
    mask = np.zeros((8, 8), dtype=bool)
    mask[0, 0] = True
    assert np.array_equal(rasterize_to_tokens(mask, (2, 2), 4), [1, 0, 0, 0])


def test_rasterize_saturation():
    assert not rasterize_to_tokens(np.zeros((8, 8), bool), (2, 2), 4).any()
    assert rasterize_to_tokens(np.ones((8, 8), bool), (2, 2), 4).all()


def test_rasterize_row_major_order():
    mask = np.zeros((8, 8), dtype=bool)
    mask[0, 7] = True   # top-right patch -> token 1
    mask[7, 0] = True   # bottom-left patch -> token 2
    assert np.array_equal(rasterize_to_tokens(mask, (2, 2), 4), [0, 1, 1, 0])


def test_rasterize_rejects_mismatch():
    with pytest.raises(ShapeError):
        rasterize_to_tokens(np.zeros((8, 9), bool), (2, 2), 4)


def test_union_masks():
    s = np.array([True, False])
    assert np.array_equal(union_masks(s, np.zeros(2, bool)), s)
    assert np.array_equal(
        union_masks(np.array([True, False]), np.array([False, True])), [True, True]
    )
    with pytest.raises(ShapeError):
        union_masks(np.zeros(3, bool), np.zeros(2, bool))


def test_union_commutative(rng):
    a = rng.random(40) < 0.5
    b = rng.random(40) < 0.5
    assert np.array_equal(union_masks(a, b), union_masks(b, a))


def test_filter_tokens_identity(tiny_config, tiny_weights, rng):
    image = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
    ts = tokenize(image, tiny_weights, tiny_config)
    out = filter_tokens(ts, np.ones(4, dtype=bool))
    assert np.array_equal(out.tokens, ts.tokens)
    assert np.array_equal(out.kept_indices, ts.kept_indices)


def test_filter_tokens_selection(tiny_config, tiny_weights, rng):
    image = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
    ts = tokenize(image, tiny_weights, tiny_config)
    out = filter_tokens(ts, np.array([True, False, True, False]))
    assert out.count == 2
    assert np.array_equal(out.kept_indices, [0, 2])
    assert np.array_equal(out.tokens, ts.tokens[[0, 2]])


def test_filter_tokens_empty_mask_raises(tiny_config, tiny_weights, rng):
    image = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
    ts = tokenize(image, tiny_weights, tiny_config)
    with pytest.raises(EmptyTokenSetError):
        filter_tokens(ts, np.zeros(4, dtype=bool))
    with pytest.raises(ShapeError):
        filter_tokens(ts, np.zeros(5, dtype=bool))


def test_filter_tokens_popcount_and_monotonicity(tiny_config, tiny_weights, rng):
    image = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
    ts = tokenize(image, tiny_weights, tiny_config)
    small = np.array([False, True, False, True])
    big = np.array([True, True, False, True])
    kept_small = filter_tokens(ts, small)
    kept_big = filter_tokens(ts, big)
    assert kept_small.count == small.sum()
    assert set(kept_small.kept_indices) <= set(kept_big.kept_indices)


def test_filter_applies_to_already_filtered_set(tiny_config, tiny_weights, rng):
    # The mask always indexes the original grid, not the surviving rows.
    image = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
    ts = tokenize(image, tiny_weights, tiny_config)
    once = filter_tokens(ts, np.array([True, True, False, True]))
    twice = filter_tokens(once, np.array([False, True, False, True]))
    assert np.array_equal(twice.kept_indices, [1, 3])
    assert np.array_equal(twice.tokens, ts.tokens[[1, 3]])


def test_atf_embed_full_static_mask_equals_unfiltered(tiny_config, tiny_weights, rng):
    image = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
    spec = DetectorSpec(kind="luminance", threshold=1.0, dilation_radius=0)
    embedding, stats = atf_embed(
        image, tiny_weights, tiny_config, np.ones(4, dtype=bool), spec
    )
    baseline = encode(tokenize(image, tiny_weights, tiny_config), tiny_weights, tiny_config)
    assert np.array_equal(embedding, baseline)
    assert stats.tokens_before == 4 and stats.tokens_after == 4
    assert stats.detector_seconds >= 0.0 and stats.encoder_seconds > 0.0


def test_atf_embed_nothing_kept_raises(tiny_config, tiny_weights):
    image = np.zeros((8, 8), dtype=np.uint8)  # luminance detects nothing
    spec = DetectorSpec(kind="luminance", threshold=0.5, dilation_radius=0)
    with pytest.raises(EmptyTokenSetError):
        atf_embed(image, tiny_weights, tiny_config, np.zeros(4, dtype=bool), spec)


def test_atf_embed_counts_disjoint_union(tmp_path):
    # 64x64 image, 8px patches: detector covers the 16x16 top-left corner
    # (4 patches), static mask marks 4 other tokens -> 8 survive.
    config = VitConfig(image_size=64, patch_size=8, channels=1, d_model=8, heads=2, layers=1)
    weights = init_weights(config, seed=3)
    image = np.zeros((64, 64), dtype=np.uint8)
    aux = tmp_path / "corner.pgm"
    gt = np.zeros((64, 64), np.uint8)
    gt[:16, :16] = 255
    write_pgm(gt, aux)
    static = np.zeros(64, dtype=bool)
    static[[20, 30, 40, 50]] = True
    spec = DetectorSpec(kind="ground_truth", dilation_radius=0)
    _, stats = atf_embed(image, weights, config, static, spec, aux)
    assert stats.tokens_before == 64
    assert stats.tokens_after == 8


def test_atf_embed_matches_manual_chain(tiny_config, tiny_weights, rng, tmp_path):
    image = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
    gt = (rng.random((8, 8)) < 0.2).astype(np.uint8) * 255
    aux = tmp_path / "m.pgm"
    write_pgm(gt, aux)
    static = rng.random(4) < 0.5
    spec = DetectorSpec(kind="ground_truth", dilation_radius=1)
    embedding, stats = atf_embed(image, tiny_weights, tiny_config, static, spec, aux)

    pixel = detect(image, spec, aux)
    token_mask = union_masks(static, rasterize_to_tokens(pixel, (2, 2), 4))
    manual = encode(
        filter_tokens(tokenize(image, tiny_weights, tiny_config), token_mask),
        tiny_weights,
        tiny_config,
    )
    assert np.array_equal(embedding, manual)
    assert stats.tokens_after == token_mask.sum()


def test_resolve_aux_conventions(tmp_path):
    dataset = tmp_path
    (dataset / "images").mkdir()
    (dataset / "masks").mkdir()
    (dataset / "scores").mkdir()
    image = dataset / "images" / "pic.pgm"
    write_pgm(np.zeros((4, 4), np.uint8), image)
    write_pgm(np.zeros((4, 4), np.uint8), dataset / "masks" / "pic.pgm")
    save_archive({"s": np.zeros((4, 4), np.float32)}, dataset / "scores" / "pic.json")

    gt = DetectorSpec(kind="ground_truth")
    sm = DetectorSpec(kind="score_map")
    lum = DetectorSpec(kind="luminance")
    assert resolve_aux(image, gt, dataset) == dataset / "masks" / "pic.pgm"
    assert resolve_aux(image, sm, dataset) == dataset / "scores" / "pic.json"
    assert resolve_aux(image, lum, dataset) is None

    missing = dataset / "images" / "other.pgm"
    with pytest.raises(InputError):
        resolve_aux(missing, gt, dataset)
