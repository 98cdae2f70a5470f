import numpy as np
import pytest

from skinshape.imageio import RasterImage
from skinshape.skin import (
    MorphologyConfig,
    NoSkinError,
    SkinHistogramModel,
    SkinMask,
    build_rule_histogram,
    default_skin_model,
    disk,
    disk_radius,
    label_components,
    largest_component,
    morph_close,
    morph_open,
    refine,
    rule_skin_labels,
    skin_probability_map,
    threshold_mask,
    train_skin_histogram,
)


def _mask(bits):
    bits = np.asarray(bits, dtype=bool)
    return SkinMask(bits, bits.astype(float))


# set-based oracle: the mask is a finite subset of Z^2


def _points(bits):
    return {(int(r), int(c)) for r, c in zip(*np.nonzero(bits))}


def _offsets(radius):
    return [(dr, dc) for dr in range(-radius, radius + 1) for dc in range(-radius, radius + 1)
            if dr * dr + dc * dc <= radius * radius]


def _dilate(pts, offs):
    return {(r + dr, c + dc) for r, c in pts for dr, dc in offs}


def _erode(pts, offs):
    return {p for p in pts if all((p[0] + dr, p[1] + dc) in pts for dr, dc in offs)}


def oracle_open(bits, radius):
    offs = _offsets(radius)
    return _dilate(_erode(_points(bits), offs), offs)


def oracle_close(bits, radius):
    offs = _offsets(radius)
    return _erode(_dilate(_points(bits), offs), offs)


def _frame(pts, shape):
    out = np.zeros(shape, dtype=bool)
    for r, c in pts:
        if 0 <= r < shape[0] and 0 <= c < shape[1]:
            out[r, c] = True
    return out


def test_train_histogram_cells():
    m = train_skin_histogram([(224, 160, 128)], [(32, 64, 32)], bins=32)
    assert m.skin_counts[28, 20, 16] == 1 and m.skin_total == 1
    assert m.nonskin_counts[4, 8, 4] == 1 and m.nonskin_total == 1


def test_train_histogram_errors():
    with pytest.raises(ValueError):
        train_skin_histogram([(1, 2, 3)], [], bins=32)
    with pytest.raises(ValueError):
        train_skin_histogram([(1, 2, 3)], [(4, 5, 6)], bins=10)


def test_identical_streams_give_half():
    px = np.random.default_rng(1).integers(0, 256, (500, 3))
    m = train_skin_histogram(px, px, bins=16)
    np.testing.assert_allclose(m.posterior_table(), 0.5)


def test_posterior_add_one():
    skin = np.zeros((32,) * 3, dtype=np.int64)
    non = np.zeros_like(skin)
    skin[1, 2, 3] = 9
    non[5, 5, 5] = 9
    table = SkinHistogramModel(32, skin, non).posterior_table()
    assert table[1, 2, 3] == pytest.approx(10 / 11, abs=1e-12)
    assert table[0, 0, 0] == pytest.approx(0.5, abs=1e-12)


def test_probability_map_lookup():
    m = train_skin_histogram([(224, 160, 128)] * 5, [(32, 64, 32)] * 5, bins=32)
    px = np.zeros((8, 8, 3), dtype=np.uint8)
    px[:4] = (224, 160, 128)
    px[4:] = (32, 64, 32)
    prob = skin_probability_map(RasterImage(px), m)
    assert (prob[:4] > 0.5).all() and (prob[4:] < 0.5).all()


def test_bytes_round_trip():
    m = build_rule_histogram(16)
    data = m.to_bytes()
    assert len(data) == 16 + 2 * 4 * 16**3
    back = SkinHistogramModel.from_bytes(data)
    np.testing.assert_array_equal(back.skin_counts, m.skin_counts)
    assert back.to_bytes() == data
    with pytest.raises(ValueError):
        SkinHistogramModel.from_bytes(b"XXXX" + data[4:])
    with pytest.raises(ValueError):
        SkinHistogramModel.from_bytes(data[:-4])


def test_default_model_matches_rule_build():
    m = default_skin_model()
    assert m.bins == 32
    assert m.skin_total + m.nonskin_total == 256**3
    assert m.to_bytes() == build_rule_histogram(32).to_bytes()


def test_rule_labels():
    assert rule_skin_labels(np.array([224, 160, 128]))
    assert not rule_skin_labels(np.array([60, 140, 60]))
    assert not rule_skin_labels(np.array([200, 200, 200]))


def test_threshold():
    np.testing.assert_array_equal(threshold_mask(np.full((3, 3), 0.9), 0.5).bits, True)
    np.testing.assert_array_equal(threshold_mask(np.zeros((3, 3)), 0.0).bits, True)
    np.testing.assert_array_equal(threshold_mask(np.array([0.4, 0.5, 0.6]), 0.5).bits, [0, 1, 1])
    with pytest.raises(ValueError):
        threshold_mask(np.zeros(3), 1.5)


def test_disk_radius():
    assert disk_radius(300, 450, 75) == 10
    assert disk_radius(800, 700, 100) == 15
    assert disk_radius(8, 8, 100) == 1
    assert disk_radius(125, 0, 100) == 1  # 1.25
    assert disk_radius(150, 0, 100) == 2  # 1.5 rounds up
    with pytest.raises(ValueError):
        disk_radius(10, 10, 0)


def test_disk_shape():
    d = disk(2)
    assert d.shape == (5, 5)
    assert d.sum() == 13


def test_morphology_matches_set_oracle():
    rng = np.random.default_rng(5)
    for _ in range(60):
        shape = tuple(rng.integers(6, 16, 2))
        bits = rng.random(shape) < rng.uniform(0.2, 0.8)
        r = int(rng.integers(1, 4))
        np.testing.assert_array_equal(morph_open(_mask(bits), r).bits, _frame(oracle_open(bits, r), shape))
        np.testing.assert_array_equal(morph_close(_mask(bits), r).bits, _frame(oracle_close(bits, r), shape))


def test_open_removes_speck_and_empty_stays_empty():
    bits = np.zeros((11, 11), dtype=bool)
    assert not morph_open(_mask(bits), 2).bits.any()
    assert not morph_close(_mask(bits), 2).bits.any()
    bits[5, 5] = True
    assert not morph_open(_mask(bits), 2).bits.any()


def test_close_fills_hole():
    bits = np.zeros((30, 30), dtype=bool)
    bits[5:25, 5:25] = True
    holed = bits.copy()
    holed[12, 14] = False
    np.testing.assert_array_equal(morph_close(_mask(holed), 2).bits, bits)


def test_close_is_extensive_at_border():
    bits = np.zeros((12, 12), dtype=bool)
    bits[0, :] = True
    bits[:, 0] = True
    out = morph_close(_mask(bits), 3).bits
    assert (out >= bits).all()


def test_refine_noisy_blob():
    rng = np.random.default_rng(3)
    yy, xx = np.mgrid[:200, :200]
    blob = (xx - 100) ** 2 + (yy - 100) ** 2 <= 60**2
    noisy = blob | (rng.random(blob.shape) < 0.01)
    inner = np.argwhere((xx - 100) ** 2 + (yy - 100) ** 2 < 50**2)
    for r, c in inner[rng.choice(len(inner), 12, replace=False)]:
        noisy[r, c] = False
    out = refine(_mask(noisy), MorphologyConfig(), 200, 200).bits
    manual = morph_close(morph_open(_mask(noisy), disk_radius(200, 200, 75)), disk_radius(200, 200, 100)).bits
    np.testing.assert_array_equal(out, manual)
    assert len(label_components(out)) == 1
    assert label_components(out).regions[0].area == pytest.approx(blob.sum(), rel=0.02)
    # specks outside the blob are gone, holes inside it are filled
    far = (xx - 100) ** 2 + (yy - 100) ** 2 > 64**2
    near = (xx - 100) ** 2 + (yy - 100) ** 2 < 56**2
    assert not out[far].any()
    assert out[near].all()


def test_refine_large_disk_unchanged_up_to_band():
    yy, xx = np.mgrid[:300, :300]
    d = np.hypot(xx - 150, yy - 150)
    blob = d <= 100
    out = refine(_mask(blob), MorphologyConfig(), 300, 300).bits
    diff = out ^ blob
    assert np.all(np.abs(d[diff] - 100) <= 1.5)


def test_labeling_basics():
    bits = np.zeros((10, 10), dtype=bool)
    bits[0:3, 0:3] = True
    bits[5:8, 5:8] = True
    rs = label_components(bits)
    assert len(rs) == 2 and [r.area for r in rs.regions] == [9, 9]
    r0 = rs.regions[0]
    assert r0.bbox == (0, 0, 2, 2)
    assert r0.centroid == (1.0, 1.0)
    assert r0.perimeter == 8
    bits = np.zeros((6, 6), dtype=bool)
    bits[0:2, 0:2] = True
    bits[2:4, 2:4] = True
    assert len(label_components(bits)) == 1
    checker = (np.indices((4, 4)).sum(axis=0) % 2 == 0)
    assert len(label_components(checker)) == 1


def test_largest_component_rules():
    bits = np.zeros((30, 30), dtype=bool)
    bits[0:5, 0:8] = True  # 40
    bits[10:19, 10:20] = True  # 90
    bits[25:26, 22:29] = True  # 7
    rs = label_components(bits)
    assert rs.get(largest_component(rs)).area == 90
    bits = np.zeros((20, 30), dtype=bool)
    bits[0:5, 0:10] = True
    bits[10:15, 10:20] = True
    rs = label_components(bits)
    assert largest_component(rs) == 1
    with pytest.raises(NoSkinError):
        largest_component(label_components(np.zeros((5, 5), dtype=bool)))
