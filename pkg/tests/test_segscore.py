import numpy as np
import pytest

from errors import ConfigError, EmptyRoiError, ShapeError, UndefinedScoreError
from fibrosis.anomaly import AnomalyConfig
from fibrosis.roi import Roi
from fibrosis.segscore import (
    SegMask,
    channel_mask,
    dice,
    estimate_thresholds,
    infarction_score,
    mean_channel_intensity,
    score_query,
    thresholds_from_reconstructions,
)

RED, GREEN = 0, 1


def naive_mask(image, roi, channel, theta):
    out = np.zeros((roi.height, roi.width), dtype=bool)
    for y in range(roi.height):
        for x in range(roi.width):
            out[y, x] = image[roi.y0 + y, roi.x0 + x, channel] > theta
    return out


def mask_of(bitmap, roi=None, channel="green"):
    bitmap = np.asarray(bitmap, dtype=bool)
    roi = roi or Roi(0, 0, bitmap.shape[1], bitmap.shape[0])
    return SegMask(channel, roi, bitmap, 0.5)


def count_mask(n, shape=(30, 40)):
    bitmap = np.zeros(shape, dtype=bool)
    bitmap.flat[:n] = True
    return mask_of(bitmap)


@pytest.fixture
def quad_image():
    image = np.zeros((2, 2, 3))
    image[:, :, GREEN] = np.array([[10, 20], [30, 40]]) / 255.0
    return image


class TestMeanIntensity:

    def test_four_pixels(self, quad_image):
        assert mean_channel_intensity(quad_image, Roi(0, 0, 2, 2), "green") == pytest.approx(25 / 255)

    def test_constant_channel(self):
        image = np.full((10, 12, 3), 0.37)
        assert mean_channel_intensity(image, Roi(2, 3, 5, 4), "red") == pytest.approx(0.37)

    def test_matches_pixel_loop(self, rng):
        image = rng.uniform(size=(20, 25, 3))
        roi = Roi(3, 4, 11, 9)
        total = sum(image[y, x, GREEN] for y in range(4, 13) for x in range(3, 14))
        assert mean_channel_intensity(image, roi, "green") == pytest.approx(total / roi.area, abs=1e-12)

    def test_empty_roi(self):
        with pytest.raises(EmptyRoiError):
            mean_channel_intensity(np.zeros((4, 4, 3)), Roi(1, 1, 0, 2), "green")


class TestChannelMask:

    def test_threshold_at_maximum(self, rng):
        image = rng.uniform(size=(10, 10, 3))
        roi = Roi(0, 0, 10, 10)
        assert channel_mask(image, roi, "green", image[:, :, GREEN].max()).count == 0

    def test_quad_example(self, quad_image):
        mask = channel_mask(quad_image, Roi(0, 0, 2, 2), "green", 25 / 255)
        assert mask.count == 2
        assert sorted(mask.coords()) == [(0, 1), (1, 1)]

    def test_strict_inequality(self):
        image = np.full((6, 6, 3), 0.4)
        assert channel_mask(image, Roi(0, 0, 6, 6), "red", 0.4).count == 0

    @pytest.mark.parametrize("seed", range(100))
    def test_matches_double_loop(self, seed):
        rng = np.random.default_rng(seed)
        h, w = rng.integers(4, 12, size=2)
        image = rng.uniform(size=(h, w, 3))
        x0, y0 = rng.integers(0, 3, size=2)
        roi = Roi(int(x0), int(y0), int(w - x0), int(h - y0))
        channel = "green" if seed % 2 else "red"
        theta = float(rng.uniform())
        mask = channel_mask(image, roi, channel, theta)
        np.testing.assert_array_equal(mask.bitmap, naive_mask(image, roi, GREEN if seed % 2 else RED, theta))
        assert all(roi.x0 <= x < roi.x1 and roi.y0 <= y < roi.y1 for x, y in mask.coords())

    def test_monotone_in_threshold(self, rng):
        image = rng.uniform(size=(15, 15, 3))
        roi = Roi(0, 0, 15, 15)
        thetas = np.linspace(0.0, 1.0, 11)
        masks = [channel_mask(image, roi, "green", t).bitmap for t in thetas]
        for loose, tight in zip(masks, masks[1:]):
            assert not np.any(tight & ~loose)

    @pytest.mark.parametrize("theta", [-0.01, 1.01])
    def test_threshold_range(self, theta):
        with pytest.raises(ConfigError):
            channel_mask(np.zeros((4, 4, 3)), Roi(0, 0, 4, 4), "green", theta)

    def test_unknown_channel(self):
        with pytest.raises(ConfigError):
            channel_mask(np.zeros((4, 4, 3)), Roi(0, 0, 4, 4), "violet", 0.5)

    def test_frame_uses_image_coordinates(self):
        image = np.zeros((10, 10, 3))
        image[5, 7, GREEN] = 1.0
        frame = channel_mask(image, Roi(4, 3, 6, 6), "green", 0.5).to_frame()
        assert frame.rows() == [(7, 5)]


class TestScore:

    def test_ratio(self):
        assert infarction_score(count_mask(120), count_mask(480)) == 0.25

    def test_equal_masks(self):
        assert infarction_score(count_mask(33), count_mask(33)) == 1.0

    def test_empty_green(self):
        assert infarction_score(count_mask(0), count_mask(10)) == 0.0

    def test_empty_red(self):
        with pytest.raises(UndefinedScoreError):
            infarction_score(count_mask(5), count_mask(0))

    def test_mismatched_rois(self):
        with pytest.raises(ShapeError):
            infarction_score(count_mask(5), count_mask(5, shape=(10, 10)))

    def test_scale_free_under_tiling(self, rng):
        image = rng.uniform(size=(12, 14, 3))
        tiled = np.tile(image, (2, 2, 1))

        def score(img):
            roi = Roi(0, 0, img.shape[1], img.shape[0])
            return infarction_score(channel_mask(img, roi, "green", 0.6), channel_mask(img, roi, "red", 0.3))

        assert score(tiled) == score(image)


class TestDice:

    def test_identical(self):
        m = count_mask(17)
        assert dice(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((4, 4), dtype=bool)
        b = a.copy()
        a[0] = True
        b[3] = True
        assert dice(a, b) == 0.0

    def test_half_overlap(self):
        a = np.zeros((4, 4), dtype=bool)
        b = a.copy()
        a[0, :4] = True
        b[0, 2:] = True
        b[1, :2] = True
        assert dice(mask_of(a), mask_of(b)) == 0.5

    def test_both_empty(self):
        assert dice(np.zeros((3, 3)), np.zeros((3, 3))) == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            dice(np.zeros((3, 3)), np.zeros((3, 4)))


class TestThresholds:

    def test_constant_generator(self, constant_model, rng):
        query = rng.uniform(size=(16, 16, 3))
        for mode in ("random", "search"):
            theta_g, theta_r = estimate_thresholds(constant_model, AnomalyConfig(n_z=3, steps=2, z_mode=mode), query)
            assert theta_g == pytest.approx(0.5, abs=1e-9)
            assert theta_r == pytest.approx(0.2, abs=1e-9)

    def test_reproducible(self, small_model, rng):
        query = rng.uniform(size=(16, 16, 3))
        cfg = AnomalyConfig(n_z=1, steps=2, seed=4)
        assert estimate_thresholds(small_model, cfg, query) == estimate_thresholds(small_model, cfg, query)

    def test_stable_in_sample_count(self, small_model, rng):
        query = rng.uniform(size=(16, 16, 3))
        few = estimate_thresholds(small_model, AnomalyConfig(n_z=64, z_mode="random", seed=1), query)
        many = estimate_thresholds(small_model, AnomalyConfig(n_z=4096, z_mode="random", seed=1), query)
        np.testing.assert_allclose(few, many, atol=0.02)

    def test_from_reconstructions(self):
        recs = np.zeros((2, 4, 4, 3))
        recs[0, :, :, GREEN] = 0.2
        recs[1, :, :, GREEN] = 0.6
        recs[:, :2, :, RED] = 1.0
        assert thresholds_from_reconstructions(recs) == pytest.approx((0.4, 0.5))

    def test_bad_reconstructions(self):
        with pytest.raises(ShapeError):
            thresholds_from_reconstructions(np.zeros((4, 4, 3)))


@pytest.fixture
def query_image():
    """Red above 0.2 on the left half of the ROI, green above 0.5 on an 8x8 block inside it"""
    image = np.full((40, 44, 3), 0.1)
    image[4:36, 6:22, RED] = 0.6
    image[10:18, 8:16, GREEN] = 0.9
    return image


class TestScoreQuery:

    def test_counts_and_invariants(self, constant_model, query_image):
        roi = Roi(6, 4, 32, 32)
        cfg = AnomalyConfig(n_z=2, steps=1, seed=0)
        result = score_query(constant_model, query_image, roi, cfg, image_id="q", label="day 3")
        report = result.report
        assert (report.t_g, report.t_r) == (64, 512)
        assert report.score == 0.125
        assert report.score * report.t_r == report.t_g
        assert report.defined and report.error is None
        assert report.roi == roi.to_dict()
        assert report.z_mode == "search" and report.label == "day 3"
        assert result.green.roi == roi
        assert set(result.green.coords()) <= set(result.red.coords())
        assert result.heatmap.shape == (32, 32)
        assert result.reconstruction.shape == (16, 16, 3)

    def test_undefined_score_is_reported(self, constant_model):
        image = np.full((20, 20, 3), 0.1)
        result = score_query(constant_model, image, Roi(0, 0, 20, 20), AnomalyConfig(n_z=1, z_mode="random"))
        assert result.report.score is None
        assert not result.report.defined
        assert "red mask is empty" in result.report.error
        assert result.report.to_dict()["score"] is None

    def test_score_on_resized(self, constant_model, query_image):
        roi = Roi(6, 4, 32, 32)
        cfg = AnomalyConfig(n_z=1, z_mode="random")
        result = score_query(constant_model, query_image, roi, cfg, score_on_resized=True)
        assert result.green.bitmap.shape == (16, 16)
        assert result.report.t_r == 16 * 8
        assert result.report.score == pytest.approx(0.125, abs=0.05)

    def test_report_row(self, constant_model, query_image):
        result = score_query(constant_model, query_image, Roi(6, 4, 32, 32), AnomalyConfig(n_z=1, z_mode="random"))
        row = result.report.to_row()
        assert row["roi_x0"] == 6 and row["roi_height"] == 32
        assert "provenance" not in row
