import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage
from skimage.metrics import peak_signal_noise_ratio, structural_similarity

from artifact.metrics import compute_metrics, psnr, reco, ssim, vif


def gauss_blur(x, s):
    return ndimage.gaussian_filter(x, (s, s, 0))


class TestPsnr:
    def test_identity(self, textured128):
        assert psnr(textured128, textured128) == math.inf

    def test_offset_16_levels(self):
        # [DERIVED] MSE = (16/255)^2
        a = np.full((8, 8, 1), 0.2)
        assert psnr(a, a + 16 / 255) == pytest.approx(10 * math.log10(255 ** 2 / 256), abs=1e-9)

    def test_unit_offset(self):
        assert psnr(np.zeros((4, 4, 1)), np.ones((4, 4, 1))) == pytest.approx(0.0, abs=1e-12)

    def test_matches_skimage(self, textured128):
        noisy = np.clip(textured128 + np.random.default_rng(0).normal(0, .02, textured128.shape), 0, 1)
        assert psnr(textured128, noisy) == pytest.approx(
            peak_signal_noise_ratio(textured128, noisy, data_range=1.0), rel=1e-12)

    def test_decreases_with_noise(self, textured128):
        rng = np.random.default_rng(1)
        noise = rng.standard_normal(textured128.shape)
        vals = [psnr(textured128, textured128 + s * noise) for s in (0.01, 0.02, 0.04, 0.08)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((4, 4, 1)), np.zeros((4, 5, 1)))


class TestSsim:
    def test_identity(self, textured128):
        assert ssim(textured128, textured128) == pytest.approx(1.0, abs=1e-12)

    def test_constant_frames(self):
        c = np.full((32, 32, 1), 0.3)
        assert ssim(c, c) == pytest.approx(1.0, abs=1e-12)

    def test_inverted_is_negative(self, textured_gray128):
        assert ssim(textured_gray128, 1 - textured_gray128) < 0

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_skimage_oracle(self, textured128, seed):
        rng = np.random.default_rng(seed)
        test = np.clip(gauss_blur(textured128, 1.0) + rng.normal(0, .03, textured128.shape), 0, 1)
        ref_val = structural_similarity(textured128, test, channel_axis=2, data_range=1.0,
                                        gaussian_weights=True, sigma=1.5,
                                        use_sample_covariance=False)
        assert ssim(textured128, test) == pytest.approx(ref_val, abs=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_symmetric_and_bounded(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.random((24, 24, 1)), rng.random((24, 24, 1))
        v = ssim(a, b)
        assert v == pytest.approx(ssim(b, a), abs=1e-12) and v <= 1.0

    def test_too_small(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((8, 8, 1)), np.zeros((8, 8, 1)))


class TestVif:
    def test_identity(self, textured128):
        assert vif(textured128, textured128) == 1.0

    def test_heavy_blur(self, textured128):
        assert vif(textured128, gauss_blur(textured128, 3)) < 1.0

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        assert vif(rng.random((64, 64, 1)), rng.random((64, 64, 1))) >= 0.0

    def test_flat_reference(self):
        assert vif(np.full((64, 64, 1), .5), np.full((64, 64, 1), .6)) == 0.0


class TestReco:
    def test_identity(self, textured128):
        assert reco(textured128, textured128) == pytest.approx(1.0, abs=1e-12)

    def test_blur_lowers(self, textured128):
        assert reco(textured128, gauss_blur(textured128, 1.5)) < 1.0

    def test_sharpening_can_exceed_one(self, textured128):
        sharp = np.clip(textured128 + 1.5 * (textured128 - gauss_blur(textured128, 1.0)), 0, 1)
        assert reco(textured128, sharp) > 1.0

    def test_no_edges(self):
        assert reco(np.full((16, 16, 1), .4), np.full((16, 16, 1), .4)) is None


class TestBlurLadder:
    def test_all_metrics_nonincreasing(self, textured128):
        ladder = [textured128] + [gauss_blur(textured128, s) for s in (0.5, 1.0, 1.5, 2.0, 3.0)]
        sets = [compute_metrics(textured128, x) for x in ladder]
        for name in ("psnr", "ssim", "vif", "reco"):
            vals = [getattr(m, name) for m in sets]
            assert all(b <= a + 1e-6 for a, b in zip(vals, vals[1:])), (name, vals)

    def test_metric_set_dict(self, textured128):
        d = compute_metrics(textured128, textured128).to_dict()
        assert d == {"psnr": math.inf, "ssim": pytest.approx(1.0), "vif": 1.0, "reco": pytest.approx(1.0)}
