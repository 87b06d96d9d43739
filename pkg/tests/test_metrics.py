import numpy as np
import pytest

from vidcs.metrics import per_frame_curves, psnr, ssim


class TestPsnr:
    def test_identical_frames_inf(self):
        f = np.random.default_rng(0).random((8, 8))
        assert psnr(f, f.copy()) == float("inf")

    def test_uniform_one_level_error_at_255(self):
        ref = np.full((16, 16), 100.0)
        test = np.full((16, 16), 101.0)
        assert abs(psnr(ref, test, peak=255.0) - 48.1308) < 1e-3

    def test_direct_formula_oracle(self):
        rng = np.random.default_rng(1)
        a = rng.random((12, 12))
        b = rng.random((12, 12))
        mse = sum(
            (a[i, j] - b[i, j]) ** 2 for i in range(12) for j in range(12)
        ) / 144
        want = 10.0 * np.log10(1.0 / mse)
        assert abs(psnr(a, b) - want) < 1e-9

    def test_decreases_with_noise_amplitude(self):
        rng = np.random.default_rng(2)
        ref = rng.random((16, 16))
        noise = rng.standard_normal((16, 16))
        values = [psnr(ref, ref + amp * noise) for amp in (0.01, 0.05, 0.1, 0.3)]
        assert all(x > y for x, y in zip(values, values[1:]))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((2, 2)), np.zeros((3, 2)))


def gaussian_window_oracle():
    w = np.zeros((11, 11))
    for i in range(11):
        for j in range(11):
            di, dj = i - 5, j - 5
            w[i, j] = np.exp(-(di * di + dj * dj) / (2 * 1.5**2))
    return w / w.sum()


def ssim_oracle(a, b, data_range=1.0):
    """Independent per-window loop over valid 11x11 positions."""
    w = gaussian_window_oracle()
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    H, W = a.shape
    vals = []
    for i in range(H - 10):
        for j in range(W - 10):
            pa = a[i : i + 11, j : j + 11]
            pb = b[i : i + 11, j : j + 11]
            mu_a = float(np.sum(w * pa))
            mu_b = float(np.sum(w * pb))
            va = float(np.sum(w * pa * pa)) - mu_a * mu_a
            vb = float(np.sum(w * pb * pb)) - mu_b * mu_b
            cov = float(np.sum(w * pa * pb)) - mu_a * mu_b
            vals.append(
                ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                / ((mu_a**2 + mu_b**2 + c1) * (va + vb + c2))
            )
    return float(np.mean(vals))


class TestSsim:
    def test_identical_is_one(self):
        f = np.random.default_rng(3).random((16, 16))
        assert abs(ssim(f, f.copy()) - 1.0) < 1e-12

    def test_symmetric(self):
        rng = np.random.default_rng(4)
        a = rng.random((14, 18))
        b = rng.random((14, 18))
        assert ssim(a, b) == ssim(b, a)

    def test_constant_pair_matches_sliding_window_oracle(self):
        a = np.full((16, 16), 0.5)
        b = np.full((16, 16), 0.6)
        assert abs(ssim(a, b) - ssim_oracle(a, b)) < 1e-9

    def test_random_pair_matches_oracle(self):
        rng = np.random.default_rng(5)
        a = rng.random((13, 15))
        b = np.clip(a + 0.1 * rng.standard_normal((13, 15)), 0, 1)
        assert abs(ssim(a, b) - ssim_oracle(a, b)) < 1e-9

    def test_range(self):
        rng = np.random.default_rng(6)
        for _ in range(5):
            a = rng.random((12, 12))
            b = rng.random((12, 12))
            assert -1.0 <= ssim(a, b) <= 1.0

    def test_too_small_frame_rejected(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)))


class TestPerFrameCurves:
    def test_identical_volumes(self):
        vol = np.random.default_rng(7).random((3, 16, 16))
        rows, mean_psnr, mean_ssim = per_frame_curves(vol, vol.copy())
        assert all(r[1] == float("inf") for r in rows)
        assert all(abs(r[2] - 1.0) < 1e-12 for r in rows)
        assert mean_psnr == float("inf")

    def test_single_frame(self):
        vol = np.random.default_rng(8).random((1, 12, 12))
        rows, _, _ = per_frame_curves(vol, np.clip(vol + 0.01, 0, 1))
        assert len(rows) == 1

    def test_frame_loop_oracle(self):
        rng = np.random.default_rng(9)
        ref = rng.random((4, 12, 12))
        rec = np.clip(ref + 0.05 * rng.standard_normal(ref.shape), 0, 1)
        rows, mean_psnr, mean_ssim = per_frame_curves(ref, rec)
        want = [(f, psnr(ref[f], rec[f]), ssim(ref[f], rec[f])) for f in range(4)]
        assert rows == want
        assert abs(mean_psnr - np.mean([w[1] for w in want])) < 1e-12
        assert abs(mean_ssim - np.mean([w[2] for w in want])) < 1e-12
