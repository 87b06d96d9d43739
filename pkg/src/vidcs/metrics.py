"""Reconstruction quality metrics: PSNR and SSIM, per frame and averaged."""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve2d

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(ref: np.ndarray, test: np.ndarray, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE) in dB; identical inputs give +inf."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(ref: np.ndarray, test: np.ndarray, data_range: float = 1.0) -> float:
    """Mean local SSIM over valid 11x11 Gaussian windows (sigma 1.5,
    K1 = 0.01, K2 = 0.03); symmetric in its arguments.

    ``data_range`` is the dynamic range of the pixel domain (1.0 for the
    internal [0, 1] convention, 255 for 8-bit data).
    """
    a = np.asarray(ref, dtype=np.float64)
    b = np.asarray(test, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim != 2 or min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"frames must be 2-D with dims >= {SSIM_WINDOW}")
    w = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    mu_a = convolve2d(a, w, mode="valid")
    mu_b = convolve2d(b, w, mode="valid")
    var_a = convolve2d(a * a, w, mode="valid") - mu_a * mu_a
    var_b = convolve2d(b * b, w, mode="valid") - mu_b * mu_b
    cov = convolve2d(a * b, w, mode="valid") - mu_a * mu_b
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def per_frame_curves(
    ref: np.ndarray, recon: np.ndarray, peak: float = 1.0
) -> tuple[list[tuple[int, float, float]], float, float]:
    """Per-frame (index, PSNR, SSIM) rows plus the means over all frames.

    Both volumes are (T, H, W) with identical shapes.
    """
    ref = np.asarray(ref, dtype=np.float64)
    recon = np.asarray(recon, dtype=np.float64)
    if ref.shape != recon.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {recon.shape}")
    rows = []
    for f in range(ref.shape[0]):
        rows.append(
            (f, psnr(ref[f], recon[f], peak), ssim(ref[f], recon[f], peak))
        )
    mean_psnr = float(np.mean([r[1] for r in rows]))
    mean_ssim = float(np.mean([r[2] for r in rows]))
    return rows, mean_psnr, mean_ssim
