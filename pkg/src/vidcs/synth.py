"""Synthetic grayscale video generators used as the desk-scale corpus.

Two contrasting kinds:

* ``moving-squares`` — piecewise-constant frames with slowly translating
  rectangles over a flat background (plays to TV regularization).
* ``drift-texture`` — a smooth mixture of drifting 2-D sinusoids (plays to
  the learned decoder).
"""

from __future__ import annotations

import numpy as np

KINDS = ("moving-squares", "drift-texture")


def moving_squares(
    width: int, height: int, frames: int, seed: int, n_squares: int | None = None,
    max_speed: float = 0.5,
) -> np.ndarray:
    """Piecewise-constant video of translating rectangles, values in [0, 1]."""
    rng = np.random.default_rng(seed)
    if n_squares is None:
        n_squares = max(2, (width * height) // 512)
    background = float(rng.uniform(0.1, 0.3))
    vol = np.full((frames, height, width), background, dtype=np.float64)
    for _ in range(n_squares):
        side_w = int(rng.integers(max(3, width // 8), max(4, width // 3)))
        side_h = int(rng.integers(max(3, height // 8), max(4, height // 3)))
        x = float(rng.uniform(0, width - side_w))
        y = float(rng.uniform(0, height - side_h))
        vx, vy = rng.uniform(-max_speed, max_speed, 2)
        level = float(rng.uniform(0.4, 1.0))
        for f in range(frames):
            cx = int(round(x + vx * f)) % width
            cy = int(round(y + vy * f)) % height
            x1 = min(cx + side_w, width)
            y1 = min(cy + side_h, height)
            vol[f, cy:y1, cx:x1] = level
    return vol


def drift_texture(
    width: int, height: int, frames: int, seed: int, n_waves: int = 6
) -> np.ndarray:
    """Smooth drifting texture: normalized sum of translating sinusoids."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    vol = np.zeros((frames, height, width), dtype=np.float64)
    for _ in range(n_waves):
        freq = rng.uniform(0.02, 0.15)
        theta = rng.uniform(0, 2 * np.pi)
        u, v = freq * np.cos(theta), freq * np.sin(theta)
        phase = rng.uniform(0, 2 * np.pi)
        omega = rng.uniform(-0.35, 0.35)
        amp = rng.uniform(0.5, 1.0)
        base = 2 * np.pi * (u * xx + v * yy) + phase
        for f in range(frames):
            vol[f] += amp * np.sin(base + omega * f)
    lo, hi = vol.min(), vol.max()
    return (vol - lo) / (hi - lo) if hi > lo else np.full_like(vol, 0.5)


def generate(kind: str, width: int, height: int, frames: int, seed: int) -> np.ndarray:
    if kind == "moving-squares":
        return moving_squares(width, height, frames, seed)
    if kind == "drift-texture":
        return drift_texture(width, height, frames, seed)
    raise ValueError(f"unknown kind {kind!r}, expected one of {KINDS}")
