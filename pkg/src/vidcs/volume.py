"""Video volumes, block geometry, and the vectorization convention.

A grayscale video volume is a float64 ndarray of shape ``(T, H, W)`` with
values in [0, 1]; memory order is frame-major, then row-major, which is
exactly C order for this shape.  A video block is the same thing at block
scale, shape ``(t, h_p, w_p)``, and its vectorized form is the C-order
ravel: ``vec[n*w_p*h_p + r*w_p + c] == block[n, r, c]``, i.e. spatial
row-major within a time slice, time slices in increasing order.

Every other module relies on these conventions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


def as_volume(data: np.ndarray) -> np.ndarray:
    """Validate and return a (T, H, W) float64 volume with values in [0, 1].

    8-bit integer input is divided by 255; float input must already be in
    range.
    """
    arr = np.asarray(data)
    if arr.ndim != 3:
        raise ValueError(f"volume must be 3-D (T, H, W), got shape {arr.shape}")
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float64) / 255.0
    else:
        arr = arr.astype(np.float64, copy=False)
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("volume values must lie in [0, 1]")
    return arr


def center_crop(volume: np.ndarray, w_s: int, h_s: int) -> np.ndarray:
    """Center-crop frames to the largest multiple of the stride (w_s, h_s).

    Keeps the tiled mask and the half-overlap patch grid exact.
    """
    T, H, W = volume.shape
    H2 = (H // h_s) * h_s
    W2 = (W // w_s) * w_s
    if H2 == 0 or W2 == 0:
        raise ValueError(f"frame {W}x{H} smaller than stride {w_s}x{h_s}")
    r0 = (H - H2) // 2
    c0 = (W - W2) // 2
    return volume[:, r0 : r0 + H2, c0 : c0 + W2]


def vectorize_block(
    volume: np.ndarray, x0: int, y0: int, f0: int, dims: tuple[int, int, int]
) -> np.ndarray:
    """Extract the block window at (x0, y0, f0) as a length-N_p vector.

    ``dims`` is (w_p, h_p, t).  Ordering: vec[n*w_p*h_p + r*w_p + c] =
    pixel(x0+c, y0+r, f0+n).
    """
    w_p, h_p, t = dims
    T, H, W = volume.shape
    if x0 < 0 or y0 < 0 or f0 < 0 or x0 + w_p > W or y0 + h_p > H or f0 + t > T:
        raise ValueError(
            f"block window ({x0},{y0},{f0})+({w_p},{h_p},{t}) outside volume "
            f"(W={W}, H={H}, T={T})"
        )
    return volume[f0 : f0 + t, y0 : y0 + h_p, x0 : x0 + w_p].reshape(-1).copy()


def unvectorize_block(vec: np.ndarray, dims: tuple[int, int, int]) -> np.ndarray:
    """Inverse of vectorize_block: length-N_p vector -> (t, h_p, w_p) array."""
    w_p, h_p, t = dims
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (w_p * h_p * t,):
        raise ValueError(
            f"vector length {vec.shape} does not match dims {w_p}x{h_p}x{t}"
        )
    return vec.reshape(t, h_p, w_p).copy()


@dataclass(frozen=True)
class PatchGrid:
    """Half-overlapping block grid covering a (cropped) frame exactly.

    Blocks are (w_p, h_p) with stride (w_s, h_s) = (w_p/2, h_p/2); origins
    is the list of all (x0, y0) block corners.
    """

    w_p: int
    h_p: int
    w_s: int
    h_s: int
    origins: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.w_p % 2 or self.h_p % 2:
            raise ValueError("block dims must be even")
        if (self.w_s, self.h_s) != (self.w_p // 2, self.h_p // 2):
            raise ValueError("stride must be exactly half the block dims")

    @classmethod
    def for_frame(cls, width: int, height: int, w_p: int, h_p: int) -> "PatchGrid":
        w_s, h_s = w_p // 2, h_p // 2
        if width % w_s or height % h_s:
            raise ValueError(
                f"frame {width}x{height} not a multiple of stride {w_s}x{h_s}"
            )
        if width < w_p or height < h_p:
            raise ValueError("frame smaller than one block")
        origins = tuple(
            (x0, y0)
            for y0 in range(0, height - h_p + 1, h_s)
            for x0 in range(0, width - w_p + 1, w_s)
        )
        return cls(w_p, h_p, w_s, h_s, origins)


def extract_training_blocks(
    volumes: list[np.ndarray],
    n: int,
    dims: tuple[int, int, int],
    seed: int,
) -> np.ndarray:
    """Randomly extract ``n`` vectorized blocks from a list of volumes.

    Per-volume counts are proportional to frame counts (largest-remainder
    rounding).  Volumes too small for one block are skipped with a warning.
    Returns an (n, N_p) matrix; reproducible from ``seed``.
    """
    w_p, h_p, t = dims
    usable = []
    for i, v in enumerate(volumes):
        T, H, W = v.shape
        if W < w_p or H < h_p or T < t:
            warnings.warn(
                f"volume {i} ({W}x{H}x{T}) smaller than block dims, skipping",
                stacklevel=2,
            )
            continue
        usable.append((i, v))
    if not usable:
        raise ValueError("no volume large enough for one block")

    frames = np.array([v.shape[0] for _, v in usable], dtype=np.float64)
    quota = n * frames / frames.sum()
    counts = np.floor(quota).astype(int)
    remainder = n - counts.sum()
    if remainder > 0:
        order = np.argsort(-(quota - counts), kind="stable")
        counts[order[:remainder]] += 1

    rng = np.random.default_rng(seed)
    out = np.empty((n, w_p * h_p * t), dtype=np.float64)
    k = 0
    for (_, v), cnt in zip(usable, counts):
        T, H, W = v.shape
        for _ in range(cnt):
            x0 = int(rng.integers(0, W - w_p + 1))
            y0 = int(rng.integers(0, H - h_p + 1))
            f0 = int(rng.integers(0, T - t + 1))
            out[k] = vectorize_block(v, x0, y0, f0, dims)
            k += 1
    return out


def assemble_overlapping_blocks(
    blocks: np.ndarray,
    grid: PatchGrid,
    out_dims: tuple[int, int, int],
) -> np.ndarray:
    """Average overlapping reconstructed blocks back into a volume.

    ``blocks`` is (n_blocks, N_p) in the order of ``grid.origins``; output
    has shape (t, height, width) where out_dims = (width, height, t).  Each
    output pixel is the arithmetic mean of every block value covering it.
    """
    width, height, t = out_dims
    blocks = np.asarray(blocks, dtype=np.float64)
    if blocks.shape != (len(grid.origins), grid.w_p * grid.h_p * t):
        raise ValueError(
            f"expected {len(grid.origins)} blocks of length "
            f"{grid.w_p * grid.h_p * t}, got {blocks.shape}"
        )
    acc = np.zeros((t, height, width), dtype=np.float64)
    cnt = np.zeros((height, width), dtype=np.float64)
    for vec, (x0, y0) in zip(blocks, grid.origins):
        cube = vec.reshape(t, grid.h_p, grid.w_p)
        acc[:, y0 : y0 + grid.h_p, x0 : x0 + grid.w_p] += cube
        cnt[y0 : y0 + grid.h_p, x0 : x0 + grid.w_p] += 1.0
    if np.any(cnt == 0):
        raise ValueError("patch grid does not cover the output frame")
    return acc / cnt[None, :, :]
