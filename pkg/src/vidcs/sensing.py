"""Binary exposure masks and the coded-frame measurement model.

The camera modulates t frames with per-pixel binary masks and integrates,
producing one coded frame per group of t frames.  A small (w_s, h_s, t)
sub-block tiled over the sensor defines the whole mask; per video block the
measurement is a sparse binary matrix with t diagonal bands.

Bit semantics: 1 = light passes, 0 = blocked.  Mask cubes use the same
(t, h, w) C-order layout as video volumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MaskSubBlock:
    """The (w_s, h_s, t) binary building sub-block plus its real-valued
    shadow weights.

    ``bits`` and ``shadow`` are (t, h_s, w_s) arrays; bits[k] = 1 iff
    shadow[k] >= 0, and every shadow value lies in [-1, 1].
    """

    bits: np.ndarray
    shadow: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        self.shadow = np.asarray(self.shadow, dtype=np.float64)
        if self.bits.ndim != 3 or self.bits.shape != self.shadow.shape:
            raise ValueError("bits and shadow must be matching (t, h_s, w_s) arrays")
        if np.any(np.abs(self.shadow) > 1.0):
            raise ValueError("shadow weights must lie in [-1, 1]")
        if not np.array_equal(self.bits, (self.shadow >= 0).astype(np.uint8)):
            raise ValueError("bits inconsistent with sign of shadow weights")

    @property
    def t(self) -> int:
        return self.bits.shape[0]

    @property
    def h_s(self) -> int:
        return self.bits.shape[1]

    @property
    def w_s(self) -> int:
        return self.bits.shape[2]


@dataclass(frozen=True)
class PhiMatrix:
    """Per-block measurement matrix, M_p x N_p with t diagonal bands.

    Determined entirely by the binary mask of one (w_p, h_p, t) block;
    row j may be nonzero only at columns j, M_p + j, ..., (t-1)*M_p + j.
    """

    mask: np.ndarray  # (t, h_p, w_p) bits

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=np.uint8)
        if m.ndim != 3:
            raise ValueError("block mask must be a (t, h_p, w_p) array")
        object.__setattr__(self, "mask", m)

    @property
    def t(self) -> int:
        return self.mask.shape[0]

    @property
    def rows(self) -> int:
        return self.mask.shape[1] * self.mask.shape[2]

    @property
    def cols(self) -> int:
        return self.rows * self.t

    def to_dense(self) -> np.ndarray:
        """Materialize the full M_p x N_p matrix (for small problems)."""
        m_p = self.rows
        dense = np.zeros((m_p, self.cols), dtype=np.float64)
        flat = self.mask.reshape(self.t, m_p)
        j = np.arange(m_p)
        for n in range(self.t):
            dense[j, n * m_p + j] = flat[n]
        return dense


def sample_bernoulli_mask(
    dims: tuple[int, int, int], p: float, seed: int
) -> MaskSubBlock:
    """Draw a random sub-block: bits ~ Bern(p), shadow ~ Unif(0, 1/sqrt(t))
    where bit = 1 and Unif(-1/sqrt(t), 0) where bit = 0.

    ``dims`` is (w_s, h_s, t); reproducible from ``seed``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"mask density p must lie in (0, 1), got {p}")
    w_s, h_s, t = dims
    rng = np.random.default_rng(seed)
    bits = (rng.random((t, h_s, w_s)) < p).astype(np.uint8)
    u = rng.random((t, h_s, w_s))
    bound = 1.0 / np.sqrt(t)
    shadow = np.where(bits == 1, u * bound, (u - 1.0) * bound)
    return MaskSubBlock(bits=bits, shadow=shadow)


def tile_mask(sub: MaskSubBlock | np.ndarray, frame_dims: tuple[int, int]) -> np.ndarray:
    """Tile a sub-block's bits over a (W, H) frame: bit(x, y, n) =
    sub(x mod w_s, y mod h_s, n).  Returns a (t, H, W) uint8 array."""
    bits = sub.bits if isinstance(sub, MaskSubBlock) else np.asarray(sub, dtype=np.uint8)
    t, h_s, w_s = bits.shape
    W, H = frame_dims
    if W % w_s or H % h_s:
        raise ValueError(
            f"frame {W}x{H} is not a multiple of sub-block {w_s}x{h_s}"
        )
    return np.tile(bits, (1, H // h_s, W // w_s))


def build_phi_p(
    mask: np.ndarray, dims: tuple[int, int, int] | None = None
) -> PhiMatrix:
    """Build the measurement matrix of one block from its binary mask.

    ``mask`` is either a (t, h_p, w_p) cube or its length-N_p
    spatial-then-temporal flattening, in which case ``dims`` = (w_p, h_p, t)
    is required.  Entry (j, n*M_p + j) of the matrix is the mask bit for
    pixel j at time n; everything off that pattern is zero.
    """
    mask = np.asarray(mask, dtype=np.uint8)
    if mask.ndim == 1:
        if dims is None:
            raise ValueError("flat mask requires dims=(w_p, h_p, t)")
        w_p, h_p, t = dims
        if mask.shape != (w_p * h_p * t,):
            raise ValueError(
                f"mask length {mask.size} does not match dims {w_p}x{h_p}x{t}"
            )
        mask = mask.reshape(t, h_p, w_p)
    elif mask.ndim != 3:
        raise ValueError("expected a (t, h_p, w_p) mask cube or flat mask + dims")
    return PhiMatrix(mask=mask)


def simulate_coded_frame(
    volume: np.ndarray, tiled_mask: np.ndarray, group: int
) -> np.ndarray:
    """One coded exposure: out(x, y) = sum_n mask(x, y, n) * pixel(x, y, g*t + n).

    Noiseless; values land in [0, t].  Returns an (H, W) float64 frame.
    """
    t, H, W = tiled_mask.shape
    T = volume.shape[0]
    if volume.shape[1:] != (H, W):
        raise ValueError("volume and mask frame dims differ")
    f0 = group * t
    if f0 < 0 or f0 + t > T:
        raise ValueError(
            f"group {group} needs frames [{f0}, {f0 + t}), volume has {T}"
        )
    return np.einsum("nhw,nhw->hw", tiled_mask.astype(np.float64), volume[f0 : f0 + t])


def measure_block(block: np.ndarray, phi: PhiMatrix) -> np.ndarray:
    """Measure one vectorized block: y = relu(Phi_p x), computed as M_p
    independent length-t temporal inner products."""
    t, h_p, w_p = phi.mask.shape
    block = np.asarray(block, dtype=np.float64)
    if block.shape != (t * h_p * w_p,):
        raise ValueError(
            f"block length {block.shape} does not match Phi dims {phi.mask.shape}"
        )
    cube = block.reshape(t, h_p, w_p)
    y = np.einsum("nhw,nhw->hw", phi.mask.astype(np.float64), cube).reshape(-1)
    return np.maximum(y, 0.0)
