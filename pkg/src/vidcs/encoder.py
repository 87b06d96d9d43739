"""Trainable binary measurement layer.

The encoder owns one (t, h_s, w_s) set of real-valued shadow weights; each
shadow vector is shared by the four spatial positions of a (w_p, h_p) =
(2*w_s, 2*h_s) block that map to the same sub-block cell, share((r, c)) =
(r mod h_s, c mod w_s).  Forward passes binarize the shadow by sign and
compute per-position temporal inner products followed by max(0, .);
backward uses the straight-through estimator: the gradient with respect to
the binarized weight is taken as the gradient for the shadow weight,
unscaled, summed over the four sharing positions.
"""

from __future__ import annotations

import numpy as np

from .sensing import MaskSubBlock


def binarize(w):
    """Sign binarization: 1 where w >= 0, else 0 (scalar or array)."""
    if np.isscalar(w):
        return 1 if w >= 0 else 0
    return (np.asarray(w) >= 0).astype(np.uint8)


def clip_shadow(shadow: np.ndarray) -> np.ndarray:
    """Clamp shadow weights into [-1, 1] in place and return them."""
    np.clip(shadow, -1.0, 1.0, out=shadow)
    return shadow


def mask_stats(bits: np.ndarray, previous_bits: np.ndarray) -> tuple[float, int]:
    """Return (nonzero percentage, Hamming distance to previous bits)."""
    bits = np.asarray(bits)
    previous_bits = np.asarray(previous_bits)
    if bits.shape != previous_bits.shape:
        raise ValueError("bit arrays must have identical shapes")
    nnz_pct = 100.0 * float(np.count_nonzero(bits)) / bits.size
    flips = int(np.count_nonzero(bits != previous_bits))
    return nnz_pct, flips


def shadow_histogram(shadow: np.ndarray, n_bins: int) -> np.ndarray:
    """Counts over ``n_bins`` equal-width bins on [-1, 1]; the boundary
    value +1 is assigned to the last bin.  Counts sum to shadow.size."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    w = np.asarray(shadow, dtype=np.float64).reshape(-1)
    idx = np.floor((w + 1.0) / 2.0 * n_bins).astype(int)
    idx = np.clip(idx, 0, n_bins - 1)
    return np.bincount(idx, minlength=n_bins)


class BinaryMaskEncoder:
    """Encoder state (shadow + cached binarization) and its forward/backward.

    Parameters are the shared shadow weights of a :class:`MaskSubBlock`;
    the cached bits are kept consistent with ``binarize(shadow)`` after
    every update via :meth:`refresh_bits`.
    """

    def __init__(self, sub_block: MaskSubBlock):
        self.shadow = np.array(sub_block.shadow, dtype=np.float64)
        self.bits = binarize(self.shadow)
        self._cache = None

    @property
    def t(self) -> int:
        return self.shadow.shape[0]

    @property
    def h_s(self) -> int:
        return self.shadow.shape[1]

    @property
    def w_s(self) -> int:
        return self.shadow.shape[2]

    @property
    def m_p(self) -> int:
        """Measurements per block: (2*w_s) * (2*h_s)."""
        return 4 * self.h_s * self.w_s

    @property
    def n_p(self) -> int:
        return self.m_p * self.t

    def sub_block(self) -> MaskSubBlock:
        return MaskSubBlock(bits=self.bits.copy(), shadow=self.shadow.copy())

    def block_mask(self) -> np.ndarray:
        """Binarized mask tiled to one (t, h_p, w_p) block."""
        return np.tile(self.bits, (1, 2, 2))

    def refresh_bits(self) -> None:
        self.bits = binarize(self.shadow)

    def forward(self, blocks: np.ndarray) -> np.ndarray:
        """Measure a batch of vectorized blocks with the binarized mask.

        ``blocks`` is (n, N_p) (a single length-N_p vector is promoted);
        returns (n, M_p) measurements y = relu(Phi_p x), caching what the
        backward pass needs.
        """
        blocks = np.asarray(blocks, dtype=np.float64)
        single = blocks.ndim == 1
        if single:
            blocks = blocks[None, :]
        n = blocks.shape[0]
        if blocks.shape[1] != self.n_p:
            raise ValueError(
                f"blocks have length {blocks.shape[1]}, encoder expects {self.n_p}"
            )
        h_p, w_p = 2 * self.h_s, 2 * self.w_s
        cubes = blocks.reshape(n, self.t, h_p, w_p)
        tiled = self.block_mask().astype(np.float64)
        pre = np.einsum("ithw,thw->ihw", cubes, tiled).reshape(n, self.m_p)
        y = np.maximum(pre, 0.0)
        self._cache = (cubes, pre)
        return y[0] if single else y

    def backward(self, grad_y: np.ndarray) -> np.ndarray:
        """Straight-through gradient of the cached forward pass.

        ``grad_y`` is (n, M_p) matching the last forward; returns the
        gradient with respect to the shared shadow weights, shape
        (t, h_s, w_s), summed over the batch and over the four positions
        sharing each weight.  ReLU derivative at exactly 0 is 0.
        """
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        cubes, pre = self._cache
        n = cubes.shape[0]
        grad_y = np.asarray(grad_y, dtype=np.float64)
        if grad_y.ndim == 1:
            grad_y = grad_y[None, :]
        if grad_y.shape != (n, self.m_p):
            raise ValueError(
                f"grad shape {grad_y.shape} does not match cached batch "
                f"({n}, {self.m_p})"
            )
        h_p, w_p = 2 * self.h_s, 2 * self.w_s
        gate = (pre > 0.0).astype(np.float64)
        gz = (grad_y * gate).reshape(n, h_p, w_p)
        full = np.einsum("ithw,ihw->thw", cubes, gz)
        # fold the 2x2 tiling back onto the shared sub-block
        g = (
            full[:, : self.h_s, : self.w_s]
            + full[:, : self.h_s, self.w_s :]
            + full[:, self.h_s :, : self.w_s]
            + full[:, self.h_s :, self.w_s :]
        )
        return g
