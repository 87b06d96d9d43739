"""Frame-level acquisition and reconstruction drivers.

Glue between the per-block operations and whole videos: coded acquisition
of every t-frame group, and the three reconstruction paths (learned
decoder, LASSO over the 3D-DCT dictionary, TV least squares).  The decoder
and LASSO paths extract overlapping patches from each coded frame at the
half-block step and average the recovered blocks; TV works on whole frames.
"""

from __future__ import annotations

import numpy as np

from .decoder import MlpDecoder
from .sensing import build_phi_p, simulate_coded_frame, tile_mask
from .solvers import (
    LASSO_DEFAULTS,
    TV_DEFAULTS,
    SolverConfig,
    build_dct_dictionary,
    solve_lasso,
    solve_tv,
)
from .volume import PatchGrid, assemble_overlapping_blocks, center_crop


def measure_volume(
    volume: np.ndarray, bits: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate coded acquisition of every full t-frame group.

    The volume is center-cropped to the mask stride; trailing frames that
    do not fill a group are dropped.  Returns (coded stack (G, H, W),
    cropped reference volume (G*t, H, W)).
    """
    t, h_s, w_s = bits.shape
    vol = center_crop(volume, w_s, h_s)
    groups = vol.shape[0] // t
    if groups == 0:
        raise ValueError(f"volume has {vol.shape[0]} frames, needs at least {t}")
    vol = vol[: groups * t]
    tiled = tile_mask(bits, (vol.shape[2], vol.shape[1]))
    coded = np.stack(
        [simulate_coded_frame(vol, tiled, g) for g in range(groups)]
    )
    return coded, vol


def _coded_patches(frame: np.ndarray, grid: PatchGrid) -> np.ndarray:
    return np.stack(
        [
            frame[y0 : y0 + grid.h_p, x0 : x0 + grid.w_p].reshape(-1)
            for x0, y0 in grid.origins
        ]
    )


def reconstruct_decoder(
    coded: np.ndarray, bits: np.ndarray, decoder: MlpDecoder
) -> np.ndarray:
    """Learned-decoder reconstruction of a coded stack (G, H, W) ->
    (G*t, H, W), overlapping blocks averaged."""
    t, h_s, w_s = bits.shape
    G, H, W = coded.shape
    grid = PatchGrid.for_frame(W, H, 2 * w_s, 2 * h_s)
    out = []
    for g in range(G):
        blocks = decoder.forward(_coded_patches(coded[g], grid))
        out.append(assemble_overlapping_blocks(blocks, grid, (W, H, t)))
    return np.clip(np.concatenate(out, axis=0), 0.0, 1.0)


def reconstruct_lasso(
    coded: np.ndarray, bits: np.ndarray, cfg: SolverConfig = LASSO_DEFAULTS
) -> np.ndarray:
    """Patch-wise LASSO reconstruction over the orthonormal 3D-DCT basis."""
    t, h_s, w_s = bits.shape
    G, H, W = coded.shape
    w_p, h_p = 2 * w_s, 2 * h_s
    grid = PatchGrid.for_frame(W, H, w_p, h_p)
    phi = build_phi_p(tile_mask(bits, (w_p, h_p)))
    dictionary = build_dct_dictionary(w_p, h_p, t)
    out = []
    for g in range(G):
        patches = _coded_patches(coded[g], grid)
        blocks = np.stack(
            [solve_lasso(y, phi, dictionary, cfg)[1] for y in patches]
        )
        out.append(assemble_overlapping_blocks(blocks, grid, (W, H, t)))
    return np.clip(np.concatenate(out, axis=0), 0.0, 1.0)


def reconstruct_tv(
    coded: np.ndarray, bits: np.ndarray, cfg: SolverConfig = TV_DEFAULTS
) -> np.ndarray:
    """Whole-frame TV-regularized reconstruction of a coded stack."""
    G, H, W = coded.shape
    tiled = tile_mask(bits, (W, H))
    out = [solve_tv(coded[g], tiled, cfg) for g in range(G)]
    return np.clip(np.concatenate(out, axis=0), 0.0, 1.0)
