"""Temporal video compressive sensing with trainable binary exposure masks.

Simulates coded-exposure acquisition, trains a binary sensing mask jointly
with an MLP reconstruction network, reconstructs video with the learned
decoder or with classical LASSO/TV solvers, and evaluates with PSNR/SSIM.
"""

from .decoder import DecoderParams, MlpDecoder, init_decoder
from .encoder import BinaryMaskEncoder, binarize, mask_stats, shadow_histogram
from .estimator import CodedVideoReconstructor
from .metrics import psnr, ssim
from .sensing import (
    MaskSubBlock,
    PhiMatrix,
    build_phi_p,
    measure_block,
    sample_bernoulli_mask,
    simulate_coded_frame,
    tile_mask,
)
from .solvers import (
    Dictionary,
    SolverConfig,
    build_dct_dictionary,
    solve_lasso,
    solve_tv,
    tv_norm,
)
from .trainer import EpochLog, SgdState, TrainConfig, train
from .volume import (
    PatchGrid,
    assemble_overlapping_blocks,
    extract_training_blocks,
    unvectorize_block,
    vectorize_block,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryMaskEncoder",
    "CodedVideoReconstructor",
    "DecoderParams",
    "Dictionary",
    "EpochLog",
    "MaskSubBlock",
    "MlpDecoder",
    "PatchGrid",
    "PhiMatrix",
    "SgdState",
    "SolverConfig",
    "TrainConfig",
    "assemble_overlapping_blocks",
    "binarize",
    "build_dct_dictionary",
    "build_phi_p",
    "extract_training_blocks",
    "init_decoder",
    "mask_stats",
    "measure_block",
    "psnr",
    "sample_bernoulli_mask",
    "shadow_histogram",
    "simulate_coded_frame",
    "solve_lasso",
    "solve_tv",
    "ssim",
    "tile_mask",
    "train",
    "tv_norm",
    "unvectorize_block",
    "vectorize_block",
]
