"""Joint end-to-end training of the binary encoder and MLP decoder.

Each step: forward with binarized encoder weights -> MSE -> backward
(straight-through for the encoder) -> joint global gradient clipping ->
SGD-with-momentum update at per-component learning rates -> shadow clip to
[-1, 1] and re-binarization.  One EpochLog per epoch records the loss and
mask statistics.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

from .decoder import MlpDecoder
from .encoder import BinaryMaskEncoder, clip_shadow, mask_stats


class TrainingDiverged(RuntimeError):
    """Raised when the loss becomes non-finite."""


@dataclass
class TrainConfig:
    dec_lr: float
    enc_lr: float | None = None  # None -> 10 * dec_lr
    epochs: int = 480
    batch: int = 200
    momentum: float = 0.9
    clip_threshold: float = 0.1
    seed: int = 0
    train_mask: bool = True
    deterministic: bool = False

    def __post_init__(self):
        if self.dec_lr <= 0 or (self.enc_lr is not None and self.enc_lr <= 0):
            raise ValueError("learning rates must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.epochs < 1 or self.batch < 1:
            raise ValueError("epochs and batch size must be positive")
        if self.clip_threshold <= 0:
            raise ValueError("clip threshold must be positive")

    @property
    def encoder_lr(self) -> float:
        return 10.0 * self.dec_lr if self.enc_lr is None else self.enc_lr


@dataclass
class EpochLog:
    epoch: int
    train_mse: float
    val_mse: float
    enc_lr: float
    dec_lr: float
    nnz_pct: float
    flips: int


@dataclass
class SgdState:
    """Velocity buffers mirroring every trainable parameter, initialized to 0."""

    enc_vel: np.ndarray
    dec_w_vel: list[np.ndarray]
    dec_b_vel: list[np.ndarray]

    @classmethod
    def for_model(cls, encoder: BinaryMaskEncoder, decoder: MlpDecoder) -> "SgdState":
        return cls(
            enc_vel=np.zeros_like(encoder.shadow),
            dec_w_vel=[np.zeros_like(W) for W in decoder.params.weights],
            dec_b_vel=[np.zeros_like(c) for c in decoder.params.biases],
        )


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared block error: loss = (1/N) sum_i ||pred_i - target_i||^2.

    Returns (loss, gradient w.r.t. pred), grad_i = (2/N)(pred_i - target_i).
    A single vector counts as a batch of one.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    n = 1 if pred.ndim == 1 else pred.shape[0]
    diff = pred - target
    loss = float(np.sum(diff * diff)) / n
    return loss, (2.0 / n) * diff


def lr_schedule(component: str, epoch: int, base: float) -> float:
    """Encoder rate halves every 10 epochs; decoder rate drops by 10 after
    epoch 400."""
    if epoch < 0:
        raise ValueError("epoch must be nonnegative")
    if component == "encoder":
        return base / 2.0 ** (epoch // 10)
    if component == "decoder":
        return base if epoch < 400 else base / 10.0
    raise ValueError(f"unknown component {component!r}")


def clip_gradients(grads: list[np.ndarray], threshold: float) -> list[np.ndarray]:
    """Joint L2-norm clipping: if the global norm over all arrays exceeds
    ``threshold``, scale every gradient by threshold/norm (in place)."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    total = 0.0
    for g in grads:
        total += float(np.sum(g * g))
    norm = np.sqrt(total)
    if norm > threshold:
        scale = threshold / norm
        for g in grads:
            g *= scale
    return grads


def sgd_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    velocity: list[np.ndarray],
    lr: float,
    momentum: float,
) -> None:
    """Momentum SGD in place: v <- momentum*v - lr*grad; param <- param + v."""
    for p, g, v in zip(params, grads, velocity, strict=True):
        if p.shape != g.shape or p.shape != v.shape:
            raise ValueError("parameter, gradient and velocity shapes must agree")
        v *= momentum
        v -= lr * g
        p += v


def _batch_mse(encoder: BinaryMaskEncoder, decoder: MlpDecoder,
               blocks: np.ndarray, batch: int) -> float:
    """Eq. (13) loss over a block set with binarized weights, in chunks."""
    total = 0.0
    for i in range(0, len(blocks), batch):
        chunk = blocks[i : i + batch]
        pred = decoder.forward(encoder.forward(chunk))
        diff = pred - chunk
        total += float(np.sum(diff * diff))
    return total / len(blocks)


def train(
    train_blocks: np.ndarray,
    val_blocks: np.ndarray | None,
    cfg: TrainConfig,
    encoder: BinaryMaskEncoder,
    decoder: MlpDecoder,
    *,
    sgd_state: SgdState | None = None,
    start_epoch: int = 0,
    verbose: bool = False,
) -> tuple[BinaryMaskEncoder, MlpDecoder, list[EpochLog]]:
    """Run the epoch loop and return (encoder, decoder, per-epoch logs).

    ``train_blocks``/``val_blocks`` are (n, N_p) matrices.  Mini-batches
    are drawn by a per-epoch shuffle without replacement (stateless RNG
    seeded by (cfg.seed, epoch), so a checkpoint/resume split reproduces an
    uninterrupted run exactly); the last short batch is kept.  With
    ``cfg.train_mask`` False the encoder bits stay frozen at their current
    values and only the decoder trains.
    """
    train_blocks = np.asarray(train_blocks, dtype=np.float64)
    if train_blocks.ndim != 2 or train_blocks.shape[0] == 0:
        raise ValueError("training set must be a nonempty (n, N_p) matrix")
    if train_blocks.shape[1] != encoder.n_p:
        raise ValueError("block length does not match encoder geometry")
    if sgd_state is None:
        sgd_state = SgdState.for_model(encoder, decoder)
    n = train_blocks.shape[0]
    logs: list[EpochLog] = []
    prev_bits = encoder.bits.copy()

    for epoch in range(start_epoch, start_epoch + cfg.epochs):
        enc_lr = lr_schedule("encoder", epoch, cfg.encoder_lr)
        dec_lr = lr_schedule("decoder", epoch, cfg.dec_lr)
        rng = np.random.default_rng([cfg.seed, epoch])
        perm = rng.permutation(n)
        sq_sum = 0.0
        for i in range(0, n, cfg.batch):
            idx = perm[i : i + cfg.batch]
            x = train_blocks[idx]
            y = encoder.forward(x)
            pred = decoder.forward(y)
            loss, grad_pred = mse_loss(pred, x)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"loss became {loss} at epoch {epoch}, sample offset {i} "
                    f"(enc_lr={enc_lr:g}, dec_lr={dec_lr:g})"
                )
            sq_sum += loss * len(idx)
            gw, gb, grad_y = decoder.backward(grad_pred)
            if cfg.train_mask:
                g_shadow = encoder.backward(grad_y)
                clip_gradients(gw + gb + [g_shadow], cfg.clip_threshold)
                sgd_step([encoder.shadow], [g_shadow], [sgd_state.enc_vel],
                         enc_lr, cfg.momentum)
                clip_shadow(encoder.shadow)
                encoder.refresh_bits()
            else:
                clip_gradients(gw + gb, cfg.clip_threshold)
            sgd_step(decoder.params.weights, gw, sgd_state.dec_w_vel,
                     dec_lr, cfg.momentum)
            sgd_step(decoder.params.biases, gb, sgd_state.dec_b_vel,
                     dec_lr, cfg.momentum)

        train_mse = sq_sum / n
        val_mse = (
            _batch_mse(encoder, decoder, val_blocks, cfg.batch)
            if val_blocks is not None and len(val_blocks)
            else float("nan")
        )
        nnz_pct, flips = mask_stats(encoder.bits, prev_bits)
        prev_bits = encoder.bits.copy()
        logs.append(EpochLog(epoch, train_mse, val_mse, enc_lr, dec_lr,
                             nnz_pct, flips))
        if verbose:
            print(
                f"epoch {epoch}: train_mse={train_mse:.6g} val_mse={val_mse:.6g} "
                f"nnz={nnz_pct:.1f}% flips={flips}",
                file=sys.stderr,
            )
    return encoder, decoder, logs


def select_decoder_lr(
    train_blocks: np.ndarray,
    val_blocks: np.ndarray,
    cfg_template: TrainConfig,
    encoder_factory,
    decoder_factory,
    grid: tuple[float, ...] = (1e-2, 1e-3, 1e-4),
    pilot_epochs: int = 5,
) -> float:
    """Pick the base decoder rate from a small grid by validation MSE.

    Runs a short pilot per candidate with fresh models from the factories;
    returns the winning rate.  Mirrors hyper-parameter selection by
    cross-validation on a validation set.
    """
    best_lr, best_val = None, np.inf
    for lr in grid:
        cfg = TrainConfig(
            dec_lr=lr,
            epochs=min(pilot_epochs, cfg_template.epochs),
            batch=cfg_template.batch,
            momentum=cfg_template.momentum,
            clip_threshold=cfg_template.clip_threshold,
            seed=cfg_template.seed,
            train_mask=cfg_template.train_mask,
            deterministic=cfg_template.deterministic,
        )
        try:
            _, _, logs = train(train_blocks, val_blocks, cfg,
                               encoder_factory(), decoder_factory())
        except TrainingDiverged:
            continue
        if logs[-1].val_mse < best_val:
            best_val, best_lr = logs[-1].val_mse, lr
    if best_lr is None:
        raise TrainingDiverged("every grid candidate diverged")
    return best_lr
