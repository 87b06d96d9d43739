"""Scikit-learn style facade over the joint encoder-decoder model.

``CodedVideoReconstructor`` is an autoencoder-shaped estimator: ``fit``
trains the binary exposure mask together with the MLP decoder on a matrix
of vectorized video blocks, ``transform`` maps blocks to coded
measurements with the (binarized) mask, ``inverse_transform`` decodes
measurements, ``predict`` round-trips blocks through both, and ``score``
returns the negative mean squared block error so the model composes with
model selection utilities.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .decoder import MlpDecoder, init_decoder
from .encoder import BinaryMaskEncoder
from .sensing import sample_bernoulli_mask
from .trainer import TrainConfig, mse_loss, select_decoder_lr, train


def check_block_matrix(X, n_p: int | None = None) -> np.ndarray:
    """Validate a (n_samples, N_p) float block matrix in [0, 1]."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("expected a nonempty 2-D block matrix")
    if n_p is not None and X.shape[1] != n_p:
        raise ValueError(f"blocks have {X.shape[1]} features, expected {n_p}")
    if not np.isfinite(X).all():
        raise ValueError("block matrix contains non-finite values")
    return X


class CodedVideoReconstructor(BaseEstimator):
    """Jointly learned binary sensing mask and MLP reconstruction network.

    Parameters
    ----------
    block_shape : (w_p, h_p, t) video block geometry; the sensing sub-block
        is (w_p/2, h_p/2, t) and the measurement length is w_p*h_p.
    hidden_layers : number of ReLU hidden layers in the decoder.
    hidden_units : hidden width; None means N_p = w_p*h_p*t.
    decoder_lr : base decoder learning rate; None selects one from
        ``lr_grid`` by validation MSE before the final fit.
    encoder_lr : base encoder (shadow weight) rate; None means 10x the
        decoder rate.
    mask_density : Bernoulli probability of an open mask bit at init.
    train_mask : False freezes the mask at its random initialization and
        trains the decoder only.
    """

    def __init__(
        self,
        block_shape=(8, 8, 16),
        hidden_layers=4,
        hidden_units=None,
        epochs=480,
        batch_size=200,
        momentum=0.9,
        clip_threshold=0.1,
        decoder_lr=None,
        encoder_lr=None,
        lr_grid=(1e-2, 1e-3, 1e-4),
        mask_density=0.4,
        train_mask=True,
        deterministic=False,
        random_state=0,
    ):
        self.block_shape = block_shape
        self.hidden_layers = hidden_layers
        self.hidden_units = hidden_units
        self.epochs = epochs
        self.batch_size = batch_size
        self.momentum = momentum
        self.clip_threshold = clip_threshold
        self.decoder_lr = decoder_lr
        self.encoder_lr = encoder_lr
        self.lr_grid = lr_grid
        self.mask_density = mask_density
        self.train_mask = train_mask
        self.deterministic = deterministic
        self.random_state = random_state

    @property
    def _n_p(self) -> int:
        w_p, h_p, t = self.block_shape
        return w_p * h_p * t

    def _make_models(self):
        w_p, h_p, t = self.block_shape
        if w_p % 2 or h_p % 2:
            raise ValueError("block spatial dims must be even")
        sub = sample_bernoulli_mask(
            (w_p // 2, h_p // 2, t), self.mask_density, self.random_state
        )
        encoder = BinaryMaskEncoder(sub)
        decoder = MlpDecoder(
            init_decoder(
                encoder.m_p,
                encoder.n_p,
                self.hidden_layers,
                self.random_state + 1,
                hidden_units=self.hidden_units,
            )
        )
        return encoder, decoder

    def fit(self, X, y=None, X_val=None):
        """Train on a (n_samples, N_p) block matrix.

        ``X_val`` (optional) backs the per-epoch validation curve and the
        learning-rate grid search; without it a 10% tail split of X is
        used whenever a validation set is needed.
        """
        X = check_block_matrix(X, self._n_p)
        if X_val is not None:
            X_val = check_block_matrix(X_val, self._n_p)

        dec_lr = self.decoder_lr
        if dec_lr is None:
            if X_val is None:
                n_val = max(1, len(X) // 10)
                X_fit, X_val = X[:-n_val], X[-n_val:]
            else:
                X_fit = X
            template = TrainConfig(
                dec_lr=1.0, epochs=self.epochs, batch=self.batch_size,
                momentum=self.momentum, clip_threshold=self.clip_threshold,
                seed=self.random_state, train_mask=self.train_mask,
                deterministic=self.deterministic,
            )
            enc_f, dec_f = self._make_models()
            dec_lr = select_decoder_lr(
                X_fit, X_val, template,
                encoder_factory=lambda: BinaryMaskEncoder(enc_f.sub_block()),
                decoder_factory=lambda: MlpDecoder(dec_f.params.copy()),
                grid=tuple(self.lr_grid),
            )
        cfg = TrainConfig(
            dec_lr=dec_lr, enc_lr=self.encoder_lr, epochs=self.epochs,
            batch=self.batch_size, momentum=self.momentum,
            clip_threshold=self.clip_threshold, seed=self.random_state,
            train_mask=self.train_mask, deterministic=self.deterministic,
        )
        encoder, decoder = self._make_models()
        encoder, decoder, logs = train(X, X_val, cfg, encoder, decoder)
        self.encoder_ = encoder
        self.decoder_ = decoder
        self.history_ = logs
        self.decoder_lr_ = dec_lr
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "encoder_"):
            raise RuntimeError("estimator is not fitted yet; call fit first")

    def transform(self, X):
        """Blocks -> coded measurements with the binarized mask."""
        self._check_fitted()
        X = check_block_matrix(X, self._n_p)
        return self.encoder_.forward(X)

    def inverse_transform(self, Y):
        """Coded measurements -> reconstructed blocks."""
        self._check_fitted()
        Y = np.asarray(Y, dtype=np.float64)
        return self.decoder_.forward(Y)

    def predict(self, X):
        """Reconstruct blocks from their own coded measurements."""
        return self.inverse_transform(self.transform(X))

    def score(self, X, y=None):
        """Negative mean squared block error (higher is better)."""
        X = check_block_matrix(X, self._n_p)
        loss, _ = mse_loss(self.predict(X), X)
        return -loss
