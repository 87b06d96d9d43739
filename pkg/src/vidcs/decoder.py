"""MLP decoder mapping a measurement patch back to a video block.

Layer chain M_p -> H -> ... -> H -> N_p with K ReLU hidden layers and an
affine output layer (no nonlinearity).  H defaults to N_p, matching the
reference architecture; a smaller H gives the reduced desk-scale decoder.
All math is float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class DecoderParams:
    """Weight matrices [W_1, ..., W_K, W_o] and bias vectors [c_1, ..., c_K, c_o].

    W_1 is (H, M_p), hidden W_k are (H, H), W_o is (N_p, H); biases match
    the output dim of their layer.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or len(self.weights) < 2:
            raise ValueError("need K >= 1 hidden layers plus an output layer")
        for W, c in zip(self.weights, self.biases):
            if W.shape[0] != c.shape[0]:
                raise ValueError("bias length must match weight rows")

    @property
    def k(self) -> int:
        """Number of hidden layers."""
        return len(self.weights) - 1

    @property
    def m_p(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_p(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def hidden_units(self) -> int:
        return self.weights[0].shape[0]

    def copy(self) -> "DecoderParams":
        return DecoderParams(
            [W.copy() for W in self.weights], [c.copy() for c in self.biases]
        )


def init_decoder(
    m_p: int, n_p: int, k: int, seed: int, hidden_units: int | None = None
) -> DecoderParams:
    """Initialize decoder weights i.i.d. Unif(-1/sqrt(H), 1/sqrt(H)) with
    zero biases, H = hidden_units (default N_p); reproducible from seed."""
    if m_p <= 0 or n_p <= 0 or k < 1:
        raise ValueError("dims must be positive and K >= 1")
    h = n_p if hidden_units is None else int(hidden_units)
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(h)
    shapes = [(h, m_p)] + [(h, h)] * (k - 1) + [(n_p, h)]
    weights = [rng.uniform(-bound, bound, s) for s in shapes]
    biases = [np.zeros(s[0], dtype=np.float64) for s in shapes]
    return DecoderParams(weights, biases)


class MlpDecoder:
    """Forward/backward wrapper around :class:`DecoderParams` with the
    activation cache needed for exact reverse-mode gradients."""

    def __init__(self, params: DecoderParams):
        self.params = params
        self._cache = None

    def forward(self, y: np.ndarray) -> np.ndarray:
        """h_0 = y; h_k = relu(W_k h_{k-1} + c_k); output = W_o h_K + c_o.

        ``y`` is (n, M_p) or a single length-M_p vector.
        """
        y = np.asarray(y, dtype=np.float64)
        single = y.ndim == 1
        if single:
            y = y[None, :]
        if y.shape[1] != self.params.m_p:
            raise ValueError(
                f"measurements have length {y.shape[1]}, decoder expects "
                f"{self.params.m_p}"
            )
        acts = [y]
        h = y
        for W, c in zip(self.params.weights[:-1], self.params.biases[:-1]):
            h = np.maximum(h @ W.T + c, 0.0)
            acts.append(h)
        out = h @ self.params.weights[-1].T + self.params.biases[-1]
        self._cache = acts
        return out[0] if single else out

    def backward(self, grad_out: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
        """Exact gradients of the cached forward pass.

        Returns (grad_weights, grad_biases, grad_input); gradients are
        summed over the batch.  ReLU derivative at exactly 0 is 0.
        """
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        acts = self._cache
        grad_out = np.asarray(grad_out, dtype=np.float64)
        if grad_out.ndim == 1:
            grad_out = grad_out[None, :]
        n = acts[0].shape[0]
        if grad_out.shape != (n, self.params.n_p):
            raise ValueError(
                f"grad shape {grad_out.shape} does not match cached batch "
                f"({n}, {self.params.n_p})"
            )
        gw = [None] * len(self.params.weights)
        gb = [None] * len(self.params.biases)
        delta = grad_out
        for i in range(len(self.params.weights) - 1, 0, -1):
            gw[i] = delta.T @ acts[i]
            gb[i] = delta.sum(axis=0)
            delta = (delta @ self.params.weights[i]) * (acts[i] > 0.0)
        gw[0] = delta.T @ acts[0]
        gb[0] = delta.sum(axis=0)
        grad_input = delta @ self.params.weights[0]
        return gw, gb, grad_input
