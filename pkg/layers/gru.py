"""Gated recurrent unit shared across PMU nodes."""
from typing import Optional

import numpy as np

from engine import ops
from engine.tensor import Tensor
from layers.module import Module, uniform_init
from utils.errors import DimensionError, EmptySequenceError


class GruCell(Module):
    """Standard GRU:

        z  = σ(x W_z + h U_z + b_z)
        r  = σ(x W_r + h U_r + b_r)
        h̃  = tanh(x W_h + (r ∘ h) U_h + b_h)
        h' = (1 - z) ∘ h + z ∘ h̃
    """

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        f, h = input_dim, hidden_dim
        self.W_z = uniform_init(rng, (f, h), f)
        self.W_r = uniform_init(rng, (f, h), f)
        self.W_h = uniform_init(rng, (f, h), f)
        self.U_z = uniform_init(rng, (h, h), h)
        self.U_r = uniform_init(rng, (h, h), h)
        self.U_h = uniform_init(rng, (h, h), h)
        self.b_z = uniform_init(rng, (h,), h)
        self.b_r = uniform_init(rng, (h,), h)
        self.b_h = uniform_init(rng, (h,), h)

    def _affine(self, x: Tensor, w: Tensor, b: Tensor) -> Tensor:
        return ops.add(ops.matmul(x, w), ops.expand(b, (x.shape[0], self.hidden_dim)))

    def step(self, x: Tensor, h: Tensor) -> Tensor:
        """One update for a batch: x is M×F, h is M×H."""
        z = ops.sigmoid(ops.add(self._affine(x, self.W_z, self.b_z), ops.matmul(h, self.U_z)))
        r = ops.sigmoid(ops.add(self._affine(x, self.W_r, self.b_r), ops.matmul(h, self.U_r)))
        candidate = ops.tanh(
            ops.add(self._affine(x, self.W_h, self.b_h), ops.matmul(ops.mul(r, h), self.U_h))
        )
        return ops.add(h, ops.mul(z, ops.sub(candidate, h)))

    def forward(self, seq: Tensor, h0: Optional[Tensor] = None) -> Tensor:
        """Final hidden state after the whole sequence.

        `seq` is S×F (returns H) or M×S×F for M independent sequences
        (returns M×H).
        """
        unbatched = seq.ndim == 2
        if unbatched:
            seq = ops.reshape(seq, (1,) + seq.shape)
        if seq.ndim != 3 or seq.shape[-1] != self.input_dim:
            raise DimensionError(f"GRU expects (M×)S×{self.input_dim} input, got {seq.shape}")
        batch, steps, _ = seq.shape
        if steps == 0:
            raise EmptySequenceError("GRU needs at least one timestep")
        if h0 is None:
            h = Tensor(np.zeros((batch, self.hidden_dim)))
        elif h0.shape == (self.hidden_dim,):
            h = ops.expand(h0, (batch, self.hidden_dim))
        elif h0.shape == (batch, self.hidden_dim):
            h = h0
        else:
            raise DimensionError(f"h0 shape {h0.shape} does not fit {batch}×{self.hidden_dim}")
        for t in range(steps):
            h = self.step(seq[:, t, :], h)
        return ops.reshape(h, (self.hidden_dim,)) if unbatched else h


def gru_forward(cell: GruCell, seq: Tensor, h0: Optional[Tensor] = None) -> Tensor:
    return cell.forward(seq, h0)
