"""Tensor arithmetic with reverse-mode automatic differentiation."""
from engine.tensor import Function, Tape, Tensor, as_tensor, backward, debug_finite, no_grad, parameter

__all__ = [
    "Function",
    "Tape",
    "Tensor",
    "as_tensor",
    "backward",
    "debug_finite",
    "no_grad",
    "parameter",
]
