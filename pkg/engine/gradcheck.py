"""Central finite-difference checks for the tape's analytic gradients."""
from typing import Callable, Dict, Mapping

import numpy as np

from engine.tensor import Tensor, backward, no_grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a||, ||n||), zero when both vanish."""
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def numerical_gradient(loss_fn: Callable[[], Tensor], tensor: Tensor, h: float = 1e-5) -> np.ndarray:
    """d loss / d tensor by central differences, perturbing `tensor.data` in place."""
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    out = grad.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            plus = loss_fn().item()
            flat[i] = original - h
            minus = loss_fn().item()
            flat[i] = original
            out[i] = (plus - minus) / (2.0 * h)
    return grad


def analytic_gradients(loss_fn: Callable[[], Tensor], tensors: Mapping[str, Tensor]) -> Dict[str, np.ndarray]:
    for t in tensors.values():
        t.zero_grad()
    backward(loss_fn())
    return {
        name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
        for name, t in tensors.items()
    }


def check_gradients(
    loss_fn: Callable[[], Tensor],
    tensors: Mapping[str, Tensor],
    h: float = 1e-5,
) -> Dict[str, float]:
    """Relative error per named tensor between tape and finite-difference gradients.

    `loss_fn` must be deterministic: it is re-evaluated twice per element.
    """
    analytic = analytic_gradients(loss_fn, tensors)
    return {
        name: relative_error(analytic[name], numerical_gradient(loss_fn, t, h))
        for name, t in tensors.items()
    }
