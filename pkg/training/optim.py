"""AdamW with decoupled weight decay."""
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from engine.tensor import Tensor
from utils.errors import DivergenceError, UsageError

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass
class AdamState:
    """First/second moment estimates keyed by parameter name."""

    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adamw_step(
    theta: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    t: int,
    learning_rate: float,
    weight_decay: float,
) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """θ ← θ − lr·(m̂/(√v̂ + ε) + wd·θ) with bias-corrected moments.

    Returns new arrays and a new state; the inputs are not modified.
    """
    if t < 1:
        raise UsageError(f"AdamW step counter starts at 1, got {t}")
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for parameter '{name}' at step {t}")
    new_theta: Dict[str, np.ndarray] = {}
    new_state = AdamState(t=t)
    for name, value in theta.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(value)
        if g.shape != value.shape:
            raise UsageError(f"gradient shape {g.shape} does not match parameter '{name}' {value.shape}")
        m = BETA1 * state.m.get(name, np.zeros_like(value)) + (1.0 - BETA1) * g
        v = BETA2 * state.v.get(name, np.zeros_like(value)) + (1.0 - BETA2) * g * g
        m_hat = m / (1.0 - BETA1 ** t)
        v_hat = v / (1.0 - BETA2 ** t)
        new_theta[name] = value - learning_rate * (m_hat / (np.sqrt(v_hat) + EPS) + weight_decay * value)
        new_state.m[name] = m
        new_state.v[name] = v
    return new_theta, new_state


class AdamW:
    """Stateful optimizer over a module's named parameters (updated in place)."""

    def __init__(self, params: Mapping[str, Tensor], learning_rate: float = 1e-3, weight_decay: float = 1e-2):
        self.params = dict(params)
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.state = AdamState()

    def step(self, epoch: Optional[int] = None, batch: Optional[int] = None) -> None:
        theta = {name: p.data for name, p in self.params.items()}
        grads = {name: p.grad for name, p in self.params.items() if p.grad is not None}
        try:
            updated, self.state = adamw_step(
                theta, grads, self.state, self.state.t + 1, self.learning_rate, self.weight_decay
            )
        except DivergenceError as e:
            raise DivergenceError(str(e), epoch=epoch, batch=batch) from e
        for name, p in self.params.items():
            p.data = updated[name]
        for name, value in updated.items():
            if not np.all(np.isfinite(value)):
                raise DivergenceError(f"parameter '{name}' became non-finite", epoch=epoch, batch=batch)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()
