"""Adam optimizer with bias-corrected moment estimates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from ..errors import NumericError, ParameterError
from .tensor import Tensor


@dataclass
class AdamState:
    """Per-parameter first/second moment buffers plus the shared step count."""

    m: np.ndarray
    v: np.ndarray


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    t: int,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> np.ndarray:
    """One Adam update; mutates ``state`` and returns the new parameter value.

    ``t`` is the 1-based step count used for bias correction.
    """
    if t < 1:
        raise ParameterError("step count t must be >= 1")
    state.m = beta1 * state.m + (1.0 - beta1) * grad
    state.v = beta2 * state.v + (1.0 - beta2) * (grad * grad)
    m_hat = state.m / (1.0 - beta1 ** t)
    v_hat = state.v / (1.0 - beta2 ** t)
    return param - lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    """Tracks moments for a fixed list of parameter tensors."""

    def __init__(self, params: List[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ParameterError("learning rate must be positive")
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ParameterError("betas must lie in [0, 1)")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._state: Dict[int, AdamState] = {
            id(p): AdamState(np.zeros_like(p.data), np.zeros_like(p.data))
            for p in self.params
        }

    def step(self) -> None:
        """Apply one update using each parameter's accumulated gradient."""
        self.t += 1
        for p in self.params:
            if p.grad is None:
                continue
            if not np.all(np.isfinite(p.grad)):
                raise NumericError("non-finite gradient in Adam step")
            st = self._state[id(p)]
            p.data = adam_step(
                p.data, p.grad, st, self.t,
                lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps,
            ).astype(p.data.dtype)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def state_arrays(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Moment buffers in parameter order (for checkpoint round-trips)."""
        return [(self._state[id(p)].m, self._state[id(p)].v) for p in self.params]
