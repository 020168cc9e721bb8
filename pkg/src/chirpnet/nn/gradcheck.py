"""Finite-difference verification of backward passes.

Checks run in float64. Central differences with step h compare against the
gradients produced by backward(); agreement is judged per element with a
relative error that tolerates tiny magnitudes. ``grad_transform`` lets a
test corrupt the analytic gradients on purpose to prove the check can
detect a wrong backward implementation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import NumericError
from .tensor import Tensor


@dataclass
class GradCheckReport:
    max_rel_err: float
    worst: Optional[Tuple[int, Tuple[int, ...]]]  # (param index, element index)
    n_checked: int
    tol: float
    failures: List[Tuple[int, Tuple[int, ...], float, float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tol


def _rel_err(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1e-6)


def gradient_check(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
    tol: float = 1e-4,
    grad_transform: Optional[Callable[[int, np.ndarray], np.ndarray]] = None,
    max_entries: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> GradCheckReport:
    """Compare backward() gradients of a scalar loss against central differences.

    ``loss_fn`` rebuilds the graph from the live ``params`` on every call so
    finite-difference perturbations take effect. ``max_entries`` caps how many
    elements per parameter are perturbed (sampled with ``rng``); by default
    every element is checked.
    """
    loss = loss_fn()
    if loss.data.size != 1:
        raise NumericError("gradient_check needs a scalar loss")
    for p in params:
        p.zero_grad()
    loss.backward()
    analytic = []
    for i, p in enumerate(params):
        g = np.zeros_like(p.data) if p.grad is None else p.grad.copy()
        if grad_transform is not None:
            g = grad_transform(i, g)
        analytic.append(np.asarray(g, dtype=np.float64))

    report = GradCheckReport(max_rel_err=0.0, worst=None, n_checked=0, tol=tol)
    for i, p in enumerate(params):
        flat = p.data.reshape(-1)
        idxs = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            sampler = rng or np.random.default_rng(0)
            idxs = np.sort(sampler.choice(flat.size, size=max_entries, replace=False))
        for j in idxs:
            orig = flat[j]
            flat[j] = orig + h
            f_plus = float(loss_fn().data)
            flat[j] = orig - h
            f_minus = float(loss_fn().data)
            flat[j] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = float(analytic[i].reshape(-1)[j])
            err = _rel_err(a, numeric)
            report.n_checked += 1
            elem = np.unravel_index(j, p.data.shape)
            if err > report.max_rel_err:
                report.max_rel_err = err
                report.worst = (i, tuple(int(e) for e in elem))
            if err > tol:
                report.failures.append((i, tuple(int(e) for e in elem), a, numeric, err))
    return report


def relu_kink_margin(x: np.ndarray) -> float:
    """Smallest |value|: how far the tensor sits from the ReLU kink at zero."""
    return float(np.min(np.abs(x)))


def pool_tie_margin(x: np.ndarray) -> float:
    """Smallest gap between the top two values of any 2x2 pooling window.

    Accepts (H, W, C) or (B, H, W, C); trailing odd rows/columns are ignored,
    matching the pooling op.
    """
    xd = x if x.ndim == 4 else x[None]
    b, hgt, wid, c = xd.shape
    oh, ow = hgt // 2, wid // 2
    if oh == 0 or ow == 0:
        return float("inf")
    win = (
        xd[:, : oh * 2, : ow * 2, :]
        .reshape(b, oh, 2, ow, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(b, oh, ow, 4, c)
    )
    top2 = np.sort(win, axis=3)[:, :, :, 2:, :]
    return float(np.min(top2[:, :, :, 1, :] - top2[:, :, :, 0, :]))
