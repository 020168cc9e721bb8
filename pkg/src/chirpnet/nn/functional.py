"""Differentiable operations for the network.

All ops accept either a single feature map (H, W, C) or a batch (B, H, W, C);
vector ops accept (C,) or (B, C). Convolutions use stride 1 with optional
same padding and are implemented as im2col + GEMM so training stays fast on
CPU. Each op wires a backward closure into the graph, accumulating gradients
only into tensors that need them.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import (
    DegenerateInputError,
    NumericError,
    ParameterError,
    ShapeError,
)
from .tensor import Tensor

PROB_FLOOR = 1e-12  # clamp for log of predicted probabilities


def _needs(t: Tensor) -> bool:
    return t.requires_grad or t._backward_fn is not None


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _batched(data: np.ndarray, want_ndim: int):
    """Promote unbatched input to a batch of one. Returns (array, was_unbatched)."""
    if data.ndim == want_ndim:
        return data, False
    if data.ndim == want_ndim - 1:
        return data[None], True
    raise ShapeError(f"expected {want_ndim - 1}- or {want_ndim}-d input, got shape {data.shape}")


# -- convolution ---------------------------------------------------------------


def conv2d(x, kernels, bias, same_padding: bool = True) -> Tensor:
    """2-D cross-correlation over (B, H, W, Cin) with kernels (Cout, Cin, kh, kw).

    Same padding keeps the spatial extents; kernel sizes are square, 1 or 3.
    """
    x = _as_tensor(x)
    kernels = _as_tensor(kernels)
    bias = _as_tensor(bias)
    xd, squeeze = _batched(x.data, 4)
    cout, cin, kh, kw = kernels.shape
    if kh != kw or kh not in (1, 3):
        raise ParameterError(f"kernel must be square with size 1 or 3, got {kh}x{kw}")
    if xd.shape[3] != cin:
        raise ShapeError(f"input has {xd.shape[3]} channels, kernels expect {cin}")
    if xd.shape[1] < 1 or xd.shape[2] < 1:
        raise DegenerateInputError("conv2d input has an empty spatial extent")

    b, h, w, _ = xd.shape
    pad = (kh - 1) // 2 if same_padding else 0
    if not same_padding and (h < kh or w < kw):
        raise DegenerateInputError("input smaller than kernel without padding")
    if pad:
        xp = np.pad(xd, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    else:
        xp = xd
    oh, ow = xp.shape[1] - kh + 1, xp.shape[2] - kw + 1

    # (B, OH, OW, Cin, kh, kw) -> columns (B*OH*OW, kh*kw*Cin)
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    cols = np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3)).reshape(b * oh * ow, kh * kw * cin)
    wmat = kernels.data.transpose(2, 3, 1, 0).reshape(kh * kw * cin, cout)
    out = cols @ wmat
    out += bias.data
    out = out.reshape(b, oh, ow, cout)

    result_data = out[0] if squeeze else out
    if not (_needs(x) or _needs(kernels) or _needs(bias)):
        return Tensor(result_data)

    def backward(g: np.ndarray) -> None:
        gd = g if not squeeze else g[None]
        gflat = gd.reshape(b * oh * ow, cout)
        if _needs(kernels):
            dw = (cols.T @ gflat).reshape(kh, kw, cin, cout).transpose(3, 2, 0, 1)
            kernels.accumulate_grad(dw)
        if _needs(bias):
            bias.accumulate_grad(gflat.sum(axis=0))
        if _needs(x):
            dcols = (gflat @ wmat.T).reshape(b, oh, ow, kh, kw, cin)
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, i : i + oh, j : j + ow, :] += dcols[:, :, :, i, j, :]
            dx = dxp[:, pad : pad + h, pad : pad + w, :] if pad else dxp
            x.accumulate_grad(dx[0] if squeeze else dx)

    return Tensor(result_data, parents=(x, kernels, bias), backward_fn=backward)


# -- pooling ---------------------------------------------------------------


def maxpool2(x) -> Tensor:
    """Non-overlapping 2x2 max pooling; a trailing odd row/column is dropped."""
    x = _as_tensor(x)
    xd, squeeze = _batched(x.data, 4)
    b, h, w, c = xd.shape
    if h < 2 or w < 2:
        raise DegenerateInputError(f"maxpool2 needs at least 2x2 spatial input, got {h}x{w}")
    oh, ow = h // 2, w // 2
    xc = xd[:, : oh * 2, : ow * 2, :]
    # window axis enumerated row-major so argmax ties break to the first cell scanned
    win = xc.reshape(b, oh, 2, ow, 2, c).transpose(0, 1, 3, 2, 4, 5).reshape(b, oh, ow, 4, c)
    idx = win.argmax(axis=3)
    out = np.take_along_axis(win, idx[:, :, :, None, :], axis=3)[:, :, :, 0, :]

    result_data = out[0] if squeeze else out
    if not _needs(x):
        return Tensor(result_data)

    def backward(g: np.ndarray) -> None:
        gd = g if not squeeze else g[None]
        dwin = np.zeros((b, oh, ow, 4, c), dtype=xd.dtype)
        np.put_along_axis(dwin, idx[:, :, :, None, :], gd[:, :, :, None, :], axis=3)
        dx = np.zeros_like(xd)
        dx[:, : oh * 2, : ow * 2, :] = (
            dwin.reshape(b, oh, ow, 2, 2, c).transpose(0, 1, 3, 2, 4, 5).reshape(b, oh * 2, ow * 2, c)
        )
        x.accumulate_grad(dx[0] if squeeze else dx)

    return Tensor(result_data, parents=(x,), backward_fn=backward)


def global_avg_pool(x) -> Tensor:
    """Mean over both spatial axes: (B, H, W, C) -> (B, C)."""
    x = _as_tensor(x)
    xd, squeeze = _batched(x.data, 4)
    b, h, w, c = xd.shape
    if h < 1 or w < 1:
        raise DegenerateInputError("global_avg_pool input has an empty spatial extent")
    out = xd.mean(axis=(1, 2))

    result_data = out[0] if squeeze else out
    if not _needs(x):
        return Tensor(result_data)

    def backward(g: np.ndarray) -> None:
        gd = g if not squeeze else g[None]
        dx = np.broadcast_to(gd[:, None, None, :] / (h * w), xd.shape).astype(xd.dtype)
        x.accumulate_grad(dx[0] if squeeze else dx)

    return Tensor(result_data, parents=(x,), backward_fn=backward)


# -- activations ---------------------------------------------------------------


def relu(x) -> Tensor:
    x = _as_tensor(x)
    out = np.maximum(x.data, 0)
    if not _needs(x):
        return Tensor(out)

    def backward(g: np.ndarray) -> None:
        x.accumulate_grad(g * (x.data > 0))

    return Tensor(out, parents=(x,), backward_fn=backward)


def tanh(x) -> Tensor:
    x = _as_tensor(x)
    out = np.tanh(x.data)
    if not _needs(x):
        return Tensor(out)

    def backward(g: np.ndarray) -> None:
        x.accumulate_grad(g * (1.0 - out * out))

    return Tensor(out, parents=(x,), backward_fn=backward)


def adaptive(x, a, n: float, base: str = "tanh") -> Tensor:
    """Trainable-slope activation base(n * a * x) with scalar slope ``a``."""
    x = _as_tensor(x)
    a = _as_tensor(a)
    if a.size != 1:
        raise ShapeError("adaptive slope must be a scalar")
    if n <= 0:
        raise ParameterError("slope scale n must be positive")
    aval = float(a.data.reshape(()))
    s = n * aval * x.data
    if base == "tanh":
        out = np.tanh(s)
        dbase = 1.0 - out * out
    elif base == "relu":
        out = np.maximum(s, 0)
        dbase = (s > 0).astype(x.dtype)
    else:
        raise ParameterError(f"unknown base nonlinearity {base!r}")
    if not (_needs(x) or _needs(a)):
        return Tensor(out)

    def backward(g: np.ndarray) -> None:
        if _needs(x):
            x.accumulate_grad(g * dbase * (n * aval))
        if _needs(a):
            da = np.sum(g * dbase * n * x.data)
            a.accumulate_grad(np.asarray(da, dtype=a.dtype).reshape(a.shape))

    return Tensor(out, parents=(x, a), backward_fn=backward)


def activate(x, kind: str, a=None, n: float = 10.0, base: str = "tanh") -> Tensor:
    """Dispatch helper: kind is 'relu', 'tanh', or 'adaptive'."""
    if kind == "relu":
        return relu(x)
    if kind == "tanh":
        return tanh(x)
    if kind == "adaptive":
        if a is None:
            raise ParameterError("adaptive activation requires a slope tensor")
        return adaptive(x, a, n, base)
    raise ParameterError(f"unknown activation kind {kind!r}")


# -- classification head -------------------------------------------------------


def softmax(logits) -> Tensor:
    """Stable softmax along the last axis. Rejects non-finite logits.

    Normalization runs in double precision so the outputs always sum to 1
    well inside 1e-9, whatever the network's working dtype.
    """
    x = _as_tensor(logits)
    if x.data.shape[-1] < 1:
        raise ShapeError("softmax needs at least one logit")
    if not np.all(np.isfinite(x.data)):
        raise NumericError("softmax input contains NaN or Inf")
    xd = x.data.astype(np.float64, copy=False)
    shifted = xd - xd.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)
    if not _needs(x):
        return Tensor(out)

    def backward(g: np.ndarray) -> None:
        inner = np.sum(g * out, axis=-1, keepdims=True)
        x.accumulate_grad((g - inner) * out)

    return Tensor(out, parents=(x,), backward_fn=backward)


def cross_entropy(pred, target: int) -> Tensor:
    """Negative log likelihood of one class: -ln(pred[target]).

    The probability is clamped below at PROB_FLOOR so the loss stays finite.
    """
    pred = _as_tensor(pred)
    if pred.data.ndim != 1:
        raise ShapeError("cross_entropy expects a probability vector; use cross_entropy_mean for batches")
    c = pred.data.shape[0]
    target = int(target)
    if not 0 <= target < c:
        raise IndexError(f"target {target} out of range for {c} classes")
    p = max(float(pred.data[target]), PROB_FLOOR)
    out = np.asarray(-np.log(p), dtype=pred.dtype)
    if not _needs(pred):
        return Tensor(out)

    def backward(g: np.ndarray) -> None:
        dp = np.zeros_like(pred.data)
        if pred.data[target] >= PROB_FLOOR:
            dp[target] = -float(g) / p
        pred.accumulate_grad(dp)

    return Tensor(out, parents=(pred,), backward_fn=backward)


def cross_entropy_mean(pred, targets) -> Tensor:
    """Mean NLL over a batch: pred (B, C), targets (B,) int class indices."""
    pred = _as_tensor(pred)
    if pred.data.ndim != 2:
        raise ShapeError("cross_entropy_mean expects (batch, classes) probabilities")
    targets = np.asarray(targets, dtype=np.intp)
    b, c = pred.data.shape
    if targets.shape != (b,):
        raise ShapeError(f"targets shape {targets.shape} does not match batch size {b}")
    if targets.min() < 0 or targets.max() >= c:
        raise IndexError("target class index out of range")
    picked = pred.data[np.arange(b), targets]
    clamped = np.maximum(picked, PROB_FLOOR)
    out = np.asarray(-np.log(clamped).mean(), dtype=pred.dtype)
    if not _needs(pred):
        return Tensor(out)

    def backward(g: np.ndarray) -> None:
        dp = np.zeros_like(pred.data)
        live = picked >= PROB_FLOOR
        rows = np.arange(b)[live]
        dp[rows, targets[live]] = -float(g) / (b * clamped[live])
        pred.accumulate_grad(dp)

    return Tensor(out, parents=(pred,), backward_fn=backward)


# -- regularization -------------------------------------------------------------


def dropout(x, rate: float, train_mode: bool, rng: Optional[np.random.Generator] = None) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1-rate); identity in eval mode."""
    x = _as_tensor(x)
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    if not train_mode or rate == 0.0:
        out = x.data
        if not _needs(x):
            return Tensor(out.copy())

        def backward_id(g: np.ndarray) -> None:
            x.accumulate_grad(g)

        return Tensor(out, parents=(x,), backward_fn=backward_id)

    if rng is None:
        raise ParameterError("train-mode dropout needs an rng")
    mask = (rng.random(x.data.shape) >= rate).astype(x.dtype)
    scale = 1.0 / (1.0 - rate)
    out = x.data * mask * scale
    if not _needs(x):
        return Tensor(out)

    def backward(g: np.ndarray) -> None:
        x.accumulate_grad(g * mask * scale)

    return Tensor(out, parents=(x,), backward_fn=backward)


# -- dense head and shape ops (CNN comparison variant) ---------------------------


def flatten(x) -> Tensor:
    """(B, H, W, C) -> (B, H*W*C); a single map flattens to a vector."""
    x = _as_tensor(x)
    xd, squeeze = _batched(x.data, 4)
    b = xd.shape[0]
    out = xd.reshape(b, -1)
    result_data = out[0] if squeeze else out
    if not _needs(x):
        return Tensor(result_data)

    def backward(g: np.ndarray) -> None:
        gd = g if not squeeze else g[None]
        x.accumulate_grad(gd.reshape(xd.shape)[0] if squeeze else gd.reshape(xd.shape))

    return Tensor(result_data, parents=(x,), backward_fn=backward)


def dense(x, weights, bias) -> Tensor:
    """Affine map x @ W + b with x (B, F) or (F,), W (F, O)."""
    x = _as_tensor(x)
    weights = _as_tensor(weights)
    bias = _as_tensor(bias)
    xd, squeeze = _batched(x.data, 2)
    f, o = weights.shape
    if xd.shape[1] != f:
        raise ShapeError(f"dense input has {xd.shape[1]} features, weights expect {f}")
    out = xd @ weights.data + bias.data
    result_data = out[0] if squeeze else out
    if not (_needs(x) or _needs(weights) or _needs(bias)):
        return Tensor(result_data)

    def backward(g: np.ndarray) -> None:
        gd = g if not squeeze else g[None]
        if _needs(weights):
            weights.accumulate_grad(xd.T @ gd)
        if _needs(bias):
            bias.accumulate_grad(gd.sum(axis=0))
        if _needs(x):
            dx = gd @ weights.data.T
            x.accumulate_grad(dx[0] if squeeze else dx)

    return Tensor(result_data, parents=(x, weights, bias), backward_fn=backward)


def tsum(x) -> Tensor:
    """Sum of all elements (handy as a toy loss)."""
    x = _as_tensor(x)
    out = np.asarray(x.data.sum(), dtype=x.dtype)
    if not _needs(x):
        return Tensor(out)

    def backward(g: np.ndarray) -> None:
        x.accumulate_grad(np.full_like(x.data, float(g)))

    return Tensor(out, parents=(x,), backward_fn=backward)


def slope_recovery(slopes, n: float) -> Tensor:
    """Optional regularizer 1 / mean(exp(n * a_k)) over the layer slopes.

    Decreases when slopes grow, nudging adaptive activations away from
    collapse. Off by default in training; exposed for experimentation.
    """
    ts = [_as_tensor(a) for a in slopes]
    if not ts:
        raise ParameterError("slope_recovery needs at least one slope")
    vals = np.array([float(t.data.reshape(())) for t in ts])
    exps = np.exp(n * vals)
    s = exps.mean()
    out = np.asarray(1.0 / s, dtype=ts[0].dtype)
    if not any(_needs(t) for t in ts):
        return Tensor(out)

    def backward(g: np.ndarray) -> None:
        coeff = -float(g) * n / (len(ts) * s * s)
        for t, e in zip(ts, exps):
            if _needs(t):
                t.accumulate_grad(np.asarray(coeff * e, dtype=t.dtype).reshape(t.shape))

    return Tensor(out, parents=tuple(ts), backward_fn=backward)
