"""Dense neural-net primitives with analytic forward/backward passes.

Everything here is plain numpy: layers return an output plus a cache,
and the matching ``*_backward`` consumes the upstream gradient and the
cache. Gradients are verified against central finite differences via
``finite_diff_check``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator; same seed gives the same stream."""
    return np.random.default_rng(np.random.SeedSequence(seed))


def split_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent substream identified by (seed, path), e.g. per epoch/batch."""
    return np.random.default_rng(np.random.SeedSequence((seed, *path)))


def check_finite(name: str, *arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise FloatingPointError(f"non-finite values in {name}")


# ---------------------------------------------------------------------------
# layers


def linear(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    """y = x W + b, rows of x are batch items."""
    if x.shape[1] != W.shape[0] or W.shape[1] != b.shape[0]:
        raise ValueError(
            f"linear shape mismatch: x {x.shape}, W {W.shape}, b {b.shape}"
        )
    return x @ W + b


def linear_backward(dy, x, W):
    """Returns (dx, dW, db)."""
    return dy @ W.T, x.T @ dy, dy.sum(axis=0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form: overflow-safe and a single vectorized transcendental
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def softplus(x: np.ndarray) -> np.ndarray:
    """log(1 + exp(x)) in the overflow-safe form max(x,0) + log1p(exp(-|x|))."""
    return np.maximum(x, 0) + np.log1p(np.exp(-np.abs(x)))


def softplus_backward(dy, x):
    return dy * sigmoid(x)


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; rows sum to 1."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_rows_backward(dy, y):
    """Backward through softmax given its output y."""
    return (dy - (dy * y).sum(axis=-1, keepdims=True)) * y


# ---------------------------------------------------------------------------
# batch normalization


@dataclass
class BatchNormState:
    """Per-feature affine batch normalization with running statistics."""

    gain: np.ndarray
    bias: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.99
    eps: float = 1e-5

    @classmethod
    def create(cls, n_features: int, dtype=np.float32, momentum: float = 0.99,
               eps: float = 1e-5) -> "BatchNormState":
        return cls(
            gain=np.ones(n_features, dtype=dtype),
            bias=np.zeros(n_features, dtype=dtype),
            running_mean=np.zeros(n_features, dtype=dtype),
            running_var=np.ones(n_features, dtype=dtype),
            momentum=momentum,
            eps=eps,
        )


def batchnorm(x: np.ndarray, state: BatchNormState, mode: str):
    """Returns (y, cache). Training mode needs B >= 2 and updates running stats."""
    if mode == "training":
        if x.shape[0] < 2:
            raise ValueError("batchnorm training mode requires batch size >= 2")
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + state.eps)
        xhat = (x - mean) * inv_std
        m = state.momentum
        state.running_mean = (m * state.running_mean + (1 - m) * mean).astype(x.dtype)
        state.running_var = (m * state.running_var + (1 - m) * var).astype(x.dtype)
    elif mode == "inference":
        inv_std = 1.0 / np.sqrt(state.running_var + state.eps)
        xhat = (x - state.running_mean) * inv_std
    else:
        raise ValueError(f"unknown mode {mode!r}")
    y = state.gain * xhat + state.bias
    cache = (xhat, inv_std, state.gain, mode)
    return y, cache


def batchnorm_backward(dy, cache):
    """Returns (dx, dgain, dbias)."""
    xhat, inv_std, gain, mode = cache
    dgain = (dy * xhat).sum(axis=0)
    dbias = dy.sum(axis=0)
    dxhat = dy * gain
    if mode == "inference":
        return dxhat * inv_std, dgain, dbias
    B = xhat.shape[0]
    dx = (inv_std / B) * (
        B * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
    )
    return dx, dgain, dbias


# ---------------------------------------------------------------------------
# dropout


def dropout(x: np.ndarray, p_drop: float, rng: np.random.Generator, mode: str):
    """Inverted dropout. Returns (y, mask); mask is None in inference mode."""
    if not 0.0 <= p_drop < 1.0:
        raise ValueError(f"p_drop must be in [0, 1), got {p_drop}")
    if mode == "inference" or p_drop == 0.0:
        return x, None
    keep = 1.0 - p_drop
    mask = (rng.random(x.shape) < keep).astype(x.dtype) / keep
    return x * mask, mask


def dropout_backward(dy, mask):
    return dy if mask is None else dy * mask


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    """Per-parameter first/second moment buffers, keyed like the param dict."""

    lr: float = 0.002
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """One minimization step, in place. Raises on non-finite gradients."""
    state.t += 1
    t = state.t
    # bias correction folded into the step size (eps rescales with it)
    alpha = state.lr * np.sqrt(1 - state.beta2 ** t) / (1 - state.beta1 ** t)
    for name, p in params.items():
        g = grads[name]
        if not np.isfinite(np.sum(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {name!r}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m = state.m[name]
        v = state.v[name]
        m += (1 - state.beta1) * (g - m)
        v += (1 - state.beta2) * (g * g - v)
        p -= (alpha * m / (np.sqrt(v) + state.eps)).astype(p.dtype)


def clip_global_norm(grads: dict, max_norm: float) -> float:
    """Scale all gradients down so their joint L2 norm is <= max_norm."""
    total = sum(float(np.vdot(g, g)) for g in grads.values())
    norm = np.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


# ---------------------------------------------------------------------------
# gradient checking


def finite_diff_check(f, params: dict, analytic: dict, h: float = 1e-4) -> float:
    """Max relative error between analytic grads and central differences.

    ``f(params) -> scalar``; params are perturbed coordinate-wise. The error
    at one coordinate is |a - n| / max(1, |a|, |n|).
    """
    worst = 0.0
    for name, p in params.items():
        flat = p.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = f(params)
            flat[i] = orig - h
            f_minus = f(params)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2 * h)
            a = float(a_flat[i])
            err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            worst = max(worst, err)
    return worst
