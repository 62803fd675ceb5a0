"""Inference network: word counts -> variational Gaussian (mu, diag logvar).

Two softplus hidden layers, dropout after the second, and a separate
batch normalization on each output head. Log-variances are clamped to
[-20, 20] before exponentiation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .numerics import (
    BatchNormState,
    batchnorm,
    batchnorm_backward,
    dropout,
    dropout_backward,
    linear,
    linear_backward,
    softplus,
    softplus_backward,
)

LOGVAR_CLAMP = 20.0


@dataclass
class EncoderParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    Wmu: np.ndarray
    bmu: np.ndarray
    Wlv: np.ndarray
    blv: np.ndarray
    bn_mu: BatchNormState
    bn_lv: BatchNormState

    @property
    def n_words(self) -> int:
        return self.W1.shape[0]

    @property
    def n_dims(self) -> int:
        return self.Wmu.shape[1]

    def trainable(self) -> dict[str, np.ndarray]:
        return {
            "enc.W1": self.W1, "enc.b1": self.b1,
            "enc.W2": self.W2, "enc.b2": self.b2,
            "enc.Wmu": self.Wmu, "enc.bmu": self.bmu,
            "enc.Wlv": self.Wlv, "enc.blv": self.blv,
            "enc.bn_mu.gain": self.bn_mu.gain, "enc.bn_mu.bias": self.bn_mu.bias,
            "enc.bn_lv.gain": self.bn_lv.gain, "enc.bn_lv.bias": self.bn_lv.bias,
        }


@dataclass
class LatentGaussian:
    mu: np.ndarray       # B x d
    logvar: np.ndarray   # B x d


def encode(counts, params: EncoderParams, p_drop, rng, mode):
    """Forward pass; returns (LatentGaussian, cache) for the backward pass.

    ``counts`` may be a dense array or a scipy sparse matrix; the first
    layer is the only place the V-sized input is touched, so sparse rows
    avoid materializing B x V dense batches.
    """
    if counts.shape[1] != params.n_words:
        raise ValueError(
            f"encoder expects V={params.n_words}, got counts with V={counts.shape[1]}"
        )
    if sp.issparse(counts):
        a1 = np.asarray(counts @ params.W1) + params.b1
    else:
        a1 = linear(counts, params.W1, params.b1)
    h1 = softplus(a1)
    a2 = linear(h1, params.W2, params.b2)
    h2 = softplus(a2)
    h2d, mask = dropout(h2, p_drop, rng, mode)
    amu = linear(h2d, params.Wmu, params.bmu)
    mu, bn_mu_cache = batchnorm(amu, params.bn_mu, mode)
    alv = linear(h2d, params.Wlv, params.blv)
    lv_raw, bn_lv_cache = batchnorm(alv, params.bn_lv, mode)
    logvar = np.clip(lv_raw, -LOGVAR_CLAMP, LOGVAR_CLAMP)
    cache = (counts, a1, h1, a2, h2d, mask, bn_mu_cache, bn_lv_cache, lv_raw, params)
    return LatentGaussian(mu=mu, logvar=logvar), cache


def encode_backward(dmu, dlogvar, cache) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every encoder parameter."""
    counts, a1, h1, a2, h2d, mask, bn_mu_cache, bn_lv_cache, lv_raw, params = cache
    dlv_raw = dlogvar * (np.abs(lv_raw) < LOGVAR_CLAMP)
    damu, dg_mu, db_mu = batchnorm_backward(dmu, bn_mu_cache)
    dalv, dg_lv, db_lv = batchnorm_backward(dlv_raw, bn_lv_cache)
    dh2d_mu, dWmu, dbmu = linear_backward(damu, h2d, params.Wmu)
    dh2d_lv, dWlv, dblv = linear_backward(dalv, h2d, params.Wlv)
    dh2 = dropout_backward(dh2d_mu + dh2d_lv, mask)
    da2 = softplus_backward(dh2, a2)
    dh1, dW2, db2 = linear_backward(da2, h1, params.W2)
    da1 = softplus_backward(dh1, a1)
    # input gradient is never needed, so skip the dense dy @ W1.T product
    dW1 = np.asarray(counts.T @ da1)
    db1 = da1.sum(axis=0)
    return {
        "enc.W1": dW1, "enc.b1": db1,
        "enc.W2": dW2, "enc.b2": db2,
        "enc.Wmu": dWmu, "enc.bmu": dbmu,
        "enc.Wlv": dWlv, "enc.blv": dblv,
        "enc.bn_mu.gain": dg_mu, "enc.bn_mu.bias": db_mu,
        "enc.bn_lv.gain": dg_lv, "enc.bn_lv.bias": db_lv,
    }


def sample_latent(lg: LatentGaussian, rng, n_samples: int):
    """Reparameterized draws x = mu + exp(logvar/2) * eps.

    Returns (samples, eps) with shape (L, B, d) each.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    sigma = np.exp(0.5 * lg.logvar)
    eps = rng.standard_normal((n_samples, *lg.mu.shape)).astype(lg.mu.dtype)
    return lg.mu[None, :, :] + sigma[None, :, :] * eps, eps
