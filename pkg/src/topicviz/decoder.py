"""Decoder: latent coordinate -> topic mixture -> word distribution.

The topic mixture is a normalized RBF network whose centers are the
topic coordinates (shared across all documents); the word model is a
row-softmax over a Z x V weight matrix, also shared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .numerics import (
    BatchNormState,
    batchnorm,
    batchnorm_backward,
    softmax_rows,
    softmax_rows_backward,
)

KERNELS = ("gaussian", "inverse-quadratic", "inverse-multiquadric")

PROB_FLOOR = 1e-10


@dataclass
class DecoderParams:
    phi: np.ndarray   # Z x d topic coordinates
    W: np.ndarray     # Z x V unnormalized topic-word weights
    kernel: str = "gaussian"
    bn: BatchNormState | None = None  # optional batchnorm on W logits

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}; expected one of {KERNELS}")
        if self.phi.shape[0] != self.W.shape[0]:
            raise ValueError("phi and W disagree on the number of topics")

    @property
    def n_topics(self) -> int:
        return self.phi.shape[0]

    @property
    def n_words(self) -> int:
        return self.W.shape[1]

    def trainable(self) -> dict[str, np.ndarray]:
        params = {"dec.phi": self.phi, "dec.W": self.W}
        if self.bn is not None:
            params["dec.bn.gain"] = self.bn.gain
            params["dec.bn.bias"] = self.bn.bias
        return params


def _sq_distances(x, phi):
    """(B, Z) squared Euclidean distances and the (B, Z, d) differences."""
    diff = x[:, None, :] - phi[None, :, :]
    return np.einsum("bzd,bzd->bz", diff, diff), diff


def rbf_theta(x, phi, kernel: str):
    """Topic mixture theta (B x Z); rows sum to 1. Returns (theta, cache)."""
    r2, diff = _sq_distances(x, phi)
    if kernel == "gaussian":
        # exp(-r^2/2) normalized == softmax of -r^2/2; log-space avoids underflow
        theta = softmax_rows(-0.5 * r2)
        cache = (kernel, theta, None, None, diff)
    elif kernel == "inverse-quadratic":
        rho = 1.0 / (1.0 + r2)
        s = rho.sum(axis=1, keepdims=True)
        theta = rho / s
        cache = (kernel, theta, rho, s, diff)
    elif kernel == "inverse-multiquadric":
        rho = 1.0 / np.sqrt(1.0 + r2)
        s = rho.sum(axis=1, keepdims=True)
        theta = rho / s
        cache = (kernel, theta, rho, s, diff)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    return theta, cache


def rbf_theta_backward(dtheta, cache):
    """Returns (dx, dphi)."""
    kernel, theta, rho, s, diff = cache
    if kernel == "gaussian":
        dlogits = softmax_rows_backward(dtheta, theta)
        dr2 = -0.5 * dlogits
    else:
        drho = (dtheta - (dtheta * theta).sum(axis=1, keepdims=True)) / s
        if kernel == "inverse-quadratic":
            dr2 = -(rho * rho) * drho
        else:
            dr2 = -0.5 * (rho ** 3) * drho
    # r2 = ||x - phi||^2, so d(r2)/dx = 2*diff and d(r2)/dphi = -2*diff
    weighted = dr2[:, :, None] * diff
    dx = 2.0 * weighted.sum(axis=1)
    dphi = -2.0 * weighted.sum(axis=0)
    return dx, dphi


def beta(W):
    """Topic-word distributions: row-softmax of the weight matrix."""
    return softmax_rows(W)


def beta_backward(dbeta, beta_val):
    return softmax_rows_backward(dbeta, beta_val)


def beta_from_params(dec: DecoderParams, mode: str = "inference"):
    """beta with the optional logit batchnorm applied. Returns (beta, cache)."""
    if dec.bn is None:
        b = beta(dec.W)
        return b, (None, b)
    logits, bn_cache = batchnorm(dec.W, dec.bn, mode)
    b = softmax_rows(logits)
    return b, (bn_cache, b)


def beta_from_params_backward(dbeta, cache):
    """Returns grads dict for dec.W (and bn gain/bias when enabled)."""
    bn_cache, beta_val = cache
    dlogits = softmax_rows_backward(dbeta, beta_val)
    if bn_cache is None:
        return {"dec.W": dlogits}
    dW, dgain, dbias = batchnorm_backward(dlogits, bn_cache)
    return {"dec.W": dW, "dec.bn.gain": dgain, "dec.bn.bias": dbias}


def reconstruct_logprob(theta, beta_val, counts):
    """Per-document log p(w | x): sum_v c_v log((theta beta)_v + floor).

    Returns (per-doc values, cache).
    """
    safe = theta @ beta_val + PROB_FLOOR
    if sp.issparse(counts):
        # log is only needed at observed (doc, word) pairs
        coo = counts.tocoo()
        safe_nz = safe[coo.row, coo.col]
        logprob = np.bincount(
            coo.row, weights=coo.data * np.log(safe_nz), minlength=counts.shape[0]
        )
        cache = (theta, beta_val, coo, safe_nz)
    else:
        logprob = np.asarray((counts * np.log(safe)).sum(axis=1)).ravel()
        cache = (theta, beta_val, counts, safe)
    return logprob, cache


def reconstruct_logprob_backward(dout, cache):
    """dout is (B,) gradient w.r.t. the per-doc values; returns (dtheta, dbeta)."""
    theta, beta_val, counts, safe = cache
    if sp.issparse(counts):
        coo = counts
        data = coo.data * dout[coo.row] / safe
        dmix = sp.csr_matrix(
            (data, (coo.row, coo.col)),
            shape=(theta.shape[0], beta_val.shape[1]),
            dtype=theta.dtype,
        )
        dtheta = np.asarray(dmix @ beta_val.T)
        dbeta = np.asarray(dmix.T @ theta).T
        return dtheta, dbeta
    dmix = np.asarray(counts / safe) * dout[:, None]
    return dmix @ beta_val.T, theta.T @ dmix
