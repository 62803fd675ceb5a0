"""Training objective: closed-form Gaussian KL plus a reparameterized
Monte-Carlo estimate of the reconstruction term, with analytic gradients
for every encoder and decoder parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .decoder import (
    DecoderParams,
    beta_from_params,
    beta_from_params_backward,
    rbf_theta,
    rbf_theta_backward,
    reconstruct_logprob,
    reconstruct_logprob_backward,
)
from .encoder import EncoderParams, encode, encode_backward, sample_latent


@dataclass
class ElboTerms:
    """Per-document pieces: elbo = recon - kl."""

    kl: np.ndarray      # (B,), >= 0
    recon: np.ndarray   # (B,)

    @property
    def elbo(self) -> np.ndarray:
        return self.recon - self.kl


def kl_gaussian(mu, logvar, gamma: float):
    """KL(N(mu, diag exp(logvar)) || N(0, gamma I)) per row, in closed form."""
    if gamma <= 0:
        raise ValueError("prior variance gamma must be positive")
    var = np.exp(logvar)
    return 0.5 * (var / gamma + mu * mu / gamma - 1.0 + np.log(gamma) - logvar).sum(
        axis=1
    )


def kl_gaussian_grads(mu, logvar, gamma: float):
    """(dKL/dmu, dKL/dlogvar), elementwise."""
    return mu / gamma, 0.5 * (np.exp(logvar) / gamma - 1.0)


def elbo_batch(
    counts,
    enc: EncoderParams,
    dec: DecoderParams,
    gamma: float,
    n_samples: int,
    p_drop: float,
    rng,
    mode: str = "training",
    phi_l2: float = 0.0,
    normalize_input: bool = False,
):
    """Mean per-document ELBO over a batch plus gradients of its negation.

    ``phi_l2`` > 0 adds the Gaussian topic-coordinate penalty
    -||phi_z||^2 / (2 * phi_l2) to the objective (off by default).
    ``normalize_input`` feeds the encoder relative frequencies instead of
    raw counts; the reconstruction term always uses raw counts.

    Returns (mean_elbo, ElboTerms, grads); grads minimize -mean ELBO.
    """
    if n_samples < 1:
        raise ValueError("need at least one Monte-Carlo sample")
    if sp.issparse(counts):
        counts = counts.tocsr().astype(enc.W1.dtype)
    else:
        counts = counts.astype(enc.W1.dtype, copy=False)
    B = counts.shape[0]

    enc_input = counts
    if normalize_input:
        totals = np.maximum(np.asarray(counts.sum(axis=1)).reshape(-1, 1), 1.0)
        if sp.issparse(counts):
            enc_input = counts.multiply(1.0 / totals).tocsr()
        else:
            enc_input = counts / totals

    # forward
    lg, enc_cache = encode(enc_input, enc, p_drop, rng, mode)
    samples, eps = sample_latent(lg, rng, n_samples)
    beta_val, beta_cache = beta_from_params(dec, mode)
    kl = kl_gaussian(lg.mu, lg.logvar, gamma)

    recon = np.zeros(B, dtype=np.float64)
    sample_caches = []
    for l in range(n_samples):
        theta, theta_cache = rbf_theta(samples[l], dec.phi, dec.kernel)
        logprob, rec_cache = reconstruct_logprob(theta, beta_val, counts)
        recon += logprob
        sample_caches.append((theta_cache, rec_cache))
    recon /= n_samples

    if not np.all(np.isfinite(kl)):
        raise FloatingPointError("non-finite KL term in ELBO")
    if not np.all(np.isfinite(recon)):
        raise FloatingPointError("non-finite reconstruction term in ELBO")
    mean_elbo = float(np.mean(recon - kl))
    if phi_l2 > 0.0:
        mean_elbo -= float(np.sum(dec.phi ** 2)) / (2.0 * phi_l2)

    # backward of loss = -mean ELBO
    coeff = np.full(B, -1.0 / (B * n_samples), dtype=counts.dtype)
    dmu = np.zeros_like(lg.mu)
    dlogvar = np.zeros_like(lg.logvar)
    dphi = np.zeros_like(dec.phi)
    dbeta = np.zeros_like(beta_val)
    sigma = np.exp(0.5 * lg.logvar)
    for l in range(n_samples):
        theta_cache, rec_cache = sample_caches[l]
        dtheta, dbeta_l = reconstruct_logprob_backward(coeff, rec_cache)
        dbeta += dbeta_l
        dx, dphi_l = rbf_theta_backward(dtheta, theta_cache)
        dphi += dphi_l
        dmu += dx
        dlogvar += 0.5 * dx * eps[l] * sigma

    grads = beta_from_params_backward(dbeta, beta_cache)
    grads["dec.phi"] = dphi
    if phi_l2 > 0.0:
        grads["dec.phi"] = grads["dec.phi"] + dec.phi / phi_l2

    dkl_mu, dkl_lv = kl_gaussian_grads(lg.mu, lg.logvar, gamma)
    dmu += dkl_mu / B
    dlogvar += dkl_lv / B
    grads.update(encode_backward(dmu, dlogvar, enc_cache))

    terms = ElboTerms(kl=kl, recon=recon)
    return mean_elbo, terms, grads
