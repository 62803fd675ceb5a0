"""Minibatch training loop: Adam on the negated ELBO, per-epoch logging,
posterior-mean coordinate extraction, and a versioned binary checkpoint.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .corpus import BowCorpus
from .decoder import DecoderParams
from .elbo import elbo_batch
from .encoder import EncoderParams, encode
from .numerics import AdamState, BatchNormState, adam_step, clip_global_norm, split_rng

CHECKPOINT_VERSION = 1
GRAD_CLIP_NORM = 10.0


@dataclass
class TrainConfig:
    n_topics: int = 50
    n_dims: int = 2
    gamma: float = 1.0
    lr: float = 0.002
    batch_size: int = 256
    epochs: int = 1000
    n_samples: int = 1
    p_drop: float = 0.6
    drop_is_keep: bool = False      # read p_drop as a keep probability instead
    normalize_input: bool = False   # encoder sees relative frequencies
    hidden1: int = 100
    hidden2: int = 100
    kernel: str = "gaussian"
    seed: int = 0
    precision: str = "f32"          # f32 | f64
    deterministic: bool = True
    phi_l2: bool = False            # Gaussian prior on topic coords, scale N/Z
    decoder_bn: bool = False

    def __post_init__(self):
        for name in ("n_topics", "n_dims", "batch_size", "hidden1", "hidden2",
                     "n_samples"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.precision not in ("f32", "f64"):
            raise ValueError("precision must be 'f32' or 'f64'")
        if not 0.0 <= self.p_drop <= 1.0:
            raise ValueError("p_drop must lie in [0, 1]")

    @property
    def effective_p_drop(self) -> float:
        return 1.0 - self.p_drop if self.drop_is_keep else self.p_drop

    @property
    def dtype(self):
        return np.float32 if self.precision == "f32" else np.float64


@dataclass
class TrainedModel:
    encoder: EncoderParams
    decoder: DecoderParams
    config: TrainConfig
    curve: np.ndarray       # (epochs, 3): elbo, kl, recon
    doc_coords: np.ndarray  # N x d posterior means
    labels: list[str] = field(default_factory=list)


def _glorot(rng, fan_in, fan_out, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)


def init_params(config: TrainConfig, n_words: int, rng):
    """Glorot-uniform encoder, small-Gaussian topic coordinates and weights."""
    if n_words < 2:
        raise ValueError("need a vocabulary of at least 2 words")
    dt = config.dtype
    h1, h2, d = config.hidden1, config.hidden2, config.n_dims
    enc = EncoderParams(
        W1=_glorot(rng, n_words, h1, dt), b1=np.zeros(h1, dtype=dt),
        W2=_glorot(rng, h1, h2, dt), b2=np.zeros(h2, dtype=dt),
        Wmu=_glorot(rng, h2, d, dt), bmu=np.zeros(d, dtype=dt),
        Wlv=_glorot(rng, h2, d, dt), blv=np.zeros(d, dtype=dt),
        bn_mu=BatchNormState.create(d, dtype=dt),
        bn_lv=BatchNormState.create(d, dtype=dt),
    )
    dec = DecoderParams(
        phi=(np.sqrt(0.1) * rng.standard_normal((config.n_topics, d))).astype(dt),
        W=(0.01 * rng.standard_normal((config.n_topics, n_words))).astype(dt),
        kernel=config.kernel,
        bn=BatchNormState.create(n_words, dtype=dt) if config.decoder_bn else None,
    )
    return enc, dec


def _batch_slices(n_docs: int, batch_size: int):
    """Start/stop pairs; a trailing batch of one is merged into the previous."""
    starts = list(range(0, n_docs, batch_size))
    slices = [(s, min(s + batch_size, n_docs)) for s in starts]
    if len(slices) > 1 and slices[-1][1] - slices[-1][0] == 1:
        last = slices.pop()
        prev = slices.pop()
        slices.append((prev[0], last[1]))
    return slices


def train(corpus: BowCorpus, config: TrainConfig, log_path=None) -> TrainedModel:
    """Full AEVB training; returns the model with posterior-mean coordinates."""
    n_docs = corpus.n_docs
    counts = corpus.counts.tocsr()
    enc, dec = init_params(config, corpus.n_words, split_rng(config.seed, 0))
    adam = AdamState(lr=config.lr)
    phi_l2 = (n_docs / config.n_topics) if config.phi_l2 else 0.0
    params = {**enc.trainable(), **dec.trainable()}

    curve = np.zeros((config.epochs, 3), dtype=np.float64)
    log_rows = []
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        order = split_rng(config.seed, 1, epoch).permutation(n_docs)
        epoch_terms = np.zeros(3)
        slices = _batch_slices(n_docs, config.batch_size)
        for b, (lo, hi) in enumerate(slices):
            batch = counts[order[lo:hi]]
            rng = split_rng(config.seed, 2, epoch, b)
            try:
                mean_elbo, terms, grads = elbo_batch(
                    batch, enc, dec, config.gamma, config.n_samples,
                    config.effective_p_drop, rng, mode="training",
                    phi_l2=phi_l2, normalize_input=config.normalize_input,
                )
            except FloatingPointError as exc:
                raise RuntimeError(
                    f"training diverged at epoch {epoch}, batch {b}: {exc}"
                ) from exc
            clip_global_norm(grads, GRAD_CLIP_NORM)
            adam_step(params, grads, adam)
            w = (hi - lo) / n_docs
            epoch_terms += w * np.array(
                [mean_elbo, float(terms.kl.mean()), float(terms.recon.mean())]
            )
        curve[epoch] = epoch_terms
        log_rows.append((epoch, *epoch_terms, time.perf_counter() - t0))

    if log_path is not None:
        with open(log_path, "w", encoding="utf-8") as f:
            f.write("epoch,elbo,kl,recon,seconds\n")
            for row in log_rows:
                f.write(f"{row[0]},{row[1]:.6f},{row[2]:.6f},{row[3]:.6f},{row[4]:.3f}\n")

    model = TrainedModel(
        encoder=enc, decoder=dec, config=config, curve=curve,
        doc_coords=np.zeros((n_docs, config.n_dims), dtype=config.dtype),
        labels=list(corpus.labels),
    )
    model.doc_coords = infer_coords(model, counts)
    return model


def infer_coords(model: TrainedModel, counts) -> np.ndarray:
    """Posterior means in inference mode (dropout off, running BN stats)."""
    if sp.issparse(counts):
        counts = counts.tocsr().astype(model.config.dtype)
    else:
        counts = counts.astype(model.config.dtype, copy=False)
    if model.config.normalize_input:
        totals = np.maximum(np.asarray(counts.sum(axis=1)).reshape(-1, 1), 1.0)
        if sp.issparse(counts):
            counts = counts.multiply(1.0 / totals).tocsr()
        else:
            counts = counts / totals
    lg, _ = encode(
        counts, model.encoder, p_drop=0.0,
        rng=split_rng(model.config.seed, 3), mode="inference",
    )
    return lg.mu


# ---------------------------------------------------------------------------
# checkpoints: manifest.json + params.bin (little-endian, row-major, in
# manifest tensor order)


def _model_tensors(model: TrainedModel) -> dict[str, np.ndarray]:
    enc, dec = model.encoder, model.decoder
    tensors = {
        "enc.W1": enc.W1, "enc.b1": enc.b1, "enc.W2": enc.W2, "enc.b2": enc.b2,
        "enc.Wmu": enc.Wmu, "enc.bmu": enc.bmu, "enc.Wlv": enc.Wlv,
        "enc.blv": enc.blv,
        "enc.bn_mu.gain": enc.bn_mu.gain, "enc.bn_mu.bias": enc.bn_mu.bias,
        "enc.bn_mu.running_mean": enc.bn_mu.running_mean,
        "enc.bn_mu.running_var": enc.bn_mu.running_var,
        "enc.bn_lv.gain": enc.bn_lv.gain, "enc.bn_lv.bias": enc.bn_lv.bias,
        "enc.bn_lv.running_mean": enc.bn_lv.running_mean,
        "enc.bn_lv.running_var": enc.bn_lv.running_var,
        "dec.phi": dec.phi, "dec.W": dec.W,
        "doc_coords": model.doc_coords,
    }
    if dec.bn is not None:
        tensors["dec.bn.gain"] = dec.bn.gain
        tensors["dec.bn.bias"] = dec.bn.bias
        tensors["dec.bn.running_mean"] = dec.bn.running_mean
        tensors["dec.bn.running_var"] = dec.bn.running_var
    return tensors


def save_checkpoint(model: TrainedModel, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    tensors = _model_tensors(model)
    dt = model.config.dtype
    manifest = {
        "magic": "topicviz-checkpoint",
        "version": CHECKPOINT_VERSION,
        "kind": "vae",
        "precision": model.config.precision,
        "seed": model.config.seed,
        "config": asdict(model.config),
        "tensors": [[name, list(t.shape)] for name, t in tensors.items()],
        "curve": model.curve.tolist(),
        "labels": model.labels,
    }
    path.joinpath("manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
    )
    blob = b"".join(
        np.ascontiguousarray(t, dtype=dt).astype("<" + dt().dtype.str[1:]).tobytes()
        for t in tensors.values()
    )
    path.joinpath("params.bin").write_bytes(blob)


def load_checkpoint(path) -> TrainedModel:
    path = Path(path)
    manifest = json.loads(path.joinpath("manifest.json").read_text(encoding="utf-8"))
    if manifest.get("magic") != "topicviz-checkpoint":
        raise ValueError(f"{path}: not a topicviz checkpoint")
    if manifest.get("version") != CHECKPOINT_VERSION:
        raise ValueError(
            f"{path}: checkpoint version {manifest.get('version')} "
            f"is not supported (expected {CHECKPOINT_VERSION})"
        )
    if manifest.get("kind") != "vae":
        raise ValueError(f"{path}: checkpoint kind {manifest.get('kind')!r} is not 'vae'")
    config = TrainConfig(**manifest["config"])
    dt = config.dtype
    blob = path.joinpath("params.bin").read_bytes()
    itemsize = np.dtype(dt).itemsize
    tensors = {}
    offset = 0
    for name, shape in manifest["tensors"]:
        size = int(np.prod(shape)) * itemsize
        if offset + size > len(blob):
            raise ValueError(f"{path}: params.bin truncated at tensor {name!r}")
        tensors[name] = np.frombuffer(
            blob[offset : offset + size], dtype="<" + np.dtype(dt).str[1:]
        ).astype(dt).reshape(shape)
        offset += size
    if offset != len(blob):
        raise ValueError(f"{path}: params.bin has trailing bytes")

    def bn(prefix):
        return BatchNormState(
            gain=tensors[f"{prefix}.gain"], bias=tensors[f"{prefix}.bias"],
            running_mean=tensors[f"{prefix}.running_mean"],
            running_var=tensors[f"{prefix}.running_var"],
        )

    enc = EncoderParams(
        W1=tensors["enc.W1"], b1=tensors["enc.b1"],
        W2=tensors["enc.W2"], b2=tensors["enc.b2"],
        Wmu=tensors["enc.Wmu"], bmu=tensors["enc.bmu"],
        Wlv=tensors["enc.Wlv"], blv=tensors["enc.blv"],
        bn_mu=bn("enc.bn_mu"), bn_lv=bn("enc.bn_lv"),
    )
    dec = DecoderParams(
        phi=tensors["dec.phi"], W=tensors["dec.W"], kernel=config.kernel,
        bn=bn("dec.bn") if "dec.bn.gain" in tensors else None,
    )
    return TrainedModel(
        encoder=enc, decoder=dec, config=config,
        curve=np.array(manifest["curve"], dtype=np.float64).reshape(-1, 3),
        doc_coords=tensors["doc_coords"],
        labels=list(manifest.get("labels", [])),
    )


def load_checkpoint_checked(path, precision: str) -> TrainedModel:
    """Load and fail loudly when the stored precision differs."""
    manifest = json.loads(Path(path, "manifest.json").read_text(encoding="utf-8"))
    if manifest.get("precision") != precision:
        raise ValueError(
            f"checkpoint precision {manifest.get('precision')!r} does not match "
            f"requested {precision!r}"
        )
    return load_checkpoint(path)
