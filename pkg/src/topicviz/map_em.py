"""MAP estimation with EM: the original fitting procedure for the joint
topic/visualization model, used as a speed and quality baseline.

Coordinates use the Gaussian kernel (topic mixture = softmax over
negative half squared distances). The coordinate M-step is inner Adam
ascent on the expected complete-data objective; an update is kept only
when it improves that objective, so the outer curve stays monotone up
to E-step/quadrature slack.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .corpus import BowCorpus
from .numerics import AdamState, adam_step, make_rng, softmax_rows

PROB_FLOOR = 1e-10
MAP_CHECKPOINT_VERSION = 1


@dataclass
class MapConfig:
    n_topics: int = 50
    n_dims: int = 2
    em_iters: int = 200
    inner_iters: int = 10
    lam: float = 0.01        # Dirichlet pseudo-count on topic-word rows
    gamma: float = 1.0       # prior variance of document coordinates
    inner_lr: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if min(self.n_topics, self.n_dims, self.inner_iters) <= 0:
            raise ValueError("n_topics, n_dims, inner_iters must be positive")
        if self.em_iters < 0:
            raise ValueError("em_iters must be >= 0")
        if self.gamma <= 0 or self.inner_lr <= 0 or self.lam < 0:
            raise ValueError("invalid gamma / inner_lr / lam")

    def varphi(self, n_docs: int) -> float:
        """Prior variance of topic coordinates: N / Z."""
        return n_docs / self.n_topics


@dataclass
class MapParams:
    X: np.ndarray      # N x d document coordinates
    phi: np.ndarray    # Z x d topic coordinates
    beta: np.ndarray   # Z x V row-stochastic


@dataclass
class SparseCounts:
    """Observed (doc, word) pairs of a BoW matrix in flat arrays."""

    doc_idx: np.ndarray
    word_idx: np.ndarray
    count: np.ndarray
    n_docs: int
    n_words: int

    @classmethod
    def from_corpus(cls, corpus: BowCorpus) -> "SparseCounts":
        coo = corpus.counts.tocoo()
        return cls(
            doc_idx=coo.row.astype(np.int64),
            word_idx=coo.col.astype(np.int64),
            count=coo.data.astype(np.float64),
            n_docs=corpus.n_docs,
            n_words=corpus.n_words,
        )


def topic_mixture(X, phi):
    """theta (N x Z): softmax over negative half squared distances."""
    d2 = (
        (X * X).sum(axis=1, keepdims=True)
        - 2.0 * X @ phi.T
        + (phi * phi).sum(axis=1)
    )
    return softmax_rows(-0.5 * d2)


def e_step(params: MapParams, data: SparseCounts) -> np.ndarray:
    """Responsibilities r (P x Z) over topics for every observed pair."""
    theta = topic_mixture(params.X, params.phi)
    num = theta[data.doc_idx] * params.beta[:, data.word_idx].T + PROB_FLOOR
    return num / num.sum(axis=1, keepdims=True)


def m_step_beta(r: np.ndarray, data: SparseCounts, lam: float) -> np.ndarray:
    """beta_zv proportional to lam + expected counts."""
    acc = np.zeros((data.n_words, r.shape[1]))
    np.add.at(acc, data.word_idx, data.count[:, None] * r)
    beta = acc.T + lam
    return beta / beta.sum(axis=1, keepdims=True)


def expected_topic_counts(r: np.ndarray, data: SparseCounts) -> np.ndarray:
    """T (N x Z): expected number of tokens per document assigned to each topic."""
    T = np.zeros((data.n_docs, r.shape[1]))
    np.add.at(T, data.doc_idx, data.count[:, None] * r)
    return T


def q_coords(X, phi, T, gamma: float, varphi: float) -> float:
    """Expected complete-data objective in the coordinates (priors included)."""
    theta = topic_mixture(X, phi)
    val = float((T * np.log(theta + PROB_FLOOR)).sum())
    val -= float((X * X).sum()) / (2.0 * gamma)
    val -= float((phi * phi).sum()) / (2.0 * varphi)
    return val


def q_coords_grads(X, phi, T, gamma: float, varphi: float):
    """Analytic gradients of q_coords w.r.t. X and phi."""
    theta = topic_mixture(X, phi)
    tok = T.sum(axis=1, keepdims=True)       # tokens per document
    resid = T - tok * theta                  # N x Z
    # d log theta_nz / d x_n = (phi_z - x_n) - sum_k theta_nk (phi_k - x_n);
    # the x_n pieces cancel after weighting by T because resid rows sum to 0
    gX = resid @ phi - X / gamma
    gphi = resid.T @ X - resid.sum(axis=0)[:, None] * phi - phi / varphi
    return gX, gphi


def m_step_coords(params: MapParams, r, data: SparseCounts, config: MapConfig):
    """Inner Adam ascent on q_coords; reverts if the objective got worse."""
    T = expected_topic_counts(r, data)
    varphi = config.varphi(data.n_docs)
    X = params.X.copy()
    phi = params.phi.copy()
    before = q_coords(X, phi, T, config.gamma, varphi)
    adam = AdamState(lr=config.inner_lr)
    pack = {"X": X, "phi": phi}
    for _ in range(config.inner_iters):
        gX, gphi = q_coords_grads(X, phi, T, config.gamma, varphi)
        if not (np.all(np.isfinite(gX)) and np.all(np.isfinite(gphi))):
            raise FloatingPointError("non-finite coordinate gradient in M-step")
        adam_step(pack, {"X": -gX, "phi": -gphi}, adam)
    after = q_coords(X, phi, T, config.gamma, varphi)
    if after >= before:
        params.X = X
        params.phi = phi
    return params


def map_objective(params: MapParams, data: SparseCounts, config: MapConfig) -> float:
    """Penalized log likelihood: data term plus log priors."""
    theta = topic_mixture(params.X, params.phi)
    mix = (theta[data.doc_idx] * params.beta[:, data.word_idx].T).sum(axis=1)
    ll = float((data.count * np.log(mix + PROB_FLOOR)).sum())
    ll -= float((params.X ** 2).sum()) / (2.0 * config.gamma)
    ll -= float((params.phi ** 2).sum()) / (2.0 * config.varphi(data.n_docs))
    ll += config.lam * float(np.log(params.beta + PROB_FLOOR).sum())
    return ll


def init_map_params(config: MapConfig, n_docs: int, n_words: int, rng) -> MapParams:
    X = 0.1 * rng.standard_normal((n_docs, config.n_dims))
    phi = 0.1 * rng.standard_normal((config.n_topics, config.n_dims))
    beta = softmax_rows(0.01 * rng.standard_normal((config.n_topics, n_words)))
    return MapParams(X=X, phi=phi, beta=beta)


def map_train(corpus: BowCorpus, config: MapConfig, log_path=None):
    """Alternating E/M; returns (MapParams, objective curve per iteration)."""
    data = SparseCounts.from_corpus(corpus)
    params = init_map_params(config, data.n_docs, data.n_words, make_rng(config.seed))
    curve = []
    log_rows = []
    for it in range(config.em_iters):
        t0 = time.perf_counter()
        r = e_step(params, data)
        params.beta = m_step_beta(r, data, config.lam)
        params = m_step_coords(params, r, data, config)
        obj = map_objective(params, data, config)
        if not np.isfinite(obj):
            raise RuntimeError(f"MAP objective became non-finite at iteration {it}")
        curve.append(obj)
        log_rows.append((it, obj, time.perf_counter() - t0))
    if log_path is not None:
        with open(log_path, "w", encoding="utf-8") as f:
            f.write("iteration,objective,seconds\n")
            for it, obj, secs in log_rows:
                f.write(f"{it},{obj:.6f},{secs:.3f}\n")
    return params, np.array(curve)


def save_map_checkpoint(params: MapParams, config: MapConfig, labels, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    tensors = {"X": params.X, "phi": params.phi, "beta": params.beta}
    manifest = {
        "magic": "topicviz-checkpoint",
        "version": MAP_CHECKPOINT_VERSION,
        "kind": "map",
        "precision": "f64",
        "seed": config.seed,
        "config": asdict(config),
        "tensors": [[name, list(t.shape)] for name, t in tensors.items()],
        "labels": list(labels),
    }
    path.joinpath("manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
    )
    blob = b"".join(
        np.ascontiguousarray(t, dtype="<f8").tobytes() for t in tensors.values()
    )
    path.joinpath("params.bin").write_bytes(blob)


def load_map_checkpoint(path):
    path = Path(path)
    manifest = json.loads(path.joinpath("manifest.json").read_text(encoding="utf-8"))
    if manifest.get("magic") != "topicviz-checkpoint" or manifest.get("kind") != "map":
        raise ValueError(f"{path}: not a MAP checkpoint")
    config = MapConfig(**manifest["config"])
    blob = path.joinpath("params.bin").read_bytes()
    tensors = {}
    offset = 0
    for name, shape in manifest["tensors"]:
        size = int(np.prod(shape)) * 8
        if offset + size > len(blob):
            raise ValueError(f"{path}: params.bin truncated at tensor {name!r}")
        tensors[name] = np.frombuffer(
            blob[offset : offset + size], dtype="<f8"
        ).reshape(shape)
        offset += size
    params = MapParams(X=tensors["X"], phi=tensors["phi"], beta=tensors["beta"])
    return params, config, list(manifest.get("labels", []))
