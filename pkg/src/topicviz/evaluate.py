"""Quantitative evaluation: leave-one-out k-NN accuracy in the
visualization space, and NPMI topic coherence from sliding-window
co-occurrence statistics over a reference corpus.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class CoocStats:
    window: int
    total_windows: int
    unigram: dict[str, float]
    joint: dict[frozenset, float]


@dataclass
class EvalReport:
    knn_accuracy: dict[int, float]
    npmi_per_topic: list[float] = field(default_factory=list)
    npmi_mean: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "knn_accuracy": {str(k): v for k, v in self.knn_accuracy.items()},
            "npmi_per_topic": self.npmi_per_topic,
            "npmi_mean": self.npmi_mean,
        }


def knn_accuracy(coords: np.ndarray, labels, k: int) -> float:
    """Leave-one-out k-NN majority vote.

    Neighbors are ordered by (Euclidean distance, index); a majority tie
    is broken by the label of the nearest neighbor carrying a tied label.
    """
    n = coords.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < N, got k={k}, N={n}")
    labels = list(labels)
    coords = np.asarray(coords, dtype=np.float64)
    sq = (coords * coords).sum(axis=1)
    dist2 = sq[:, None] - 2.0 * coords @ coords.T + sq[None, :]
    np.fill_diagonal(dist2, np.inf)
    # stable sort: equal distances resolve to the lower index
    order_all = np.argsort(dist2, axis=1, kind="stable")
    correct = 0
    for i in range(n):
        neighbors = order_all[i, :k]
        votes = Counter(labels[j] for j in neighbors)
        top = max(votes.values())
        tied = {lab for lab, c in votes.items() if c == top}
        if len(tied) == 1:
            pred = tied.pop()
        else:
            pred = next(labels[j] for j in neighbors if labels[j] in tied)
        if pred == labels[i]:
            correct += 1
    return correct / n


def topic_match_rate(theta: np.ndarray, groups) -> float:
    """Fraction of documents whose highest-responsibility topic agrees with
    their true group, after mapping each topic to its majority group.

    Works when the model has more topics than groups: extra topics map
    onto whichever group dominates them, and empty topics are ignored.
    """
    theta = np.asarray(theta)
    groups = np.asarray(groups)
    if theta.shape[0] != groups.shape[0]:
        raise ValueError("theta rows do not match group labels")
    top = theta.argmax(axis=1)
    matched = 0
    for z in range(theta.shape[1]):
        mask = top == z
        if mask.any():
            _, counts = np.unique(groups[mask], return_counts=True)
            matched += int(counts.max())
    return matched / theta.shape[0]


def random_projection_coords(counts, n_dims: int, rng) -> np.ndarray:
    """Random linear 2-D projection of the count matrix; a floor baseline."""
    proj = rng.standard_normal((counts.shape[1], n_dims))
    return np.asarray(counts @ proj, dtype=np.float64)


def build_cooc(reference_docs: list[list[str]], window: int) -> CoocStats:
    """Sliding-window presence counts (stride 1) over each document.

    Documents shorter than the window contribute one truncated window.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    if not reference_docs or all(not d for d in reference_docs):
        raise ValueError("reference corpus is empty")
    uni: Counter = Counter()
    joint: Counter = Counter()
    total = 0
    for tokens in reference_docs:
        if not tokens:
            continue
        n_windows = max(1, len(tokens) - window + 1)
        for start in range(n_windows):
            seen = set(tokens[start : start + window])
            total += 1
            uni.update(seen)
            joint.update(frozenset(p) for p in combinations(sorted(seen), 2))
    return CoocStats(
        window=window,
        total_windows=total,
        unigram={w: c / total for w, c in uni.items()},
        joint={p: c / total for p, c in joint.items()},
    )


def npmi_pair(stats: CoocStats, w_i: str, w_j: str) -> float:
    """Normalized pointwise mutual information in [-1, 1]."""
    for w in (w_i, w_j):
        if w not in stats.unigram:
            raise KeyError(f"word {w!r} not present in co-occurrence statistics")
    p_joint = stats.joint.get(frozenset((w_i, w_j)), 0.0)
    if p_joint <= 0.0:
        return -1.0
    p_i = stats.unigram[w_i]
    p_j = stats.unigram[w_j]
    return float(np.log(p_joint / (p_i * p_j)) / (-np.log(p_joint)))


def _marginal_or_floor(stats: CoocStats, w: str) -> float:
    if w in stats.unigram:
        return stats.unigram[w]
    log.warning("word %r absent from reference statistics; flooring marginal", w)
    return 1.0 / stats.total_windows


def topic_npmi(beta: np.ndarray, z: int, vocab_words, stats: CoocStats,
               top: int = 10) -> float:
    """Mean pairwise NPMI of a topic's top words (ties broken by lower id)."""
    row = np.asarray(beta[z], dtype=np.float64)
    if row.size < top:
        raise ValueError(f"vocabulary smaller than top={top}")
    order = np.lexsort((np.arange(row.size), -row))[:top]
    words = [vocab_words[v] for v in order]
    vals = []
    for a, b in combinations(words, 2):
        if a in stats.unigram and b in stats.unigram:
            vals.append(npmi_pair(stats, a, b))
        else:
            # unseen word: treat the pair as never co-occurring
            _marginal_or_floor(stats, a)
            _marginal_or_floor(stats, b)
            vals.append(-1.0)
    return float(np.mean(vals))


def model_npmi(beta: np.ndarray, vocab_words, stats: CoocStats,
               top: int = 10) -> tuple[list[float], float]:
    """Per-topic NPMI and their mean."""
    per_topic = [
        topic_npmi(beta, z, vocab_words, stats, top) for z in range(beta.shape[0])
    ]
    return per_topic, float(np.mean(per_topic))
