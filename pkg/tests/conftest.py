"""Shared fixtures: tiny corpora and small model configurations."""

import numpy as np
import pytest
import scipy.sparse as sp

from topicviz.corpus import BowCorpus, Vocabulary
from topicviz.trainer import TrainConfig, init_params
from topicviz.numerics import make_rng


@pytest.fixture
def tiny_corpus():
    """8 documents over a 12-word vocabulary, two obvious label groups."""
    rng = make_rng(7)
    vocab = Vocabulary(tuple(f"w{v:02d}" for v in range(12)))
    rows, cols, data = [], [], []
    labels = []
    for n in range(8):
        group = n % 2
        labels.append("odd" if group else "even")
        words = rng.integers(6 * group, 6 * group + 6, size=10)
        uniq, cnt = np.unique(words, return_counts=True)
        rows.extend([n] * len(uniq))
        cols.extend(uniq.tolist())
        data.extend(cnt.tolist())
    counts = sp.csr_matrix((data, (rows, cols)), shape=(8, 12), dtype=np.int64)
    return BowCorpus(counts, labels, vocab)


def small_config(**overrides) -> TrainConfig:
    base = dict(
        n_topics=3, n_dims=2, hidden1=9, hidden2=8, batch_size=4,
        epochs=3, seed=0, lr=0.01,
    )
    base.update(overrides)
    return TrainConfig(**base)


def small_model(n_words=12, **overrides):
    config = small_config(**overrides)
    enc, dec = init_params(config, n_words, make_rng(config.seed))
    return config, enc, dec
