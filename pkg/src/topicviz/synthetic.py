"""Synthetic corpora with planted topic structure, for tests and benchmarks.

Words are all-consonant strings so the full text pipeline (tokenizer,
stopword filter, stemmer) passes them through unchanged.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .corpus import BowCorpus, RawDocument, Vocabulary
from .numerics import make_rng

_CONSONANTS = "bcdfghjklm"  # ten letters: one per decimal digit


def word_for(index: int, width: int = 4) -> str:
    """Stemming-proof word id, e.g. 17 -> 'qbh' with width 2 ('q' + digits)."""
    digits = f"{index:0{width}d}"
    return "q" + "".join(_CONSONANTS[int(c)] for c in digits)


def planted_corpus(
    n_topics: int = 5,
    support: int = 100,
    n_docs: int = 1000,
    n_words: int = 500,
    doc_len: int = 50,
    seed: int = 0,
):
    """Disjoint-support topics; each document draws all tokens from one topic.

    Returns (BowCorpus, token_docs, planted) where ``planted[n]`` is the true
    topic of document n and labels carry the same information as strings.
    """
    if n_topics * support > n_words:
        raise ValueError("topic supports do not fit in the vocabulary")
    rng = make_rng(seed)
    vocab = Vocabulary(tuple(word_for(v) for v in range(n_words)))
    planted = rng.integers(n_topics, size=n_docs)
    rows, cols, data = [], [], []
    token_docs = []
    labels = []
    for n in range(n_docs):
        z = int(planted[n])
        ids = rng.integers(z * support, (z + 1) * support, size=doc_len)
        token_docs.append([vocab.words[v] for v in ids])
        uniq, cnt = np.unique(ids, return_counts=True)
        rows.extend([n] * len(uniq))
        cols.extend(uniq.tolist())
        data.extend(cnt.tolist())
        labels.append(f"topic{z}")
    counts = sp.csr_matrix((data, (rows, cols)), shape=(n_docs, n_words), dtype=np.int64)
    return BowCorpus(counts, labels, vocab), token_docs, planted


def newsgroups_like_documents(
    n_categories: int = 5,
    docs_per_category: int = 400,
    topics_per_category: int = 3,
    topic_vocab: int = 120,
    shared_vocab: int = 600,
    doc_len_range: tuple[int, int] = (60, 120),
    seed: int = 0,
) -> list[RawDocument]:
    """Harder labeled corpus in the one-line-per-document text format.

    Each category owns a few topics with their own vocabulary; a shared
    background vocabulary is mixed into every document, so categories
    overlap the way real newsgroup posts do.
    """
    rng = make_rng(seed)
    n_topic_words = n_categories * topics_per_category * topic_vocab
    topic_words = [word_for(v, width=5) for v in range(n_topic_words)]
    background = [word_for(n_topic_words + v, width=5) for v in range(shared_vocab)]
    # Zipf-ish background frequencies
    bg_weights = 1.0 / np.arange(1, shared_vocab + 1)
    bg_weights /= bg_weights.sum()
    docs = []
    for cat in range(n_categories):
        for _ in range(docs_per_category):
            length = int(rng.integers(*doc_len_range))
            topic = int(rng.integers(topics_per_category))
            base = (cat * topics_per_category + topic) * topic_vocab
            n_bg = int(0.4 * length)
            tokens = [
                topic_words[base + int(i)]
                for i in rng.integers(topic_vocab, size=length - n_bg)
            ]
            tokens += [
                background[int(i)]
                for i in rng.choice(shared_vocab, size=n_bg, p=bg_weights)
            ]
            perm = rng.permutation(len(tokens))
            text = " ".join(tokens[i] for i in perm)
            docs.append(RawDocument(label=f"cat{cat}", text=text))
    order = rng.permutation(len(docs))
    return [docs[i] for i in order]


def write_corpus_file(docs: list[RawDocument], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in docs:
            f.write(f"{doc.label}\t{doc.text}\n")
