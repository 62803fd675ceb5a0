"""Corpus ingestion: tokenization, stopword removal, stemming, vocabulary
capping, and bag-of-words vectorization.

File formats:
  * corpus: UTF-8, one document per line, ``label<TAB>text``
  * stoplist: one lowercase word per line
  * vocabulary: one word per line, line number = word id
  * BoW cache: header ``N V``, then one line per doc ``label<TAB>v:c v:c ...``
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import porter

_TOKEN_RE = re.compile(r"[a-z]+")


@dataclass(frozen=True)
class RawDocument:
    label: str
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("document text is empty")


@dataclass(frozen=True)
class Vocabulary:
    words: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.words)

    @property
    def index(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.words)}

    def save(self, path) -> None:
        Path(path).write_text("\n".join(self.words) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        words = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(tuple(w for w in words if w))


@dataclass
class BowCorpus:
    """N x V sparse count matrix with per-document labels."""

    counts: sp.csr_matrix
    labels: list[str]
    vocab: Vocabulary

    def __post_init__(self):
        n, v = self.counts.shape
        if n == 0:
            raise ValueError("corpus has no documents")
        if n != len(self.labels):
            raise ValueError("label count does not match document count")
        if v != self.vocab.size:
            raise ValueError("count matrix width does not match vocabulary")
        if (np.asarray(self.counts.sum(axis=1)).ravel() <= 0).any():
            raise ValueError("every document must have a positive token count")

    @property
    def n_docs(self) -> int:
        return self.counts.shape[0]

    @property
    def n_words(self) -> int:
        return self.counts.shape[1]

    def save(self, path) -> None:
        counts = self.counts.tocsr()
        lines = [f"{self.n_docs} {self.n_words}"]
        for n in range(self.n_docs):
            row = counts.getrow(n)
            pairs = " ".join(
                f"{v}:{int(c)}" for v, c in sorted(zip(row.indices, row.data))
            )
            lines.append(f"{self.labels[n]}\t{pairs}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path, vocab: Vocabulary) -> "BowCorpus":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        n_docs, n_words = (int(x) for x in lines[0].split())
        if n_words != vocab.size:
            raise ValueError(
                f"BoW cache has V={n_words} but vocabulary has {vocab.size} words"
            )
        labels, rows, cols, data = [], [], [], []
        for n, line in enumerate(lines[1 : n_docs + 1]):
            label, _, pairs = line.partition("\t")
            labels.append(label)
            for pair in pairs.split():
                v, c = pair.split(":")
                rows.append(n)
                cols.append(int(v))
                data.append(int(c))
        counts = sp.csr_matrix(
            (data, (rows, cols)), shape=(n_docs, n_words), dtype=np.int64
        )
        return cls(counts, labels, vocab)


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphabetic characters, keep tokens of len >= 2."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


def default_stoplist() -> frozenset[str]:
    data = resources.files("topicviz.data").joinpath("stopwords.txt").read_text()
    return frozenset(w for w in data.splitlines() if w)


def load_stoplist(path) -> frozenset[str]:
    return frozenset(
        w for w in Path(path).read_text(encoding="utf-8").splitlines() if w
    )


def preprocess(tokens: list[str], stoplist: frozenset[str] | set[str]) -> list[str]:
    """Drop stopwords, then Porter-stem what remains."""
    return [porter.stem(t) for t in tokens if t not in stoplist]


def build_vocab(docs: list[list[str]], v_max: int) -> Vocabulary:
    """The v_max most frequent tokens, ties broken lexicographically."""
    if v_max <= 0:
        raise ValueError("v_max must be positive")
    freq = Counter()
    for tokens in docs:
        freq.update(tokens)
    if not freq:
        raise ValueError("cannot build a vocabulary from an all-empty corpus")
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(tuple(w for w, _ in ranked[:v_max]))


def vectorize(
    docs: list[RawDocument],
    vocab: Vocabulary,
    stoplist: frozenset[str] | set[str],
) -> BowCorpus:
    """Count in-vocabulary tokens per document; fully-OOV documents are dropped."""
    index = vocab.index
    labels, rows, cols, data = [], [], [], []
    n_kept = 0
    for doc in docs:
        ids = Counter(
            index[t] for t in preprocess(tokenize(doc.text), stoplist) if t in index
        )
        if not ids:
            continue
        for v, c in ids.items():
            rows.append(n_kept)
            cols.append(v)
            data.append(c)
        labels.append(doc.label)
        n_kept += 1
    if n_kept == 0:
        raise ValueError("every document became empty after filtering")
    counts = sp.csr_matrix(
        (data, (rows, cols)), shape=(n_kept, vocab.size), dtype=np.int64
    )
    return BowCorpus(counts, labels, vocab)


def read_corpus_file(path) -> list[RawDocument]:
    """One ``label<TAB>text`` document per line; blank lines skipped."""
    docs = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        label, tab, text = line.partition("\t")
        if not tab or not text.strip():
            raise ValueError(f"{path}:{lineno}: expected 'label<TAB>text'")
        docs.append(RawDocument(label=label, text=text))
    return docs
