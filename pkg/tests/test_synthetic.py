"""Generated corpora: planted structure, pipeline safety, determinism."""

import numpy as np
import pytest

from topicviz.corpus import default_stoplist, preprocess, tokenize
from topicviz.synthetic import (
    newsgroups_like_documents,
    planted_corpus,
    word_for,
    write_corpus_file,
)


def test_word_for_is_stemming_proof():
    stop = default_stoplist()
    for idx in (0, 7, 123, 9999):
        w = word_for(idx)
        assert preprocess(tokenize(w), stop) == [w]


def test_word_for_is_injective():
    words = {word_for(i) for i in range(1000)}
    assert len(words) == 1000


def test_planted_corpus_shapes():
    corpus, token_docs, planted = planted_corpus(
        n_topics=3, support=10, n_docs=20, n_words=40, doc_len=15, seed=1
    )
    assert corpus.counts.shape == (20, 40)
    assert len(token_docs) == 20
    assert planted.shape == (20,)
    assert all(len(d) == 15 for d in token_docs)


def test_planted_supports_are_disjoint():
    corpus, _, planted = planted_corpus(
        n_topics=3, support=10, n_docs=30, n_words=40, doc_len=15, seed=2
    )
    counts = corpus.counts.toarray()
    for n in range(30):
        z = int(planted[n])
        used = np.flatnonzero(counts[n])
        assert used.min() >= z * 10
        assert used.max() < (z + 1) * 10


def test_planted_labels_match_assignment():
    corpus, _, planted = planted_corpus(
        n_topics=2, support=5, n_docs=10, n_words=20, doc_len=8, seed=3
    )
    assert corpus.labels == [f"topic{int(z)}" for z in planted]


def test_planted_corpus_deterministic():
    a, _, _ = planted_corpus(n_topics=2, support=5, n_docs=10, n_words=20,
                             doc_len=8, seed=4)
    b, _, _ = planted_corpus(n_topics=2, support=5, n_docs=10, n_words=20,
                             doc_len=8, seed=4)
    assert (a.counts != b.counts).nnz == 0


def test_planted_corpus_rejects_overfull_supports():
    with pytest.raises(ValueError):
        planted_corpus(n_topics=5, support=100, n_words=400)


def test_newsgroups_like_structure():
    docs = newsgroups_like_documents(
        n_categories=2, docs_per_category=5, topics_per_category=2,
        topic_vocab=10, shared_vocab=20, doc_len_range=(10, 20), seed=5
    )
    assert len(docs) == 10
    assert {d.label for d in docs} == {"cat0", "cat1"}
    for d in docs:
        n = len(d.text.split())
        assert 10 <= n <= 20


def test_newsgroups_like_survives_pipeline():
    stop = default_stoplist()
    docs = newsgroups_like_documents(
        n_categories=1, docs_per_category=2, topics_per_category=1,
        topic_vocab=5, shared_vocab=5, doc_len_range=(8, 10), seed=6
    )
    for d in docs:
        tokens = tokenize(d.text)
        assert preprocess(tokens, stop) == tokens


def test_corpus_file_roundtrip(tmp_path):
    from topicviz.corpus import read_corpus_file

    docs = newsgroups_like_documents(
        n_categories=2, docs_per_category=3, topics_per_category=1,
        topic_vocab=5, shared_vocab=5, doc_len_range=(5, 8), seed=7
    )
    path = tmp_path / "corpus.txt"
    write_corpus_file(docs, path)
    loaded = read_corpus_file(path)
    assert [(d.label, d.text) for d in loaded] == [(d.label, d.text) for d in docs]
