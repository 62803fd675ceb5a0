"""EM baseline: responsibilities, closed-form word update, coordinate
ascent gradients, and outer-loop behavior.
"""

import numpy as np
import pytest
import scipy.sparse as sp

from topicviz.corpus import BowCorpus, Vocabulary
from topicviz.map_em import (
    MapConfig,
    MapParams,
    SparseCounts,
    e_step,
    expected_topic_counts,
    init_map_params,
    load_map_checkpoint,
    m_step_beta,
    m_step_coords,
    map_objective,
    map_train,
    q_coords,
    q_coords_grads,
    save_map_checkpoint,
    topic_mixture,
)
from topicviz.numerics import finite_diff_check, make_rng


def _corpus(counts):
    counts = np.asarray(counts, dtype=np.float64)
    vocab = Vocabulary(tuple(f"w{j}" for j in range(counts.shape[1])))
    labels = [f"d{i}" for i in range(counts.shape[0])]
    return BowCorpus(sp.csr_matrix(counts), labels, vocab)


def _data(counts):
    return SparseCounts.from_corpus(_corpus(counts))


# ---------------------------------------------------------------------------
# config


def test_config_validation():
    with pytest.raises(ValueError):
        MapConfig(n_topics=0)
    with pytest.raises(ValueError):
        MapConfig(gamma=-1.0)
    with pytest.raises(ValueError):
        MapConfig(em_iters=-1)


def test_topic_coordinate_prior_scale():
    assert MapConfig(n_topics=10).varphi(1000) == pytest.approx(100.0)


# ---------------------------------------------------------------------------
# E-step


def test_e_step_single_topic_is_one():
    params = MapParams(
        X=np.zeros((2, 2)), phi=np.zeros((1, 2)),
        beta=np.array([[0.5, 0.5]]),
    )
    r = e_step(params, _data([[1, 1], [2, 0]]))
    np.testing.assert_allclose(r, 1.0)


def test_e_step_symmetric_topics_split_evenly():
    params = MapParams(
        X=np.zeros((1, 2)),
        phi=np.array([[1.0, 0.0], [-1.0, 0.0]]),
        beta=np.full((2, 2), 0.5),
    )
    r = e_step(params, _data([[1, 1]]))
    np.testing.assert_allclose(r, 0.5, atol=1e-9)


def test_e_step_hand_value():
    # x at the origin, equidistant centers, beta puts 0.9 / 0.1 on word 0:
    # r = (0.9, 0.1) for a word-0 token
    params = MapParams(
        X=np.zeros((1, 2)),
        phi=np.array([[1.0, 0.0], [-1.0, 0.0]]),
        beta=np.array([[0.9, 0.1], [0.1, 0.9]]),
    )
    r = e_step(params, _data([[3, 0]]))
    np.testing.assert_allclose(r, [[0.9, 0.1]], atol=1e-8)


def test_e_step_rows_sum_to_one():
    rng = make_rng(0)
    params = MapParams(
        X=rng.standard_normal((4, 2)), phi=rng.standard_normal((3, 2)),
        beta=np.exp(rng.standard_normal((3, 6))),
    )
    params.beta /= params.beta.sum(axis=1, keepdims=True)
    r = e_step(params, _data(rng.integers(0, 3, size=(4, 6)) + 1))
    np.testing.assert_allclose(r.sum(axis=1), 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# word-distribution M-step


def test_m_step_beta_hand_value():
    # one topic, counts (2, 1), lam=0 -> beta = (2/3, 1/3)
    data = _data([[2, 1]])
    r = np.ones((data.count.size, 1))
    np.testing.assert_allclose(m_step_beta(r, data, 0.0), [[2 / 3, 1 / 3]])


def test_m_step_beta_large_lam_goes_uniform():
    data = _data([[5, 0], [0, 3]])
    r = np.ones((data.count.size, 1))
    np.testing.assert_allclose(m_step_beta(r, data, 1e9), 0.5, atol=1e-6)


def test_m_step_beta_split_responsibilities():
    # a single word-0 token split 0.25/0.75 between two topics, lam=0
    data = _data([[1, 0]])
    r = np.array([[0.25, 0.75]])
    beta = m_step_beta(r, data, 0.0)
    np.testing.assert_allclose(beta, [[1.0, 0.0], [1.0, 0.0]], atol=1e-12)


def test_m_step_beta_rows_are_distributions():
    rng = make_rng(1)
    data = _data(rng.integers(0, 4, size=(5, 7)) + 1)
    r = rng.dirichlet(np.ones(3), size=data.count.size)
    beta = m_step_beta(r, data, 0.01)
    np.testing.assert_allclose(beta.sum(axis=1), 1.0, atol=1e-12)
    assert (beta > 0).all()


def test_expected_topic_counts_conserve_tokens():
    rng = make_rng(2)
    counts = rng.integers(0, 4, size=(6, 5)) + 1
    data = _data(counts)
    r = rng.dirichlet(np.ones(4), size=data.count.size)
    T = expected_topic_counts(r, data)
    np.testing.assert_allclose(T.sum(axis=1), counts.sum(axis=1), atol=1e-9)


# ---------------------------------------------------------------------------
# coordinate objective


def test_q_coords_grads_finite_diff():
    rng = make_rng(3)
    X = rng.standard_normal((5, 2))
    phi = rng.standard_normal((3, 2))
    T = rng.uniform(0, 5, size=(5, 3))

    def f(p):
        return q_coords(p["X"], p["phi"], T, 1.3, 7.0)

    gX, gphi = q_coords_grads(X, phi, T, 1.3, 7.0)
    err = finite_diff_check(f, {"X": X, "phi": phi}, {"X": gX, "phi": gphi}, h=1e-6)
    assert err < 1e-6


def test_tight_prior_shrinks_coordinates():
    rng = make_rng(4)
    counts = rng.integers(0, 3, size=(6, 8)) + 1
    data = _data(counts)
    config = MapConfig(n_topics=2, gamma=1e-6, inner_iters=200, inner_lr=0.05)
    params = init_map_params(config, 6, 8, make_rng(0))
    r = e_step(params, data)
    params = m_step_coords(params, r, data, config)
    assert np.abs(params.X).max() < 0.1


def test_m_step_coords_never_worsens_q():
    rng = make_rng(5)
    counts = rng.integers(0, 3, size=(8, 10)) + 1
    data = _data(counts)
    config = MapConfig(n_topics=3, inner_iters=10)
    params = init_map_params(config, 8, 10, make_rng(1))
    r = e_step(params, data)
    T = expected_topic_counts(r, data)
    varphi = config.varphi(data.n_docs)
    before = q_coords(params.X, params.phi, T, config.gamma, varphi)
    params = m_step_coords(params, r, data, config)
    after = q_coords(params.X, params.phi, T, config.gamma, varphi)
    assert after >= before - 1e-12


def test_beta_update_is_exact_subproblem_maximizer():
    # fixing responsibilities, the lam-smoothed count normalization maximizes
    # the expected complete-data term in beta; perturbations only lose
    rng = make_rng(6)
    counts = rng.integers(0, 3, size=(5, 6)) + 1
    data = _data(counts)
    r = rng.dirichlet(np.ones(2), size=data.count.size)
    lam = 0.5
    beta = m_step_beta(r, data, lam)

    def beta_term(b):
        ll = float(
            (data.count[:, None] * r * np.log(b[:, data.word_idx].T)).sum()
        )
        return ll + lam * float(np.log(b).sum())

    best = beta_term(beta)
    for trial in range(20):
        noise = np.exp(0.1 * make_rng(100 + trial).standard_normal(beta.shape))
        other = beta * noise
        other /= other.sum(axis=1, keepdims=True)
        assert beta_term(other) <= best + 1e-9


# ---------------------------------------------------------------------------
# full loop


def test_map_train_deterministic():
    rng = make_rng(7)
    corpus = _corpus(rng.integers(0, 3, size=(10, 12)) + 1)
    config = MapConfig(n_topics=3, em_iters=5)
    p1, c1 = map_train(corpus, config)
    p2, c2 = map_train(corpus, config)
    np.testing.assert_array_equal(p1.X, p2.X)
    np.testing.assert_array_equal(c1, c2)


def test_map_train_objective_improves():
    rng = make_rng(8)
    corpus = _corpus(rng.integers(0, 3, size=(12, 10)) + 1)
    params, curve = map_train(corpus, MapConfig(n_topics=2, em_iters=30))
    assert curve[-1] > curve[0]
    assert curve.shape == (30,)


def test_map_train_single_topic():
    rng = make_rng(9)
    counts = rng.integers(0, 3, size=(5, 6)) + 1
    corpus = _corpus(counts)
    params, _ = map_train(corpus, MapConfig(n_topics=1, em_iters=3))
    # with one topic beta is the lam-smoothed corpus word distribution
    expected = counts.sum(axis=0) + 0.01
    np.testing.assert_allclose(
        params.beta[0], expected / expected.sum(), atol=1e-9
    )


def test_map_train_writes_log(tmp_path):
    corpus = _corpus(make_rng(10).integers(0, 3, size=(5, 6)) + 1)
    log = tmp_path / "map.csv"
    map_train(corpus, MapConfig(n_topics=2, em_iters=2), log_path=log)
    lines = log.read_text().strip().splitlines()
    assert lines[0] == "iteration,objective,seconds"
    assert len(lines) == 3


def test_map_objective_finite(tiny_corpus):
    config = MapConfig(n_topics=2, em_iters=4)
    params, curve = map_train(tiny_corpus, config)
    data = SparseCounts.from_corpus(tiny_corpus)
    assert np.isfinite(map_objective(params, data, config))
    assert np.isfinite(curve).all()


def test_topic_mixture_agrees_with_decoder_kernel():
    from topicviz.decoder import rbf_theta

    rng = make_rng(11)
    X = rng.standard_normal((6, 2))
    phi = rng.standard_normal((4, 2))
    theta, _ = rbf_theta(X, phi, "gaussian")
    np.testing.assert_allclose(topic_mixture(X, phi), theta, atol=1e-9)


# ---------------------------------------------------------------------------
# checkpoints


def test_map_checkpoint_roundtrip(tmp_path):
    corpus = _corpus(make_rng(12).integers(0, 3, size=(6, 8)) + 1)
    config = MapConfig(n_topics=2, em_iters=2)
    params, _ = map_train(corpus, config)
    save_map_checkpoint(params, config, corpus.labels, tmp_path / "ckpt")
    loaded, cfg2, labels = load_map_checkpoint(tmp_path / "ckpt")
    np.testing.assert_array_equal(loaded.X, params.X)
    np.testing.assert_array_equal(loaded.beta, params.beta)
    assert cfg2 == config
    assert labels == corpus.labels


def test_map_checkpoint_rejects_vae_kind(tmp_path, tiny_corpus):
    from topicviz.trainer import save_checkpoint, train

    from conftest import small_config

    model = train(tiny_corpus, small_config(epochs=1))
    save_checkpoint(model, tmp_path / "ckpt")
    with pytest.raises(ValueError, match="not a MAP checkpoint"):
        load_map_checkpoint(tmp_path / "ckpt")
