"""Wall-clock comparison: one full variational data pass vs one EM
iteration (E-step + 10 inner coordinate steps) on the same corpus,
measured interleaved on the same process.
"""

import argparse
import time

from topicviz.elbo import elbo_batch
from topicviz.map_em import (
    MapConfig,
    SparseCounts,
    e_step,
    init_map_params,
    m_step_beta,
    m_step_coords,
)
from topicviz.numerics import AdamState, adam_step, clip_global_norm, make_rng, split_rng
from topicviz.synthetic import planted_corpus
from topicviz.trainer import TrainConfig, _batch_slices, init_params


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--topics", type=int, default=50)
    ap.add_argument("--trials", type=int, default=8)
    args = ap.parse_args()

    corpus, _, _ = planted_corpus(seed=0)
    n_docs = corpus.n_docs

    config = TrainConfig(n_topics=args.topics, seed=0)
    counts = corpus.counts.tocsr().astype(config.dtype)
    enc, dec = init_params(config, corpus.n_words, split_rng(0, 0))
    adam = AdamState(lr=config.lr)
    params = {**enc.trainable(), **dec.trainable()}

    def vae_pass(epoch):
        order = split_rng(0, 1, epoch).permutation(n_docs)
        for b, (lo, hi) in enumerate(_batch_slices(n_docs, config.batch_size)):
            _, _, grads = elbo_batch(
                counts[order[lo:hi]], enc, dec, config.gamma, 1,
                config.effective_p_drop, split_rng(0, 2, epoch, b),
                mode="training",
            )
            clip_global_norm(grads, 10.0)
            adam_step(params, grads, adam)

    mcfg = MapConfig(n_topics=args.topics, seed=0)
    data = SparseCounts.from_corpus(corpus)
    mp = init_map_params(mcfg, data.n_docs, data.n_words, make_rng(0))

    def map_iteration():
        r = e_step(mp, data)
        mp.beta = m_step_beta(r, data, mcfg.lam)
        m_step_coords(mp, r, data, mcfg)

    vae_pass(0)
    map_iteration()
    vae_times, map_times = [], []
    for trial in range(args.trials):
        t0 = time.perf_counter()
        vae_pass(trial + 1)
        vae_times.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        map_iteration()
        map_times.append(time.perf_counter() - t0)
        print(
            f"trial {trial}: vae {vae_times[-1]*1e3:6.1f}ms  "
            f"em {map_times[-1]*1e3:6.1f}ms"
        )
    print(
        f"best-of-{args.trials}: vae {min(vae_times)*1e3:.1f}ms, "
        f"em {min(map_times)*1e3:.1f}ms, "
        f"ratio {min(map_times)/min(vae_times):.2f}x"
    )


if __name__ == "__main__":
    main()
