"""Command-line pipeline: preprocess, train (VAE or MAP-EM), eval, plot.

Every command writes a run manifest (config snapshot, input digests,
output paths, seed, wall-clock) into its output directory.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict
from datetime import datetime
from pathlib import Path

import numpy as np

from . import __version__, corpus as corpus_mod, evaluate, map_em, trainer, viz
from .decoder import KERNELS, beta_from_params
from .numerics import make_rng

log = logging.getLogger("topicviz")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _default_outdir(seed: int) -> Path:
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    return Path("runs") / f"{stamp}-seed{seed}"


def _limit_threads(n: int | None):
    if n is None:
        env = os.environ.get("PLSV_THREADS")
        n = int(env) if env else None
    if n is None:
        return None
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=n)
    except ImportError:  # pragma: no cover
        log.warning("threadpoolctl unavailable; --threads ignored")
        return None


def _write_manifest(outdir: Path, command: str, config: dict, inputs: dict,
                    outputs: list, seed, t0: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs.values() if p is not None},
        "outputs": [str(o) for o in outputs],
        "seed": seed,
        "seconds": round(time.perf_counter() - t0, 3),
        "version": __version__,
    }
    outdir.joinpath("run_manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
    )


def _load_bow(bow_path: Path, vocab_path: Path | None) -> corpus_mod.BowCorpus:
    if vocab_path is None:
        vocab_path = bow_path.parent / "vocab.txt"
    vocab = corpus_mod.Vocabulary.load(vocab_path)
    return corpus_mod.BowCorpus.load(bow_path, vocab)


# ---------------------------------------------------------------------------
# subcommands


def cmd_preprocess(args) -> int:
    t0 = time.perf_counter()
    docs = corpus_mod.read_corpus_file(args.corpus)
    stoplist = (
        corpus_mod.load_stoplist(args.stoplist)
        if args.stoplist
        else corpus_mod.default_stoplist()
    )
    token_docs = [
        corpus_mod.preprocess(corpus_mod.tokenize(d.text), stoplist) for d in docs
    ]
    vocab = corpus_mod.build_vocab(token_docs, args.vocab_size)
    bow = corpus_mod.vectorize(docs, vocab, stoplist)
    outdir = Path(args.out) if args.out else _default_outdir(0)
    outdir.mkdir(parents=True, exist_ok=True)
    vocab_path = outdir / "vocab.txt"
    bow_path = outdir / "bow.txt"
    vocab.save(vocab_path)
    bow.save(bow_path)
    print(f"N={bow.n_docs} V={bow.n_words}")
    _write_manifest(
        outdir, "preprocess",
        {"vocab_size": args.vocab_size, "stoplist": args.stoplist},
        {"corpus": args.corpus, "stoplist": args.stoplist},
        [vocab_path, bow_path], None, t0,
    )
    return 0


def _train_config_from_args(args) -> trainer.TrainConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text(encoding="utf-8"))
    flag_map = {
        "n_topics": args.topics, "n_dims": args.dims, "gamma": args.gamma,
        "lr": args.lr, "batch_size": args.batch, "epochs": args.epochs,
        "n_samples": args.samples, "p_drop": args.p_drop, "kernel": args.kernel,
        "seed": args.seed, "precision": args.precision,
        "deterministic": args.deterministic, "phi_l2": args.phi_l2,
        "drop_is_keep": args.drop_is_keep,
        "normalize_input": args.normalize_input,
    }
    for key, value in flag_map.items():
        if value is not None:
            base[key] = value
    return trainer.TrainConfig(**base)


def cmd_train(args) -> int:
    t0 = time.perf_counter()
    config = _train_config_from_args(args)
    bow = _load_bow(Path(args.bow), Path(args.vocab) if args.vocab else None)
    outdir = Path(args.out) if args.out else _default_outdir(config.seed)
    outdir.mkdir(parents=True, exist_ok=True)
    limiter = _limit_threads(args.threads)
    try:
        model = trainer.train(bow, config, log_path=outdir / "train_log.csv")
    finally:
        if limiter is not None:
            limiter.unregister()
    ckpt = outdir / "checkpoint"
    trainer.save_checkpoint(model, ckpt)
    print(f"trained {config.epochs} epochs; final elbo {model.curve[-1, 0]:.3f}"
          if config.epochs else "trained 0 epochs (initialization only)")
    _write_manifest(
        outdir, "train", asdict(config), {"bow": args.bow},
        [ckpt, outdir / "train_log.csv"], config.seed, t0,
    )
    return 0


def cmd_train_map(args) -> int:
    if args.resume:
        print("error: --resume is not supported for MAP-EM training", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    config = map_em.MapConfig(
        n_topics=args.topics, n_dims=args.dims, em_iters=args.em_iters,
        inner_iters=args.inner_iters, lam=args.lam, gamma=args.gamma,
        inner_lr=args.inner_lr, seed=args.seed,
    )
    bow = _load_bow(Path(args.bow), Path(args.vocab) if args.vocab else None)
    outdir = Path(args.out) if args.out else _default_outdir(config.seed)
    outdir.mkdir(parents=True, exist_ok=True)
    limiter = _limit_threads(args.threads)
    try:
        params, curve = map_em.map_train(bow, config, log_path=outdir / "train_log.csv")
    finally:
        if limiter is not None:
            limiter.unregister()
    ckpt = outdir / "checkpoint"
    map_em.save_map_checkpoint(params, config, bow.labels, ckpt)
    print(f"ran {config.em_iters} EM iterations; final objective "
          f"{curve[-1]:.3f}" if config.em_iters else "ran 0 EM iterations")
    _write_manifest(
        outdir, "train-map", asdict(config), {"bow": args.bow},
        [ckpt, outdir / "train_log.csv"], config.seed, t0,
    )
    return 0


def _load_any_checkpoint(path: Path):
    """Returns (coords, beta, labels, seed) for a VAE or MAP checkpoint."""
    manifest = json.loads(path.joinpath("manifest.json").read_text(encoding="utf-8"))
    if manifest.get("kind") == "map":
        params, config, labels = map_em.load_map_checkpoint(path)
        return params.X, params.beta, labels, config.seed
    model = trainer.load_checkpoint(path)
    beta, _ = beta_from_params(model.decoder, mode="inference")
    return model.doc_coords, beta, model.labels, model.config.seed


def _expand_bow_tokens(bow: corpus_mod.BowCorpus) -> list[list[str]]:
    """Token lists reconstructed from counts (id order, no true word order)."""
    docs = []
    counts = bow.counts.tocsr()
    for n in range(bow.n_docs):
        row = counts.getrow(n)
        tokens = []
        for v, c in sorted(zip(row.indices, row.data)):
            tokens.extend([bow.vocab.words[v]] * int(c))
        docs.append(tokens)
    return docs


def cmd_eval(args) -> int:
    t0 = time.perf_counter()
    ckpt = Path(args.checkpoint)
    if not ckpt.joinpath("manifest.json").is_file():
        print(f"error: missing checkpoint at {ckpt}", file=sys.stderr)
        return 1
    coords, beta, labels, seed = _load_any_checkpoint(ckpt)
    bow = _load_bow(Path(args.bow), Path(args.vocab) if args.vocab else None)
    if not labels:
        labels = bow.labels
    ks = [int(k) for k in args.knn_k.split(",")]
    knn = {k: evaluate.knn_accuracy(coords, labels, k) for k in ks}

    if args.npmi_ref:
        ref_docs = corpus_mod.read_corpus_file(args.npmi_ref)
        stoplist = corpus_mod.default_stoplist()
        ref_tokens = [
            corpus_mod.preprocess(corpus_mod.tokenize(d.text), stoplist)
            for d in ref_docs
        ]
    else:
        log.warning(
            "no --npmi-ref given; using the training corpus itself "
            "(word order reconstructed from counts)"
        )
        ref_tokens = _expand_bow_tokens(bow)
    stats = evaluate.build_cooc(ref_tokens, args.window)
    per_topic, mean = evaluate.model_npmi(beta, bow.vocab.words, stats)
    report = evaluate.EvalReport(
        knn_accuracy=knn, npmi_per_topic=per_topic, npmi_mean=mean
    )
    outdir = Path(args.out) if args.out else _default_outdir(seed)
    outdir.mkdir(parents=True, exist_ok=True)
    report_path = outdir / "eval_report.json"
    report_path.write_text(
        json.dumps(report.to_dict(), indent=1, sort_keys=True), encoding="utf-8"
    )
    print(json.dumps(report.to_dict(), indent=1, sort_keys=True))
    _write_manifest(
        outdir, "eval",
        {"knn_k": ks, "window": args.window, "npmi_ref": args.npmi_ref},
        {"bow": args.bow, "npmi_ref": args.npmi_ref},
        [report_path], seed, t0,
    )
    return 0


def cmd_plot(args) -> int:
    t0 = time.perf_counter()
    ckpt = Path(args.checkpoint)
    if not ckpt.joinpath("manifest.json").is_file():
        print(f"error: missing checkpoint at {ckpt}", file=sys.stderr)
        return 1
    coords, beta, labels, seed = _load_any_checkpoint(ckpt)
    bow = _load_bow(Path(args.bow), Path(args.vocab) if args.vocab else None)
    if not labels:
        labels = bow.labels
    manifest = json.loads(ckpt.joinpath("manifest.json").read_text(encoding="utf-8"))
    if manifest.get("kind") == "map":
        params, _, _ = map_em.load_map_checkpoint(ckpt)
        topic_coords = params.phi
    else:
        model = trainer.load_checkpoint(ckpt)
        topic_coords = model.decoder.phi
    top_words = []
    for z in range(beta.shape[0]):
        order = np.lexsort((np.arange(beta.shape[1]), -beta[z]))[:10]
        top_words.append([bow.vocab.words[v] for v in order])
    spec = viz.ScatterSpec(
        doc_coords=np.asarray(coords)[:, :2],
        labels=list(labels),
        topic_coords=np.asarray(topic_coords)[:, :2],
        topic_words=top_words,
        show_words=args.show_words,
    )
    svg = viz.render_scatter(spec)
    out = Path(args.out) if args.out else _default_outdir(seed) / "scatter.svg"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg, encoding="utf-8")
    print(f"wrote {out}")
    _write_manifest(
        out.parent, "plot", {"show_words": args.show_words},
        {"bow": args.bow}, [out], seed, t0,
    )
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topicviz",
        description="Joint topic modeling and 2-D document visualization.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("preprocess", help="tokenize, stem, and vectorize a corpus")
    p.add_argument("corpus", help="label<TAB>text file, one document per line")
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--stoplist", help="stopword file (one word per line)")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_preprocess)

    def positive(value):
        v = int(value)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {value}")
        return v

    t = sub.add_parser("train", help="variational training")
    t.add_argument("bow", help="BoW cache file from `preprocess`")
    t.add_argument("--vocab", help="vocabulary file (default: vocab.txt next to bow)")
    t.add_argument("--topics", type=positive)
    t.add_argument("--dims", type=positive)
    t.add_argument("--kernel", choices=KERNELS)
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch", type=positive)
    t.add_argument("--lr", type=float)
    t.add_argument("--gamma", type=float)
    t.add_argument("--samples", type=positive)
    t.add_argument("--p-drop", type=float, dest="p_drop")
    t.add_argument("--seed", type=int)
    t.add_argument("--precision", choices=("f32", "f64"))
    t.add_argument("--deterministic", action=argparse.BooleanOptionalAction,
                   default=None)
    t.add_argument("--phi-l2", action="store_true", default=None, dest="phi_l2")
    t.add_argument("--drop-is-keep", action="store_true", default=None,
                   dest="drop_is_keep",
                   help="treat --p-drop as a keep probability")
    t.add_argument("--normalize-input", action="store_true", default=None,
                   dest="normalize_input",
                   help="feed the encoder relative frequencies, not raw counts")
    t.add_argument("--config", help="JSON config file (flags take precedence)")
    t.add_argument("--threads", type=positive)
    t.add_argument("--out", help="output directory")
    t.set_defaults(func=cmd_train)

    m = sub.add_parser("train-map", help="MAP-EM baseline training")
    m.add_argument("bow")
    m.add_argument("--vocab")
    m.add_argument("--topics", type=positive, default=50)
    m.add_argument("--dims", type=positive, default=2)
    m.add_argument("--em-iters", type=int, default=200)
    m.add_argument("--inner-iters", type=positive, default=10)
    m.add_argument("--lam", type=float, default=0.01)
    m.add_argument("--gamma", type=float, default=1.0)
    m.add_argument("--inner-lr", type=float, default=0.05)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--resume", action="store_true")
    m.add_argument("--threads", type=positive)
    m.add_argument("--out")
    m.set_defaults(func=cmd_train_map)

    e = sub.add_parser("eval", help="k-NN accuracy and NPMI coherence")
    e.add_argument("checkpoint")
    e.add_argument("bow")
    e.add_argument("--vocab")
    e.add_argument("--knn-k", default="1,5,10,20", dest="knn_k")
    e.add_argument("--npmi-ref", help="reference corpus for NPMI")
    e.add_argument("--window", type=int, default=7)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("plot", help="render an SVG scatterplot")
    v.add_argument("checkpoint")
    v.add_argument("bow")
    v.add_argument("--vocab")
    v.add_argument("--out", help="output SVG path")
    v.add_argument("--show-words", action="store_true")
    v.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
