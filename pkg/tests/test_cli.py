"""Command-line pipeline: preprocess -> train -> eval -> plot end to end."""

import json

import pytest

from topicviz.cli import main
from topicviz.synthetic import newsgroups_like_documents, write_corpus_file


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "corpus.txt"
    docs = newsgroups_like_documents(
        n_categories=2, docs_per_category=15, topics_per_category=1,
        topic_vocab=15, shared_vocab=20, doc_len_range=(20, 30), seed=0
    )
    write_corpus_file(docs, path)
    return path


@pytest.fixture(scope="module")
def bow_dir(corpus_file, tmp_path_factory):
    out = tmp_path_factory.mktemp("bow")
    rc = main([
        "preprocess", str(corpus_file), "--vocab-size", "50", "--out", str(out)
    ])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def vae_run(bow_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("vae")
    rc = main([
        "train", str(bow_dir / "bow.txt"), "--topics", "3", "--epochs", "3",
        "--batch", "8", "--seed", "1", "--out", str(out),
    ])
    assert rc == 0
    return out


def test_preprocess_outputs(bow_dir, capsys):
    assert (bow_dir / "vocab.txt").is_file()
    assert (bow_dir / "bow.txt").is_file()
    manifest = json.loads((bow_dir / "run_manifest.json").read_text())
    assert manifest["command"] == "preprocess"
    assert manifest["config"]["vocab_size"] == 50


def test_train_outputs(vae_run):
    assert (vae_run / "checkpoint" / "manifest.json").is_file()
    assert (vae_run / "train_log.csv").is_file()
    manifest = json.loads((vae_run / "run_manifest.json").read_text())
    assert manifest["command"] == "train"
    assert manifest["config"]["n_topics"] == 3
    assert manifest["seed"] == 1


def test_train_config_file_flags_take_precedence(bow_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_topics": 7, "epochs": 1, "batch_size": 8}))
    out = tmp_path / "run"
    rc = main([
        "train", str(bow_dir / "bow.txt"), "--config", str(cfg),
        "--topics", "2", "--out", str(out),
    ])
    assert rc == 0
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["config"]["n_topics"] == 2       # flag wins
    assert manifest["config"]["epochs"] == 1         # file value kept


def test_train_map(bow_dir, tmp_path):
    out = tmp_path / "map"
    rc = main([
        "train-map", str(bow_dir / "bow.txt"), "--topics", "2",
        "--em-iters", "2", "--out", str(out),
    ])
    assert rc == 0
    ckpt = json.loads((out / "checkpoint" / "manifest.json").read_text())
    assert ckpt["kind"] == "map"


def test_train_map_resume_unsupported(bow_dir, tmp_path, capsys):
    rc = main([
        "train-map", str(bow_dir / "bow.txt"), "--resume",
        "--out", str(tmp_path / "x"),
    ])
    assert rc == 2
    assert "--resume" in capsys.readouterr().err


def test_eval_report(vae_run, bow_dir, tmp_path):
    out = tmp_path / "eval"
    rc = main([
        "eval", str(vae_run / "checkpoint"), str(bow_dir / "bow.txt"),
        "--knn-k", "1,3", "--window", "5", "--out", str(out),
    ])
    assert rc == 0
    report = json.loads((out / "eval_report.json").read_text())
    assert set(report["knn_accuracy"]) == {"1", "3"}
    assert 0.0 <= report["knn_accuracy"]["1"] <= 1.0
    assert len(report["npmi_per_topic"]) == 3
    assert all(-1.0 <= v <= 1.0 for v in report["npmi_per_topic"])


def test_eval_with_reference_corpus(vae_run, bow_dir, corpus_file, tmp_path):
    out = tmp_path / "eval"
    rc = main([
        "eval", str(vae_run / "checkpoint"), str(bow_dir / "bow.txt"),
        "--knn-k", "1", "--npmi-ref", str(corpus_file), "--out", str(out),
    ])
    assert rc == 0
    assert (out / "eval_report.json").is_file()


def test_eval_map_checkpoint(bow_dir, tmp_path):
    map_out = tmp_path / "map"
    main([
        "train-map", str(bow_dir / "bow.txt"), "--topics", "2",
        "--em-iters", "2", "--out", str(map_out),
    ])
    out = tmp_path / "eval"
    rc = main([
        "eval", str(map_out / "checkpoint"), str(bow_dir / "bow.txt"),
        "--knn-k", "1", "--out", str(out),
    ])
    assert rc == 0


def test_plot_svg_deterministic(vae_run, bow_dir, tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    for out in (a, b):
        rc = main([
            "plot", str(vae_run / "checkpoint"), str(bow_dir / "bow.txt"),
            "--out", str(out),
        ])
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes().startswith(b"<?xml")


def test_missing_bow_file_is_reported(tmp_path, capsys):
    rc = main([
        "train", str(tmp_path / "nope.txt"), "--epochs", "1",
        "--out", str(tmp_path / "out"),
    ])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_missing_checkpoint_is_reported(bow_dir, tmp_path, capsys):
    rc = main([
        "eval", str(tmp_path / "nothing"), str(bow_dir / "bow.txt"),
        "--out", str(tmp_path / "out"),
    ])
    assert rc == 1
    assert "missing checkpoint" in capsys.readouterr().err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
