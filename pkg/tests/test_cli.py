import json
import subprocess
import sys

import pytest

from fedlime.cli import main
from fedlime.config import ConfigError, RunConfig, load_config, parse_config
from fedlime.corpus import default_synthetic_spec, generate_synthetic, load_corpus, save_corpus, split_train_test
from fedlime.model import evaluate, init_params, init_seed, load_model

from conftest import labeled_dataset
from fixtures import match_fixture, pseudo_fixture


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    train, test = split_train_test(generate_synthetic(default_synthetic_spec(1000, 0.58, seed=2)), 0.2, seed=2)
    save_corpus(train, d / "train.jsonl")
    save_corpus(test, d / "test.jsonl")
    ref, unl, _ = pseudo_fixture()
    save_corpus(ref, d / "reference.jsonl")
    save_corpus(unl, d / "unlabeled.jsonl")
    with (d / "cands.jsonl").open("w") as fh:
        for c in match_fixture(30):
            fh.write(json.dumps({"sentence": c.sentence, "source": c.source_text}) + "\n")
    cfg = {
        "seed": 7,
        "vectorizer": {"hash_dim": 16384},
        "federated": {"K": 10, "C": 0.3, "E": 1, "rounds": 8},
        "lime": {"num_samples": 100, "top_k": 5},
    }
    (d / "config.json").write_text(json.dumps(cfg))
    return d


def run(*argv):
    return main([str(a) for a in argv])


class TestConfig:
    def test_roundtrip(self):
        cfg = parse_config({"seed": 3, "train": {"epochs": 4}, "partition": {"strategy": "label_skew"},
                            "paths": {"train": "x.jsonl"}})
        assert parse_config(json.loads(cfg.dumps())) == cfg
        assert RunConfig().with_seed(0) == parse_config({})

    def test_seeds_derived(self):
        a, b = parse_config({"seed": 1}), parse_config({"seed": 2})
        assert a.train.seed != b.train.seed and a.lime.seed != b.lime.seed
        assert a.federated.seed == a.train.seed and a.federated.train == a.train

    @pytest.mark.parametrize("obj", [
        {"bogus": 1},
        {"train": {"lr": 0.1}},
        {"train": {"seed": 3}},
        {"federated": {"rounds": 0}},
        {"federated": {"C": 0}},
        {"vectorizer": {"hash_dim": 1000}},
        {"train": {"batch_size": 2.5}},
        {"curation": {"match_threshold": 1.01}},
        {"workers": 0},
        [],
    ])
    def test_rejected(self, obj):
        with pytest.raises(ConfigError):
            parse_config(obj)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "none.json")


class TestStats:
    def test_ok(self, files, capsys):
        assert run("stats", files / "train.jsonl") == 0
        out = json.loads(capsys.readouterr().out)
        assert set(out) == {"n_total", "n_per_label", "ratio"} and out["n_total"] == 800

    def test_missing(self, tmp_path, capsys):
        assert run("stats", tmp_path / "missing.jsonl") == 2
        assert "error" in capsys.readouterr().err

    def test_3256_doc_tallies(self, tmp_path, capsys):
        p = tmp_path / "p.csv"
        p.write_text("text,label\n" + "s,0\n" * 1914 + "d,1\n" * 1342)
        assert run("stats", p) == 0
        out = json.loads(capsys.readouterr().out)
        assert round(out["ratio"]["0"], 3) == 0.588 and round(out["ratio"]["1"], 3) == 0.412


class TestTrainCentral:
    def test_converges_and_reproducible(self, files, tmp_path):
        args = ["train-central", "--config", files / "config.json", "--train", files / "train.jsonl",
                "--test", files / "test.jsonl"]
        assert run(*args, "--model", tmp_path / "a.json", "--metrics", tmp_path / "a.jsonl") == 0
        assert run(*args, "--model", tmp_path / "b.json", "--metrics", tmp_path / "b.jsonl") == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        m = json.loads((tmp_path / "a.jsonl").read_text())
        assert set(m) == {"accuracy", "loss", "n"} and m["accuracy"] >= 0.99

    def test_lr_zero_model_is_init(self, files, tmp_path):
        cfg = json.loads((files / "config.json").read_text())
        cfg["train"] = {"learning_rate": 0.0}
        (tmp_path / "c.json").write_text(json.dumps(cfg))
        assert run("train-central", "--config", tmp_path / "c.json", "--train", files / "train.jsonl",
                   "--test", files / "test.jsonl", "--model", tmp_path / "m.json",
                   "--metrics", tmp_path / "m.jsonl") == 0
        params, _ = load_model(tmp_path / "m.json")
        c = load_config(tmp_path / "c.json")
        init = init_params(c.vectorizer.hash_dim, init_seed(c.train.seed))
        assert params == init
        metrics = json.loads((tmp_path / "m.jsonl").read_text().splitlines()[-1])
        expected = evaluate(init, labeled_dataset(load_corpus(files / "test.jsonl"), c.vectorizer)).accuracy
        assert metrics["accuracy"] == expected

    def test_divergence_exit_3(self, files, tmp_path):
        cfg = {"vectorizer": {"hash_dim": 1024}, "train": {"learning_rate": 1e308, "batch_size": 1, "epochs": 3}}
        (tmp_path / "c.json").write_text(json.dumps(cfg))
        assert run("train-central", "--config", tmp_path / "c.json", "--train", files / "train.jsonl",
                   "--test", files / "test.jsonl", "--model", tmp_path / "m.json") == 3

    def test_missing_model_path(self, files):
        assert run("train-central", "--train", files / "train.jsonl") == 2


class TestTrainFed:
    def test_k10_c03_and_workers(self, files, tmp_path):
        base = ["train-fed", "--config", files / "config.json", "--train", files / "train.jsonl",
                "--test", files / "test.jsonl"]
        assert run(*base, "--workers", 1, "--model", tmp_path / "m1.json", "--metrics", tmp_path / "r1.jsonl") == 0
        assert run(*base, "--workers", 8, "--model", tmp_path / "m8.json", "--metrics", tmp_path / "r8.jsonl") == 0
        assert (tmp_path / "m1.json").read_bytes() == (tmp_path / "m8.json").read_bytes()
        assert (tmp_path / "r1.jsonl").read_bytes() == (tmp_path / "r8.jsonl").read_bytes()
        lines = [json.loads(l) for l in (tmp_path / "r1.jsonl").read_text().splitlines()]
        assert len(lines) == 8 and all(len(l["clients"]) == 3 for l in lines)

    def test_rounds_zero_rejected(self, files, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({"federated": {"rounds": 0}}))
        assert run("train-fed", "--config", tmp_path / "c.json", "--train", files / "train.jsonl",
                   "--model", tmp_path / "m.json") == 2

    def test_iid_vs_label_skew(self, files, tmp_path):
        cfg = json.loads((files / "config.json").read_text())
        cfg["federated"]["rounds"] = 40
        (tmp_path / "c.json").write_text(json.dumps(cfg))
        streams = {}
        for strat in ("iid", "label_skew"):
            assert run("train-fed", "--config", tmp_path / "c.json", "--strategy", strat,
                       "--train", files / "train.jsonl", "--test", files / "test.jsonl",
                       "--model", tmp_path / f"{strat}.json", "--metrics", tmp_path / f"{strat}.jsonl") == 0
            streams[strat] = [json.loads(l) for l in (tmp_path / f"{strat}.jsonl").read_text().splitlines()]
        assert streams["iid"] != streams["label_skew"]
        assert streams["iid"][-1]["test_acc"] >= 0.95
        assert streams["label_skew"][-1]["test_acc"] >= 0.90


class TestExplainAndEvaluate:
    @pytest.fixture(scope="class")
    @staticmethod
    def model(files, tmp_path_factory):
        path = tmp_path_factory.mktemp("m") / "model.json"
        assert run("train-central", "--config", files / "config.json", "--train", files / "train.jsonl",
                   "--test", files / "test.jsonl", "--model", path, "--metrics", path.with_suffix(".m")) == 0
        return path

    def test_single_text(self, files, model, capsys):
        assert run("explain", "--config", files / "config.json", "--model", model,
                   "--text", "I feel so emotional today") == 0
        obj = json.loads(capsys.readouterr().out)
        assert len(obj["weights"]) <= 5 and obj["predicted_class"] in (0, 1)

    def test_text_format(self, files, model, capsys):
        assert run("explain", "--model", model, "--text", "so hopeless today", "--format", "text") == 0
        out = capsys.readouterr().out
        assert "SAD" in out and "DEPRESSION" in out

    def test_batch_order_and_workers(self, files, model, tmp_path):
        texts = [f"text number {i} hopeless" if i % 2 else f"lunch {i} tired" for i in range(10)]
        (tmp_path / "in.txt").write_text("\n".join(texts) + "\n")
        outs = []
        for w in (1, 8):
            out = tmp_path / f"o{w}.jsonl"
            assert run("explain", "--config", files / "config.json", "--model", model,
                       "--input", tmp_path / "in.txt", "--output", out, "--workers", w) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        lines = [json.loads(l) for l in outs[0].decode().splitlines()]
        assert [l["text"] for l in lines] == texts

    def test_partial_failure(self, files, model, tmp_path):
        (tmp_path / "in.txt").write_text("good text\n@only_a_mention\nanother one\n")
        rc = run("explain", "--model", model, "--input", tmp_path / "in.txt", "--output", tmp_path / "o.jsonl")
        lines = [json.loads(l) for l in (tmp_path / "o.jsonl").read_text().splitlines()]
        assert rc == 2 and len(lines) == 3 and "error" in lines[1] and "weights" in lines[2]

    def test_zero_model(self, tmp_path, capsys):
        from fedlime.features import VectorizerConfig
        from fedlime.model import ModelParams, save_model
        import numpy as np

        save_model(ModelParams(np.zeros(64)), VectorizerConfig(hash_dim=64), tmp_path / "z.json")
        assert run("explain", "--model", tmp_path / "z.json", "--text", "I feel so emotional today") == 0
        obj = json.loads(capsys.readouterr().out)
        assert all(abs(w["weight"]) < 1e-12 for w in obj["weights"])

    def test_unreadable_model(self, tmp_path):
        assert run("explain", "--model", tmp_path / "nope.json", "--text", "x") == 2

    def test_evaluate(self, files, model, tmp_path):
        assert run("evaluate", "--model", model, "--test", files / "test.jsonl", "--output", tmp_path / "e.json") == 0
        m = json.loads((tmp_path / "e.json").read_text())
        assert m["accuracy"] >= 0.99 and sum(map(sum, m["confusion"])) == m["n"]


class TestCurate:
    def test_match_threshold_zero(self, files, tmp_path):
        assert run("curate", "match", "--candidates", files / "cands.jsonl", "--threshold", 0,
                   "--output", tmp_path / "k.jsonl", "--report", tmp_path / "r.json") == 0
        rep = json.loads((tmp_path / "r.json").read_text())
        assert rep["n_dropped"] == 0 and len((tmp_path / "k.jsonl").read_text().splitlines()) == 30

    def test_match_threshold_invalid(self, files, tmp_path):
        assert run("curate", "match", "--candidates", files / "cands.jsonl", "--threshold", 1.01,
                   "--output", tmp_path / "k.jsonl", "--report", tmp_path / "r.json") == 2

    def test_pseudo_report_matches_output(self, files, tmp_path):
        assert run("curate", "pseudo", "--reference", files / "reference.jsonl", "--unlabeled",
                   files / "unlabeled.jsonl", "--output", tmp_path / "k.jsonl", "--report", tmp_path / "r.json") == 0
        rep = json.loads((tmp_path / "r.json").read_text())
        kept = (tmp_path / "k.jsonl").read_text().splitlines()
        assert rep["n_kept"] == len(kept) and rep["n_in"] == 100
        assert all(json.loads(l)["label"] == 1 for l in kept)


def test_usage_error_exit_code():
    assert main(["no-such-command"]) == 2
    assert main(["stats"]) == 2


def test_console_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "fedlime.cli", "stats", str(files / "test.jsonl")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["n_total"] == 200
