import hashlib
import http.server
import json
import socket
import threading
from pathlib import Path

import numpy as np
import pytest

from awevec.cli import run
from awevec.io import checkpoint_load, load_embeddings


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    rng = np.random.default_rng(50)
    words = [f"w{i}" for i in range(40)] + ["the", "of"]
    probs = np.ones(42)
    probs[-2:] = 30
    probs /= probs.sum()
    path = tmp_path_factory.mktemp("cli") / "corpus.txt"
    with open(path, "w") as fh:
        for _ in range(300):
            n = rng.integers(4, 12)
            fh.write(" ".join(rng.choice(words, size=n, p=probs)) + "\n")
    return path


def train_args(corpus, out, mode="awe", extra=()):
    return ["train", "--mode", mode, "--corpus", str(corpus), "--out", str(out),
            "--dim", "8", "--dim-kq", "4", "--epochs", "2", "--min-count", "1",
            "--workers", "1", "--seed", "7", "--neg-table-size", "1000",
            "--progress-every", "0", *extra]


@pytest.fixture(scope="module")
def trained_ckpt(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("model") / "model.ckpt"
    assert run(train_args(corpus, out)) == 0
    return out


class TestTrain:
    def test_deterministic_checkpoints(self, corpus, tmp_path):
        a = tmp_path / "a.ckpt"
        b = tmp_path / "b.ckpt"
        assert run(train_args(corpus, a)) == 0
        assert run(train_args(corpus, b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_report_written(self, corpus, tmp_path):
        out = tmp_path / "m.ckpt"
        rep = tmp_path / "rep.json"
        assert run(train_args(corpus, out, extra=["--report", str(rep)])) == 0
        report = json.loads(rep.read_text())
        assert report["config"]["d"] == 8
        assert len(report["epochs"]) == 2
        # default report path also works
        out2 = tmp_path / "m2.ckpt"
        assert run(train_args(corpus, out2)) == 0
        assert Path(f"{out2}.report.json").exists()

    def test_config_file_precedence(self, corpus, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"d": 6, "epochs": 1, "min_count": 1,
                                   "neg_table_size": 500, "seed": 3,
                                   "progress_tokens": 0}))
        out = tmp_path / "m.ckpt"
        # flag overrides config file (d=8 beats 6); config beats default
        code = run(["train", "--mode", "cbow", "--corpus", str(corpus),
                    "--out", str(out), "--config", str(cfg), "--dim", "8"])
        assert code == 0
        ck = checkpoint_load(out)
        assert ck.params.u.shape[1] == 8
        assert ck.config.epochs == 1

    def test_unknown_config_key_is_usage_error(self, corpus, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"nonsense": 1}))
        out = tmp_path / "m.ckpt"
        assert run(["train", "--mode", "cbow", "--corpus", str(corpus),
                    "--out", str(out), "--config", str(cfg)]) == 1

    def test_awe_s_without_lemmas_warns_not_errors(self, corpus, tmp_path, capsys):
        out = tmp_path / "m.ckpt"
        assert run(train_args(corpus, out, mode="awe-s")) == 0
        err = capsys.readouterr().err
        assert "without --lemmas" in err
        ck = checkpoint_load(out)
        assert ck.subwords is not None
        assert all(len(s) == 1 for s in ck.subwords.sets)

    def test_awe_s_with_lemmas(self, corpus, tmp_path):
        lemmas = tmp_path / "lem.tsv"
        lemmas.write_text("w1\tverb\tw0\nw3\tadj\tw2\n")
        out = tmp_path / "m.ckpt"
        assert run(train_args(corpus, out, mode="awe-s",
                              extra=["--lemmas", str(lemmas)])) == 0
        ck = checkpoint_load(out)
        assert ck.subwords.n_units == len(ck.vocab)  # lemmas are vocab words

    def test_resume_extends_epochs(self, corpus, tmp_path):
        out = tmp_path / "m.ckpt"
        assert run(train_args(corpus, out)) == 0
        out2 = tmp_path / "m2.ckpt"
        assert run(["train", "--resume", str(out), "--corpus", str(corpus),
                    "--out", str(out2), "--epochs", "3"]) == 0
        ck = checkpoint_load(out2)
        assert ck.state.epochs_done == 3


class TestEval:
    def test_scores_match_module(self, trained_ckpt, tmp_path, capsys):
        ds = tmp_path / "toy.csv"
        ds.write_text("w1,w2,9\nw3,w4,5\nw5,w6,1\n")
        rep = tmp_path / "scores.json"
        assert run(["eval", "--model", str(trained_ckpt), "--dataset", str(ds),
                    "--report", str(rep)]) == 0
        payload = json.loads(rep.read_text())
        assert payload[0]["dataset"] == "toy"
        assert payload[0]["pairs_total"] == 3

        from awevec.eval import evaluate, load_similarity_dataset
        ck = checkpoint_load(trained_ckpt)
        expect = evaluate(ck.params, ck.vocab, load_similarity_dataset(ds))
        assert payload[0]["spearman"] == pytest.approx(expect.spearman, abs=1e-12)
        table = capsys.readouterr().err
        assert "spearman" in table

    def test_json_to_stdout_without_report(self, trained_ckpt, tmp_path, capsys):
        ds = tmp_path / "toy.csv"
        ds.write_text("w1,w2,9\nw3,w4,5\nw5,w6,1\n")
        assert run(["eval", "--model", str(trained_ckpt), "--dataset", str(ds)]) == 0
        out = capsys.readouterr().out
        assert json.loads(out)[0]["dataset"] == "toy"


class TestInspect:
    def test_row_count_and_json(self, trained_ckpt, capsys):
        sentence = "the w1 w2 w3"
        assert run(["inspect", "--model", str(trained_ckpt),
                    "--sentence", sentence, "--mask", "w2"]) == 0
        captured = capsys.readouterr()
        table = json.loads(captured.out)
        assert table["masked"] == "w2"
        assert len(table["rows"]) == 3  # sentence length - 1
        assert {"word", "attention", "similarity", "similarity_dot",
                "frequent", "oov"} <= set(table["rows"][0])
        assert "mask: w2" in captured.err

    def test_mask_must_occur(self, trained_ckpt, capsys):
        assert run(["inspect", "--model", str(trained_ckpt),
                    "--sentence", "w1 w2", "--mask", "w9"]) == 2


class TestNn:
    def test_output_format(self, trained_ckpt, capsys):
        assert run(["nn", "--model", str(trained_ckpt), "--word", "w1", "-k", "3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 3
        for line in lines:
            word, sim = line.split("\t")
            assert word
            assert -1.0 <= float(sim) <= 1.0


class TestExport:
    def test_text_export(self, trained_ckpt, tmp_path):
        out = tmp_path / "v.txt"
        assert run(["export", "--model", str(trained_ckpt), "--out", str(out)]) == 0
        words, mat = load_embeddings(out)
        ck = checkpoint_load(trained_ckpt)
        assert words == ck.vocab.words
        assert np.array_equal(mat, ck.params.u)

    def test_binary_export(self, trained_ckpt, tmp_path):
        out = tmp_path / "v.bin"
        assert run(["export", "--model", str(trained_ckpt), "--out", str(out),
                    "--binary"]) == 0
        words, mat = load_embeddings(out, binary=True)
        ck = checkpoint_load(trained_ckpt)
        assert np.array_equal(mat, ck.params.u)


class _QuietHandler(http.server.SimpleHTTPRequestHandler):
    def log_message(self, *args):
        pass


@pytest.fixture()
def local_server(tmp_path):
    serve_dir = tmp_path / "serve"
    serve_dir.mkdir()
    (serve_dir / "men.csv").write_text("cat,dog,8.5\ncar,train,6.0\n")
    (serve_dir / "ws353.csv").write_text("love,sex,6.77\ntiger,cat,7.35\n")
    handler = lambda *a, **kw: _QuietHandler(*a, directory=str(serve_dir), **kw)
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    httpd = http.server.HTTPServer(("127.0.0.1", port), handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{port}", serve_dir
    httpd.shutdown()


class TestFetchData:
    def test_fetch_checksums_and_tamper_detection(self, local_server, tmp_path, capsys):
        base, serve_dir = local_server
        registry = {
            "men": {"url": f"{base}/men.csv", "filename": "men.csv"},
            "ws353": {"url": f"{base}/ws353.csv", "filename": "ws353.csv"},
        }
        reg_path = tmp_path / "registry.json"
        reg_path.write_text(json.dumps(registry))
        dest = tmp_path / "data"

        assert run(["fetch-data", "--dest", str(dest), "--only", "men", "ws353",
                    "--registry", str(reg_path)]) == 0
        out = capsys.readouterr().out.splitlines()
        assert str(dest / "men.csv") in out

        manifest = json.loads((dest / "manifest.json").read_text())
        expect = hashlib.sha256((serve_dir / "men.csv").read_bytes()).hexdigest()
        assert manifest["men"]["sha256"] == expect

        # refetch: file present + hash ok -> no error
        assert run(["fetch-data", "--dest", str(dest), "--only", "men",
                    "--registry", str(reg_path)]) == 0

        # tamper with the local file: next fetch must refuse it
        (dest / "men.csv").write_text("evil,content,1.0\n")
        assert run(["fetch-data", "--dest", str(dest), "--only", "men",
                    "--registry", str(reg_path)]) == 2
        assert "checksum mismatch" in capsys.readouterr().err

    def test_registry_pin_enforced_on_download(self, local_server, tmp_path, capsys):
        base, _ = local_server
        registry = {"men": {"url": f"{base}/men.csv", "filename": "men.csv",
                            "sha256": "0" * 64}}
        reg_path = tmp_path / "registry.json"
        reg_path.write_text(json.dumps(registry))
        assert run(["fetch-data", "--dest", str(tmp_path / "d"), "--only", "men",
                    "--registry", str(reg_path)]) == 2
        assert "checksum mismatch" in capsys.readouterr().err

    def test_unknown_name(self, tmp_path, capsys):
        assert run(["fetch-data", "--dest", str(tmp_path), "--only", "nope"]) == 2
        assert "unknown dataset" in capsys.readouterr().err

    def test_env_var_default_dest(self, local_server, tmp_path, monkeypatch, capsys):
        base, _ = local_server
        registry = {"men": {"url": f"{base}/men.csv", "filename": "men.csv"}}
        reg_path = tmp_path / "registry.json"
        reg_path.write_text(json.dumps(registry))
        dest = tmp_path / "envdata"
        monkeypatch.setenv("AWEVEC_DATA_DIR", str(dest))
        assert run(["fetch-data", "--only", "men", "--registry", str(reg_path)]) == 0
        assert (dest / "men.csv").exists()


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, capsys):
        assert run(["train", "--bogus"]) == 1

    def test_unknown_subcommand(self, capsys):
        assert run(["frobnicate"]) == 1

    def test_missing_model_is_runtime_error(self, capsys):
        assert run(["nn", "--model", "/nonexistent.ckpt", "--word", "x"]) == 2

    def test_bad_train_value_is_usage_error(self, corpus, tmp_path, capsys):
        assert run(["train", "--mode", "cbow", "--corpus", str(corpus),
                    "--out", str(tmp_path / "m.ckpt"), "--epochs", "0"]) == 1

    @pytest.mark.parametrize("sub", ["train", "eval", "inspect", "nn",
                                     "export", "fetch-data"])
    def test_help_documents_flags(self, sub, capsys):
        with pytest.raises(SystemExit) as exc:
            run([sub, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        expected_flags = {
            "train": ["--mode", "--corpus", "--dim", "--dim-kq", "--window",
                      "--negatives", "--epochs", "--lr", "--min-count",
                      "--subsample", "--workers", "--seed", "--lemmas", "--out"],
            "eval": ["--model", "--dataset", "--report"],
            "inspect": ["--model", "--sentence", "--mask"],
            "nn": ["--model", "--word", "-k"],
            "export": ["--model", "--out", "--binary"],
            "fetch-data": ["--dest", "--only", "--registry"],
        }[sub]
        for flag in expected_flags:
            assert flag in text, f"{sub} --help missing {flag}"
        if sub == "train":
            assert "default: 500" in text  # paper-derived dimension default
