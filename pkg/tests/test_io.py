import numpy as np
import pytest

from awevec.corpus import build_vocab, read_tokens
from awevec.eval import SimilarityDataset, evaluate
from awevec.io import (
    CHECKPOINT_MAGIC,
    Checkpoint,
    checkpoint_load,
    checkpoint_save,
    export_embeddings,
    load_embeddings,
)
from awevec.model import Mode, ModelParams
from awevec.subword import build_subword_map
from awevec.trainer import TrainConfig, TrainState, train

from conftest import rng_params


@pytest.fixture()
def small_setup():
    tokens = (["red"] * 9 + ["green"] * 8 + ["blue"] * 7 + ["cyan"] * 6)
    vocab = build_vocab(tokens, min_count=1, subsample_t=1e-3, neg_table_size=100)
    params = rng_params(Mode.AWE, n_words=len(vocab), d=5, d_prime=3, seed=4,
                        dtype=np.float32)
    return vocab, params


class TestExportText:
    def test_header_and_shape(self, small_setup, tmp_path):
        vocab, params = small_setup
        path = tmp_path / "vecs.txt"
        export_embeddings(params, vocab, path=path)
        lines = path.read_text().splitlines()
        assert lines[0] == "4 5"
        assert len(lines) == 5
        assert lines[1].split()[0] == vocab.words[0]

    def test_two_word_two_dim_format(self, tmp_path):
        tokens = ["aa"] * 3 + ["bb"] * 2
        vocab = build_vocab(tokens, min_count=1, subsample_t=0.0, neg_table_size=10)
        u = np.array([[1.5, -0.25], [0.125, 2.0]], dtype=np.float32)
        params = ModelParams(mode=Mode.AWE, u=u, k=np.zeros((2, 1), dtype=np.float32),
                             q=np.zeros((2, 1), dtype=np.float32))
        path = tmp_path / "v.txt"
        export_embeddings(params, vocab, path=path)
        assert path.read_text() == "2 2\naa 1.5 -0.25\nbb 0.125 2.0\n"

    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_round_trip_exact(self, tmp_path, dtype):
        tokens = ["aa"] * 3 + ["bb"] * 2
        vocab = build_vocab(tokens, min_count=1, subsample_t=0.0, neg_table_size=10)
        rng = np.random.default_rng(9)
        u = rng.normal(0, 0.123, (2, 7)).astype(dtype)
        params = ModelParams(mode=Mode.AWE, u=u,
                             k=np.zeros((2, 1), dtype=dtype),
                             q=np.zeros((2, 1), dtype=dtype))
        path = tmp_path / "v.txt"
        export_embeddings(params, vocab, path=path)
        words, mat = load_embeddings(path, dtype=dtype)
        assert words == vocab.words
        assert mat.dtype == dtype
        assert np.array_equal(mat, u)

    def test_awe_s_exports_composed_vectors(self, tmp_path):
        tokens = ["happiest"] * 4 + ["happy"] * 3
        vocab = build_vocab(tokens, min_count=1, subsample_t=0.0, neg_table_size=10)
        sw = build_subword_map(vocab, {"happiest": {"adj": "happy"}})
        params = rng_params(Mode.AWE_S, n_words=len(vocab), d=3, d_prime=2,
                            seed=1, subwords=sw, dtype=np.float32)
        path = tmp_path / "v.txt"
        export_embeddings(params, vocab, sw, path=path)
        words, mat = load_embeddings(path)
        wid = vocab.index_of["happiest"]
        u1, u2 = sw.sets[wid]
        composed = (params.u[u1].astype(np.float64)
                    + params.u[u2].astype(np.float64)).astype(np.float32)
        assert np.array_equal(mat[wid], composed)

    def test_unwritable_path_errors(self, small_setup, tmp_path):
        vocab, params = small_setup
        with pytest.raises(OSError):
            export_embeddings(params, vocab, path=tmp_path / "nodir" / "v.txt")


class TestExportBinary:
    def test_round_trip(self, small_setup, tmp_path):
        vocab, params = small_setup
        path = tmp_path / "vecs.bin"
        export_embeddings(params, vocab, path=path, binary=True)
        words, mat = load_embeddings(path, binary=True)
        assert words == vocab.words
        assert np.array_equal(mat, params.u)

    def test_header_is_ascii(self, small_setup, tmp_path):
        vocab, params = small_setup
        path = tmp_path / "vecs.bin"
        export_embeddings(params, vocab, path=path, binary=True)
        with open(path, "rb") as fh:
            assert fh.readline() == b"4 5\n"


class TestEvaluateRoundTrip:
    def test_scores_preserved_exactly(self, tmp_path):
        tokens = ["cat"] * 9 + ["dog"] * 8 + ["car"] * 7 + ["train"] * 6
        vocab = build_vocab(tokens, min_count=1, subsample_t=0.0, neg_table_size=10)
        params = rng_params(Mode.AWE, n_words=4, d=6, d_prime=2, seed=12,
                            dtype=np.float32)
        ds = SimilarityDataset("toy", [
            ("cat", "dog", 9.0), ("car", "train", 8.0), ("cat", "car", 1.0),
            ("dog", "train", 4.0),
        ])
        before = evaluate(params, vocab, ds)

        path = tmp_path / "v.txt"
        export_embeddings(params, vocab, path=path)
        words, mat = load_embeddings(path)
        reloaded = ModelParams(mode=Mode.AWE, u=mat,
                               k=params.k.copy(), q=params.q.copy())
        after = evaluate(reloaded, vocab, ds)
        assert after.spearman == before.spearman
        assert after.pairs_evaluated == before.pairs_evaluated


class TestCheckpoint:
    @staticmethod
    def _make(tmp_path, mode=Mode.AWE, with_subwords=False, dtype="float32"):
        tokens = ["happiest"] * 9 + ["happy"] * 8 + ["plain"] * 7
        vocab = build_vocab(tokens, min_count=1, subsample_t=1e-3, neg_table_size=50)
        sw = None
        if with_subwords:
            sw = build_subword_map(vocab, {"happiest": {"adj": "happy"}})
        cfg = TrainConfig(mode=mode, d=4, d_prime=2, epochs=2, min_count=1,
                          neg_table_size=50, dtype=dtype, progress_tokens=0)
        params = rng_params(mode, n_words=len(vocab), d=4, d_prime=2, seed=8,
                            subwords=sw, dtype=cfg.np_dtype)
        state = TrainState(epochs_done=1, windows_done=123, tokens_done=456)
        path = tmp_path / "model.ckpt"
        checkpoint_save(params, vocab, sw, cfg, path, state=state)
        return path, params, vocab, sw, cfg, state

    def test_round_trip_restores_everything(self, tmp_path):
        path, params, vocab, sw, cfg, state = self._make(tmp_path, with_subwords=True)
        ck = checkpoint_load(path)
        assert ck.params.mode is params.mode
        for name, mat in params.matrices().items():
            assert np.array_equal(ck.params.matrices()[name], mat)
            assert ck.params.matrices()[name].dtype == mat.dtype
        assert ck.vocab.words == vocab.words
        assert np.array_equal(ck.vocab.counts, vocab.counts)
        assert np.array_equal(ck.vocab.neg_table, vocab.neg_table)
        assert ck.subwords.units == sw.units
        assert ck.subwords.sets == sw.sets
        assert ck.subwords.lemma_lookup == sw.lemma_lookup
        assert ck.config.to_dict() == cfg.to_dict()
        assert ck.state == state

    def test_save_load_save_byte_identical(self, tmp_path):
        path, params, vocab, sw, cfg, state = self._make(tmp_path, with_subwords=True)
        ck = checkpoint_load(path)
        path2 = tmp_path / "model2.ckpt"
        checkpoint_save(ck.params, ck.vocab, ck.subwords, ck.config, path2,
                        state=ck.state)
        assert path.read_bytes() == path2.read_bytes()

    def test_wrong_magic_rejected_no_partial_state(self, tmp_path):
        path, *_ = self._make(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"JUNK"
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="bad magic"):
            checkpoint_load(bad)

    def test_version_mismatch_clear_error(self, tmp_path):
        path, *_ = self._make(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[len(CHECKPOINT_MAGIC)] = 99
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="version 99"):
            checkpoint_load(bad)

    def test_truncated_file_reports_offset(self, tmp_path):
        path, *_ = self._make(tmp_path)
        raw = path.read_bytes()
        bad = tmp_path / "trunc.ckpt"
        bad.write_bytes(raw[: len(raw) - 10])
        with pytest.raises(ValueError, match=r"truncated checkpoint at offset \d+"):
            checkpoint_load(bad)

    def test_float64_checkpoints(self, tmp_path):
        path, params, *_ = self._make(tmp_path, dtype="float64")
        ck = checkpoint_load(path)
        assert ck.params.u.dtype == np.float64
        assert np.array_equal(ck.params.u, params.u)

    def test_cbow_checkpoint_has_v_no_kq(self, tmp_path):
        path, *_ = self._make(tmp_path, mode=Mode.CBOW)
        ck = checkpoint_load(path)
        assert ck.params.v is not None
        assert ck.params.k is None and ck.params.q is None


class TestResumeBitExact:
    def test_checkpoint_resume_equals_uninterrupted(self, tmp_path):
        rng = np.random.default_rng(3)
        corpus = tmp_path / "c.txt"
        words = [f"w{i}" for i in range(25)]
        with open(corpus, "w") as fh:
            for _ in range(120):
                n = rng.integers(3, 10)
                fh.write(" ".join(rng.choice(words, size=n)) + "\n")
        vocab = build_vocab(read_tokens(corpus), min_count=1, subsample_t=1e-3,
                            neg_table_size=1000)
        # small chunks: the lr updates many times inside each epoch, so the
        # schedule position truly matters for bit-exactness
        cfg = TrainConfig(epochs=2, mode=Mode.AWE, d=8, d_prime=4, seed=13,
                          workers=1, min_count=1, subsample_t=1e-3,
                          neg_table_size=1000, progress_tokens=0, chunk_tokens=80)

        straight, _ = train(corpus, cfg, vocab)

        p1, r1 = train(corpus, cfg, vocab, stop_after_epochs=1)
        ckpt_path = tmp_path / "mid.ckpt"
        checkpoint_save(p1, vocab, None, cfg, ckpt_path,
                        state=TrainState(**r1["state"]))
        ck = checkpoint_load(ckpt_path)
        resumed, _ = train(corpus, ck.config, ck.vocab, ck.subwords,
                           initial_params=ck.params, initial_state=ck.state)

        for name, mat in straight.matrices().items():
            assert np.array_equal(mat, resumed.matrices()[name]), name
