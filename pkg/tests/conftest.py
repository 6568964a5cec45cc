"""Shared fixtures: the generated desk-scale corpus and trained models.

The fixture corpus is regenerated deterministically per session (seeded
generator in scripts/make_fixture.py); models trained on it are session
scoped because several test modules inspect the same trained state.
"""

import importlib.util
import json
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent


def _load_script(name: str):
    spec = importlib.util.spec_from_file_location(name, ROOT / "scripts" / f"{name}.py")
    mod = importlib.util.module_from_spec(spec)
    sys.modules[name] = mod
    spec.loader.exec_module(mod)
    return mod


@pytest.fixture(scope="session")
def fixture_paths(tmp_path_factory):
    """Paths of the generated ~1 MB corpus, lemma TSV, toy similarity data,
    and scripted inspection sentences."""
    out = tmp_path_factory.mktemp("fixture")
    make_fixture = _load_script("make_fixture")
    return make_fixture.generate_fixture(out)


@pytest.fixture(scope="session")
def fixture_vocab(fixture_paths):
    from awevec.corpus import build_vocab, read_tokens

    return build_vocab(read_tokens(fixture_paths["corpus"]), min_count=5,
                       neg_table_size=1_000_000)


@pytest.fixture(scope="session")
def fixture_subwords(fixture_vocab, fixture_paths):
    from awevec.subword import build_subword_map, load_lemma_resource

    return build_subword_map(fixture_vocab, load_lemma_resource(fixture_paths["lemmas"]))


@pytest.fixture(scope="session")
def desk_models(fixture_paths, fixture_vocab, fixture_subwords):
    """CBOW/AWE/AWE-S trained on the fixture corpus at desk-proxy scale.

    Returns {mode: (params, report)} plus vocab/subwords for convenience.
    """
    from awevec.model import Mode
    from awevec.trainer import TrainConfig, train

    models = {}
    for mode in (Mode.CBOW, Mode.AWE, Mode.AWE_S):
        cfg = TrainConfig(mode=mode, d=100, d_prime=16, epochs=5, workers=2,
                          seed=9, progress_tokens=0)
        sub = fixture_subwords if mode is Mode.AWE_S else None
        models[mode] = train(fixture_paths["corpus"], cfg, fixture_vocab, sub)
    return {"models": models, "vocab": fixture_vocab, "subwords": fixture_subwords}


@pytest.fixture(scope="session")
def attention_model(fixture_paths):
    """AWE model trained for attention inspection: no subsampling (so the
    frequent-word queries actually train at this corpus size) and a gentler
    learning rate (attention growth is unstable at 0.05 without
    subsampling)."""
    from awevec.corpus import build_vocab, read_tokens
    from awevec.model import Mode
    from awevec.trainer import TrainConfig, train

    vocab = build_vocab(read_tokens(fixture_paths["corpus"]), min_count=5,
                        subsample_t=0.0, neg_table_size=1_000_000)
    cfg = TrainConfig(mode=Mode.AWE, d=100, d_prime=16, epochs=5, workers=2,
                      seed=9, progress_tokens=0, subsample_t=0.0, initial_lr=0.025)
    params, report = train(fixture_paths["corpus"], cfg, vocab)
    return {"params": params, "report": report, "vocab": vocab}


@pytest.fixture(scope="session")
def scripted_sentences(fixture_paths):
    with open(fixture_paths["scripted"], encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture()
def tiny_vocab():
    """Deterministic 8-word vocabulary for unit tests."""
    from awevec.corpus import build_vocab

    tokens = []
    for i, w in enumerate("alpha beta gamma delta echo fox golf hotel".split()):
        tokens.extend([w] * (20 - 2 * i))
    return build_vocab(tokens, min_count=1, subsample_t=0.0, neg_table_size=1000)


def rng_params(mode, n_words, d, d_prime, seed=0, scale=0.5, subwords=None,
               normalize=False, dtype=np.float64):
    """Random well-scaled ModelParams for numerical tests."""
    from awevec.model import Mode, ModelParams

    rng = np.random.default_rng(seed)
    mode = Mode(mode)
    n_rows = subwords.n_units if (subwords and mode is Mode.AWE_S) else n_words
    u = rng.normal(0, scale, (n_rows, d)).astype(dtype)
    v = k = q = None
    if mode is Mode.CBOW:
        v = rng.normal(0, scale, (n_words, d)).astype(dtype)
    else:
        k = rng.normal(0, scale, (n_words, d_prime)).astype(dtype)
        q = rng.normal(0, scale, (n_words, d_prime)).astype(dtype)
    return ModelParams(mode=mode, u=u, v=v, k=k, q=q, normalize_attention=normalize)
