#!/usr/bin/env python3
"""Generate the deterministic fixture corpus used by the test suite.

The corpus is ~1 MB of synthetic sentences with the statistics the trainer
cares about: a Zipf-weighted function-word layer shared by every sentence,
topic clusters of content words that genuinely co-occur, and rare
morphological variants tied to their base form through a lemma table.
Alongside the corpus this writes a toy word-similarity dataset whose human
scores follow the planted topic structure, the lemma TSV, and a list of
held-out scripted sentences for attention inspection.

Everything is a pure function of the seed, so the files can be regenerated
at any time instead of being committed.

Usage: make_fixture.py OUTDIR [--seed 20240601] [--sentences 12000]
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

FUNCTION_WORDS = [
    "the", "of", "and", "a", "to", "in", "is", "it",
    "for", "on", "with", "as", "at", "by", "be", "or",
]

_CONSONANTS = list("bdfgklmnprstvz")
_VOWELS = list("aeiou")


def _make_content_words(rng: np.random.Generator, n_topics: int, per_topic: int) -> list[list[str]]:
    """Pronounceable pseudo-words, unique across topics, 3 syllables each."""
    seen = set(FUNCTION_WORDS)
    topics = []
    for _ in range(n_topics):
        words = []
        while len(words) < per_topic:
            w = "".join(
                rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(3)
            )
            if w not in seen:
                seen.add(w)
                words.append(w)
        topics.append(words)
    return topics


def _zipf_probs(n: int, exponent: float) -> np.ndarray:
    p = 1.0 / np.arange(1, n + 1) ** exponent
    return p / p.sum()


def generate_fixture(
    outdir: str | Path,
    seed: int = 20240601,
    n_sentences: int = 12000,
    n_topics: int = 36,
    words_per_topic: int = 30,
) -> dict[str, Path]:
    """Write corpus/lemmas/similarity/scripted files; returns their paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    topics = _make_content_words(rng, n_topics, words_per_topic)

    # morphological variants for a slice of each topic; variants are rare
    # forms of their base word and enter the same topic distribution
    lemma_rows: list[tuple[str, str, str]] = []
    variant_of: dict[str, str] = {}
    for words in topics:
        for base in words[:6]:
            for suffix, pos in (("ing", "verb"), ("est", "adj")):
                var = base + suffix
                variant_of[var] = base
                lemma_rows.append((var, pos, base))
                words.append(var)

    func_p = _zipf_probs(len(FUNCTION_WORDS), 1.2)
    topic_p = _zipf_probs(n_topics, 0.6)
    word_p = [_zipf_probs(len(words), 1.05) for words in topics]

    def sentence() -> list[str]:
        t = rng.choice(n_topics, p=topic_p)
        length = int(rng.integers(8, 20))
        toks = []
        for _ in range(length):
            r = rng.random()
            if r < 0.42:
                toks.append(FUNCTION_WORDS[rng.choice(len(FUNCTION_WORDS), p=func_p)])
            elif r < 0.95:
                toks.append(topics[t][rng.choice(len(topics[t]), p=word_p[t])])
            else:
                t2 = rng.choice(n_topics, p=topic_p)
                toks.append(topics[t2][rng.choice(len(topics[t2]), p=word_p[t2])])
        return toks

    corpus_path = outdir / "fixture_corpus.txt"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for _ in range(n_sentences):
            fh.write(" ".join(sentence()) + "\n")

    lemmas_path = outdir / "fixture_lemmas.tsv"
    with open(lemmas_path, "w", encoding="utf-8") as fh:
        for word, pos, lemma in lemma_rows:
            fh.write(f"{word}\t{pos}\t{lemma}\n")

    # toy similarity data: in-topic pairs score high, cross-topic pairs low,
    # with deterministic within-band grading so ranks are informative
    sim_path = outdir / "fixture_similarity.csv"
    pairs = []
    for i in range(70):
        t = int(rng.integers(n_topics))
        a, b = rng.choice(words_per_topic, size=2, replace=False)
        score = 7.0 + 3.0 / (1.0 + abs(int(a) - int(b))) + 0.01 * i
        pairs.append((topics[t][int(a)], topics[t][int(b)], score))
    for i in range(70):
        t1, t2 = rng.choice(n_topics, size=2, replace=False)
        a = topics[int(t1)][int(rng.integers(words_per_topic))]
        b = topics[int(t2)][int(rng.integers(words_per_topic))]
        pairs.append((a, b, 0.5 + 0.02 * i))
    with open(sim_path, "w", encoding="utf-8") as fh:
        fh.write("word_a,word_b,score\n")
        for a, b, s in pairs:
            fh.write(f"{a},{b},{s:.3f}\n")

    # held-out sentences for attention inspection: mask a content word,
    # keep at least one very frequent function word in context
    scripted_path = outdir / "fixture_scripted.json"
    scripted = []
    while len(scripted) < 20:
        toks = sentence()
        content = [w for w in toks if w not in FUNCTION_WORDS and w not in variant_of]
        if len(content) >= 3 and any(w in FUNCTION_WORDS[:4] for w in toks):
            scripted.append({"sentence": toks, "mask": content[0]})
    with open(scripted_path, "w", encoding="utf-8") as fh:
        json.dump(scripted, fh, indent=2)
        fh.write("\n")

    return {
        "corpus": corpus_path,
        "lemmas": lemmas_path,
        "similarity": sim_path,
        "scripted": scripted_path,
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("outdir")
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--sentences", type=int, default=12000)
    args = ap.parse_args()
    paths = generate_fixture(args.outdir, seed=args.seed, n_sentences=args.sentences)
    for name, path in paths.items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
