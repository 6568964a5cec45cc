#!/usr/bin/env python3
"""Build a heuristic lemma TSV (word<TAB>pos<TAB>lemma) for a vocabulary.

Rule-based English suffix stripping, vocabulary-aware: a candidate lemma is
only emitted when it differs from the word and (preferably) occurs in the
vocabulary itself, which keeps the subword unit space grounded in forms the
model actually sees. The rules are deliberately conservative; for
production-quality lemmas export a table from a real lemmatizer instead --
the trainer only cares about the TSV format.

Usage: make_lemmas.py VOCAB_TSV OUT_TSV
"""

from __future__ import annotations

import argparse


def _load_vocab_words(path: str) -> list[str]:
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line:
                words.append(line.split("\t")[0])
    return words


def _candidates(word: str, suffix: str) -> list[str]:
    """Possible base forms after removing a suffix."""
    stem = word[: -len(suffix)]
    cands = [stem]
    if len(stem) >= 2 and stem[-1] == stem[-2]:  # scolded/scold vs fitted/fit
        cands.append(stem[:-1])
    cands.append(stem + "e")  # awing -> awe, taking -> take
    if stem.endswith("i"):
        cands.append(stem[:-1] + "y")  # happiest -> happy, cities -> city
    return [c for c in cands if len(c) >= 2]


_RULES = [
    ("ing", "verb"),
    ("ed", "verb"),
    ("est", "adj"),
    ("er", "adj"),
    ("ies", "noun"),
    ("es", "noun"),
    ("s", "noun"),
]


def lemmatize(word: str, known: set[str]) -> list[tuple[str, str]]:
    """(pos, lemma) guesses for one word; at most one lemma per POS."""
    out = []
    seen_pos = set()
    for suffix, pos in _RULES:
        if pos in seen_pos or not word.endswith(suffix) or len(word) <= len(suffix) + 1:
            continue
        cands = _candidates(word, suffix)
        in_vocab = [c for c in cands if c in known]
        lemma = in_vocab[0] if in_vocab else cands[0]
        if lemma != word:
            out.append((pos, lemma))
            seen_pos.add(pos)
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("vocab_tsv", help="word<TAB>count vocabulary dump")
    ap.add_argument("out_tsv")
    args = ap.parse_args()
    words = _load_vocab_words(args.vocab_tsv)
    known = set(words)
    n = 0
    with open(args.out_tsv, "w", encoding="utf-8") as fh:
        for word in words:
            for pos, lemma in lemmatize(word, known):
                fh.write(f"{word}\t{pos}\t{lemma}\n")
                n += 1
    print(f"wrote {n} lemma rows for {len(words)} words -> {args.out_tsv}")


if __name__ == "__main__":
    main()
