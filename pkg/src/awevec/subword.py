"""Subword sets for AWE-S: each word's surface form plus its lemma forms.

A word's subword set S_w holds the word itself and up to three lemmas (noun,
verb, adjective), deduplicated, so |S_w| <= 4. Units get their own embedding
rows; two words sharing a lemma share that unit row, which is how rare
inflected forms borrow statistical strength from their base form.

The lemma resource is an external TSV (`word<TAB>pos<TAB>lemma`), typically
exported once from a lemmatizer; scripts/make_lemmas.py produces a heuristic
one for a given vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Vocabulary

LEMMA_POS = ("noun", "verb", "adj")


def load_lemma_resource(path: str | Path) -> dict[str, dict[str, str]]:
    """Read a `word<TAB>pos<TAB>lemma` TSV into {word: {pos: lemma}}.

    Unknown POS tags raise; duplicate (word, pos) rows keep the last entry.
    """
    table: dict[str, dict[str, str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected word<TAB>pos<TAB>lemma")
            word, pos, lemma = parts
            if pos not in LEMMA_POS:
                raise ValueError(f"{path}:{lineno}: unknown POS {pos!r}")
            table.setdefault(word, {})[pos] = lemma
    return table


@dataclass
class SubwordMap:
    """Per-word subword unit ids, plus the unit id space itself.

    sets[word_id] lists unit ids in first-seen order, surface form first.
    lemma_lookup keeps every word -> lemmas relation from the resource (not
    just vocabulary words) so out-of-vocabulary words can still be composed
    when their lemma units exist.
    """

    units: list[str]
    unit_index: dict[str, int]
    sets: list[list[int]]
    lemma_lookup: dict[str, list[str]] = field(default_factory=dict)

    @property
    def n_units(self) -> int:
        return len(self.units)

    def unit_ids_for(self, word: str, vocab: Vocabulary) -> list[int]:
        """Unit ids representing `word`, in or out of vocabulary.

        In-vocabulary words return their S_w. Other words are composed from
        whichever of their surface form / lemmas happen to be known units;
        the result may be empty (word not representable).
        """
        wid = vocab.index_of.get(word)
        if wid is not None:
            return list(self.sets[wid])
        ids = []
        for cand in self._candidates(word):
            uid = self.unit_index.get(cand)
            if uid is not None and uid not in ids:
                ids.append(uid)
        return ids

    def _candidates(self, word: str) -> list[str]:
        cands = [word]
        for lemma in self.lemma_lookup.get(word, ()):
            if lemma not in cands:
                cands.append(lemma)
        return cands

    def save_tsv(self, path: str | Path) -> None:
        """Write `word_id<TAB>unit1,unit2,...` rows in vocabulary id order.

        Unit names (not ids) are stored; reloading against the same
        vocabulary reproduces identical unit ids because assignment order
        is first-seen over rows.
        """
        with open(path, "w", encoding="utf-8") as fh:
            for wid, unit_ids in enumerate(self.sets):
                names = ",".join(self.units[u] for u in unit_ids)
                fh.write(f"{wid}\t{names}\n")


def build_subword_map(
    vocab: Vocabulary,
    lemma_resource: dict[str, dict[str, str]] | None = None,
) -> SubwordMap:
    """Assemble S_w = {w} + available lemmas for every vocabulary word.

    Unit ids are assigned in first-seen order scanning words by vocabulary
    id, so construction is deterministic. An empty resource degenerates to
    singleton sets (AWE-S then behaves exactly like AWE with per-word units).
    Lemmas absent from the vocabulary still become units.
    """
    lemma_resource = lemma_resource or {}
    units: list[str] = []
    unit_index: dict[str, int] = {}
    sets: list[list[int]] = []

    def unit_id(name: str) -> int:
        uid = unit_index.get(name)
        if uid is None:
            uid = len(units)
            unit_index[name] = uid
            units.append(name)
        return uid

    for word in vocab.words:
        members = [word]
        poses = lemma_resource.get(word)
        if poses:
            for pos in LEMMA_POS:
                lemma = poses.get(pos)
                if lemma and lemma not in members:
                    members.append(lemma)
        sets.append([unit_id(m) for m in members])

    lemma_lookup = {
        word: [l for l in dict.fromkeys(poses.get(p) for p in LEMMA_POS) if l]
        for word, poses in lemma_resource.items()
    }
    return SubwordMap(units=units, unit_index=unit_index, sets=sets,
                      lemma_lookup=lemma_lookup)


def load_subword_tsv(path: str | Path, vocab: Vocabulary) -> SubwordMap:
    """Rebuild a SubwordMap from its TSV dump for the same vocabulary."""
    units: list[str] = []
    unit_index: dict[str, int] = {}
    sets: list[list[int]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                wid_s, names_s = line.split("\t")
                wid = int(wid_s)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed subword line") from exc
            if wid != len(sets):
                raise ValueError(f"{path}:{lineno}: word ids must be contiguous")
            row = []
            for name in names_s.split(","):
                uid = unit_index.get(name)
                if uid is None:
                    uid = len(units)
                    unit_index[name] = uid
                    units.append(name)
                row.append(uid)
            sets.append(row)
    if len(sets) != len(vocab):
        raise ValueError(
            f"subword map covers {len(sets)} words but vocabulary has {len(vocab)}"
        )
    return SubwordMap(units=units, unit_index=unit_index, sets=sets)


def subword_csr(subwords: SubwordMap) -> tuple["np.ndarray", "np.ndarray"]:
    """Flatten the per-word sets to CSR arrays for the training kernels."""
    import numpy as np

    indptr = np.zeros(len(subwords.sets) + 1, dtype=np.int64)
    for i, s in enumerate(subwords.sets):
        indptr[i + 1] = indptr[i] + len(s)
    indices = np.empty(int(indptr[-1]), dtype=np.int32)
    pos = 0
    for s in subwords.sets:
        for u in s:
            indices[pos] = u
            pos += 1
    return indptr, indices
