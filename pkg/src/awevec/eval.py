"""Word-similarity evaluation: cosine, Spearman with ties, nearest neighbors.

A model is scored by ranking human-annotated word pairs with cosine
similarity and reporting the Spearman correlation against the human scores.
Pairs with an unrepresentable word are skipped and accounted for in the
coverage figure; in AWE-S a word outside the vocabulary can still be
representable when its surface form or lemmas are known subword units.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Vocabulary
from .model import Mode, ModelParams, word_vector
from .subword import SubwordMap

logger = logging.getLogger(__name__)


@dataclass
class SimilarityDataset:
    """Human-scored word pairs, e.g. WS353 / MEN / SimLex999 / RW."""

    name: str
    pairs: list[tuple[str, str, float]]

    def __post_init__(self):
        if not self.pairs:
            raise ValueError(f"dataset {self.name!r} has no pairs")


def load_similarity_dataset(path: str | Path, name: str | None = None) -> SimilarityDataset:
    """Read `word_a, word_b, score` rows from a TSV/CSV file.

    The delimiter (tab, comma, semicolon, or whitespace) is detected per
    line and one leading header row is tolerated. Words are lowercased to
    match the tokenizer.
    """
    path = Path(path)
    pairs: list[tuple[str, str, float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            fields = _split_fields(line)
            if len(fields) < 3:
                raise ValueError(f"{path}:{lineno}: expected word, word, score")
            try:
                score = float(fields[2])
            except ValueError:
                if lineno == 1 or not pairs:  # header row
                    continue
                raise ValueError(f"{path}:{lineno}: bad score {fields[2]!r}") from None
            pairs.append((fields[0].lower(), fields[1].lower(), score))
    return SimilarityDataset(name=name or path.stem, pairs=pairs)


def _split_fields(line: str) -> list[str]:
    for delim in ("\t", ",", ";"):
        if delim in line:
            return next(csv.reader(io.StringIO(line), delimiter=delim))
    return line.split()


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """a.b / (|a||b|), defined as 0 when either vector is zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        logger.warning("cosine of a zero vector; returning 0.0")
        return 0.0
    return float(a @ b / (na * nb))


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values share the mean of their rank range."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation, exact under ties.

    Computed as the Pearson correlation of average ranks (the d^2 shortcut
    formula is wrong when ties are present). Raises on constant input.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("spearman needs two equal-length lists of >= 2 values")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    vx = float(rx @ rx)
    vy = float(ry @ ry)
    if vx == 0.0 or vy == 0.0:
        raise ValueError("zero rank variance")
    return float(rx @ ry / np.sqrt(vx * vy))


def vector_for(
    word: str,
    params: ModelParams,
    vocab: Vocabulary,
    subwords: SubwordMap | None = None,
) -> np.ndarray | None:
    """The word's vector, or None when the model cannot represent it."""
    wid = vocab.index_of.get(word)
    if params.mode is Mode.AWE_S:
        if subwords is None:
            raise ValueError("AWE-S requires a subword map")
        if wid is not None:
            return word_vector(wid, params, subwords)
        units = subwords.unit_ids_for(word, vocab)
        if not units:
            return None
        vec = np.zeros(params.d, dtype=np.float64)
        for u in units:
            vec += params.u[u]
        return vec
    if wid is None:
        return None
    return word_vector(wid, params)


@dataclass
class EvalResult:
    dataset: str
    spearman: float
    pairs_total: int
    pairs_evaluated: int

    @property
    def coverage(self) -> float:
        return self.pairs_evaluated / self.pairs_total

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "spearman": self.spearman,
            "pairs_total": self.pairs_total,
            "pairs_evaluated": self.pairs_evaluated,
        }


def evaluate(
    params: ModelParams,
    vocab: Vocabulary,
    dataset: SimilarityDataset,
    subwords: SubwordMap | None = None,
) -> EvalResult:
    """Spearman correlation between model cosines and human scores.

    Pairs with an unrepresentable word are skipped; fewer than two
    evaluable pairs is an error.
    """
    human = []
    ours = []
    cache: dict[str, np.ndarray | None] = {}
    for a, b, score in dataset.pairs:
        va = cache[a] if a in cache else cache.setdefault(a, vector_for(a, params, vocab, subwords))
        vb = cache[b] if b in cache else cache.setdefault(b, vector_for(b, params, vocab, subwords))
        if va is None or vb is None:
            continue
        human.append(score)
        ours.append(cosine(va, vb))
    if len(human) < 2:
        raise ValueError(
            f"dataset {dataset.name!r}: only {len(human)} evaluable pairs"
        )
    return EvalResult(
        dataset=dataset.name,
        spearman=spearman(ours, human),
        pairs_total=len(dataset.pairs),
        pairs_evaluated=len(human),
    )


def nearest_neighbors(
    word: str,
    params: ModelParams,
    vocab: Vocabulary,
    subwords: SubwordMap | None = None,
    k: int = 10,
) -> list[tuple[str, float]]:
    """Top-k vocabulary words by cosine to `word`, query excluded.

    Ties break toward the lower vocabulary index (the more frequent word).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query = vector_for(word, params, vocab, subwords)
    if query is None:
        raise ValueError(f"word {word!r} is not representable by this model")
    mat = all_word_vectors(params, vocab, subwords)
    norms = np.linalg.norm(mat, axis=1)
    qn = np.linalg.norm(query)
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = mat @ query / np.where(norms * qn == 0.0, np.inf, norms * qn)
    sims = np.nan_to_num(sims, nan=0.0)
    order = np.argsort(-sims, kind="stable")
    wid = vocab.index_of.get(word)
    if wid is not None:
        order = order[order != wid]
    order = order[:k]
    return [(vocab.words[i], float(sims[i])) for i in order]


def all_word_vectors(
    params: ModelParams, vocab: Vocabulary, subwords: SubwordMap | None = None
) -> np.ndarray:
    """Dense (n_words, d) float64 matrix of composed word vectors."""
    if params.mode is not Mode.AWE_S:
        return params.u.astype(np.float64)
    if subwords is None:
        raise ValueError("AWE-S requires a subword map")
    mat = np.zeros((len(vocab), params.d), dtype=np.float64)
    for wid, units in enumerate(subwords.sets):
        for u in units:
            mat[wid] += params.u[u]
    return mat


def format_report_table(results: Sequence[EvalResult]) -> str:
    """Aligned text table: one column per dataset, score and coverage rows."""
    names = [r.dataset for r in results]
    scores = [f"{r.spearman:.3f}" for r in results]
    covs = [f"{r.pairs_evaluated}/{r.pairs_total}" for r in results]
    widths = [max(len(n), len(s), len(c)) for n, s, c in zip(names, scores, covs)]
    label_w = len("coverage")
    def row(label, cells):
        body = "  ".join(c.rjust(w) for c, w in zip(cells, widths))
        return f"{label.ljust(label_w)}  {body}"
    return "\n".join([row("dataset", names), row("spearman", scores), row("coverage", covs)])
