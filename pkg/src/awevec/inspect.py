"""Attention-weight inspection for a masked position in a sentence.

For each context word the table reports the raw attention weight
exp(k_masked . q_context) and the word-vector similarity exp(u_masked .
u_context), with no exponent clamping. Because the exponential is strictly
positive while raw dot products can be negative, the raw dot product is
emitted alongside the exponential (similarity_dot); pick whichever scale
you need.

High attention on very frequent words is expected and largely harmless:
their word vectors sit near zero, so the product a_i * u_i barely moves the
context vector. The `frequent` flag (top 0.1% of the vocabulary by count,
configurable) makes that pattern visible.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .corpus import Vocabulary
from .model import Mode, ModelParams, word_vector
from .subword import SubwordMap

FREQUENT_TOP_FRAC = 0.001


def frequent_cutoff(vocab: Vocabulary, top_frac: float = FREQUENT_TOP_FRAC) -> int:
    """Ids below the cutoff count as highly frequent (ids are count-sorted)."""
    return max(1, int(round(top_frac * len(vocab))))


def attention_table(
    sentence: Sequence[str],
    masked_index: int,
    params: ModelParams,
    vocab: Vocabulary,
    subwords: SubwordMap | None = None,
    frequent_top_frac: float = FREQUENT_TOP_FRAC,
) -> dict:
    """Tabulate attention and similarity of every context word vs the mask.

    Returns {sentence, masked, rows: [{word, attention, similarity,
    similarity_dot, frequent, oov}]} with one row per non-masked token in
    input order; out-of-vocabulary tokens keep their row with null values.
    """
    if params.mode is Mode.CBOW:
        raise ValueError("attention undefined for CBOW")
    sentence = list(sentence)
    if not 0 <= masked_index < len(sentence):
        raise ValueError(f"masked index {masked_index} out of range")
    masked = sentence[masked_index]
    center = vocab.index_of.get(masked)
    if center is None:
        raise ValueError(f"masked word {masked!r} is out of vocabulary")

    cutoff = frequent_cutoff(vocab, frequent_top_frac)
    k_c = params.k[center].astype(np.float64)
    u_c = word_vector(center, params, subwords)

    rows = []
    for pos, tok in enumerate(sentence):
        if pos == masked_index:
            continue
        wid = vocab.index_of.get(tok)
        if wid is None:
            rows.append({
                "word": tok, "attention": None, "similarity": None,
                "similarity_dot": None, "frequent": False, "oov": True,
            })
            continue
        attn = math.exp(float(k_c @ params.q[wid].astype(np.float64)))
        dot = float(u_c @ word_vector(wid, params, subwords))
        rows.append({
            "word": tok,
            "attention": attn,
            "similarity": math.exp(dot),
            "similarity_dot": dot,
            "frequent": wid < cutoff,
            "oov": False,
        })
    return {"sentence": sentence, "masked": masked, "rows": rows}


def render_attention_table(table: dict) -> str:
    """Aligned text rendering of an attention_table result."""
    headers = ["word", "attention", "similarity", "sim_dot", "frequent"]
    cells = [headers]
    for row in table["rows"]:
        if row["oov"]:
            cells.append([row["word"], "-", "-", "-", ""])
        else:
            cells.append([
                row["word"],
                f"{row['attention']:.3f}",
                f"{row['similarity']:.3f}",
                f"{row['similarity_dot']:+.3f}",
                "*" if row["frequent"] else "",
            ])
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = [f"mask: {table['masked']}"]
    for r in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines)
