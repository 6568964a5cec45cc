"""Model state and per-window scoring for CBOW, AWE, and AWE-S.

CBOW sums the context rows of an input matrix U and scores the masked word
against a separate target matrix V. AWE replaces the plain sum with an
attention-weighted one, a_i = exp(k_center . q_context), and shares one
embedding matrix between the context and masked roles (no V). AWE-S keeps
the AWE structure but represents every word as the sum of its subword-unit
rows, so U is indexed by unit ids instead of word ids.

Everything here is the readable reference path, computed with float64
accumulation regardless of the stored parameter dtype. The training hot
loop lives in _kernels.py and is tested against these functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .corpus import TrainingWindow
from .subword import SubwordMap

ATTENTION_CLAMP = 10.0
LOGIT_CLAMP = 15.0


class Mode(str, Enum):
    CBOW = "cbow"
    AWE = "awe"
    AWE_S = "awe-s"


@dataclass
class ModelParams:
    """Learnable state. Matrix layout depends on the mode:

    - u: (n_words, d) for CBOW/AWE, (n_units, d) for AWE-S
    - v: (n_words, d) target matrix, CBOW only (AWE modes share u)
    - k, q: (n_words, d_prime) key/query matrices, AWE modes only
    """

    mode: Mode
    u: np.ndarray
    v: np.ndarray | None = None
    k: np.ndarray | None = None
    q: np.ndarray | None = None
    normalize_attention: bool = False

    @property
    def d(self) -> int:
        return self.u.shape[1]

    @property
    def d_prime(self) -> int:
        return 0 if self.k is None else self.k.shape[1]

    @property
    def n_words(self) -> int:
        return self.k.shape[0] if self.mode is not Mode.CBOW else self.u.shape[0]

    def matrices(self) -> dict[str, np.ndarray]:
        out = {"u": self.u}
        if self.v is not None:
            out["v"] = self.v
        if self.k is not None:
            out["k"] = self.k
        if self.q is not None:
            out["q"] = self.q
        return out


def init_params(
    mode: Mode | str,
    n_words: int,
    d: int,
    d_prime: int = 0,
    seed: int = 1,
    dtype=np.float32,
    n_units: int | None = None,
    normalize_attention: bool = False,
) -> ModelParams:
    """Allocate and randomly initialize parameters.

    U rows are uniform in [-0.5/d, 0.5/d]; the CBOW target matrix starts at
    zero; K and Q are uniform in [-0.5/d_prime, 0.5/d_prime]. K and Q must
    not start at zero: the key gradient is a sum over a_i * d_i * q_i, which
    stays trapped at zero under an all-zero init.
    """
    mode = Mode(mode)
    rng = np.random.Generator(np.random.PCG64(seed))
    n_u_rows = n_words
    if mode is Mode.AWE_S:
        if n_units is None:
            raise ValueError("AWE-S init requires n_units")
        n_u_rows = n_units
    u = rng.uniform(-0.5 / d, 0.5 / d, size=(n_u_rows, d)).astype(dtype)
    v = k = q = None
    if mode is Mode.CBOW:
        v = np.zeros((n_words, d), dtype=dtype)
    else:
        if d_prime < 1:
            raise ValueError("AWE modes require d_prime >= 1")
        k = rng.uniform(-0.5 / d_prime, 0.5 / d_prime, size=(n_words, d_prime)).astype(dtype)
        q = rng.uniform(-0.5 / d_prime, 0.5 / d_prime, size=(n_words, d_prime)).astype(dtype)
    return ModelParams(mode=mode, u=u, v=v, k=k, q=q,
                       normalize_attention=normalize_attention)


@dataclass
class WindowScore:
    """Scoring breakdown for one window.

    pos_score / neg_scores are the raw dot products; the loss applies the
    logit clamp before the sigmoid.
    """

    context_vec: np.ndarray
    attn: np.ndarray
    loss: float
    pos_score: float
    neg_scores: list[float]


def attention_weights(
    center: int,
    context: Sequence[int],
    params: ModelParams,
    clamp: float = ATTENTION_CLAMP,
) -> np.ndarray:
    """a_i = exp(clamped k_center . q_i) for each context word, in order.

    Weights are bare exponentials, not softmax-normalized, unless the model
    was built with normalize_attention (an ablation option).
    """
    if params.mode is Mode.CBOW:
        raise ValueError("attention undefined for CBOW")
    if clamp <= 0:
        raise ValueError("clamp must be positive")
    k_c = params.k[center].astype(np.float64)
    z = np.array([float(k_c @ params.q[i].astype(np.float64)) for i in context])
    a = np.exp(np.clip(z, -clamp, clamp))
    if params.normalize_attention:
        a /= a.sum()
    return a


def word_vector(
    word: int, params: ModelParams, subwords: SubwordMap | None = None
) -> np.ndarray:
    """The word's embedding: its U row, or the sum of its unit rows in AWE-S."""
    if params.mode is Mode.AWE_S:
        if subwords is None:
            raise ValueError("AWE-S requires a subword map")
        if not 0 <= word < len(subwords.sets):
            raise ValueError(f"word id {word} out of range")
        vec = np.zeros(params.d, dtype=np.float64)
        for unit in subwords.sets[word]:
            vec += params.u[unit]
        return vec
    if not 0 <= word < params.u.shape[0]:
        raise ValueError(f"word id {word} out of range")
    return params.u[word].astype(np.float64)


def _target_vector(
    word: int, params: ModelParams, subwords: SubwordMap | None
) -> np.ndarray:
    """Vector scored against the context: V row for CBOW, shared u elsewhere."""
    if params.mode is Mode.CBOW:
        if not 0 <= word < params.v.shape[0]:
            raise ValueError(f"word id {word} out of range")
        return params.v[word].astype(np.float64)
    return word_vector(word, params, subwords)


def context_vector(
    center: int,
    context: Sequence[int],
    params: ModelParams,
    subwords: SubwordMap | None = None,
    clamp: float = ATTENTION_CLAMP,
) -> tuple[np.ndarray, np.ndarray]:
    """Weighted sum of context word vectors, with the weights used.

    CBOW uses all-ones weights (a plain sum); AWE modes use attention.
    The summation order and arithmetic are identical across modes, so AWE
    with zero K and Q reproduces the CBOW sum bit for bit.
    """
    if len(context) == 0:
        raise ValueError("empty context")
    if params.mode is Mode.CBOW:
        attn = np.ones(len(context), dtype=np.float64)
    else:
        attn = attention_weights(center, context, params, clamp)
    vec = np.zeros(params.d, dtype=np.float64)
    for a_i, w in zip(attn, context):
        vec += a_i * word_vector(w, params, subwords)
    return vec, attn


def _neg_log_sigmoid(s: float) -> float:
    # -log sigmoid(s) = log(1 + exp(-s)); s is already clamped by callers.
    return math.log1p(math.exp(-s))


def window_loss(
    window: TrainingWindow,
    negatives: Sequence[int],
    params: ModelParams,
    subwords: SubwordMap | None = None,
    clamp: float = ATTENTION_CLAMP,
    clamp_logit: float = LOGIT_CLAMP,
) -> WindowScore:
    """Negative-sampling loss for one window.

    loss = -log sigmoid(s+) - sum_n log sigmoid(-s_n), with the dot products
    clamped to [-clamp_logit, clamp_logit] before the sigmoid. Negatives may
    coincide with the center; they are kept.
    """
    c, attn = context_vector(window.center, window.context, params, subwords, clamp)
    s_pos = float(_target_vector(window.center, params, subwords) @ c)
    loss = _neg_log_sigmoid(min(max(s_pos, -clamp_logit), clamp_logit))
    neg_scores = []
    for n in negatives:
        s_n = float(_target_vector(n, params, subwords) @ c)
        neg_scores.append(s_n)
        loss += _neg_log_sigmoid(-min(max(s_n, -clamp_logit), clamp_logit))
    return WindowScore(
        context_vec=c,
        attn=attn,
        loss=loss,
        pos_score=s_pos,
        neg_scores=neg_scores,
    )


def full_softmax_prob(
    center: int,
    context: Sequence[int],
    params: ModelParams,
    subwords: SubwordMap | None = None,
    clamp: float = ATTENTION_CLAMP,
) -> float:
    """Exact p(center | context) under the full-vocabulary softmax.

    In AWE modes the context vector depends on the candidate masked word
    (attention uses its key), so each candidate is scored against its own
    context vector. Debug aid for tiny vocabularies only: O(N * |ctx| * d)
    per call. Training always uses negative sampling instead.
    """
    n_words = params.n_words if params.mode is not Mode.AWE_S else len(subwords.sets)
    scores = np.empty(n_words, dtype=np.float64)
    for w in range(n_words):
        c_w, _ = context_vector(w, context, params, subwords, clamp)
        scores[w] = _target_vector(w, params, subwords) @ c_w
    scores -= scores.max()
    e = np.exp(scores)
    return float(e[center] / e.sum())
