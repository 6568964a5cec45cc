"""Negative-sampling SGD: analytic gradients, updates, and the training loop.

gradients()/apply_update() are the readable reference path used by the
gradient-correctness tests; train() runs the compiled kernels from
_kernels.py over corpus chunks, with worker threads sharing the parameter
matrices Hogwild-style (unsynchronized updates, races tolerated). The two
paths implement the same arithmetic and are held together by parity tests.
"""

from __future__ import annotations

import json
import math
import sys
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from ._rng import Splitmix64, derive_seed
from .corpus import (
    DEFAULT_MIN_COUNT,
    DEFAULT_NEG_ALPHA,
    DEFAULT_NEG_TABLE_SIZE,
    DEFAULT_SUBSAMPLE_T,
    TrainingWindow,
    Vocabulary,
    encode_sentences,
    read_sentences,
)
from .model import (
    ATTENTION_CLAMP,
    LOGIT_CLAMP,
    Mode,
    ModelParams,
    attention_weights,
    init_params,
    word_vector,
)
from .subword import SubwordMap, subword_csr

# stream separation salts for derive_seed
_SEED_INIT = 0
_SEED_WINDOWS = 1
_SEED_SGD = 2


@dataclass
class TrainConfig:
    """Training hyperparameters. Defaults: 500-dim embeddings with 50-dim
    keys/queries, window 5, 5 negatives, 5 epochs."""

    mode: Mode = Mode.AWE
    d: int = 500
    d_prime: int = 50
    b_max: int = 5
    n_neg: int = 5
    epochs: int = 5
    initial_lr: float = 0.05
    min_lr: float | None = None        # default: 1e-4 * initial_lr
    subsample_t: float = DEFAULT_SUBSAMPLE_T
    min_count: int = DEFAULT_MIN_COUNT
    max_vocab: int | None = None
    neg_table_size: int = DEFAULT_NEG_TABLE_SIZE
    neg_alpha: float = DEFAULT_NEG_ALPHA
    seed: int = 1
    workers: int = 1
    clamp_attention: float = ATTENTION_CLAMP
    clamp_logit: float = LOGIT_CLAMP
    kq_lr_mult: float = 1.0            # scales the K/Q learning rate; 0 freezes them
    normalize_attention: bool = False
    dtype: str = "float32"             # "float64" for gradient-check builds
    chunk_tokens: int = 20_000         # kernel call granularity; also lr update interval
    progress_tokens: int = 2_000_000   # progress line interval; 0 disables

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.min_lr is None:
            self.min_lr = 1e-4 * self.initial_lr
        for name in ("d", "b_max", "epochs", "workers", "min_count",
                     "neg_table_size", "chunk_tokens"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.mode is not Mode.CBOW and self.d_prime < 1:
            raise ValueError("d_prime must be >= 1 for AWE modes")
        if self.n_neg < 0:
            raise ValueError("n_neg must be >= 0")
        if self.initial_lr <= 0 or self.min_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.min_lr >= self.initial_lr:
            raise ValueError("min_lr must be below initial_lr")
        if self.clamp_attention <= 0 or self.clamp_logit <= 0:
            raise ValueError("clamps must be positive")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d


@dataclass
class Gradients:
    """Sparse per-row gradients, keyed by row id within each matrix."""

    u: dict[int, np.ndarray] = field(default_factory=dict)
    v: dict[int, np.ndarray] = field(default_factory=dict)
    k: dict[int, np.ndarray] = field(default_factory=dict)
    q: dict[int, np.ndarray] = field(default_factory=dict)

    @staticmethod
    def _add(d: dict[int, np.ndarray], row: int, vec: np.ndarray) -> None:
        cur = d.get(row)
        if cur is None:
            d[row] = vec.copy()
        else:
            cur += vec


def _u_rows(word: int, params: ModelParams, subwords: SubwordMap | None) -> Sequence[int]:
    """U rows a word's vector is composed of (its unit set in AWE-S)."""
    if params.mode is Mode.AWE_S:
        return subwords.sets[word]
    return (word,)


def gradients(
    window: TrainingWindow,
    negatives: Sequence[int],
    params: ModelParams,
    subwords: SubwordMap | None = None,
    clamp: float = ATTENTION_CLAMP,
    clamp_logit: float = LOGIT_CLAMP,
) -> Gradients:
    """Analytic gradients of window_loss w.r.t. every touched row.

    With g_t = sigmoid(s_t) - label_t and G_c = sum_t g_t * target_vector(t):
    target rows get g_t * c, context embedding rows get a_i * G_c, and the
    attention path gets dL/dk_center = sum_i a_i d_i q_i and
    dL/dq_i = a_i d_i k_center with d_i = G_c . u_i (d_i recentred by the
    attention-weighted mean when normalize_attention is on). Context words
    whose attention exponent sits on the clamp contribute zero to K and Q.
    All pieces are evaluated at the pre-update parameter values.
    """
    mode = params.mode
    ctx = window.context
    if len(ctx) == 0:
        raise ValueError("empty context")

    # context word vectors and attention, all from current state
    u_ctx = [word_vector(w, params, subwords) for w in ctx]
    if mode is Mode.CBOW:
        attn = np.ones(len(ctx), dtype=np.float64)
        live = np.ones(len(ctx), dtype=bool)
    else:
        k_c = params.k[window.center].astype(np.float64)
        z = np.array([float(k_c @ params.q[w].astype(np.float64)) for w in ctx])
        live = np.abs(z) <= clamp
        attn = np.exp(np.clip(z, -clamp, clamp))
        if params.normalize_attention:
            attn = attn / attn.sum()
    c = np.zeros(params.d, dtype=np.float64)
    for a_i, uv in zip(attn, u_ctx):
        c += a_i * uv

    def target_vec(word: int) -> np.ndarray:
        if mode is Mode.CBOW:
            return params.v[word].astype(np.float64)
        return word_vector(word, params, subwords)

    grads = Gradients()
    targets = [(window.center, 1.0)] + [(n, 0.0) for n in negatives]
    g_c = np.zeros(params.d, dtype=np.float64)
    for tid, label in targets:
        tv = target_vec(tid)
        s = min(max(float(tv @ c), -clamp_logit), clamp_logit)
        g_t = 1.0 / (1.0 + math.exp(-s)) - label
        g_c += g_t * tv
        row_grad = g_t * c
        if mode is Mode.CBOW:
            Gradients._add(grads.v, tid, row_grad)
        else:
            for row in _u_rows(tid, params, subwords):
                Gradients._add(grads.u, row, row_grad)

    for a_i, w in zip(attn, ctx):
        row_grad = a_i * g_c
        for row in _u_rows(w, params, subwords):
            Gradients._add(grads.u, row, row_grad)

    if mode is not Mode.CBOW:
        d_i = np.array([float(g_c @ uv) for uv in u_ctx])
        if params.normalize_attention:
            e_i = attn * (d_i - float(attn @ d_i))
        else:
            e_i = attn * d_i
        e_i = np.where(live, e_i, 0.0)
        k_grad = np.zeros(params.d_prime, dtype=np.float64)
        for e, w in zip(e_i, ctx):
            if e != 0.0:
                k_grad += e * params.q[w].astype(np.float64)
                Gradients._add(grads.q, w, e * k_c)
        Gradients._add(grads.k, window.center, k_grad)
    return grads


def apply_update(
    params: ModelParams, grads: Gradients, lr: float, kq_lr_mult: float = 1.0
) -> None:
    """SGD step: row -= lr * grad for every touched row; nothing else moves."""
    if lr <= 0:
        raise ValueError("lr must be positive")
    for row, g in grads.u.items():
        params.u[row] -= lr * g
    for row, g in grads.v.items():
        params.v[row] -= lr * g
    lr_kq = lr * kq_lr_mult
    if lr_kq != 0.0:
        for row, g in grads.k.items():
            params.k[row] -= lr_kq * g
        for row, g in grads.q.items():
            params.q[row] -= lr_kq * g


@dataclass
class TrainState:
    """Progress carried across a checkpoint/resume boundary."""

    epochs_done: int = 0
    windows_done: int = 0
    tokens_done: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


class _WorkerError:
    """Holds the first exception raised inside a worker thread."""

    def __init__(self):
        self.exc: BaseException | None = None
        self.lock = threading.Lock()

    def record(self, exc: BaseException) -> None:
        with self.lock:
            if self.exc is None:
                self.exc = exc


def _worker_buffers(cfg: TrainConfig, max_windows: int):
    return {
        "centers": np.empty(max_windows, dtype=np.int32),
        "indptr": np.empty(max_windows + 1, dtype=np.int64),
        "ctx": np.empty(max_windows * 2 * cfg.b_max, dtype=np.int32),
        "c": np.empty(cfg.d, dtype=np.float64),
        "gc": np.empty(cfg.d, dtype=np.float64),
        "g": np.empty(cfg.n_neg + 1, dtype=np.float64),
        "t": np.empty(cfg.n_neg + 1, dtype=np.int64),
        "a": np.empty(2 * cfg.b_max, dtype=np.float64),
        "live": np.empty(2 * cfg.b_max, dtype=np.uint8),
        "dd": np.empty(2 * cfg.b_max, dtype=np.float64),
        "kg": np.empty(max(cfg.d_prime, 1), dtype=np.float64),
        "uw": np.empty((2 * cfg.b_max, cfg.d), dtype=np.float64),
        "tv": np.empty(cfg.d, dtype=np.float64),
    }


def _plan_chunks(offsets: np.ndarray, workers: int, chunk_tokens: int):
    """Split sentences into per-worker lists of (sent_lo, sent_hi) chunks.

    Workers get contiguous sentence ranges balanced by token count; chunks
    are fixed for the whole run so chunk boundaries (and therefore the lr
    and RNG consumption pattern) are deterministic.
    """
    n_sent = len(offsets) - 1
    total = int(offsets[-1])
    cuts = [int(np.searchsorted(offsets, total * w // workers)) for w in range(workers + 1)]
    cuts[0], cuts[-1] = 0, n_sent
    plans = []
    for w in range(workers):
        lo, hi = cuts[w], max(cuts[w + 1], cuts[w])
        chunks = []
        s = lo
        while s < hi:
            e = s
            tok = 0
            while e < hi and tok < chunk_tokens:
                tok += int(offsets[e + 1] - offsets[e])
                e += 1
            chunks.append((s, e))
            s = e
        plans.append(chunks)
    return plans


def _run_epoch(
    cfg: TrainConfig,
    params: ModelParams,
    ids: np.ndarray,
    offsets: np.ndarray,
    neg_table: np.ndarray,
    keep_prob: np.ndarray,
    sw_csr,
    epoch: int,
    plans,
    counters: np.ndarray,
    schedule_total: float,
    progress_cb,
) -> tuple[float, int]:
    """One full corpus pass. Returns (loss_sum, window_count)."""
    err = _WorkerError()
    loss_sums = np.zeros(len(plans), dtype=np.float64)
    win_counts = np.zeros(len(plans), dtype=np.int64)

    def lr_now() -> float:
        frac = counters[0] / schedule_total if schedule_total > 0 else 1.0
        return max(cfg.min_lr, cfg.initial_lr - (cfg.initial_lr - cfg.min_lr) * frac)

    def work(widx: int):
        try:
            bufs = _worker_buffers(cfg, max(_max_chunk_slack(plans[widx], offsets), 1))
            win_state = Splitmix64(derive_seed(cfg.seed, epoch, widx, _SEED_WINDOWS)).state_array()
            sgd_state = Splitmix64(derive_seed(cfg.seed, epoch, widx, _SEED_SGD)).state_array()
            for (s_lo, s_hi) in plans[widx]:
                n_win, _ = _kernels.fill_windows_chunk(
                    ids, offsets, s_lo, s_hi, keep_prob, cfg.b_max, win_state,
                    bufs["centers"], bufs["indptr"], bufs["ctx"],
                )
                lr = lr_now()
                if n_win > 0:
                    loss = _dispatch_sgd(cfg, params, sw_csr, neg_table, bufs,
                                         n_win, lr, sgd_state)
                    if not math.isfinite(loss):
                        raise FloatingPointError(
                            f"non-finite loss in epoch {epoch} worker {widx}"
                        )
                    loss_sums[widx] += loss
                    win_counts[widx] += n_win
                counters[0] += n_win
                counters[1] += int(offsets[s_hi] - offsets[s_lo])
                if progress_cb is not None:
                    progress_cb(epoch, lr_now(), loss_sums, win_counts, counters)
        except BaseException as exc:  # re-raised on the main thread
            err.record(exc)

    if len(plans) == 1:
        work(0)
    else:
        threads = [threading.Thread(target=work, args=(w,), daemon=True)
                   for w in range(len(plans))]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    if err.exc is not None:
        raise err.exc
    return float(loss_sums.sum()), int(win_counts.sum())


def _max_chunk_slack(chunks, offsets) -> int:
    """Largest chunk size in tokens beyond the nominal chunk_tokens target."""
    worst = 0
    for (s_lo, s_hi) in chunks:
        worst = max(worst, int(offsets[s_hi] - offsets[s_lo]))
    return worst


def _dispatch_sgd(cfg, params, sw_csr, neg_table, bufs, n_win, lr, sgd_state) -> float:
    lr_kq = lr * cfg.kq_lr_mult
    if cfg.mode is Mode.CBOW:
        return _kernels.sgd_chunk_cbow(
            params.u, params.v, bufs["centers"], bufs["indptr"], bufs["ctx"],
            n_win, neg_table, cfg.n_neg, lr, cfg.clamp_logit, sgd_state,
            bufs["c"], bufs["gc"], bufs["g"], bufs["t"],
        )
    if cfg.mode is Mode.AWE:
        return _kernels.sgd_chunk_awe(
            params.u, params.k, params.q, bufs["centers"], bufs["indptr"],
            bufs["ctx"], n_win, neg_table, cfg.n_neg, lr, lr_kq,
            cfg.clamp_attention, cfg.clamp_logit, cfg.normalize_attention,
            sgd_state, bufs["c"], bufs["gc"], bufs["g"], bufs["t"],
            bufs["a"], bufs["live"], bufs["dd"], bufs["kg"],
        )
    sw_indptr, sw_ids = sw_csr
    return _kernels.sgd_chunk_awe_s(
        params.u, params.k, params.q, sw_indptr, sw_ids, bufs["centers"],
        bufs["indptr"], bufs["ctx"], n_win, neg_table, cfg.n_neg, lr, lr_kq,
        cfg.clamp_attention, cfg.clamp_logit, cfg.normalize_attention,
        sgd_state, bufs["c"], bufs["gc"], bufs["g"], bufs["t"],
        bufs["a"], bufs["live"], bufs["dd"], bufs["kg"],
        bufs["uw"], bufs["tv"],
    )


def _check_finite(params: ModelParams) -> None:
    for name, mat in params.matrices().items():
        if not np.all(np.isfinite(mat)):
            bad = int(np.argmin(np.isfinite(mat).ravel()))
            raise FloatingPointError(
                f"non-finite value in matrix {name!r} at flat index {bad}; "
                "try a lower learning rate"
            )


class _Progress:
    """Rate-limited `epoch E | lr L | loss X | words/sec Y` lines on stderr."""

    def __init__(self, interval_tokens: int, out=None):
        self.interval = interval_tokens
        self.next_at = interval_tokens
        self.out = out if out is not None else sys.stderr
        self.t0 = time.perf_counter()
        self.lock = threading.Lock()

    def __call__(self, epoch, lr, loss_sums, win_counts, counters):
        tokens = int(counters[1])
        if tokens < self.next_at:
            return
        with self.lock:
            if tokens < self.next_at:
                return
            self.next_at = (tokens // self.interval + 1) * self.interval
            wins = int(win_counts.sum())
            mean_loss = float(loss_sums.sum()) / wins if wins else float("nan")
            rate = tokens / max(time.perf_counter() - self.t0, 1e-9)
            self.out.write(
                f"epoch {epoch} | lr {lr:.6f} | loss {mean_loss:.4f} | words/sec {rate:.0f}\n"
            )
            self.out.flush()


def train(
    corpus: Sequence[str | Path] | str | Path,
    config: TrainConfig,
    vocab: Vocabulary,
    subwords: SubwordMap | None = None,
    initial_params: ModelParams | None = None,
    initial_state: TrainState | None = None,
    stop_after_epochs: int | None = None,
) -> tuple[ModelParams, dict]:
    """Train for config.epochs total passes over the corpus.

    The learning rate decays linearly from initial_lr to min_lr over the
    expected total window count of the whole schedule (global across
    epochs, driven by a shared counter). Passing initial_params/
    initial_state resumes a checkpointed run: epochs already done are
    skipped and the schedule continues where it left off, bit-exactly for
    a single seeded worker. stop_after_epochs pauses the same schedule
    early (for checkpointing mid-run); the lr plan still spans
    config.epochs.

    Returns (params, report) where report carries the config echo,
    per-epoch mean loss, and throughput.
    """
    if config.mode is Mode.AWE_S and subwords is None:
        raise ValueError("AWE-S training requires a subword map")

    sentences = read_sentences(corpus)
    ids, offsets = encode_sentences(sentences, vocab)
    if len(ids) == 0:
        raise ValueError("corpus has no in-vocabulary tokens")
    if int(ids.max()) >= len(vocab):
        raise ValueError("corpus/vocabulary mismatch: token id out of range")

    if initial_params is not None:
        params = initial_params
        _validate_params(params, config, vocab, subwords)
    else:
        params = init_params(
            config.mode, len(vocab), config.d, config.d_prime,
            seed=derive_seed(config.seed, 0, 0, _SEED_INIT),
            dtype=config.np_dtype,
            n_units=subwords.n_units if subwords is not None else None,
            normalize_attention=config.normalize_attention,
        )
    _check_finite(params)

    state = initial_state or TrainState()
    # expected windows per epoch = expected retained tokens after subsampling
    expected_per_epoch = float(vocab.keep_prob[ids].sum())
    schedule_total = expected_per_epoch * config.epochs
    counters = np.array([state.windows_done, state.tokens_done], dtype=np.int64)

    plans = _plan_chunks(offsets, config.workers, config.chunk_tokens)
    sw_csr = subword_csr(subwords) if config.mode is Mode.AWE_S else None
    progress = _Progress(config.progress_tokens) if config.progress_tokens > 0 else None

    last_epoch = config.epochs
    if stop_after_epochs is not None:
        last_epoch = min(last_epoch, stop_after_epochs)

    epochs_report = []
    t_start = time.perf_counter()
    for epoch in range(state.epochs_done, last_epoch):
        t0 = time.perf_counter()
        loss_sum, n_win = _run_epoch(
            config, params, ids, offsets, vocab.neg_table, vocab.keep_prob,
            sw_csr, epoch, plans, counters, schedule_total, progress,
        )
        _check_finite(params)
        dt = time.perf_counter() - t0
        state.epochs_done = epoch + 1
        state.windows_done = int(counters[0])
        state.tokens_done = int(counters[1])
        epochs_report.append({
            "epoch": epoch,
            "mean_loss": loss_sum / n_win if n_win else None,
            "windows": n_win,
            "seconds": dt,
            "words_per_sec": len(ids) / dt if dt > 0 else None,
            "windows_per_sec": n_win / dt if dt > 0 else None,
        })

    total_dt = time.perf_counter() - t_start
    report = {
        "config": config.to_dict(),
        "vocab_size": len(vocab),
        "corpus_tokens": int(len(ids)),
        "epochs": epochs_report,
        "state": state.to_dict(),
        "total_seconds": total_dt,
        "words_per_sec": (
            len(ids) * len(epochs_report) / total_dt if total_dt > 0 else None
        ),
    }
    return params, report


def _validate_params(params, config, vocab, subwords) -> None:
    if params.mode is not config.mode:
        raise ValueError(f"checkpoint mode {params.mode.value} != config mode {config.mode.value}")
    n_rows = subwords.n_units if params.mode is Mode.AWE_S else len(vocab)
    if params.u.shape != (n_rows, config.d):
        raise ValueError(
            f"U shape {params.u.shape} does not match vocabulary/config "
            f"({n_rows}, {config.d})"
        )
    if params.mode is Mode.CBOW:
        if params.v is None or params.v.shape != (len(vocab), config.d):
            raise ValueError("V shape does not match vocabulary/config")
    else:
        if params.k is None or params.k.shape != (len(vocab), config.d_prime):
            raise ValueError("K shape does not match vocabulary/config")
        if params.q is None or params.q.shape != (len(vocab), config.d_prime):
            raise ValueError("Q shape does not match vocabulary/config")


def save_report(report: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
