"""Numba kernels for window generation and SGD updates.

Two-stage hot path: stage 1 turns a span of encoded sentences into flat
window arrays (subsampling, window shrink, boundary truncation); stage 2
runs the negative-sampling SGD step for one mode over those arrays. Both
stages release the GIL so Python threads sharing the parameter matrices
get true Hogwild parallelism.

All scalar accumulation is float64 even when the parameter matrices are
float32. Every gradient piece for a window is computed from the pre-update
state before any row is written, matching the reference implementation in
trainer.py: the parity tests compare the two paths on float64 parameters.

The RNG is the same splitmix64 sequence as _rng.Splitmix64, so the Python
window generator and the kernels agree draw for draw.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64

_GOLDEN = uint64(0x9E3779B97F4A7C15)
_MIX1 = uint64(0xBF58476D1CE4E5B9)
_MIX2 = uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0


@njit(inline="always")
def _mix(z):
    z = (z ^ (z >> uint64(30))) * _MIX1
    z = (z ^ (z >> uint64(27))) * _MIX2
    return z ^ (z >> uint64(31))


@njit(inline="always")
def _next_u64(state):
    state[0] = state[0] + _GOLDEN
    return _mix(state[0])


@njit(inline="always")
def _next_f64(state):
    return (_next_u64(state) >> uint64(11)) * _INV53


@njit(inline="always")
def _next_below(state, n):
    return int(_next_u64(state) % uint64(n))


@njit(nogil=True, cache=True)
def fill_windows_chunk(ids, offsets, sent_lo, sent_hi, keep_prob, b_max, state,
                       out_centers, out_indptr, out_ctx):
    """Generate windows for sentences [sent_lo, sent_hi) into the buffers.

    Per retained token (one subsample draw each, in sentence order) a window
    size b is drawn uniformly from {1..b_max} and the context is the
    retained neighbours within b positions, truncated at the sentence edge.
    Empty-context windows are dropped. Returns (n_windows, ctx_len).
    """
    max_len = 1
    for s in range(sent_lo, sent_hi):
        if offsets[s + 1] - offsets[s] > max_len:
            max_len = offsets[s + 1] - offsets[s]
    retained = np.empty(max_len, dtype=np.int32)
    n_win = 0
    ctx_len = 0
    for s in range(sent_lo, sent_hi):
        start = offsets[s]
        end = offsets[s + 1]
        n_ret = 0
        for t in range(start, end):
            wid = ids[t]
            kp = keep_prob[wid]
            if kp >= 1.0 or _next_f64(state) < kp:
                retained[n_ret] = wid
                n_ret += 1
        for pos in range(n_ret):
            b = 1 + _next_below(state, b_max)
            lo = pos - b
            if lo < 0:
                lo = 0
            hi = pos + b + 1
            if hi > n_ret:
                hi = n_ret
            if hi - lo <= 1:
                continue
            out_centers[n_win] = retained[pos]
            out_indptr[n_win] = ctx_len
            for j in range(lo, hi):
                if j != pos:
                    out_ctx[ctx_len] = retained[j]
                    ctx_len += 1
            n_win += 1
    out_indptr[n_win] = ctx_len
    return n_win, ctx_len


def generate_windows_chunk(ids, offsets, sent_lo, sent_hi, keep_prob, b_max, state):
    """Allocating wrapper around fill_windows_chunk for non-hot-path callers."""
    n_tokens = int(offsets[sent_hi] - offsets[sent_lo])
    centers = np.empty(n_tokens, dtype=np.int32)
    indptr = np.empty(n_tokens + 1, dtype=np.int64)
    ctx = np.empty(2 * b_max * max(n_tokens, 1), dtype=np.int32)
    n_win, ctx_len = fill_windows_chunk(
        ids, offsets, sent_lo, sent_hi, keep_prob, b_max, state, centers, indptr, ctx
    )
    return centers[:n_win], indptr[: n_win + 1], ctx[:ctx_len]


@njit(inline="always")
def _clamp(x, bound):
    if x > bound:
        return bound
    if x < -bound:
        return -bound
    return x


@njit(nogil=True, cache=True)
def sgd_chunk_cbow(u, v, centers, indptr, ctx, n_win, neg_table, n_neg, lr,
                   clamp_logit, state, c_buf, gc_buf, g_buf, t_buf):
    """One SGD pass over a window chunk, CBOW objective. Returns loss sum."""
    d = u.shape[1]
    table_size = neg_table.shape[0]
    loss_sum = 0.0
    for w in range(n_win):
        center = centers[w]
        j0 = indptr[w]
        j1 = indptr[w + 1]
        # context vector from input rows
        for t in range(d):
            c_buf[t] = 0.0
        for j in range(j0, j1):
            row = ctx[j]
            for t in range(d):
                c_buf[t] += u[row, t]
        # targets: center + negatives, all scored against pre-update rows
        t_buf[0] = center
        for n in range(n_neg):
            t_buf[1 + n] = neg_table[_next_below(state, table_size)]
        for t in range(d):
            gc_buf[t] = 0.0
        for ti in range(n_neg + 1):
            tid = t_buf[ti]
            s = 0.0
            for t in range(d):
                s += v[tid, t] * c_buf[t]
            s = _clamp(s, clamp_logit)
            sig = 1.0 / (1.0 + np.exp(-s))
            if ti == 0:
                loss_sum += np.log1p(np.exp(-s))
                g = sig - 1.0
            else:
                loss_sum += np.log1p(np.exp(s))
                g = sig
            g_buf[ti] = g
            for t in range(d):
                gc_buf[t] += g * v[tid, t]
        for ti in range(n_neg + 1):
            tid = t_buf[ti]
            glr = g_buf[ti] * lr
            for t in range(d):
                v[tid, t] -= glr * c_buf[t]
        for j in range(j0, j1):
            row = ctx[j]
            for t in range(d):
                u[row, t] -= lr * gc_buf[t]
    return loss_sum


@njit(nogil=True, cache=True)
def sgd_chunk_awe(u, k, q, centers, indptr, ctx, n_win, neg_table, n_neg, lr,
                  lr_kq, clamp_attn, clamp_logit, normalize, state,
                  c_buf, gc_buf, g_buf, t_buf, a_buf, live_buf, d_buf, kg_buf):
    """One SGD pass over a window chunk, AWE objective (shared U).

    Context words whose attention exponent hit the clamp contribute no
    gradient to K or Q for this window.
    """
    d = u.shape[1]
    dp = k.shape[1]
    table_size = neg_table.shape[0]
    loss_sum = 0.0
    for w in range(n_win):
        center = centers[w]
        j0 = indptr[w]
        j1 = indptr[w + 1]
        nctx = j1 - j0
        # attention weights
        for jj in range(nctx):
            row = ctx[j0 + jj]
            z = 0.0
            for t in range(dp):
                z += k[center, t] * q[row, t]
            live = 1
            if z > clamp_attn:
                z = clamp_attn
                live = 0
            elif z < -clamp_attn:
                z = -clamp_attn
                live = 0
            a_buf[jj] = np.exp(z)
            live_buf[jj] = live
        if normalize:
            asum = 0.0
            for jj in range(nctx):
                asum += a_buf[jj]
            for jj in range(nctx):
                a_buf[jj] /= asum
        # context vector
        for t in range(d):
            c_buf[t] = 0.0
        for jj in range(nctx):
            row = ctx[j0 + jj]
            aj = a_buf[jj]
            for t in range(d):
                c_buf[t] += aj * u[row, t]
        # targets against pre-update rows
        t_buf[0] = center
        for n in range(n_neg):
            t_buf[1 + n] = neg_table[_next_below(state, table_size)]
        for t in range(d):
            gc_buf[t] = 0.0
        for ti in range(n_neg + 1):
            tid = t_buf[ti]
            s = 0.0
            for t in range(d):
                s += u[tid, t] * c_buf[t]
            s = _clamp(s, clamp_logit)
            sig = 1.0 / (1.0 + np.exp(-s))
            if ti == 0:
                loss_sum += np.log1p(np.exp(-s))
                g = sig - 1.0
            else:
                loss_sum += np.log1p(np.exp(s))
                g = sig
            g_buf[ti] = g
            for t in range(d):
                gc_buf[t] += g * u[tid, t]
        # attention-path gradients, still from pre-update state
        for jj in range(nctx):
            row = ctx[j0 + jj]
            dj = 0.0
            for t in range(d):
                dj += gc_buf[t] * u[row, t]
            d_buf[jj] = dj
        dbar = 0.0
        if normalize:
            for jj in range(nctx):
                dbar += a_buf[jj] * d_buf[jj]
        for t in range(dp):
            kg_buf[t] = 0.0
        for jj in range(nctx):
            if live_buf[jj] != 0:
                e = a_buf[jj] * (d_buf[jj] - dbar)
                d_buf[jj] = e
                row = ctx[j0 + jj]
                for t in range(dp):
                    kg_buf[t] += e * q[row, t]
            else:
                d_buf[jj] = 0.0
        # writes
        for ti in range(n_neg + 1):
            tid = t_buf[ti]
            glr = g_buf[ti] * lr
            for t in range(d):
                u[tid, t] -= glr * c_buf[t]
        for jj in range(nctx):
            row = ctx[j0 + jj]
            alr = a_buf[jj] * lr
            for t in range(d):
                u[row, t] -= alr * gc_buf[t]
        if lr_kq != 0.0:
            for jj in range(nctx):
                e = d_buf[jj]
                if e != 0.0:
                    row = ctx[j0 + jj]
                    elr = e * lr_kq
                    for t in range(dp):
                        q[row, t] -= elr * k[center, t]
            for t in range(dp):
                k[center, t] -= lr_kq * kg_buf[t]
    return loss_sum


@njit(nogil=True, cache=True)
def sgd_chunk_awe_s(u, k, q, sw_indptr, sw_ids, centers, indptr, ctx, n_win,
                    neg_table, n_neg, lr, lr_kq, clamp_attn, clamp_logit,
                    normalize, state, c_buf, gc_buf, g_buf, t_buf, a_buf,
                    live_buf, d_buf, kg_buf, uw_cache, tv_buf):
    """One SGD pass over a window chunk, AWE-S objective.

    Word vectors are sums over subword unit rows (CSR sw_indptr/sw_ids);
    gradients distribute unchanged over each member unit row.
    """
    d = u.shape[1]
    dp = k.shape[1]
    table_size = neg_table.shape[0]
    loss_sum = 0.0
    for w in range(n_win):
        center = centers[w]
        j0 = indptr[w]
        j1 = indptr[w + 1]
        nctx = j1 - j0
        # attention weights (keys/queries are per word, not per unit)
        for jj in range(nctx):
            row = ctx[j0 + jj]
            z = 0.0
            for t in range(dp):
                z += k[center, t] * q[row, t]
            live = 1
            if z > clamp_attn:
                z = clamp_attn
                live = 0
            elif z < -clamp_attn:
                z = -clamp_attn
                live = 0
            a_buf[jj] = np.exp(z)
            live_buf[jj] = live
        if normalize:
            asum = 0.0
            for jj in range(nctx):
                asum += a_buf[jj]
            for jj in range(nctx):
                a_buf[jj] /= asum
        # compose context word vectors once, cache for the gradient phase
        for t in range(d):
            c_buf[t] = 0.0
        for jj in range(nctx):
            word = ctx[j0 + jj]
            for t in range(d):
                uw_cache[jj, t] = 0.0
            for p in range(sw_indptr[word], sw_indptr[word + 1]):
                unit = sw_ids[p]
                for t in range(d):
                    uw_cache[jj, t] += u[unit, t]
            aj = a_buf[jj]
            for t in range(d):
                c_buf[t] += aj * uw_cache[jj, t]
        # targets: compose subword-summed vectors from pre-update rows
        t_buf[0] = center
        for n in range(n_neg):
            t_buf[1 + n] = neg_table[_next_below(state, table_size)]
        for t in range(d):
            gc_buf[t] = 0.0
        for ti in range(n_neg + 1):
            tid = t_buf[ti]
            for t in range(d):
                tv_buf[t] = 0.0
            for p in range(sw_indptr[tid], sw_indptr[tid + 1]):
                unit = sw_ids[p]
                for t in range(d):
                    tv_buf[t] += u[unit, t]
            s = 0.0
            for t in range(d):
                s += tv_buf[t] * c_buf[t]
            s = _clamp(s, clamp_logit)
            sig = 1.0 / (1.0 + np.exp(-s))
            if ti == 0:
                loss_sum += np.log1p(np.exp(-s))
                g = sig - 1.0
            else:
                loss_sum += np.log1p(np.exp(s))
                g = sig
            g_buf[ti] = g
            for t in range(d):
                gc_buf[t] += g * tv_buf[t]
        # attention-path gradients from the cached pre-update vectors
        for jj in range(nctx):
            dj = 0.0
            for t in range(d):
                dj += gc_buf[t] * uw_cache[jj, t]
            d_buf[jj] = dj
        dbar = 0.0
        if normalize:
            for jj in range(nctx):
                dbar += a_buf[jj] * d_buf[jj]
        for t in range(dp):
            kg_buf[t] = 0.0
        for jj in range(nctx):
            if live_buf[jj] != 0:
                e = a_buf[jj] * (d_buf[jj] - dbar)
                d_buf[jj] = e
                row = ctx[j0 + jj]
                for t in range(dp):
                    kg_buf[t] += e * q[row, t]
            else:
                d_buf[jj] = 0.0
        # writes, distributed over unit rows
        for ti in range(n_neg + 1):
            tid = t_buf[ti]
            glr = g_buf[ti] * lr
            for p in range(sw_indptr[tid], sw_indptr[tid + 1]):
                unit = sw_ids[p]
                for t in range(d):
                    u[unit, t] -= glr * c_buf[t]
        for jj in range(nctx):
            word = ctx[j0 + jj]
            alr = a_buf[jj] * lr
            for p in range(sw_indptr[word], sw_indptr[word + 1]):
                unit = sw_ids[p]
                for t in range(d):
                    u[unit, t] -= alr * gc_buf[t]
        if lr_kq != 0.0:
            for jj in range(nctx):
                e = d_buf[jj]
                if e != 0.0:
                    row = ctx[j0 + jj]
                    elr = e * lr_kq
                    for t in range(dp):
                        q[row, t] -= elr * k[center, t]
            for t in range(dp):
                k[center, t] -= lr_kq * kg_buf[t]
    return loss_sum
