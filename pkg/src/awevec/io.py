"""Persistence: embedding exports and full training checkpoints.

Embeddings use the word2vec text format (`N D` header, then one
space-separated line per word) with shortest round-trip decimal formatting,
or optionally the word2vec binary format for third-party tools. AWE-S
exports composed per-word vectors; subword units are an internal detail.

Checkpoints are a single binary container: magic, format version, a
canonical JSON header (config echo, vocabulary, subword map, training
progress), then the raw little-endian matrix bytes. Loading restores
bit-identical state; saving what was just loaded reproduces the file byte
for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .corpus import Vocabulary, _build_neg_table, _subsample_keep_prob
from .eval import all_word_vectors
from .model import Mode, ModelParams
from .subword import SubwordMap
from .trainer import TrainConfig, TrainState

CHECKPOINT_MAGIC = b"AWEVECKP"
CHECKPOINT_VERSION = 1

_DTYPE_TAGS = {"<f4": "<f4", "<f8": "<f8"}


def _fmt(x: np.floating) -> str:
    # shortest decimal string that parses back to the identical float
    return np.format_float_positional(x, unique=True, trim="0")


def export_embeddings(
    params: ModelParams,
    vocab: Vocabulary,
    subwords: SubwordMap | None = None,
    path: str | Path = "vectors.txt",
    binary: bool = False,
) -> None:
    """Write per-word vectors in word2vec text (or binary) format."""
    mat = all_word_vectors(params, vocab, subwords).astype(params.u.dtype)
    if binary:
        with open(path, "wb") as fh:
            fh.write(f"{len(vocab)} {params.d}\n".encode())
            for word, row in zip(vocab.words, mat):
                fh.write(word.encode("utf-8") + b" ")
                fh.write(row.astype("<f4").tobytes())
                fh.write(b"\n")
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(vocab)} {params.d}\n")
        for word, row in zip(vocab.words, mat):
            fh.write(word)
            for x in row:
                fh.write(" " + _fmt(x))
            fh.write("\n")


def load_embeddings(
    path: str | Path, binary: bool = False, dtype=np.float32
) -> tuple[list[str], np.ndarray]:
    """Read a word2vec text/binary file back into (words, matrix)."""
    if binary:
        with open(path, "rb") as fh:
            header = fh.readline().decode("utf-8")
            n, d = (int(t) for t in header.split())
            words = []
            mat = np.empty((n, d), dtype=np.float32)
            for i in range(n):
                chars = bytearray()
                while True:
                    ch = fh.read(1)
                    if not ch or ch == b" ":
                        break
                    chars.extend(ch)
                words.append(chars.decode("utf-8"))
                mat[i] = np.frombuffer(fh.read(4 * d), dtype="<f4")
                fh.read(1)  # trailing newline
        return words, mat.astype(dtype)
    with open(path, encoding="utf-8") as fh:
        n, d = (int(t) for t in fh.readline().split())
        words = []
        mat = np.empty((n, d), dtype=np.float64)
        for i in range(n):
            parts = fh.readline().rstrip("\n").split(" ")
            words.append(parts[0])
            if len(parts) != d + 1:
                raise ValueError(f"{path}: row {i} has {len(parts) - 1} values, expected {d}")
            mat[i] = [float(x) for x in parts[1:]]
    return words, mat.astype(dtype)


@dataclass
class Checkpoint:
    """Everything needed to resume training or run any read-only tool."""

    params: ModelParams
    vocab: Vocabulary
    subwords: SubwordMap | None
    config: TrainConfig
    state: TrainState


def checkpoint_save(
    params: ModelParams,
    vocab: Vocabulary,
    subwords: SubwordMap | None,
    config: TrainConfig,
    path: str | Path,
    state: TrainState | None = None,
) -> None:
    """Serialize full training state to one file."""
    matrices = []
    blobs = []
    for name, mat in params.matrices().items():
        tag = "<f4" if mat.dtype == np.float32 else "<f8"
        matrices.append({"name": name, "shape": list(mat.shape), "dtype": tag})
        blobs.append(np.ascontiguousarray(mat).astype(tag, copy=False).tobytes())
    header = {
        "mode": params.mode.value,
        "normalize_attention": params.normalize_attention,
        "config": config.to_dict(),
        "state": (state or TrainState()).to_dict(),
        "vocab": {
            "words": vocab.words,
            "counts": [int(c) for c in vocab.counts],
            "subsample_t": vocab.subsample_t,
            "neg_alpha": vocab.neg_alpha,
            "min_count": vocab.min_count,
            "neg_table_size": int(len(vocab.neg_table)),
        },
        "subwords": None if subwords is None else {
            "units": subwords.units,
            "sets": subwords.sets,
            "lemma_lookup": subwords.lemma_lookup,
        },
        "matrices": matrices,
    }
    payload = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(CHECKPOINT_VERSION.to_bytes(4, "little"))
        fh.write(len(payload).to_bytes(8, "little"))
        fh.write(payload)
        for blob in blobs:
            fh.write(blob)


def _read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ValueError(
            f"truncated checkpoint at offset {fh.tell() - len(data)}: "
            f"expected {n} bytes for {what}, got {len(data)}"
        )
    return data


def checkpoint_load(path: str | Path) -> Checkpoint:
    """Load a checkpoint; raises on bad magic, version, or truncation."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, len(CHECKPOINT_MAGIC), "magic")
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (bad magic {magic!r})")
        version = int.from_bytes(_read_exact(fh, 4, "version"), "little")
        if version != CHECKPOINT_VERSION:
            raise ValueError(
                f"{path}: checkpoint format version {version} is not supported "
                f"(this build reads version {CHECKPOINT_VERSION})"
            )
        hlen = int.from_bytes(_read_exact(fh, 8, "header length"), "little")
        try:
            header = json.loads(_read_exact(fh, hlen, "header"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: corrupt checkpoint header: {exc}") from exc

        mats = {}
        for spec in header["matrices"]:
            tag = _DTYPE_TAGS[spec["dtype"]]
            shape = tuple(spec["shape"])
            nbytes = int(np.prod(shape)) * np.dtype(tag).itemsize
            raw = _read_exact(fh, nbytes, f"matrix {spec['name']}")
            mats[spec["name"]] = np.frombuffer(raw, dtype=tag).reshape(shape).copy()

    vjson = header["vocab"]
    counts = np.array(vjson["counts"], dtype=np.int64)
    total = int(counts.sum())
    vocab = Vocabulary(
        words=vjson["words"],
        index_of={w: i for i, w in enumerate(vjson["words"])},
        counts=counts,
        total_tokens=total,
        keep_prob=_subsample_keep_prob(counts, total, vjson["subsample_t"]),
        neg_table=_build_neg_table(counts, vjson["neg_table_size"], vjson["neg_alpha"]),
        subsample_t=vjson["subsample_t"],
        neg_alpha=vjson["neg_alpha"],
        min_count=vjson["min_count"],
    )
    subwords = None
    if header["subwords"] is not None:
        sj = header["subwords"]
        subwords = SubwordMap(
            units=sj["units"],
            unit_index={u: i for i, u in enumerate(sj["units"])},
            sets=[list(s) for s in sj["sets"]],
            lemma_lookup={w: list(l) for w, l in sj["lemma_lookup"].items()},
        )
    params = ModelParams(
        mode=Mode(header["mode"]),
        u=mats["u"],
        v=mats.get("v"),
        k=mats.get("k"),
        q=mats.get("q"),
        normalize_attention=header["normalize_attention"],
    )
    config = TrainConfig(**header["config"])
    state = TrainState(**header["state"])
    return Checkpoint(params=params, vocab=vocab, subwords=subwords,
                      config=config, state=state)
