"""Attention word embeddings (AWE, AWE-S) and a CBOW baseline.

Train with negative-sampling SGD over plain text, evaluate on
word-similarity benchmarks, and inspect what the attention weights attend
to. See the README for the command-line interface; the same functionality
is available programmatically from the submodules re-exported here.
"""

from .corpus import (
    TrainingWindow,
    Vocabulary,
    build_vocab,
    load_vocab_tsv,
    read_sentences,
    read_tokens,
    tokenize,
    windows,
)
from .eval import (
    EvalResult,
    SimilarityDataset,
    cosine,
    evaluate,
    load_similarity_dataset,
    nearest_neighbors,
    spearman,
)
from .inspect import attention_table, render_attention_table
from .io import (
    Checkpoint,
    checkpoint_load,
    checkpoint_save,
    export_embeddings,
    load_embeddings,
)
from .model import (
    Mode,
    ModelParams,
    WindowScore,
    attention_weights,
    context_vector,
    full_softmax_prob,
    init_params,
    window_loss,
    word_vector,
)
from .subword import SubwordMap, build_subword_map, load_lemma_resource, load_subword_tsv
from .trainer import Gradients, TrainConfig, TrainState, apply_update, gradients, train

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "EvalResult",
    "Gradients",
    "Mode",
    "ModelParams",
    "SimilarityDataset",
    "SubwordMap",
    "TrainConfig",
    "TrainState",
    "TrainingWindow",
    "Vocabulary",
    "WindowScore",
    "apply_update",
    "attention_table",
    "attention_weights",
    "build_subword_map",
    "build_vocab",
    "checkpoint_load",
    "checkpoint_save",
    "context_vector",
    "cosine",
    "evaluate",
    "export_embeddings",
    "full_softmax_prob",
    "gradients",
    "init_params",
    "load_embeddings",
    "load_lemma_resource",
    "load_similarity_dataset",
    "load_subword_tsv",
    "load_vocab_tsv",
    "nearest_neighbors",
    "read_sentences",
    "read_tokens",
    "render_attention_table",
    "spearman",
    "tokenize",
    "train",
    "window_loss",
    "windows",
    "word_vector",
]
