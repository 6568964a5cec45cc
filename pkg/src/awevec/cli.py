"""Command-line entry point: train, eval, inspect, nn, export, fetch-data.

Diagnostics and human-readable tables go to standard error; machine output
(JSON, vectors) goes to standard output or to files. Exit codes: 0 success,
1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import datasets as datasets_mod
from . import io as io_mod
from .corpus import build_vocab, read_tokens, tokenize
from .eval import evaluate, format_report_table, load_similarity_dataset, nearest_neighbors
from .inspect import attention_table, render_attention_table
from .model import Mode
from .subword import build_subword_map, load_lemma_resource
from .trainer import TrainConfig, save_report, train

logger = logging.getLogger("awevec")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the contract here is exit 1
    def error(self, message):
        raise _UsageError(message)


# train flag -> (TrainConfig field, type); defaults live on TrainConfig
_TRAIN_FLAGS = {
    "--mode": ("mode", str),
    "--dim": ("d", int),
    "--dim-kq": ("d_prime", int),
    "--window": ("b_max", int),
    "--negatives": ("n_neg", int),
    "--epochs": ("epochs", int),
    "--lr": ("initial_lr", float),
    "--min-lr": ("min_lr", float),
    "--min-count": ("min_count", int),
    "--max-vocab": ("max_vocab", int),
    "--subsample": ("subsample_t", float),
    "--neg-table-size": ("neg_table_size", int),
    "--workers": ("workers", int),
    "--seed": ("seed", int),
    "--kq-lr-mult": ("kq_lr_mult", float),
    "--clamp-attention": ("clamp_attention", float),
    "--clamp-logit": ("clamp_logit", float),
    "--dtype": ("dtype", str),
    "--progress-every": ("progress_tokens", int),
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="awevec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    defaults = TrainConfig()
    p_train = sub.add_parser("train", help="train a model and write a checkpoint")
    p_train.add_argument("--corpus", nargs="+", required=True, metavar="PATH",
                         help="UTF-8 text file(s); newline = sentence boundary")
    p_train.add_argument("--out", required=True, metavar="CKPT",
                         help="checkpoint output path")
    p_train.add_argument("--lemmas", metavar="PATH",
                         help="lemma TSV (word<TAB>pos<TAB>lemma) for awe-s subword sets")
    p_train.add_argument("--resume", metavar="CKPT",
                         help="continue a checkpointed run up to --epochs total passes")
    p_train.add_argument("--config", metavar="JSON",
                         help="config file; precedence: flags > config file > defaults")
    p_train.add_argument("--report", metavar="JSON",
                         help="training report path (default: CKPT.report.json)")
    p_train.add_argument("--normalize-attention", action="store_true", default=None,
                         help="softmax-normalize attention weights (ablation; default off)")
    for flag, (field, typ) in _TRAIN_FLAGS.items():
        if flag == "--mode":
            p_train.add_argument(flag, dest=field, choices=[m.value for m in Mode],
                                 help="model type (default: awe)")
            continue
        p_train.add_argument(flag, dest=field, type=typ, metavar=field.upper(),
                             help=f"default: {getattr(defaults, field)}")

    p_eval = sub.add_parser("eval", help="word-similarity evaluation of a checkpoint")
    p_eval.add_argument("--model", required=True, metavar="CKPT")
    p_eval.add_argument("--dataset", nargs="+", required=True, metavar="PATH",
                        help="similarity file(s): word_a, word_b, score")
    p_eval.add_argument("--report", metavar="JSON", help="write scores to this file")

    p_inspect = sub.add_parser("inspect", help="attention table for a masked sentence position")
    p_inspect.add_argument("--model", required=True, metavar="CKPT")
    p_inspect.add_argument("--sentence", required=True)
    p_inspect.add_argument("--mask", required=True, metavar="WORD",
                           help="word to mask (first occurrence)")
    p_inspect.add_argument("--frequent-top-frac", type=float, default=0.001,
                           help="vocabulary share flagged as highly frequent (default 0.001)")

    p_nn = sub.add_parser("nn", help="nearest neighbors by cosine similarity")
    p_nn.add_argument("--model", required=True, metavar="CKPT")
    p_nn.add_argument("--word", required=True)
    p_nn.add_argument("-k", type=int, default=10)

    p_export = sub.add_parser("export", help="export embeddings in word2vec format")
    p_export.add_argument("--model", required=True, metavar="CKPT")
    p_export.add_argument("--out", required=True, metavar="VECTORS")
    p_export.add_argument("--binary", action="store_true",
                          help="word2vec binary format instead of text")

    p_fetch = sub.add_parser("fetch-data", help="download + checksum benchmark datasets")
    p_fetch.add_argument("--dest", metavar="DIR",
                         default=os.environ.get("AWEVEC_DATA_DIR", "data"),
                         help="target directory (default: $AWEVEC_DATA_DIR or ./data)")
    p_fetch.add_argument("--only", nargs="+", metavar="NAME",
                         help=f"subset to fetch; known: {', '.join(sorted(datasets_mod.DEFAULT_REGISTRY))}")
    p_fetch.add_argument("--registry", metavar="JSON",
                         help="alternative dataset registry (mirrors/pins)")
    return parser


def _cmd_train(args) -> int:
    file_cfg = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - {f for f, _ in _TRAIN_FLAGS.values()} - {"normalize_attention"}
        if unknown:
            raise _UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")

    if args.resume:
        ckpt = io_mod.checkpoint_load(args.resume)
        cfg_kwargs = ckpt.config.to_dict()
        if args.epochs is not None:
            cfg_kwargs["epochs"] = args.epochs
        config = TrainConfig(**cfg_kwargs)
        vocab, subwords = ckpt.vocab, ckpt.subwords
        params, report = train(args.corpus, config, vocab, subwords,
                               initial_params=ckpt.params, initial_state=ckpt.state)
        state = ckpt.state
    else:
        cfg_kwargs = dict(file_cfg)
        for field, _ in _TRAIN_FLAGS.values():
            val = getattr(args, field)
            if val is not None:
                cfg_kwargs[field] = val
        if args.normalize_attention is not None:
            cfg_kwargs["normalize_attention"] = args.normalize_attention
        try:
            config = TrainConfig(**cfg_kwargs)
        except (TypeError, ValueError) as exc:
            raise _UsageError(str(exc)) from exc

        logger.info("building vocabulary from %s", ", ".join(args.corpus))
        vocab = build_vocab(
            read_tokens(args.corpus),
            min_count=config.min_count,
            subsample_t=config.subsample_t,
            neg_table_size=config.neg_table_size,
            alpha=config.neg_alpha,
            max_vocab=config.max_vocab,
        )
        logger.info("vocabulary: %d words, %d tokens retained", len(vocab), vocab.total_tokens)

        subwords = None
        if config.mode is Mode.AWE_S:
            if args.lemmas:
                subwords = build_subword_map(vocab, load_lemma_resource(args.lemmas))
                logger.info("subword map: %d units", subwords.n_units)
            else:
                logger.warning(
                    "awe-s without --lemmas: every subword set is the word itself"
                )
                subwords = build_subword_map(vocab, None)
        params, report = train(args.corpus, config, vocab, subwords)
        from .trainer import TrainState
        state = TrainState(**report["state"])

    io_mod.checkpoint_save(params, vocab, subwords, config, args.out, state=state)
    report_path = args.report or f"{args.out}.report.json"
    save_report(report, report_path)
    logger.info("checkpoint: %s | report: %s", args.out, report_path)
    return 0


def _cmd_eval(args) -> int:
    ckpt = io_mod.checkpoint_load(args.model)
    results = []
    for path in args.dataset:
        ds = load_similarity_dataset(path)
        results.append(evaluate(ckpt.params, ckpt.vocab, ds, ckpt.subwords))
    print(format_report_table(results), file=sys.stderr)
    payload = json.dumps([r.to_dict() for r in results], indent=2)
    if args.report:
        Path(args.report).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    return 0


def _cmd_inspect(args) -> int:
    ckpt = io_mod.checkpoint_load(args.model)
    sentence = tokenize(args.sentence)
    mask = args.mask.lower()
    if mask not in sentence:
        raise ValueError(f"mask word {mask!r} does not occur in the sentence")
    table = attention_table(
        sentence, sentence.index(mask), ckpt.params, ckpt.vocab, ckpt.subwords,
        frequent_top_frac=args.frequent_top_frac,
    )
    print(render_attention_table(table), file=sys.stderr)
    print(json.dumps(table, indent=2))
    return 0


def _cmd_nn(args) -> int:
    ckpt = io_mod.checkpoint_load(args.model)
    neighbors = nearest_neighbors(
        args.word.lower(), ckpt.params, ckpt.vocab, ckpt.subwords, k=args.k
    )
    for word, sim in neighbors:
        print(f"{word}\t{sim:.6f}")
    return 0


def _cmd_export(args) -> int:
    ckpt = io_mod.checkpoint_load(args.model)
    io_mod.export_embeddings(ckpt.params, ckpt.vocab, ckpt.subwords,
                             args.out, binary=args.binary)
    logger.info("wrote %s", args.out)
    return 0


def _cmd_fetch(args) -> int:
    registry = datasets_mod.load_registry(args.registry)
    paths = datasets_mod.fetch_all(args.dest, args.only, registry)
    for p in paths:
        print(p)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "inspect": _cmd_inspect,
    "nn": _cmd_nn,
    "export": _cmd_export,
    "fetch-data": _cmd_fetch,
}


def run(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s", force=True)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
