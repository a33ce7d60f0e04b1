"""Command-line entry point: ``qarerank <subcommand> ...``.

Exit status is 0 on success, 2 for invalid input and 1 for anything else.
Error messages go to stderr prefixed with ``error:``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bm25 import Bm25Params
from .dataset_io import (
    PredictionSet,
    load_pair_dataset,
    load_predictions,
    load_qa_dataset,
    write_predictions,
)
from .embeddings import load_word_vectors, skipgram_corpus_from_pairs, train_skipgram
from .ensemble import majority_vote, select_best
from .metrics import evaluate_qa, gold_scores
from .rerank import load_rankings, rerank_all, write_rankings
from .siamese import (
    LABELS,
    SiameseConfig,
    init_model,
    load_checkpoint,
    predict_labels,
    save_checkpoint,
    train,
)

log = logging.getLogger("qarerank")

PREDICTION_DOMAINS = {"binary": ("0", "1"), "graded": ("1", "2", "3", "4")}


class UsageError(Exception):
    """Bad input detected by the CLI itself (exit 2)."""


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return p


def cmd_rank(args) -> None:
    params = Bm25Params(args.bm25_k1, args.bm25_b)
    questions = load_qa_dataset(_existing(args.qa))
    predictions = load_predictions(_existing(args.pred), PREDICTION_DOMAINS[args.mode], task_tag="qa")
    rankings = rerank_all(questions, predictions, mode=args.mode, params=params, scope=args.bm25_scope)
    write_rankings(args.out, rankings)
    log.info("wrote %d rankings to %s", len(rankings), args.out)


def cmd_eval(args) -> None:
    rankings = load_rankings(_existing(args.ranking))
    if not rankings:
        raise UsageError(f"{args.ranking}: no rankings")
    gold = gold_scores(load_qa_dataset(_existing(args.gold)))
    report = evaluate_qa(rankings, gold)
    sys.stdout.write(report.format_text())
    if args.json:
        Path(args.json).write_text(report.to_json(), encoding="utf-8")


def _load_rqe(path: str):
    return load_pair_dataset(_existing(path), LABELS)


def cmd_train_rqe(args) -> None:
    train_set = _load_rqe(args.train)
    valid_set = _load_rqe(args.valid) if args.valid else []
    missing = [ex.example_id for ex in train_set + valid_set if ex.gold_label is None]
    if missing:
        raise UsageError(f"examples without a label: {missing[:3]}")
    if not train_set:
        raise UsageError(f"{args.train}: empty training set")

    if args.vectors:
        table = load_word_vectors(_existing(args.vectors))
        log.info("loaded %d word vectors of dim %d", len(table), table.dim)
    else:
        corpus = skipgram_corpus_from_pairs(train_set)
        table = train_skipgram(
            corpus, dim=args.dim, epochs=args.sg_epochs, window=args.window,
            negatives=args.negatives, lr=args.sg_lr, seed=args.seed,
        )
        log.info("trained %d word vectors of dim %d", len(table), table.dim)

    config = SiameseConfig(
        embedding_dim=table.dim, hidden_dim=args.hidden, ff_dim=args.ff,
        max_len=args.max_len, seed=args.seed,
    )
    model, report = train(
        init_model(config), train_set, valid_set, table,
        epochs=args.epochs, lr=args.lr, batch_size=args.batch, seed=args.seed,
        freeze_embeddings=not args.unfreeze_embeddings,
    )
    save_checkpoint(args.out, model, report.embeddings or table)
    report.checkpoint = str(args.out)
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    if report.epochs:
        last = report.epochs[-1]
        log.info("final epoch: loss %.4f train accuracy %.4f", last.loss, last.train_accuracy)


def cmd_predict_rqe(args) -> None:
    try:
        model, table = load_checkpoint(_existing(args.ckpt))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad checkpoint: {exc}") from None
    if args.vectors:
        table = load_word_vectors(_existing(args.vectors))
    if table is None:
        raise UsageError("checkpoint carries no word vectors; pass --vectors")
    if table.dim != model.config.embedding_dim:
        raise UsageError(f"word vectors have dim {table.dim}, checkpoint expects {model.config.embedding_dim}")
    data = load_pair_dataset(_existing(args.data))
    labels = predict_labels(model, data, table)
    write_predictions(args.out, {ex.example_id: lab for ex, lab in zip(data, labels)})
    log.info("wrote %d predictions to %s", len(labels), args.out)


def _load_prediction_files(paths, task_tag="nli"):
    raw = [load_predictions(_existing(p), task_tag=task_tag) for p in paths]
    domain = tuple(sorted(set().union(*(set(r.label_domain) for r in raw))))
    return [PredictionSet(task_tag, domain, r.entries) for r in raw], domain


def _parse_priority(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--priority must be comma-separated indices, got {text!r}") from None


def cmd_vote(args) -> None:
    sets, _ = _load_prediction_files(args.predictions)
    result = majority_vote(sets, _parse_priority(args.priority))
    write_predictions(args.out, result.labels())
    log.info("voted %d examples, %d resolved by tie-break", len(result.entries), len(result.tie_broken))


def cmd_select(args) -> None:
    sets, _ = _load_prediction_files(list(args.predictions) + [args.gold])
    gold = sets.pop()
    index, acc = select_best(sets, gold)
    sys.stdout.write(json.dumps({"index": index, "path": args.predictions[index], "accuracy": acc}) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qarerank", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", help="bucketed BM25 re-ranking of QA answers")
    p.add_argument("--qa", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--mode", choices=["binary", "graded"], default="graded")
    p.add_argument("--bm25-k1", type=float, default=1.2)
    p.add_argument("--bm25-b", type=float, default=0.75)
    p.add_argument("--bm25-scope", choices=["question", "global"], default="question")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="accuracy, precision, MRR and Spearman rho of rankings")
    p.add_argument("--ranking", required=True)
    p.add_argument("--gold", required=True, help="QA dataset JSONL with gold scores")
    p.add_argument("--json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train-rqe", help="train the Siamese BiLSTM question-entailment model")
    p.add_argument("--train", required=True)
    p.add_argument("--valid")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--vectors", help="pre-trained word vectors (text format)")
    src.add_argument("--dim", type=int, default=50, help="dimension of skip-gram vectors trained on --train")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--ff", type=int, default=128)
    p.add_argument("--max-len", type=int, default=64)
    p.add_argument("--sg-epochs", type=int, default=5)
    p.add_argument("--sg-lr", type=float, default=0.025)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--unfreeze-embeddings", action="store_true")
    p.add_argument("--report", help="write the per-epoch training report as JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_rqe)

    p = sub.add_parser("predict-rqe", help="yes/no predictions from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--vectors", help="override the word vectors stored in the checkpoint")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict_rqe)

    p = sub.add_parser("vote", help="majority vote over prediction files")
    p.add_argument("predictions", nargs="+")
    p.add_argument("--priority", help="tie-break order of input files, e.g. 1,0,2")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vote)

    p = sub.add_parser("select", help="pick the prediction file most accurate against gold")
    p.add_argument("predictions", nargs="+")
    p.add_argument("--gold", required=True)
    p.set_defaults(func=cmd_select)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    if hasattr(args, "seed"):
        log.info("seed %d", args.seed)
    try:
        args.func(args)
    except (UsageError, ValueError) as exc:
        # DatasetError and EmbeddingFormatError are ValueErrors too
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: internal: {exc!r}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
