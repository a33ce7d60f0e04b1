"""Bucketed answer re-ranking.

Answers are grouped by their predicted label, groups are concatenated from
the most to the least relevant label, and each group is ordered by
descending BM25 score of (question, answer). Equal scores keep the input
(retrieval system) order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .bm25 import Bm25Index, Bm25Params, build_index, score, tokenize
from .dataset_io import DatasetError, PredictionSet, QaQuestion, pair_id

BINARY_ORDER = ("1", "0")
GRADED_ORDER = ("4", "3", "2", "1")
YES_LABELS = {"binary": frozenset({"1"}), "graded": frozenset({"3", "4"})}
MODES = ("binary", "graded")


@dataclass(frozen=True)
class RankedEntry:
    answer_id: str
    predicted_label: str
    bm25_score: float


@dataclass(frozen=True)
class RankedList:
    question_id: str
    entries: tuple[RankedEntry, ...]
    mode: str | None = None

    @property
    def ranking(self) -> list[str]:
        return [e.answer_id for e in self.entries]

    @property
    def labels(self) -> list[str]:
        return [e.predicted_label for e in self.entries]

    @property
    def bm25(self) -> list[float]:
        return [e.bm25_score for e in self.entries]

    @property
    def markings(self) -> list[str]:
        """YES/NO per entry: label 1 under binary mode, 3 or 4 under graded."""
        return [yes_no(label, self.mode) for label in self.labels]

    def to_record(self) -> dict:
        record = {
            "question_id": self.question_id,
            "ranking": self.ranking,
            "labels": self.labels,
            "bm25": self.bm25,
        }
        if self.mode is not None:
            record["mode"] = self.mode
        return record


def yes_no(label: str, mode: str | None) -> str:
    if mode not in YES_LABELS:
        raise ValueError(f"YES/NO marking needs mode binary or graded, got {mode!r}")
    return "YES" if label in YES_LABELS[mode] else "NO"


def bucket_order(
    labels: Sequence[str],
    scores: Sequence[float],
    label_order: Sequence[str],
) -> list[int]:
    """Positions 0..n-1 ordered by (label bucket, -score, position)."""
    bucket = {label: i for i, label in enumerate(label_order)}
    for label in labels:
        if label not in bucket:
            raise DatasetError(f"label {label!r} not covered by label order {list(label_order)}")
    return sorted(range(len(labels)), key=lambda i: (bucket[labels[i]], -scores[i], i))


def question_index(question: QaQuestion, params: Bm25Params | None = None) -> Bm25Index:
    return build_index([tokenize(a.answer_text) for a in question.answers], params)


def rerank_bucketed(
    question: QaQuestion,
    predictions: PredictionSet | dict,
    label_order: Sequence[str],
    index: Bm25Index | None = None,
    doc_indices: Sequence[int] | None = None,
    mode: str | None = None,
) -> RankedList:
    """Re-rank one question's answers by predicted label, then BM25.

    ``index`` defaults to a fresh index over this question's answers. To
    score against a shared collection pass that index together with
    ``doc_indices`` giving each answer's document position in it.
    """
    if index is None:
        index = question_index(question)
    if doc_indices is None:
        doc_indices = range(len(question.answers))
    if len(doc_indices) != len(question.answers):
        raise ValueError("doc_indices must give one document per answer")

    labels = []
    for answer in question.answers:
        key = pair_id(question.question_id, answer.answer_id)
        if key not in predictions:
            raise DatasetError(f"no prediction for answer {key!r}")
        labels.append(predictions[key])

    query = tokenize(question.question_text)
    scores = [score(index, query, d) for d in doc_indices]
    # original_rank is 1..n in answer order, so position i breaks ties the same way
    order = bucket_order(labels, scores, label_order)
    entries = tuple(
        RankedEntry(question.answers[i].answer_id, labels[i], scores[i]) for i in order
    )
    return RankedList(question.question_id, entries, mode)


def rerank_run1(question: QaQuestion, predictions, index=None, doc_indices=None) -> RankedList:
    """Binary predictions: label-1 answers first, each group by BM25."""
    return rerank_bucketed(question, predictions, BINARY_ORDER, index, doc_indices, mode="binary")


def rerank_run2(question: QaQuestion, predictions, index=None, doc_indices=None) -> RankedList:
    """Graded predictions 4 > 3 > 2 > 1, each group by BM25."""
    return rerank_bucketed(question, predictions, GRADED_ORDER, index, doc_indices, mode="graded")


def rerank_all(
    questions: Sequence[QaQuestion],
    predictions: PredictionSet,
    mode: str = "graded",
    params: Bm25Params | None = None,
    scope: str = "question",
) -> list[RankedList]:
    """Re-rank every question; output sorted by question id.

    ``scope`` selects where BM25 collection statistics come from: each
    question's own answers (``question``) or all answers in the dataset
    (``global``).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if scope not in ("question", "global"):
        raise ValueError(f"bm25 scope must be 'question' or 'global', got {scope!r}")
    run = rerank_run1 if mode == "binary" else rerank_run2

    shared = None
    offsets = []
    if scope == "global":
        docs = []
        for q in questions:
            offsets.append(len(docs))
            docs.extend(tokenize(a.answer_text) for a in q.answers)
        shared = build_index(docs, params)

    results = []
    for qi, q in enumerate(questions):
        if shared is None:
            results.append(run(q, predictions, question_index(q, params)))
        else:
            start = offsets[qi]
            results.append(run(q, predictions, shared, range(start, start + len(q.answers))))
    return sorted(results, key=lambda r: r.question_id)


def original_order(question: QaQuestion) -> list[str]:
    return [a.answer_id for a in sorted(question.answers, key=lambda a: a.original_rank)]


def write_rankings(path: str | Path, rankings: Iterable[RankedList]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in rankings:
            fh.write(json.dumps(r.to_record(), ensure_ascii=False) + "\n")


def _infer_mode(labels: Sequence[str]) -> str:
    present = set(labels)
    if "0" in present:
        return "binary"
    if present & {"2", "3", "4"}:
        return "graded"
    raise DatasetError("cannot tell binary from graded labels; add a \"mode\" field")


def load_rankings(path: str | Path) -> list[RankedList]:
    """Read ranking JSONL. Lines without ``mode`` get it inferred from labels."""
    out = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
                qid = rec["question_id"]
                ranking = [str(a) for a in rec["ranking"]]
                labels = [str(label) for label in rec["labels"]]
                bm25 = [float(s) for s in rec.get("bm25", [0.0] * len(ranking))]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"malformed ranking record ({exc})", path, lineno) from None
            if not (len(ranking) == len(labels) == len(bm25)):
                raise DatasetError("ranking, labels and bm25 lengths differ", path, lineno)
            if len(set(ranking)) != len(ranking):
                raise DatasetError(f"duplicate answer ids in ranking of {qid!r}", path, lineno)
            if qid in seen:
                raise DatasetError(f"duplicate question id {qid!r}", path, lineno)
            seen.add(qid)
            mode = rec.get("mode")
            if mode is None:
                try:
                    mode = _infer_mode(labels)
                except DatasetError as exc:
                    raise DatasetError(str(exc), path, lineno) from None
            elif mode not in MODES:
                raise DatasetError(f"unknown mode {mode!r}", path, lineno)
            entries = tuple(RankedEntry(a, l, s) for a, l, s in zip(ranking, labels, bm25))
            out.append(RankedList(qid, entries, mode))
    return out
