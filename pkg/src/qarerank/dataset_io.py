"""Readers and writers for the line-oriented JSONL inputs.

Three record shapes are supported:

* pair datasets   ``{"id", "text_a", "text_b", "label"?, "score"?}``
* QA datasets     ``{"question_id", "question", "answer_id", "answer", "score"?}``
* predictions     ``{"id", "label"}``

All loaders validate eagerly and raise :class:`DatasetError` carrying the
offending line number, so a bad upstream file fails before any work starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

REFERENCE_SCORES = (1, 2, 3, 4)
TASK_TAGS = ("nli", "rqe", "qa")


class DatasetError(ValueError):
    """Raised for malformed or inconsistent input data."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        self.path = None if path is None else str(path)
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class TextPairExample:
    example_id: str
    text_a: str
    text_b: str
    gold_label: str | None = None
    reference_score: int | None = None


@dataclass(frozen=True)
class AnswerCandidate:
    answer_id: str
    answer_text: str
    original_rank: int
    gold_reference_score: int | None = None
    predicted_label: int | None = None


@dataclass(frozen=True)
class QaQuestion:
    question_id: str
    question_text: str
    answers: tuple[AnswerCandidate, ...]

    def __post_init__(self):
        if not self.answers:
            raise DatasetError(f"question {self.question_id!r} has no answers")
        ids = [a.answer_id for a in self.answers]
        if len(set(ids)) != len(ids):
            raise DatasetError(f"question {self.question_id!r} has duplicate answer ids")
        ranks = [a.original_rank for a in self.answers]
        if ranks != list(range(1, len(ranks) + 1)):
            raise DatasetError(f"question {self.question_id!r}: original ranks must be 1..{len(ranks)}")


@dataclass(frozen=True)
class PredictionSet:
    """Externally produced labels keyed by example id.

    ``entries`` keeps file order, which the CLI relies on when echoing a
    prediction file back out.
    """

    task_tag: str
    label_domain: tuple[str, ...]
    entries: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.task_tag not in TASK_TAGS:
            raise DatasetError(f"unknown task tag {self.task_tag!r}")
        domain = set(self.label_domain)
        for example_id, label in self.entries.items():
            if label not in domain:
                raise DatasetError(f"label {label!r} for {example_id!r} not in domain {list(self.label_domain)}")

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, example_id: str) -> str:
        return self.entries[example_id]

    def __contains__(self, example_id: object) -> bool:
        return example_id in self.entries

    def ids(self) -> set[str]:
        return set(self.entries)


def pair_id(question_id: str, answer_id: str) -> str:
    return f"{question_id}#{answer_id}"


def _iter_records(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"malformed JSON ({exc.msg})", path, lineno) from None
            if not isinstance(record, dict):
                raise DatasetError("record must be a JSON object", path, lineno)
            yield lineno, record


def _require_str(record: dict, key: str, path, lineno: int, nonempty: bool = False) -> str:
    value = record.get(key)
    if not isinstance(value, str):
        raise DatasetError(f"field {key!r} missing or not a string", path, lineno)
    if nonempty and not value.strip():
        raise DatasetError(f"field {key!r} is empty", path, lineno)
    return value


def _optional_score(record: dict, path, lineno: int) -> int | None:
    score = record.get("score")
    if score is None:
        return None
    if isinstance(score, bool) or not isinstance(score, int):
        raise DatasetError(f"score must be an integer, got {score!r}", path, lineno)
    if score not in REFERENCE_SCORES:
        raise DatasetError(f"score out of range: {score} (expected 1-4)", path, lineno)
    return score


def load_pair_dataset(path: str | Path, label_domain: Sequence[str] | None = None) -> list[TextPairExample]:
    """Read a pair dataset, validating ids, texts, labels and scores.

    When ``label_domain`` is given every present label must belong to it.
    """
    domain = None if label_domain is None else set(label_domain)
    examples = []
    seen = set()
    for lineno, record in _iter_records(path):
        example_id = _require_str(record, "id", path, lineno, nonempty=True)
        if example_id in seen:
            raise DatasetError(f"duplicate example id {example_id!r}", path, lineno)
        seen.add(example_id)
        text_a = _require_str(record, "text_a", path, lineno, nonempty=True)
        text_b = _require_str(record, "text_b", path, lineno, nonempty=True)
        label = record.get("label")
        if label is not None:
            if not isinstance(label, str):
                raise DatasetError(f"label must be a string, got {label!r}", path, lineno)
            if domain is not None and label not in domain:
                raise DatasetError(f"label {label!r} not in domain {list(label_domain)}", path, lineno)
        score = _optional_score(record, path, lineno)
        examples.append(TextPairExample(example_id, text_a, text_b, label, score))
    return examples


def load_qa_dataset(path: str | Path) -> list[QaQuestion]:
    """Read one-answer-per-line QA records and group them by question.

    Questions appear in order of first encounter; answers keep encounter
    order and receive ``original_rank`` 1, 2, ... in that order, even when
    a question's lines are not contiguous in the file.
    """
    texts: dict[str, str] = {}
    grouped: dict[str, list[tuple[str, str, int | None]]] = {}
    seen: set[tuple[str, str]] = set()
    for lineno, record in _iter_records(path):
        qid = _require_str(record, "question_id", path, lineno, nonempty=True)
        question = _require_str(record, "question", path, lineno, nonempty=True)
        aid = _require_str(record, "answer_id", path, lineno, nonempty=True)
        answer = _require_str(record, "answer", path, lineno, nonempty=True)
        score = _optional_score(record, path, lineno)
        if (qid, aid) in seen:
            raise DatasetError(f"duplicate answer {aid!r} for question {qid!r}", path, lineno)
        seen.add((qid, aid))
        if qid in texts and texts[qid] != question:
            raise DatasetError(f"question {qid!r} has inconsistent text", path, lineno)
        texts.setdefault(qid, question)
        grouped.setdefault(qid, []).append((aid, answer, score))

    questions = []
    for qid, rows in grouped.items():
        answers = tuple(
            AnswerCandidate(aid, text, rank, score)
            for rank, (aid, text, score) in enumerate(rows, start=1)
        )
        questions.append(QaQuestion(qid, texts[qid], answers))
    return questions


def flatten_qa_to_pairs(questions: Iterable[QaQuestion]) -> list[TextPairExample]:
    """One (question, answer, score) pair per answer, ids ``qid#aid``."""
    return [
        TextPairExample(
            example_id=pair_id(q.question_id, a.answer_id),
            text_a=q.question_text,
            text_b=a.answer_text,
            reference_score=a.gold_reference_score,
        )
        for q in questions
        for a in q.answers
    ]


def binarize_score(score: int) -> int:
    if score not in REFERENCE_SCORES:
        raise DatasetError(f"reference score must be in 1-4, got {score!r}")
    return 1 if score >= 3 else 0


def binarize_reference_scores(pairs: Sequence[TextPairExample]) -> list[TextPairExample]:
    """Map reference scores 3/4 to 1 and 1/2 to 0, returning new records.

    The output scores lie in {0, 1} and are therefore rejected as input to a
    second application.
    """
    out = []
    for pair in pairs:
        if pair.reference_score is None:
            raise DatasetError(f"pair {pair.example_id!r} has no reference score")
        out.append(replace(pair, reference_score=binarize_score(pair.reference_score)))
    return out


def load_predictions(
    path: str | Path,
    label_domain: Sequence[str] | None = None,
    task_tag: str = "qa",
) -> PredictionSet:
    """Read a prediction file. Duplicate ids are an error, never last-wins.

    Without ``label_domain`` the domain is the sorted set of labels seen.
    """
    domain = None if label_domain is None else tuple(label_domain)
    allowed = None if domain is None else set(domain)
    entries: dict[str, str] = {}
    for lineno, record in _iter_records(path):
        example_id = _require_str(record, "id", path, lineno, nonempty=True)
        label = record.get("label")
        if isinstance(label, int) and not isinstance(label, bool):
            label = str(label)
        if not isinstance(label, str):
            raise DatasetError(f"label missing or not a string for {example_id!r}", path, lineno)
        if example_id in entries:
            raise DatasetError(f"duplicate example id {example_id!r}", path, lineno)
        if allowed is not None and label not in allowed:
            raise DatasetError(f"unknown label {label!r} (domain {list(domain)})", path, lineno)
        entries[example_id] = label
    if domain is None:
        domain = tuple(sorted(set(entries.values())))
    return PredictionSet(task_tag, domain, entries)


def _write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_pair_dataset(path: str | Path, examples: Iterable[TextPairExample]) -> None:
    records = []
    for ex in examples:
        record = {"id": ex.example_id, "text_a": ex.text_a, "text_b": ex.text_b}
        if ex.gold_label is not None:
            record["label"] = ex.gold_label
        if ex.reference_score is not None:
            record["score"] = ex.reference_score
        records.append(record)
    _write_jsonl(path, records)


def write_qa_dataset(path: str | Path, questions: Iterable[QaQuestion]) -> None:
    records = []
    for q in questions:
        for a in q.answers:
            record = {
                "question_id": q.question_id,
                "question": q.question_text,
                "answer_id": a.answer_id,
                "answer": a.answer_text,
            }
            if a.gold_reference_score is not None:
                record["score"] = a.gold_reference_score
            records.append(record)
    _write_jsonl(path, records)


def write_predictions(path: str | Path, predictions: PredictionSet | Mapping[str, str]) -> None:
    entries = predictions.entries if isinstance(predictions, PredictionSet) else predictions
    _write_jsonl(path, ({"id": k, "label": v} for k, v in entries.items()))
