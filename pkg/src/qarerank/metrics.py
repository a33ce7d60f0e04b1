"""Evaluation measures for pair classification and answer ranking."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .dataset_io import DatasetError, PredictionSet, QaQuestion, pair_id
from .rerank import RankedList

RELEVANT_SCORES = frozenset({3, 4})


def _check_ids(predicted: PredictionSet, gold: PredictionSet) -> None:
    if predicted.ids() != gold.ids():
        missing = sorted(gold.ids() - predicted.ids())[:3]
        extra = sorted(predicted.ids() - gold.ids())[:3]
        raise DatasetError(f"id sets differ (missing {missing}, unexpected {extra})")


def accuracy(predicted: PredictionSet, gold: PredictionSet) -> float:
    _check_ids(predicted, gold)
    if len(gold) == 0:
        raise DatasetError("accuracy is undefined on an empty set")
    hits = sum(predicted[k] == v for k, v in gold.entries.items())
    return hits / len(gold)


def precision_yes(predicted: PredictionSet, gold: PredictionSet, yes: str = "YES") -> float | None:
    """TP / (TP + FP) for the YES class; ``None`` when nothing was predicted YES."""
    _check_ids(predicted, gold)
    flagged = [k for k, v in predicted.entries.items() if v == yes]
    if not flagged:
        return None
    return sum(gold[k] == yes for k in flagged) / len(flagged)


def reciprocal_rank(ranking: Sequence[str], gold_scores: Mapping[str, int]) -> float:
    for pos, answer_id in enumerate(ranking, start=1):
        if answer_id not in gold_scores or gold_scores[answer_id] is None:
            raise DatasetError(f"no gold score for answer {answer_id!r}")
        if gold_scores[answer_id] in RELEVANT_SCORES:
            return 1.0 / pos
    return 0.0


def mean_reciprocal_rank(
    rankings: Sequence[RankedList | Sequence[str]],
    gold: Mapping[str, Mapping[str, int]],
    question_ids: Sequence[str] | None = None,
) -> float:
    """Mean of 1/position of the first answer with gold score 3 or 4.

    ``rankings`` are :class:`RankedList` objects, or plain answer-id lists
    together with ``question_ids``. Questions with no relevant answer count 0.
    """
    if not rankings:
        raise DatasetError("MRR is undefined without rankings")
    rrs = []
    for i, r in enumerate(rankings):
        if isinstance(r, RankedList):
            qid, order = r.question_id, r.ranking
        else:
            qid, order = question_ids[i], list(r)
        if qid not in gold:
            raise DatasetError(f"no gold scores for question {qid!r}")
        rrs.append(reciprocal_rank(order, gold[qid]))
    return float(np.mean(rrs))


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    dx = x - x.mean()
    dy = y - y.mean()
    denom = np.sqrt((dx * dx).sum() * (dy * dy).sum())
    if denom == 0.0:
        return None
    return float(np.clip((dx * dy).sum() / denom, -1.0, 1.0))


def spearman_rho(ranking: RankedList | Sequence[str], gold_scores: Mapping[str, int]) -> float | None:
    """Rank correlation between system order and gold scores.

    The top-ranked answer is treated as the system's highest value, so a
    ranking sorted by descending gold score gives +1. Ties use average
    ranks. Returns ``None`` when either side is constant.
    """
    order = ranking.ranking if isinstance(ranking, RankedList) else list(ranking)
    if len(order) < 2:
        raise DatasetError("spearman rho needs at least two answers")
    try:
        gold = np.array([gold_scores[a] for a in order], dtype=float)
    except KeyError as exc:
        raise DatasetError(f"no gold score for answer {exc.args[0]!r}") from None
    system = rankdata(-np.arange(len(order), dtype=float))
    return _pearson(system, rankdata(gold))


@dataclass
class QuestionDiagnostics:
    question_id: str
    n_answers: int
    reciprocal_rank: float
    spearman_rho: float | None


@dataclass
class MetricsReport:
    accuracy: float
    precision: float | None
    mrr: float
    spearman_rho: float | None
    n_questions: int
    n_pairs: int
    rho_skipped: int
    per_question: list[QuestionDiagnostics] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def format_text(self) -> str:
        def fmt(v):
            return "null" if v is None else f"{v:.4f}"

        lines = [
            f"questions      {self.n_questions}",
            f"pairs          {self.n_pairs}",
            f"accuracy       {fmt(self.accuracy)}",
            f"precision      {fmt(self.precision)}",
            f"mrr            {fmt(self.mrr)}",
            f"spearman_rho   {fmt(self.spearman_rho)}  ({self.rho_skipped} questions undefined)",
        ]
        return "\n".join(lines) + "\n"


def gold_scores(questions: Sequence[QaQuestion]) -> dict[str, dict[str, int]]:
    """question_id -> answer_id -> gold reference score."""
    out = {}
    for q in questions:
        scores = {}
        for a in q.answers:
            if a.gold_reference_score is None:
                raise DatasetError(f"answer {pair_id(q.question_id, a.answer_id)!r} has no gold score")
            scores[a.answer_id] = a.gold_reference_score
        out[q.question_id] = scores
    return out


def evaluate_qa(rankings: Sequence[RankedList], gold: Mapping[str, Mapping[str, int]]) -> MetricsReport:
    """Accuracy and precision over YES/NO pair markings, MRR and mean rho over questions.

    Rho is macro-averaged over questions where it is defined; the number of
    skipped questions is reported.
    """
    if not rankings:
        raise DatasetError("no rankings to evaluate")
    ranked_ids = {r.question_id for r in rankings}
    if len(ranked_ids) != len(rankings):
        raise DatasetError("duplicate question ids among rankings")
    if ranked_ids != set(gold):
        raise DatasetError(
            f"question sets differ (missing {sorted(set(gold) - ranked_ids)[:3]}, "
            f"unexpected {sorted(ranked_ids - set(gold))[:3]})"
        )

    predicted, truth = {}, {}
    per_question = []
    for r in sorted(rankings, key=lambda r: r.question_id):
        scores = gold[r.question_id]
        if set(r.ranking) != set(scores):
            raise DatasetError(f"ranking for {r.question_id!r} does not cover exactly its gold answers")
        for aid, mark in zip(r.ranking, r.markings):
            key = pair_id(r.question_id, aid)
            predicted[key] = mark
            truth[key] = "YES" if scores[aid] in RELEVANT_SCORES else "NO"
        rho = spearman_rho(r, scores) if len(r.entries) >= 2 else None
        per_question.append(
            QuestionDiagnostics(r.question_id, len(r.entries), reciprocal_rank(r.ranking, scores), rho)
        )

    domain = ("YES", "NO")
    pred_set = PredictionSet("qa", domain, predicted)
    gold_set = PredictionSet("qa", domain, truth)
    rhos = [d.spearman_rho for d in per_question if d.spearman_rho is not None]
    return MetricsReport(
        accuracy=accuracy(pred_set, gold_set),
        precision=precision_yes(pred_set, gold_set),
        mrr=float(np.mean([d.reciprocal_rank for d in per_question])),
        spearman_rho=float(np.mean(rhos)) if rhos else None,
        n_questions=len(per_question),
        n_pairs=len(truth),
        rho_skipped=len(per_question) - len(rhos),
        per_question=per_question,
    )
