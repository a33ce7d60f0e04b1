"""Combining several models' predictions."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .dataset_io import DatasetError, PredictionSet
from .metrics import accuracy


@dataclass(frozen=True)
class VoteResult:
    entries: dict[str, tuple[str, dict[str, int]]]
    tie_broken: frozenset[str] = field(default_factory=frozenset)

    def labels(self) -> dict[str, str]:
        return {k: v[0] for k, v in self.entries.items()}

    def as_prediction_set(self, task_tag: str, label_domain: Sequence[str]) -> PredictionSet:
        return PredictionSet(task_tag, tuple(label_domain), self.labels())


def _check_compatible(prediction_sets: Sequence[PredictionSet]) -> None:
    if not prediction_sets:
        raise DatasetError("need at least one prediction set")
    ids = prediction_sets[0].ids()
    domain = tuple(prediction_sets[0].label_domain)
    for i, p in enumerate(prediction_sets[1:], start=1):
        if p.ids() != ids:
            raise DatasetError(f"prediction set {i} covers different example ids than set 0")
        if tuple(p.label_domain) != domain:
            raise DatasetError(f"prediction set {i} has label domain {list(p.label_domain)}, expected {list(domain)}")


def majority_vote(
    prediction_sets: Sequence[PredictionSet],
    tie_break_priority: Sequence[int] | None = None,
) -> VoteResult:
    """Most-voted label per example.

    On a tie, the tied label predicted by the set that comes first in
    ``tie_break_priority`` wins (default: input order). Output follows the
    example order of the first set.
    """
    _check_compatible(prediction_sets)
    n = len(prediction_sets)
    priority = list(range(n)) if tie_break_priority is None else list(tie_break_priority)
    if sorted(priority) != list(range(n)):
        raise DatasetError(f"tie-break priority must be a permutation of 0..{n - 1}, got {priority}")

    entries = {}
    tie_broken = set()
    for example_id in prediction_sets[0].entries:
        votes = [p[example_id] for p in prediction_sets]
        histogram = dict(Counter(votes))
        top = max(histogram.values())
        tied = {label for label, c in histogram.items() if c == top}
        if len(tied) == 1:
            winner = next(iter(tied))
        else:
            tie_broken.add(example_id)
            winner = next(votes[i] for i in priority if votes[i] in tied)
        entries[example_id] = (winner, histogram)
    return VoteResult(entries, frozenset(tie_broken))


def select_best(prediction_sets: Sequence[PredictionSet], gold: PredictionSet) -> tuple[int, float]:
    """Index and accuracy of the most accurate set; ties go to the lowest index."""
    if not prediction_sets:
        raise DatasetError("need at least one prediction set")
    best, best_acc = 0, -1.0
    for i, p in enumerate(prediction_sets):
        acc = accuracy(p, gold)
        if acc > best_acc:
            best, best_acc = i, acc
    return best, best_acc
