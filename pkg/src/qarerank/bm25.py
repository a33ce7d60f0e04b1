"""Okapi BM25 over small tokenized collections.

IDF uses the non-negative form ``ln(1 + (N - n + 0.5) / (n + 0.5))`` so that
every score is >= 0 even on the tiny per-question answer collections this
package ranks.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

_SPLIT = re.compile(r"[\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters.

    >>> tokenize("Aspirin, 81mg?")
    ['aspirin', '81mg']
    """
    return [t for t in _SPLIT.split(text.lower()) if t]


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if not (self.k1 >= 0 and math.isfinite(self.k1)):
            raise ValueError(f"k1 must be a finite non-negative number, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [0, 1], got {self.b}")


@dataclass(frozen=True)
class Bm25Index:
    docs: tuple[tuple[str, ...], ...]
    doc_lengths: tuple[int, ...]
    avg_doc_length: float
    doc_freq: dict[str, int]
    params: Bm25Params = field(default_factory=Bm25Params)
    term_freqs: tuple[Counter, ...] = field(default=(), repr=False)

    @property
    def n_docs(self) -> int:
        return len(self.docs)

    def idf(self, term: str) -> float:
        n_t = self.doc_freq.get(term, 0)
        if n_t == 0:
            return 0.0
        return math.log(1.0 + (self.n_docs - n_t + 0.5) / (n_t + 0.5))


def build_index(docs: Sequence[Sequence[str]], params: Bm25Params | None = None) -> Bm25Index:
    if len(docs) == 0:
        raise ValueError("cannot build a BM25 index over an empty collection")
    params = params or Bm25Params()
    frozen = tuple(tuple(d) for d in docs)
    lengths = tuple(len(d) for d in frozen)
    term_freqs = tuple(Counter(d) for d in frozen)
    doc_freq: Counter = Counter()
    for tf in term_freqs:
        doc_freq.update(tf.keys())
    return Bm25Index(
        docs=frozen,
        doc_lengths=lengths,
        avg_doc_length=sum(lengths) / len(lengths),
        doc_freq=dict(doc_freq),
        params=params,
        term_freqs=term_freqs,
    )


def score(index: Bm25Index, query: Sequence[str], doc_index: int) -> float:
    """BM25 score of one document; repeated query terms count once."""
    if not 0 <= doc_index < index.n_docs:
        raise IndexError(f"doc_index {doc_index} out of range for {index.n_docs} documents")
    k1, b = index.params.k1, index.params.b
    tf = index.term_freqs[doc_index]
    # all-empty collections have avgdl 0; every tf is then 0 and the norm is unused
    if index.avg_doc_length > 0:
        norm = k1 * (1.0 - b + b * index.doc_lengths[doc_index] / index.avg_doc_length)
    else:
        norm = k1
    total = 0.0
    for term in dict.fromkeys(query):
        f = tf.get(term, 0)
        if f == 0:
            continue
        total += index.idf(term) * f * (k1 + 1.0) / (f + norm)
    return total


def score_all(index: Bm25Index, query: Sequence[str]) -> list[tuple[int, float]]:
    return [(i, score(index, query, i)) for i in range(index.n_docs)]
