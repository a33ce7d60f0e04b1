"""Word vectors: text-format loading/saving and skip-gram training.

The trainer is a small single-threaded skip-gram with negative sampling:
input vectors start uniform in [-0.5/dim, 0.5/dim], output vectors start
at zero, noise words come from the unigram distribution raised to 0.75 and
the learning rate decays linearly to ``lr * 1e-4`` over training.

The exported vector of a word is the sum of its input and output vectors.
Input vectors alone only encode shared contexts; adding the output side
also makes words that co-occur with each other point the same way.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .bm25 import tokenize

OOV_POLICIES = ("zero_vector", "mean_vector")


class EmbeddingFormatError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingTable:
    vocab: dict[str, int]
    vectors: np.ndarray
    oov_policy: str = "zero_vector"

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[1] < 1:
            raise ValueError("vectors must be a 2-D array with at least one column")
        if self.oov_policy not in OOV_POLICIES:
            raise ValueError(f"oov_policy must be one of {OOV_POLICIES}")
        if any(not 0 <= i < self.vectors.shape[0] for i in self.vocab.values()):
            raise ValueError("vocabulary index out of range")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("vectors contain non-finite values")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, token: object) -> bool:
        return token in self.vocab


def lookup(table: EmbeddingTable, token: str) -> np.ndarray:
    """Row for ``token``; zeros or the column mean for unknown tokens."""
    idx = table.vocab.get(token)
    if idx is not None:
        return table.vectors[idx].copy()
    if table.oov_policy == "mean_vector":
        return table.vectors.mean(axis=0)
    return np.zeros(table.dim)


def load_word_vectors(path: str | Path, oov_policy: str = "zero_vector") -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingFormatError(f"{path}:1: header must be '<vocab_size> <dim>'")
        try:
            size, dim = int(header[0]), int(header[1])
        except ValueError:
            raise EmbeddingFormatError(f"{path}:1: header values must be integers") from None
        if size < 1:
            raise EmbeddingFormatError(f"{path}:1: empty vocabulary")
        if dim < 1:
            raise EmbeddingFormatError(f"{path}:1: dimension must be positive")
        vocab: dict[str, int] = {}
        vectors = np.empty((size, dim), dtype=np.float64)
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if parts == [""]:
                continue
            if len(vocab) == size:
                raise EmbeddingFormatError(f"{path}:{lineno}: more rows than the declared {size}")
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise EmbeddingFormatError(f"{path}:{lineno}: expected {dim} values, got {len(values)}")
            if word in vocab:
                raise EmbeddingFormatError(f"{path}:{lineno}: duplicate word {word!r}")
            try:
                row = np.array([float(v) for v in values])
            except ValueError:
                raise EmbeddingFormatError(f"{path}:{lineno}: non-numeric value") from None
            if not np.all(np.isfinite(row)):
                raise EmbeddingFormatError(f"{path}:{lineno}: non-finite value")
            vectors[len(vocab)] = row
            vocab[word] = len(vocab)
    if len(vocab) != size:
        raise EmbeddingFormatError(f"{path}: header declares {size} rows, found {len(vocab)}")
    return EmbeddingTable(vocab, vectors, oov_policy)


def save_word_vectors(path: str | Path, table: EmbeddingTable) -> None:
    words = sorted(table.vocab, key=table.vocab.__getitem__)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(words)} {table.dim}\n")
        for w in words:
            fh.write(w + " " + " ".join(repr(float(v)) for v in table.vectors[table.vocab[w]]) + "\n")


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def skipgram_loss_and_grads(
    w_in: np.ndarray,
    w_out: np.ndarray,
    center: int,
    context: int,
    negatives: Sequence[int],
) -> tuple[float, np.ndarray, np.ndarray]:
    """Negative-sampling loss for one (center, context) pair.

    ``-log s(u_ctx . v) - sum_k log s(-u_k . v)`` where ``v = w_in[center]``
    and ``u = w_out``. Returns the loss, the gradient w.r.t. ``v`` and the
    gradient w.r.t. the output rows ``[context, *negatives]`` (one row each,
    duplicates not merged).
    """
    v = w_in[center]
    rows = np.concatenate(([context], np.asarray(negatives, dtype=np.int64)))
    u = w_out[rows]
    logits = u @ v
    sign = np.ones(len(rows))
    sign[1:] = -1.0
    # -log s(z) = logaddexp(0, -z)
    loss = float(np.logaddexp(0.0, -sign * logits).sum())
    coeff = _sigmoid(logits)
    coeff[0] -= 1.0
    grad_v = coeff @ u
    grad_u = np.outer(coeff, v)
    return loss, grad_v, grad_u


def build_vocab(corpus: Sequence[Sequence[str]]) -> tuple[dict[str, int], np.ndarray]:
    """Vocabulary in descending count order (ties by first appearance) and counts."""
    counts = Counter(t for sent in corpus for t in sent)
    first = {}
    for sent in corpus:
        for t in sent:
            first.setdefault(t, len(first))
    words = sorted(counts, key=lambda w: (-counts[w], first[w]))
    return {w: i for i, w in enumerate(words)}, np.array([counts[w] for w in words], dtype=np.float64)


def init_input_vectors(n_words: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.random((n_words, dim)) - 0.5) / dim


def train_skipgram(
    corpus: Sequence[Sequence[str]],
    dim: int = 50,
    epochs: int = 5,
    window: int = 5,
    negatives: int = 5,
    lr: float = 0.025,
    seed: int = 1,
    loss_log: list | None = None,
) -> EmbeddingTable:
    """Train word vectors on tokenized sentences.

    Fully deterministic for a given seed. When ``loss_log`` is a list the
    per-pair loss (before the update) is appended to it.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if epochs < 0 or window < 1 or negatives < 0:
        raise ValueError("epochs must be >= 0, window >= 1, negatives >= 0")
    sentences = [list(s) for s in corpus if len(s) > 0]
    if not sentences:
        raise ValueError("cannot train on an empty corpus")

    vocab, counts = build_vocab(sentences)
    rng = np.random.default_rng(seed)
    w_in = init_input_vectors(len(vocab), dim, rng)
    w_out = np.zeros((len(vocab), dim))
    noise = counts ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())
    noise_cdf[-1] = 1.0

    encoded = [np.array([vocab[t] for t in s], dtype=np.int64) for s in sentences]
    pairs_per_epoch = sum(
        min(i, window) + min(len(s) - 1 - i, window) for s in encoded for i in range(len(s))
    )
    total = max(1, epochs * pairs_per_epoch)
    step = 0
    for _ in range(epochs):
        for sent in encoded:
            n = len(sent)
            for i in range(n):
                lo, hi = max(0, i - window), min(n, i + window + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    center, context = sent[i], sent[j]
                    draws = np.searchsorted(noise_cdf, rng.random(negatives), side="right")
                    negs = draws[draws != context]
                    alpha = lr * max(1e-4, 1.0 - step / total)
                    loss, g_v, g_u = skipgram_loss_and_grads(w_in, w_out, center, context, negs)
                    if loss_log is not None:
                        loss_log.append(loss)
                    rows = np.concatenate(([context], negs))
                    np.subtract.at(w_out, rows, alpha * g_u)
                    w_in[center] -= alpha * g_v
                    step += 1
    return EmbeddingTable(vocab, w_in + w_out)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def skipgram_corpus_from_pairs(examples) -> list[list[str]]:
    """Both question fields of every pair, tokenized, as training sentences."""
    corpus = []
    for ex in examples:
        corpus.append(tokenize(ex.text_a))
        corpus.append(tokenize(ex.text_b))
    return [s for s in corpus if s]

