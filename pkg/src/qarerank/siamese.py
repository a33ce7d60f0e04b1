"""Siamese BiLSTM pair classifier in plain numpy.

Both questions of a pair go through the same bidirectional LSTM (a single
set of forward-direction and a single set of backward-direction weights,
used for both inputs). The final forward and backward hidden states of each
question are concatenated, the two question vectors are concatenated, and a
ReLU feed-forward layer plus a 2-way softmax produce (p_yes, p_no).

Gate blocks inside every ``4*hidden`` axis are ordered input, forget,
output, candidate. Everything is float64.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bm25 import tokenize
from .dataset_io import TextPairExample
from .embeddings import EmbeddingTable

log = logging.getLogger(__name__)

PAD = "<pad>"
LABELS = ("yes", "no")
CHECKPOINT_FORMAT = "qarerank-siamese"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class SiameseConfig:
    embedding_dim: int
    hidden_dim: int = 64
    ff_dim: int = 128
    num_classes: int = 2
    max_len: int = 64
    seed: int = 0

    def __post_init__(self):
        for name in ("embedding_dim", "hidden_dim", "ff_dim", "max_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.num_classes != 2:
            raise ValueError("the pair classifier is binary: num_classes must be 2")


@dataclass
class SiameseModel:
    config: SiameseConfig
    params: dict[str, np.ndarray]

    def copy(self) -> SiameseModel:
        return SiameseModel(self.config, {k: v.copy() for k, v in self.params.items()})

    @property
    def pair_dim(self) -> int:
        return 4 * self.config.hidden_dim


@dataclass
class EpochStats:
    epoch: int
    loss: float
    train_accuracy: float
    valid_accuracy: float | None


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    checkpoint: str | None = None
    embeddings: EmbeddingTable | None = None

    def to_dict(self) -> dict:
        return {"epochs": [asdict(e) for e in self.epochs], "checkpoint": self.checkpoint}


def param_shapes(config: SiameseConfig) -> dict[str, tuple[int, ...]]:
    d, h, f = config.embedding_dim, config.hidden_dim, config.ff_dim
    shapes = {}
    for direction in ("fwd", "bwd"):
        shapes[f"{direction}_Wx"] = (d, 4 * h)
        shapes[f"{direction}_Wh"] = (h, 4 * h)
        shapes[f"{direction}_b"] = (4 * h,)
    shapes["ff_W"] = (4 * h, f)
    shapes["ff_b"] = (f,)
    shapes["out_W"] = (f, config.num_classes)
    shapes["out_b"] = (config.num_classes,)
    return shapes


def init_model(config: SiameseConfig) -> SiameseModel:
    """Seeded initialization; forget-gate biases start at 1, other biases at 0."""
    rng = np.random.default_rng(config.seed)
    h = config.hidden_dim
    params = {}
    for name, shape in param_shapes(config).items():
        if name.endswith("_b"):
            p = np.zeros(shape)
            if name in ("fwd_b", "bwd_b"):
                p[h:2 * h] = 1.0
        elif name.startswith(("fwd", "bwd")):
            bound = 1.0 / np.sqrt(h)
            p = rng.uniform(-bound, bound, size=shape)
        else:
            bound = np.sqrt(6.0 / (shape[0] + shape[1]))
            p = rng.uniform(-bound, bound, size=shape)
        params[name] = p
    return SiameseModel(config, params)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def prepare_tokens(tokens: Sequence[str], max_len: int) -> list[str]:
    """Drop padding and keep at most ``max_len`` leading tokens."""
    return [t for t in tokens if t != PAD][:max_len]


def _embed(token_lists: Sequence[Sequence[str]], table: EmbeddingTable, max_len: int):
    """Right-padded (B, T, D) inputs for both reading directions.

    Returns forward inputs, reversed inputs, the (B, T) mask and per-position
    vocabulary ids (-1 for padding and out-of-vocabulary tokens).
    """
    seqs = [prepare_tokens(toks, max_len) for toks in token_lists]
    for s in seqs:
        if not s:
            raise ValueError("cannot encode an input with no real tokens")
    B, T, D = len(seqs), max(len(s) for s in seqs), table.dim
    if table.oov_policy == "mean_vector":
        oov = table.vectors.mean(axis=0)
    else:
        oov = np.zeros(D)
    ids = np.full((B, T), -1, dtype=np.int64)
    mask = np.zeros((B, T), dtype=bool)
    x = np.zeros((B, T, D))
    x_rev = np.zeros((B, T, D))
    ids_rev = np.full((B, T), -1, dtype=np.int64)
    for b, s in enumerate(seqs):
        L = len(s)
        mask[b, :L] = True
        for t, tok in enumerate(s):
            idx = table.vocab.get(tok, -1)
            ids[b, t] = idx
            ids_rev[b, L - 1 - t] = idx
            vec = table.vectors[idx] if idx >= 0 else oov
            x[b, t] = vec
            x_rev[b, L - 1 - t] = vec
    return x, x_rev, mask, ids, ids_rev


def _lstm_forward(x, mask, Wx, Wh, b):
    """Masked LSTM over (B, T, D); padded steps carry the state unchanged."""
    B, T, _ = x.shape
    H = Wh.shape[0]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    cache = []
    for t in range(T):
        z = x[:, t] @ Wx + h @ Wh + b
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H:2 * H])
        o = _sigmoid(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        m = mask[:, t, None]
        cache.append((h, c, i, f, o, g, tc, m))
        h = np.where(m, h_new, h)
        c = np.where(m, c_new, c)
    return h, cache


def _lstm_backward(dh, x, cache, Wx, Wh, grads, prefix, need_dx):
    B, T, _ = x.shape
    H = Wh.shape[0]
    dc = np.zeros_like(dh)
    dx = np.zeros_like(x) if need_dx else None
    dWx = grads[prefix + "Wx"]
    dWh = grads[prefix + "Wh"]
    db = grads[prefix + "b"]
    for t in reversed(range(T)):
        h_prev, c_prev, i, f, o, g, tc, m = cache[t]
        dh_new = np.where(m, dh, 0.0)
        dc_new = np.where(m, dc, 0.0)
        do = dh_new * tc
        dc_new = dc_new + dh_new * o * (1.0 - tc * tc)
        di = dc_new * g
        df = dc_new * c_prev
        dg = dc_new * i
        dz = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), do * o * (1.0 - o), dg * (1.0 - g * g)],
            axis=1,
        )
        dWx += x[:, t].T @ dz
        dWh += h_prev.T @ dz
        db += dz.sum(axis=0)
        if need_dx:
            dx[:, t] = dz @ Wx.T
        dh = dz @ Wh.T + np.where(m, 0.0, dh)
        dc = dc_new * f + np.where(m, 0.0, dc)
    return dx


def _encode_batch(model: SiameseModel, token_lists, table: EmbeddingTable):
    p = model.params
    if table.dim != model.config.embedding_dim:
        raise ValueError(f"embedding table has dim {table.dim}, model expects {model.config.embedding_dim}")
    x, x_rev, mask, ids, ids_rev = _embed(token_lists, table, model.config.max_len)
    h_f, cache_f = _lstm_forward(x, mask, p["fwd_Wx"], p["fwd_Wh"], p["fwd_b"])
    h_b, cache_b = _lstm_forward(x_rev, mask, p["bwd_Wx"], p["bwd_Wh"], p["bwd_b"])
    state = (x, x_rev, ids, ids_rev, cache_f, cache_b)
    return np.concatenate([h_f, h_b], axis=1), state


def encode(model: SiameseModel, tokens: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    """Final forward state followed by final backward state, length 2*hidden."""
    enc, _ = _encode_batch(model, [tokens], table)
    return enc[0]


def _head(model: SiameseModel, e1, e2):
    p = model.params
    pair = np.concatenate([e1, e2], axis=1)
    a = pair @ p["ff_W"] + p["ff_b"]
    r = np.maximum(a, 0.0)
    logits = r @ p["out_W"] + p["out_b"]
    logits = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs, (pair, a, r, logits)


def _as_tokens(text_or_tokens) -> list[str]:
    if isinstance(text_or_tokens, str):
        return tokenize(text_or_tokens)
    return list(text_or_tokens)


def forward_batch(model: SiameseModel, q1s, q2s, table: EmbeddingTable) -> np.ndarray:
    """(B, 2) array of (p_yes, p_no) rows."""
    e1, _ = _encode_batch(model, [_as_tokens(q) for q in q1s], table)
    e2, _ = _encode_batch(model, [_as_tokens(q) for q in q2s], table)
    probs, _ = _head(model, e1, e2)
    return probs


def forward(model: SiameseModel, q1, q2, table: EmbeddingTable) -> tuple[float, float]:
    probs = forward_batch(model, [q1], [q2], table)[0]
    return float(probs[0]), float(probs[1])


def label_index(label: str) -> int:
    try:
        return LABELS.index(label)
    except ValueError:
        raise ValueError(f"label must be one of {LABELS}, got {label!r}") from None


def _unpack(batch):
    q1s, q2s, ys = [], [], []
    for item in batch:
        if isinstance(item, TextPairExample):
            q1, q2, label = item.text_a, item.text_b, item.gold_label
        else:
            (q1, q2), label = item
        q1s.append(_as_tokens(q1))
        q2s.append(_as_tokens(q2))
        ys.append(label if isinstance(label, (int, np.integer)) else label_index(label))
    return q1s, q2s, np.array(ys, dtype=np.int64)


def loss_and_gradients(model: SiameseModel, batch, table: EmbeddingTable, embedding_grads: bool = False):
    """Mean cross-entropy over the batch and its gradient for every parameter.

    ``batch`` holds ``((q1, q2), label)`` items or labelled
    :class:`TextPairExample` records; labels are "yes"/"no" or class indices.
    Gradients from both questions flow into the shared encoder weights. With
    ``embedding_grads`` the result also has an ``"embeddings"`` entry shaped
    like ``table.vectors`` (out-of-vocabulary positions get no gradient).
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    q1s, q2s, y = _unpack(batch)
    B = len(y)
    p = model.params
    e1, s1 = _encode_batch(model, q1s, table)
    e2, s2 = _encode_batch(model, q2s, table)
    probs, (pair, a, r, _) = _head(model, e1, e2)
    loss = float(-np.log(probs[np.arange(B), y]).mean())

    grads = {k: np.zeros_like(v) for k, v in p.items()}
    dlogits = probs.copy()
    dlogits[np.arange(B), y] -= 1.0
    dlogits /= B
    grads["out_W"] = r.T @ dlogits
    grads["out_b"] = dlogits.sum(axis=0)
    da = (dlogits @ p["out_W"].T) * (a > 0)
    grads["ff_W"] = pair.T @ da
    grads["ff_b"] = da.sum(axis=0)
    dpair = da @ p["ff_W"].T

    H = model.config.hidden_dim
    if embedding_grads:
        grads["embeddings"] = np.zeros_like(table.vectors)
    for de, (x, x_rev, ids, ids_rev, cache_f, cache_b) in (
        (dpair[:, :2 * H], s1),
        (dpair[:, 2 * H:], s2),
    ):
        dx_f = _lstm_backward(de[:, :H], x, cache_f, p["fwd_Wx"], p["fwd_Wh"], grads, "fwd_", embedding_grads)
        dx_b = _lstm_backward(de[:, H:], x_rev, cache_b, p["bwd_Wx"], p["bwd_Wh"], grads, "bwd_", embedding_grads)
        if embedding_grads:
            for dx, idx in ((dx_f, ids), (dx_b, ids_rev)):
                keep = idx >= 0
                np.add.at(grads["embeddings"], idx[keep], dx[keep])
    return loss, grads


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def predict_proba(model: SiameseModel, pairs: Sequence[TextPairExample], table: EmbeddingTable, batch_size: int = 256) -> np.ndarray:
    if not pairs:
        return np.zeros((0, 2))
    chunks = []
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start:start + batch_size]
        chunks.append(forward_batch(model, [ex.text_a for ex in chunk], [ex.text_b for ex in chunk], table))
    return np.concatenate(chunks)


def _decide(p_yes: float, p_no: float) -> str:
    # an exact tie goes to "no"
    return "yes" if p_yes > p_no else "no"


def predict(model: SiameseModel, pair, table: EmbeddingTable) -> str:
    """"yes" or "no" for a :class:`TextPairExample` or a ``(q1, q2)`` tuple."""
    if isinstance(pair, TextPairExample):
        p_yes, p_no = forward(model, pair.text_a, pair.text_b, table)
    else:
        p_yes, p_no = forward(model, pair[0], pair[1], table)
    return _decide(p_yes, p_no)


def predict_labels(model: SiameseModel, pairs: Sequence[TextPairExample], table: EmbeddingTable) -> list[str]:
    return [_decide(py, pn) for py, pn in predict_proba(model, pairs, table)]


def _accuracy(model, pairs, table) -> float | None:
    if not pairs:
        return None
    predicted = predict_labels(model, pairs, table)
    return sum(pr == ex.gold_label for pr, ex in zip(predicted, pairs)) / len(pairs)


def train(
    model: SiameseModel,
    train_set: Sequence[TextPairExample],
    valid_set: Sequence[TextPairExample],
    table: EmbeddingTable,
    epochs: int = 50,
    lr: float = 1e-3,
    batch_size: int = 32,
    seed: int = 0,
    freeze_embeddings: bool = True,
) -> tuple[SiameseModel, TrainReport]:
    """Mini-batch Adam on mean cross-entropy; the input model is not modified.

    Shuffling uses its own seeded generator, so a run is reproducible bit
    for bit. With ``freeze_embeddings=False`` a copy of the table is trained
    too and returned as ``report.embeddings``.
    """
    if not train_set:
        raise ValueError("empty training set")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    for ex in list(train_set) + list(valid_set):
        label_index(ex.gold_label)
    model = model.copy()
    report = TrainReport()
    if not freeze_embeddings:
        table = EmbeddingTable(dict(table.vocab), table.vectors.copy(), table.oov_policy)
        report.embeddings = table
    trainable = dict(model.params)
    if not freeze_embeddings:
        trainable["embeddings"] = table.vectors
    opt = Adam(trainable, lr=lr)
    rng = np.random.default_rng(seed)
    n = len(train_set)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            batch = [train_set[i] for i in order[start:start + batch_size]]
            loss, grads = loss_and_gradients(model, batch, table, embedding_grads=not freeze_embeddings)
            opt.step(trainable, grads)
            total += loss * len(batch)
        stats = EpochStats(epoch, total / n, _accuracy(model, train_set, table), _accuracy(model, valid_set, table))
        report.epochs.append(stats)
        log.info(
            "epoch %d loss %.4f train_acc %.4f valid_acc %s",
            epoch, stats.loss, stats.train_accuracy,
            "n/a" if stats.valid_accuracy is None else f"{stats.valid_accuracy:.4f}",
        )
    return model, report


def _pack(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": arr.ravel().tolist()}


def _unpack_array(obj: dict) -> np.ndarray:
    return np.array(obj["data"], dtype=np.float64).reshape(obj["shape"])


def save_checkpoint(path: str | Path, model: SiameseModel, table: EmbeddingTable | None = None) -> None:
    """JSON checkpoint: config, row-major parameters and optionally the word vectors."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "params": {k: _pack(model.params[k]) for k in sorted(model.params)},
    }
    if table is not None:
        words = sorted(table.vocab, key=table.vocab.__getitem__)
        doc["embeddings"] = {
            "oov_policy": table.oov_policy,
            "words": words,
            "vectors": _pack(table.vectors[[table.vocab[w] for w in words]]),
        }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> tuple[SiameseModel, EmbeddingTable | None]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a siamese checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    config = SiameseConfig(**doc["config"])
    params = {k: _unpack_array(v) for k, v in doc["params"].items()}
    expected = param_shapes(config)
    if set(params) != set(expected):
        raise ValueError(f"{path}: parameter names do not match the config")
    for k, shape in expected.items():
        if params[k].shape != shape:
            raise ValueError(f"{path}: parameter {k} has shape {params[k].shape}, expected {shape}")
        if not np.all(np.isfinite(params[k])):
            raise ValueError(f"{path}: parameter {k} has non-finite values")
    table = None
    if "embeddings" in doc:
        emb = doc["embeddings"]
        table = EmbeddingTable(
            {w: i for i, w in enumerate(emb["words"])},
            _unpack_array(emb["vectors"]),
            emb.get("oov_policy", "zero_vector"),
        )
    return SiameseModel(config, params), table
