"""
Siamese BiLSTM question entailment
==================================

Word vectors are trained with skip-gram on the training questions (or read
from a text file), then a BiLSTM shared by both questions feeds a small
feed-forward classifier that says yes/no.

The toy data below is synthetic: a pair is "yes" exactly when the two
token sequences are identical.
"""

# %%
import logging
from pathlib import Path

import numpy as np

from qarerank.dataset_io import load_pair_dataset
from qarerank.embeddings import cosine, lookup, skipgram_corpus_from_pairs, train_skipgram
from qarerank.siamese import SiameseConfig, forward, init_model, predict_labels, train

logging.basicConfig(level=logging.WARNING)
DATA = Path(__file__).resolve().parents[1] / "tests" / "data"
train_set = load_pair_dataset(DATA / "rqe_toy_train.jsonl", ["yes", "no"])
valid_set = load_pair_dataset(DATA / "rqe_toy_valid.jsonl", ["yes", "no"])
print(len(train_set), "training pairs, e.g.", train_set[1])

# %%
# Skip-gram vectors from both question columns.
corpus = skipgram_corpus_from_pairs(train_set)
table = train_skipgram(corpus, dim=16, epochs=5, seed=0)
print("vocabulary:", sorted(table.vocab))
print("cos(alpha, beta) =", round(cosine(lookup(table, "alpha"), lookup(table, "beta")), 3))

# %%
config = SiameseConfig(embedding_dim=table.dim, hidden_dim=32, ff_dim=64, seed=0)
model, report = train(init_model(config), train_set, valid_set, table, epochs=30, lr=3e-3, seed=0)
for e in report.epochs[::5] + report.epochs[-1:]:
    print(f"epoch {e.epoch:2d}  loss {e.loss:.3f}  train {e.train_accuracy:.2f}  valid {e.valid_accuracy:.2f}")

# %%
print(forward(model, "gamma delta", "gamma delta", table))
print(forward(model, "gamma delta", "delta gamma", table))
pred = predict_labels(model, valid_set, table)
print("validation accuracy", np.mean([p == ex.gold_label for p, ex in zip(pred, valid_set)]))
