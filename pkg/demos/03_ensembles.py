"""
Voting and model selection
==========================

Several models label the same examples. ``majority_vote`` keeps the most
common label per example (ties go to the model listed first in the
priority order); ``select_best`` instead keeps the single model that scores
best on held-out gold labels.
"""

# %%
import numpy as np

from qarerank.dataset_io import PredictionSet
from qarerank.ensemble import majority_vote, select_best
from qarerank.metrics import accuracy

LABELS = ("contradiction", "entailment", "neutral")
rng = np.random.default_rng(0)
gold_labels = rng.choice(LABELS, size=200)


def noisy_model(error_rate):
    flip = rng.random(200) < error_rate
    labels = np.where(flip, rng.choice(LABELS, size=200), gold_labels)
    return PredictionSet("nli", LABELS, {f"ex{i}": str(lab) for i, lab in enumerate(labels)})


gold = PredictionSet("nli", LABELS, {f"ex{i}": str(lab) for i, lab in enumerate(gold_labels)})
models = [noisy_model(r) for r in (0.35, 0.4, 0.45)]
for i, m in enumerate(models):
    print(f"model {i}: accuracy {accuracy(m, gold):.3f}")

# %%
vote = majority_vote(models, tie_break_priority=[0, 1, 2])
voted = vote.as_prediction_set("nli", LABELS)
print(f"vote:    accuracy {accuracy(voted, gold):.3f}  ({len(vote.tie_broken)} three-way ties)")

# %%
index, acc = select_best(models, gold)
print(f"best single model: {index} ({acc:.3f})")
