"""
Re-ranking retrieved answers with predicted labels and BM25
===========================================================

A question comes with candidate answers in the order some retrieval system
returned them. A classifier (not part of this package) has labelled every
(question, answer) pair, either YES/NO (1/0) or with a relevance grade 1-4.
Re-ranking puts answers with better labels first and orders answers that
share a label by their BM25 score against the question.
"""

# %%
from pathlib import Path

from qarerank.bm25 import build_index, score_all, tokenize
from qarerank.dataset_io import load_predictions, load_qa_dataset
from qarerank.metrics import evaluate_qa, gold_scores, mean_reciprocal_rank
from qarerank.rerank import original_order, rerank_all

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"
questions = load_qa_dataset(DATA / "qa_fixture.jsonl")
q = questions[0]
print(q.question_text)
for a in q.answers:
    print(f"  {a.original_rank}. [{a.gold_reference_score}] {a.answer_text}")

# %%
# BM25 statistics come from this question's own answers.
index = build_index([tokenize(a.answer_text) for a in q.answers])
for doc, s in score_all(index, tokenize(q.question_text)):
    print(f"  {q.answers[doc].answer_id}: {s:.3f}")

# %%
# Graded predictions: bucket 4, then 3, 2, 1; BM25 inside each bucket.
graded = load_predictions(DATA / "qa_fixture_pred_graded.jsonl", ["1", "2", "3", "4"])
rankings = rerank_all(questions, graded, mode="graded")
print(rankings[0].ranking, rankings[0].labels)

# %%
# Binary predictions give the same first answer here but only two buckets.
binary = load_predictions(DATA / "qa_fixture_pred_binary.jsonl", ["0", "1"])
print(rerank_all(questions, binary, mode="binary")[0].ranking)

# %%
# Every question in the fixture has its best answer at retrieval rank 3,
# so the original order has MRR 1/3.
gold = gold_scores(questions)
baseline = mean_reciprocal_rank([original_order(x) for x in questions], gold,
                                question_ids=[x.question_id for x in questions])
print("original order MRR", baseline)
print(evaluate_qa(rankings, gold).format_text())
