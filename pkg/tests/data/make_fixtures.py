"""Regenerate the shipped test fixtures.

    python tests/data/make_fixtures.py

Output is deterministic; the committed files are what the tests read.
"""

import json
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent

TOY_WORDS = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"]
TOY_SEED = 20190801
VECTOR_SEED = 7


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")


def toy_rqe(n=200, seed=TOY_SEED):
    """Pairs of 1-3 token sequences over six words; "yes" iff the sequences are identical."""
    rng = np.random.default_rng(seed)
    records = []
    for k in range(n):
        a = [TOY_WORDS[i] for i in rng.integers(0, 6, int(rng.integers(1, 4)))]
        if k % 2 == 0:
            b, label = list(a), "yes"
        else:
            while True:
                b = [TOY_WORDS[i] for i in rng.integers(0, 6, int(rng.integers(1, 4)))]
                if b != a:
                    break
            label = "no"
        records.append({"id": f"toy{k:03d}", "text_a": " ".join(a), "text_b": " ".join(b), "label": label})
    return records


def toy_vectors(dim=8, seed=VECTOR_SEED):
    rng = np.random.default_rng(seed)
    vecs = rng.normal(size=(len(TOY_WORDS), dim))
    lines = [f"{len(TOY_WORDS)} {dim}"]
    for w, v in zip(TOY_WORDS, vecs):
        lines.append(w + " " + " ".join(repr(float(x)) for x in v))
    return "\n".join(lines) + "\n"


def skipgram_corpus():
    # x and y always co-occur; z only ever appears with w
    return ["x y"] * 500 + ["z w"] * 500


QA_QUESTIONS = [
    ("q1", "What are the side effects of metformin?", [
        "Metformin is sold under several brand names.",
        "Store tablets at room temperature away from moisture.",
        "Common side effects of metformin include nausea, diarrhea and stomach upset.",
        "Metformin may rarely cause lactic acidosis, a serious effect.",
    ]),
    ("q2", "How is strep throat treated?", [
        "Strep throat is common in school-age children.",
        "A rapid test can confirm a strep infection.",
        "Strep throat is treated with antibiotics such as penicillin or amoxicillin.",
        "Rest and fluids help while antibiotics for strep throat take effect.",
    ]),
    ("q3", "Can migraine be prevented?", [
        "Migraine headaches often run in families.",
        "An aura may come before a headache.",
        "Migraine can be prevented with daily medicines such as beta blockers and by avoiding triggers.",
        "Keeping a headache diary helps find migraine triggers.",
    ]),
    ("q4", "What causes iron deficiency anemia?", [
        "Anemia means a low number of red blood cells.",
        "Symptoms include tiredness and pale skin.",
        "Iron deficiency anemia is caused by blood loss, low iron intake or poor iron absorption.",
        "Heavy menstrual periods can cause iron deficiency.",
    ]),
    ("q5", "Is ibuprofen safe during pregnancy?", [
        "Ibuprofen is a nonsteroidal anti-inflammatory drug.",
        "It is available over the counter.",
        "Ibuprofen is not considered safe in late pregnancy; ask your doctor during pregnancy.",
        "Acetaminophen is usually preferred for pain in pregnancy.",
    ]),
]
# the answer at original rank 3 is the best one (gold 4); no tied gold scores
QA_GOLD = [2, 1, 4, 3]


def qa_fixture():
    records = []
    preds = []
    for qid, question, answers in QA_QUESTIONS:
        for k, (text, gold) in enumerate(zip(answers, QA_GOLD), start=1):
            aid = f"a{k}"
            records.append({"question_id": qid, "question": question, "answer_id": aid, "answer": text, "score": gold})
            preds.append({"id": f"{qid}#{aid}", "label": str(gold)})
    return records, preds


def main():
    write_jsonl(HERE / "rqe_toy_train.jsonl", toy_rqe())
    write_jsonl(HERE / "rqe_toy_valid.jsonl", toy_rqe(40, TOY_SEED + 1))
    (HERE / "toy_vectors.txt").write_text(toy_vectors(), encoding="utf-8")
    (HERE / "skipgram_corpus.txt").write_text("\n".join(skipgram_corpus()) + "\n", encoding="utf-8")
    qa, preds = qa_fixture()
    write_jsonl(HERE / "qa_fixture.jsonl", qa)
    write_jsonl(HERE / "qa_fixture_pred_graded.jsonl", preds)
    binary = [{"id": p["id"], "label": "1" if int(p["label"]) >= 3 else "0"} for p in preds]
    write_jsonl(HERE / "qa_fixture_pred_binary.jsonl", binary)


if __name__ == "__main__":
    main()
