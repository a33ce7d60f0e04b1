"""Small constructors for in-memory QA fixtures."""

from qarerank.dataset_io import AnswerCandidate, PredictionSet, QaQuestion


def make_question(qid, answers, question="what helps a headache"):
    """``answers``: list of (answer_id, text) or (answer_id, text, gold score)."""
    cands = []
    for rank, a in enumerate(answers, start=1):
        aid, text = a[0], a[1]
        gold = a[2] if len(a) > 2 else None
        cands.append(AnswerCandidate(aid, text, rank, gold))
    return QaQuestion(qid, question, tuple(cands))


def make_predictions(labels_by_id, domain=("0", "1", "2", "3", "4")):
    return PredictionSet("qa", tuple(domain), {k: str(v) for k, v in labels_by_id.items()})
