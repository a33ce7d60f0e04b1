"""Answer re-ranking, question-entailment and evaluation tools for medical QA."""

__version__ = "0.1.0"

from .bm25 import Bm25Index, Bm25Params, build_index, score, score_all, tokenize
from .dataset_io import (
    AnswerCandidate,
    DatasetError,
    PredictionSet,
    QaQuestion,
    TextPairExample,
    binarize_reference_scores,
    flatten_qa_to_pairs,
    load_pair_dataset,
    load_predictions,
    load_qa_dataset,
)
from .embeddings import EmbeddingTable, load_word_vectors, lookup, train_skipgram
from .ensemble import VoteResult, majority_vote, select_best
from .metrics import (
    MetricsReport,
    accuracy,
    evaluate_qa,
    gold_scores,
    mean_reciprocal_rank,
    precision_yes,
    spearman_rho,
)
from .rerank import RankedList, rerank_all, rerank_bucketed, rerank_run1, rerank_run2
from .siamese import SiameseConfig, SiameseModel, init_model, predict, train
