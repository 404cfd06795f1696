"""Translate-train sarcasm detection: corpus building, LLM prompting, and ensembles."""

from .corpus import (
    Corpus,
    Example,
    load_corpus,
    load_isarcasm,
    merge_and_balance,
    save_corpus,
    stratified_split,
)
from .evaluation import ConfusionMatrix, SystemReport, confusion, emit_report, metrics
from .llm_client import (
    LlmConfig,
    ParsedLabel,
    PromptTemplate,
    classify_corpus,
    parse_label,
    render_classification_prompt,
    render_translation_prompt,
    translate_corpus,
)
from .meta_learner import MetaModel, predict, select_top_k, train, tune_lambda
from .predictions import Prediction, PredictionMatrix, align, ingest
from .voting import VotingConfig, hard_vote, mixed_vote, soft_vote, tune_cutoff, vote_matrix

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Example",
    "load_corpus",
    "load_isarcasm",
    "merge_and_balance",
    "save_corpus",
    "stratified_split",
    "ConfusionMatrix",
    "SystemReport",
    "confusion",
    "emit_report",
    "metrics",
    "LlmConfig",
    "ParsedLabel",
    "PromptTemplate",
    "classify_corpus",
    "parse_label",
    "render_classification_prompt",
    "render_translation_prompt",
    "translate_corpus",
    "MetaModel",
    "predict",
    "select_top_k",
    "train",
    "tune_lambda",
    "Prediction",
    "PredictionMatrix",
    "align",
    "ingest",
    "VotingConfig",
    "hard_vote",
    "mixed_vote",
    "soft_vote",
    "tune_cutoff",
    "vote_matrix",
    "__version__",
]
