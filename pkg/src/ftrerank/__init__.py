"""Adaptive filter-then-rerank pipeline for few-shot extraction tasks.

A small scorer assigns each candidate a label distribution; confident calls
keep the scorer's answer, the rest are recast as multiple-choice questions and
sent to a text-generation endpoint.
"""

from .errors import ConfigError, DataError, EndpointError, FtrerankError
from .filtering import (
    CandidateSet,
    Difficulty,
    RouterConfig,
    ScoreRecord,
    ScoreTable,
    classify_difficulty,
    confidence,
    ensemble,
    filter_argmax,
    ingest_scores,
    save_scores,
    top_candidates,
    tune_threshold,
)
from .llm import CostLedger, GenRequest, GenResult, LLMClient, http_transport, mock_llm
from .metrics import EvalReport, Prediction, confidence_buckets, head_f1, micro_f1
from .pipeline import (
    Ablations,
    Mode,
    RerankDecision,
    RunConfig,
    run_ablations,
    run_filter_only,
    run_filter_then_rerank,
    run_icl_baseline,
    run_slm_rerank_baseline,
    tune_on_validation,
    write_report,
)
from .prompting import (
    DemoExample,
    ParseStatus,
    PromptBundle,
    TemplateSet,
    load_demos,
    load_templates,
    parse_icl_answer,
    parse_mcq_answer,
    render_icl,
    render_mcq,
)
from .retrieval import EmbeddingTable, load_embeddings, save_embeddings
from .corpus import (
    balance_negatives,
    downsample_test,
    greedy_kshot_sample,
    load_dataset,
    save_dataset,
    split_train_valid,
)
from .schema import (
    NONE_LABEL,
    Dataset,
    GoldAnnotation,
    LabelSchema,
    SamplerConfig,
    SentenceRecord,
    Span,
    Split,
    Task,
    Unit,
)

__version__ = "0.1.0"

__all__ = [
    "Ablations",
    "CandidateSet",
    "ConfigError",
    "CostLedger",
    "DataError",
    "Dataset",
    "DemoExample",
    "Difficulty",
    "EmbeddingTable",
    "EndpointError",
    "EvalReport",
    "FtrerankError",
    "GenRequest",
    "GenResult",
    "GoldAnnotation",
    "LLMClient",
    "LabelSchema",
    "Mode",
    "NONE_LABEL",
    "ParseStatus",
    "Prediction",
    "PromptBundle",
    "RerankDecision",
    "RouterConfig",
    "RunConfig",
    "SamplerConfig",
    "ScoreRecord",
    "ScoreTable",
    "SentenceRecord",
    "Span",
    "Split",
    "Task",
    "TemplateSet",
    "Unit",
    "balance_negatives",
    "classify_difficulty",
    "confidence",
    "confidence_buckets",
    "downsample_test",
    "ensemble",
    "filter_argmax",
    "greedy_kshot_sample",
    "head_f1",
    "http_transport",
    "ingest_scores",
    "load_dataset",
    "load_demos",
    "load_embeddings",
    "load_templates",
    "micro_f1",
    "mock_llm",
    "parse_icl_answer",
    "parse_mcq_answer",
    "render_icl",
    "render_mcq",
    "run_ablations",
    "run_filter_only",
    "run_filter_then_rerank",
    "run_icl_baseline",
    "run_slm_rerank_baseline",
    "save_dataset",
    "save_embeddings",
    "save_scores",
    "split_train_valid",
    "top_candidates",
    "tune_on_validation",
    "tune_threshold",
    "write_report",
]
