"""Reference-based evaluation toolkit for code generation: lexical,
edit-based, embedding-based, and execution-based metrics, plus the
meta-evaluation statistics needed to audit them."""

from .codebleu import (
    CodeBleuParams,
    DataflowGraph,
    KeywordTable,
    SyntaxTree,
    codebleu,
    dataflow_match,
    extract_dataflow,
    parse_syntax,
    syntax_match,
    weighted_ngram_bleu,
)
from .corpus import (
    Corpus,
    EvaluationInstance,
    ExecutionRecord,
    join_executions,
    load_executions,
    load_instances,
    save_instances,
    validate_instance,
)
from .edit import EditResult, edit_result, edit_sim, levenshtein
from .embedding import (
    EmbedderBackend,
    HashEmbedder,
    PairScore,
    TokenEmbeddingMatrix,
    TokenMask,
    build_mask,
    make_backend,
    score_pair,
    similarity_matrix,
)
from .execution import PassAtKInput, corpus_pass_rate, instance_pass, pass_at_k
from .lexical import (
    BleuParams,
    TokenSequence,
    TrivialNgramSet,
    bleu,
    chrf,
    crystal_bleu,
    exact_match,
    extract_trivial_ngrams,
    tokenize_code,
)
from .metastats import (
    DistributionSummary,
    MetaParams,
    ScoreVector,
    SignificanceReport,
    discriminative_power,
    distinguishability,
    distribution_summary,
    kendall_tau,
    point_biserial,
    robustness_autocorrelation,
    spearman_rho,
    tie_rate,
)
from .perturb import (
    IdentifierInventory,
    TransformKind,
    apply_transform_pairwise,
    identifier_inventory,
    rename_functions,
    rename_variables,
)
from .report import ScoreTable, emit_report, summary_markdown
from .scoring import METRIC_IDS, RunConfig, score_corpus

__version__ = "0.1.0"

__all__ = [
    "BleuParams",
    "CodeBleuParams",
    "Corpus",
    "DataflowGraph",
    "DistributionSummary",
    "EditResult",
    "EmbedderBackend",
    "EvaluationInstance",
    "ExecutionRecord",
    "HashEmbedder",
    "IdentifierInventory",
    "KeywordTable",
    "METRIC_IDS",
    "MetaParams",
    "PairScore",
    "PassAtKInput",
    "RunConfig",
    "ScoreTable",
    "ScoreVector",
    "SignificanceReport",
    "SyntaxTree",
    "TokenEmbeddingMatrix",
    "TokenMask",
    "TokenSequence",
    "TransformKind",
    "TrivialNgramSet",
    "apply_transform_pairwise",
    "bleu",
    "build_mask",
    "chrf",
    "codebleu",
    "corpus_pass_rate",
    "crystal_bleu",
    "dataflow_match",
    "discriminative_power",
    "distinguishability",
    "distribution_summary",
    "edit_result",
    "edit_sim",
    "emit_report",
    "exact_match",
    "extract_dataflow",
    "extract_trivial_ngrams",
    "identifier_inventory",
    "instance_pass",
    "join_executions",
    "kendall_tau",
    "levenshtein",
    "load_executions",
    "load_instances",
    "make_backend",
    "parse_syntax",
    "pass_at_k",
    "point_biserial",
    "rename_functions",
    "rename_variables",
    "robustness_autocorrelation",
    "save_instances",
    "score_corpus",
    "score_pair",
    "similarity_matrix",
    "spearman_rho",
    "summary_markdown",
    "syntax_match",
    "tie_rate",
    "tokenize_code",
    "validate_instance",
    "weighted_ngram_bleu",
]
