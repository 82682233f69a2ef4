"""Scoring pipeline: apply selected metrics to every corpus instance.

Work fans out to a bounded thread pool; results reduce in submission order
so runs are deterministic for a given config, inputs, and backend identity.
Per-instance metric failures become flagged nulls and the run continues.
"""
from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import corpus as corpus_mod
from . import edit, lexical
from .codebleu import CodeBleuParams, KeywordTable, codebleu_components
from .embedding import RemoteEmbedder, make_backend
from .errors import CodegenEvalError, ConfigurationError
from .report import ScoreTable

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

METRIC_IDS = (
    "em",
    "chrf",
    "bleu",
    "crystal_bleu",
    "codebleu",
    "edit_sim",
    "embed_p",
    "embed_r",
    "embed_f1",
    "embed_f3",
)
EMBED_METRICS = ("embed_p", "embed_r", "embed_f1", "embed_f3")


@dataclass
class RunConfig:
    metrics: tuple[str, ...] = METRIC_IDS
    bleu_max_order: int = 4
    bleu_smoothing: str = "none"
    chrf_max_n: int = 6
    chrf_beta: float = 2.0
    crystal_k: int = 50
    crystal_corpus_path: str | None = None
    codebleu_alpha: float = 0.25
    codebleu_beta: float = 0.25
    codebleu_gamma: float = 0.25
    codebleu_delta: float = 0.25
    keyword_weight_ratio: float = 5.0
    backend: str = "hash"
    embed_dim: int = 64
    mask_policy: str = "punctuation_off"
    context_prefix: bool = False
    normalize_candidates: bool = False
    jobs: int = 1
    seed: int | None = None  # provenance only; nothing consumes it

    def __post_init__(self) -> None:
        unknown = [m for m in self.metrics if m not in METRIC_IDS]
        if unknown:
            raise ConfigurationError(f"unknown metrics: {', '.join(unknown)}")
        if self.jobs < 1:
            raise ConfigurationError("jobs must be >= 1")

    def bleu_params(self) -> lexical.BleuParams:
        return lexical.BleuParams(
            max_order=self.bleu_max_order, smoothing=self.bleu_smoothing
        )

    def codebleu_params(self) -> CodeBleuParams:
        return CodeBleuParams(
            alpha=self.codebleu_alpha,
            beta=self.codebleu_beta,
            gamma=self.codebleu_gamma,
            delta=self.codebleu_delta,
            keyword_weight_ratio=self.keyword_weight_ratio,
        )


def load_config_file(path: str | Path) -> dict:
    """Parse a TOML or JSON config file, picked by extension."""
    path = Path(path)
    if path.suffix == ".json":
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    if path.suffix == ".toml":
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    raise ConfigurationError(f"config must be .toml or .json, got {path.name}")


def config_from_mapping(raw: dict) -> RunConfig:
    """Build a RunConfig from the nested config file sections."""
    def section(name: str) -> dict:
        value = raw.get(name, {})
        if not isinstance(value, dict):
            raise ConfigurationError(f"config section {name!r} must be a table")
        return value

    bleu_cfg = section("bleu")
    crystal_cfg = section("crystal")
    chrf_cfg = section("chrf")
    codebleu_cfg = section("codebleu")
    embed_cfg = section("embedding")
    run_cfg = section("run")
    kwargs: dict = {}
    if "metrics" in run_cfg:
        kwargs["metrics"] = tuple(run_cfg["metrics"])
    for key, source, name in (
        ("bleu_max_order", bleu_cfg, "max_order"),
        ("bleu_smoothing", bleu_cfg, "smoothing"),
        ("crystal_k", crystal_cfg, "k"),
        ("crystal_corpus_path", crystal_cfg, "corpus_path"),
        ("chrf_max_n", chrf_cfg, "max_n"),
        ("chrf_beta", chrf_cfg, "beta"),
        ("codebleu_alpha", codebleu_cfg, "alpha"),
        ("codebleu_beta", codebleu_cfg, "beta"),
        ("codebleu_gamma", codebleu_cfg, "gamma"),
        ("codebleu_delta", codebleu_cfg, "delta"),
        ("keyword_weight_ratio", codebleu_cfg, "keyword_weight_ratio"),
        ("backend", embed_cfg, "backend"),
        ("embed_dim", embed_cfg, "dim"),
        ("mask_policy", embed_cfg, "mask_policy"),
        ("context_prefix", embed_cfg, "context_prefix"),
        ("normalize_candidates", run_cfg, "normalize_candidates"),
        ("jobs", run_cfg, "jobs"),
        ("seed", run_cfg, "seed"),
    ):
        if name in source:
            kwargs[key] = source[name]
    return RunConfig(**kwargs)


class _ScoringContext:
    """Immutable per-run scoring state shared by the worker pool."""

    def __init__(self, corpus: corpus_mod.Corpus, config: RunConfig):
        self.config = config
        self.bleu_params = config.bleu_params()
        need_embed = any(m in EMBED_METRICS for m in config.metrics)
        self.backend = None
        if need_embed:
            self.backend = make_backend(
                config.backend, dim=config.embed_dim, mask_policy=config.mask_policy
            )
            if isinstance(self.backend, RemoteEmbedder):
                self.backend.health()  # fail fast before scoring
        self.keyword_table: KeywordTable | None = None
        self.codebleu_params: CodeBleuParams | None = None
        if "codebleu" in config.metrics:
            self.keyword_table = KeywordTable.for_language("python")
            self.codebleu_params = config.codebleu_params()
        self.trivial: lexical.TrivialNgramSet | None = None
        if "crystal_bleu" in config.metrics:
            if config.crystal_corpus_path:
                source = corpus_mod.load_instances(config.crystal_corpus_path)
            else:
                source = corpus
            refs = [
                lexical.tokenize_code(inst.reference_code, inst.language)
                for inst in source.instances
            ]
            self.trivial = lexical.extract_trivial_ngrams(
                refs, k=config.crystal_k, max_order=config.bleu_max_order
            )

    def embed(self, inst: corpus_mod.EvaluationInstance, code: str):
        assert self.backend is not None
        if self.config.context_prefix:
            text = inst.nl_context + "\n" + code
            matrix, mask = self.backend.embed(text, inst.language)
            if self.config.backend == "hash":
                # context tokens are scored out of the comparison
                prefix = len(lexical.tokenize_code(inst.nl_context + "\n", inst.language))
                include = tuple(
                    included and i >= prefix for i, included in enumerate(mask.include)
                )
                from .embedding import TokenMask

                mask = TokenMask(include=include)
            return matrix, mask
        return self.backend.embed(code, inst.language)


def _score_instance(
    inst: corpus_mod.EvaluationInstance, ctx: _ScoringContext
) -> tuple[tuple[str, str, int], dict[str, float | None], dict[str, str]]:
    config = ctx.config
    cand, ref = inst.candidate_code, inst.reference_code
    values: dict[str, float | None] = {}
    flags: dict[str, str] = {}
    cand_tokens = lexical.tokenize_code(cand, inst.language)
    ref_tokens = lexical.tokenize_code(ref, inst.language)
    empty_candidate = len(cand_tokens) == 0

    def run(metric: str, fn) -> None:
        try:
            values[metric] = fn()
        except CodegenEvalError as exc:
            values[metric] = None
            flags[metric] = str(exc)

    for metric in config.metrics:
        if metric == "em":
            run(metric, lambda: lexical.exact_match(cand, ref))
        elif metric == "chrf":
            run(metric, lambda: lexical.chrf(cand, ref, config.chrf_max_n, config.chrf_beta))
        elif metric == "bleu":
            run(metric, lambda: lexical.bleu(cand_tokens, ref_tokens, ctx.bleu_params))
            if empty_candidate:
                flags[metric] = "degenerate:empty_candidate"
        elif metric == "crystal_bleu":
            run(
                metric,
                lambda: lexical.crystal_bleu(
                    cand_tokens, ref_tokens, ctx.bleu_params, ctx.trivial
                ),
            )
            if empty_candidate:
                flags[metric] = "degenerate:empty_candidate"
        elif metric == "edit_sim":
            run(metric, lambda: edit.edit_sim(cand, ref))
        elif metric == "codebleu":
            try:
                breakdown = codebleu_components(
                    cand, ref, ctx.codebleu_params, ctx.bleu_params, ctx.keyword_table
                )
                values[metric] = breakdown.score
                if breakdown.flags:
                    flags[metric] = ",".join(breakdown.flags)
            except CodegenEvalError as exc:
                values[metric] = None
                flags[metric] = str(exc)
    if any(m in EMBED_METRICS for m in config.metrics):
        try:
            from .embedding import score_pair

            cand_matrix, cand_mask = ctx.embed(inst, cand)
            ref_matrix, ref_mask = ctx.embed(inst, ref)
            pair = score_pair(cand_matrix, cand_mask, ref_matrix, ref_mask)
            scores = {
                "embed_p": pair.precision,
                "embed_r": pair.recall,
                "embed_f1": pair.f1,
                "embed_f3": pair.f3,
            }
            for metric in EMBED_METRICS:
                if metric in config.metrics:
                    values[metric] = scores[metric]
        except CodegenEvalError as exc:
            for metric in EMBED_METRICS:
                if metric in config.metrics:
                    values[metric] = None
                    flags[metric] = str(exc)
    return inst.key, values, flags


def score_corpus(corpus: corpus_mod.Corpus, config: RunConfig) -> ScoreTable:
    """One table row per instance, with per-model summary available via
    ScoreTable.model_means()."""
    if config.normalize_candidates:
        corpus = corpus_mod.normalize_candidates(corpus)
    ctx = _ScoringContext(corpus, config)
    table = ScoreTable(metrics=tuple(config.metrics))
    instances = corpus.instances
    if config.jobs == 1:
        results = [_score_instance(inst, ctx) for inst in instances]
    else:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(lambda inst: _score_instance(inst, ctx), instances))
    for key, values, flags in results:
        table.ensure_row(key)
        for metric, value in values.items():
            table.set_value(key, metric, value)
        for metric, reason in flags.items():
            table.set_flag(key, metric, reason)
    return table
