"""CodeBLEU composite: n-gram BLEU, keyword-weighted BLEU, AST subtree match,
and dataflow match, combined as a convex combination.

The syntax side works on structural fingerprints of parse trees (node kinds
only, identifier text ignored); the dataflow side matches def-use edges with
variables normalized by order of first appearance, so consistent renaming on
both sides leaves the score unchanged.
"""
from __future__ import annotations

import ast
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterator, Mapping

from .errors import ConfigurationError, DegenerateInputError
from .lexical import (
    BleuParams,
    Ngram,
    TokenSequence,
    _combine,
    _modified_precisions,
    bleu,
    brevity_penalty,
    tokenize_code,
)

SUPPORTED_LANGUAGES = ("python",)


@dataclass(frozen=True)
class CodeBleuParams:
    alpha: float = 0.25
    beta: float = 0.25
    gamma: float = 0.25
    delta: float = 0.25
    keyword_weight_ratio: float = 5.0

    def __post_init__(self) -> None:
        parts = (self.alpha, self.beta, self.gamma, self.delta)
        if any(p < 0 for p in parts):
            raise ConfigurationError("component weights must be non-negative")
        if abs(sum(parts) - 1.0) > 1e-12:
            raise ConfigurationError(
                f"component weights must sum to 1, got {sum(parts)}"
            )
        if self.keyword_weight_ratio <= 0:
            raise ConfigurationError("keyword_weight_ratio must be positive")


@dataclass(frozen=True)
class KeywordTable:
    language: str
    keywords: frozenset[str]

    @classmethod
    def for_language(cls, language: str) -> "KeywordTable":
        if language not in SUPPORTED_LANGUAGES:
            raise ConfigurationError(f"no keyword table for language {language!r}")
        text = (
            resources.files("codegen_eval")
            .joinpath(f"resources/keywords/{language}.txt")
            .read_text(encoding="utf-8")
        )
        words = frozenset(line.strip() for line in text.splitlines() if line.strip())
        if not words:
            raise ConfigurationError(f"empty keyword table for {language!r}")
        return cls(language=language, keywords=words)


@dataclass(frozen=True)
class SyntaxNode:
    kind: str
    children: tuple["SyntaxNode", ...] = ()


class SyntaxTree:
    """Parse tree with kind-labelled nodes and a cached subtree multiset.

    The root is a file-level wrapper and is excluded from subtree counting;
    unparseable regions appear as ERROR leaf nodes and set `has_errors`.
    """

    def __init__(self, root: SyntaxNode, has_errors: bool = False):
        self.root = root
        self.has_errors = has_errors
        self._subtree_counts: Counter | None = None

    def subtree_counts(self) -> Counter:
        if self._subtree_counts is None:
            counts: Counter = Counter()
            fingerprints: dict[int, tuple] = {}
            # post-order so child fingerprints exist before the parent's
            stack: list[tuple[SyntaxNode, bool]] = [(self.root, False)]
            while stack:
                node, expanded = stack.pop()
                if not expanded:
                    stack.append((node, True))
                    for child in node.children:
                        stack.append((child, False))
                else:
                    fp = (node.kind, tuple(fingerprints[id(c)] for c in node.children))
                    fingerprints[id(node)] = fp
                    if node is not self.root:
                        counts[fp] += 1
            self._subtree_counts = counts
        return self._subtree_counts

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SyntaxTree) and self.root == other.root

    def __hash__(self) -> int:  # pragma: no cover - trees are not dict keys
        return hash(self.root)


def _recovering_parse(code: str) -> tuple[list[ast.stmt | None], int]:
    """Parse as much of `code` as possible.

    Returns source-ordered entries (an ast statement, or None for a skipped
    unparseable line) and the count of skipped lines. Greedy longest-prefix
    recovery: after a failure the offending line is skipped and parsing
    resumes on the remainder.
    """
    try:
        return list(ast.parse(code).body), 0
    except (SyntaxError, ValueError):
        pass
    entries: list[ast.stmt | None] = []
    skipped = 0
    lines = code.splitlines()
    start = 0
    while start < len(lines):
        parsed = None
        consumed = start
        for end in range(len(lines), start, -1):
            try:
                parsed = ast.parse("\n".join(lines[start:end]))
            except (SyntaxError, ValueError):
                continue
            consumed = end
            break
        if parsed is not None and consumed > start:
            entries.extend(parsed.body)
            start = consumed
        else:
            entries.append(None)
            skipped += 1
            start += 1
    return entries, skipped


def _convert(node: ast.AST) -> SyntaxNode:
    return SyntaxNode(
        kind=type(node).__name__,
        children=tuple(_convert(child) for child in ast.iter_child_nodes(node)),
    )


def parse_syntax(code: str, language: str = "python") -> SyntaxTree:
    """Deterministic, error-tolerant parse of `code` into a SyntaxTree."""
    if language not in SUPPORTED_LANGUAGES:
        raise ConfigurationError(f"unsupported language {language!r}")
    entries, skipped = _recovering_parse(code)
    children = tuple(
        SyntaxNode(kind="ERROR") if entry is None else _convert(entry)
        for entry in entries
    )
    return SyntaxTree(SyntaxNode(kind="Module", children=children), has_errors=skipped > 0)


def syntax_match(cand: SyntaxTree, ref: SyntaxTree) -> float:
    """Clipped candidate-subtree matches over total reference subtrees."""
    ref_counts = ref.subtree_counts()
    ref_total = sum(ref_counts.values())
    if ref_total == 0:
        raise DegenerateInputError("reference tree has no subtrees")
    cand_counts = cand.subtree_counts()
    matched = sum(
        min(count, ref_counts[fp]) for fp, count in cand_counts.items() if fp in ref_counts
    )
    return matched / ref_total


@dataclass(frozen=True)
class DataflowGraph:
    """Def-use edges with variables normalized by first-appearance order.

    An edge key is (variable ordinal, rank of the reaching definition); the
    value is how many uses that definition feeds.
    """

    variables: tuple[str, ...]
    edges: Mapping[tuple[int, int], int] = field(default_factory=dict)

    @property
    def edge_count(self) -> int:
        return sum(self.edges.values())


def _iter_events(node: ast.AST) -> Iterator[tuple[str, str]]:
    """Yield ("def"|"use", name) events in evaluation-ish source order."""
    if isinstance(node, ast.Name):
        yield ("def" if isinstance(node.ctx, ast.Store) else "use", node.id)
    elif isinstance(node, ast.arg):
        yield ("def", node.arg)
    elif isinstance(node, (ast.Assign, ast.AnnAssign)):
        if node.value is not None:
            yield from _iter_events(node.value)
        targets = node.targets if isinstance(node, ast.Assign) else [node.target]
        for target in targets:
            yield from _iter_events(target)
    elif isinstance(node, ast.AugAssign):
        if isinstance(node.target, ast.Name):
            yield ("use", node.target.id)
        yield from _iter_events(node.value)
        yield from _iter_events(node.target)
    elif isinstance(node, ast.NamedExpr):
        yield from _iter_events(node.value)
        yield from _iter_events(node.target)
    elif isinstance(node, (ast.For, ast.AsyncFor)):
        yield from _iter_events(node.iter)
        yield from _iter_events(node.target)
        for stmt in node.body + node.orelse:
            yield from _iter_events(stmt)
    elif isinstance(node, (ast.ListComp, ast.SetComp, ast.GeneratorExp, ast.DictComp)):
        for comp in node.generators:
            yield from _iter_events(comp.iter)
            yield from _iter_events(comp.target)
            for cond in comp.ifs:
                yield from _iter_events(cond)
        if isinstance(node, ast.DictComp):
            yield from _iter_events(node.key)
            yield from _iter_events(node.value)
        else:
            yield from _iter_events(node.elt)
    else:
        for child in ast.iter_child_nodes(node):
            yield from _iter_events(child)


def extract_dataflow(code: str, language: str = "python") -> DataflowGraph:
    """Build the def-use graph of `code`, skipping unparseable lines."""
    if language not in SUPPORTED_LANGUAGES:
        raise ConfigurationError(f"unsupported language {language!r}")
    entries, _ = _recovering_parse(code)
    events: list[tuple[str, str]] = []
    for entry in entries:
        if entry is not None:
            events.extend(_iter_events(entry))
    defined = {name for kind, name in events if kind == "def"}
    ordinals: dict[str, int] = {}
    for _, name in events:
        if name in defined and name not in ordinals:
            ordinals[name] = len(ordinals)
    def_ranks: dict[str, int] = {}
    edges: Counter = Counter()
    for kind, name in events:
        if name not in defined:
            continue
        if kind == "def":
            def_ranks[name] = def_ranks.get(name, -1) + 1
        elif name in def_ranks:
            edges[(ordinals[name], def_ranks[name])] += 1
    variables = tuple(f"v{i}" for i in range(len(ordinals)))
    return DataflowGraph(variables=variables, edges=dict(edges))


def dataflow_match(cand: DataflowGraph, ref: DataflowGraph) -> float:
    """Clipped matched def-use edges over reference edges.

    A reference with no dataflow at all scores 1.0 by convention (neutral);
    callers can flag it via ref.edge_count == 0.
    """
    ref_total = ref.edge_count
    if ref_total == 0:
        return 1.0
    matched = sum(
        min(count, ref.edges[edge]) for edge, count in cand.edges.items() if edge in ref.edges
    )
    return matched / ref_total


def weighted_ngram_bleu(
    cand: TokenSequence,
    ref: TokenSequence,
    table: KeywordTable,
    params: BleuParams | None = None,
    keyword_weight_ratio: float = 5.0,
) -> float:
    """BLEU with n-grams containing a keyword up-weighted in both counts."""
    params = params or BleuParams()
    if len(cand) == 0:
        return 0.0

    def weight(gram: Ngram) -> float:
        return keyword_weight_ratio if any(t in table.keywords for t in gram) else 1.0

    precisions = _modified_precisions(cand.tokens, ref.tokens, params, ngram_weight=weight)
    return _combine(precisions, params, brevity_penalty(len(cand), len(ref)))


@dataclass(frozen=True)
class CodeBleuBreakdown:
    ngram: float
    weighted_ngram: float
    syntax: float
    dataflow: float
    score: float
    flags: tuple[str, ...] = ()


def codebleu_components(
    cand: str,
    ref: str,
    params: CodeBleuParams | None = None,
    bleu_params: BleuParams | None = None,
    table: KeywordTable | None = None,
) -> CodeBleuBreakdown:
    params = params or CodeBleuParams()
    table = table or KeywordTable.for_language("python")
    cand_tokens = tokenize_code(cand, table.language)
    ref_tokens = tokenize_code(ref, table.language)
    flags: list[str] = []

    def component(name: str, fn):
        try:
            return fn()
        except DegenerateInputError as exc:
            raise DegenerateInputError(f"codebleu/{name}: {exc}") from exc

    ngram = component("bleu", lambda: bleu(cand_tokens, ref_tokens, bleu_params))
    weighted = component(
        "weighted_bleu",
        lambda: weighted_ngram_bleu(
            cand_tokens, ref_tokens, table, bleu_params, params.keyword_weight_ratio
        ),
    )
    cand_tree = parse_syntax(cand, table.language)
    ref_tree = parse_syntax(ref, table.language)
    if cand_tree.has_errors:
        flags.append("candidate_parse_errors")
    if ref_tree.has_errors:
        flags.append("reference_parse_errors")
    syntax = component("syntax_match", lambda: syntax_match(cand_tree, ref_tree))
    ref_flow = extract_dataflow(ref, table.language)
    cand_flow = extract_dataflow(cand, table.language)
    if ref_flow.edge_count == 0:
        flags.append("reference_no_dataflow")
    dataflow = component("dataflow_match", lambda: dataflow_match(cand_flow, ref_flow))
    score = (
        params.alpha * ngram
        + params.beta * weighted
        + params.gamma * syntax
        + params.delta * dataflow
    )
    return CodeBleuBreakdown(
        ngram=ngram,
        weighted_ngram=weighted,
        syntax=syntax,
        dataflow=dataflow,
        score=score,
        flags=tuple(flags),
    )


def codebleu(
    cand: str,
    ref: str,
    params: CodeBleuParams | None = None,
    bleu_params: BleuParams | None = None,
    table: KeywordTable | None = None,
) -> float:
    """alpha*BLEU + beta*weighted BLEU + gamma*syntax + delta*dataflow."""
    return codebleu_components(cand, ref, params, bleu_params, table).score
