"""Token- and character-level reference-based metrics.

Covers exact match, sentence-level BLEU with brevity penalty, CrystalBLEU
(BLEU with the corpus's most frequent n-grams removed from the counts), and
character-n-gram chrF. All scores are per-instance; corpus numbers are means
of these sentence-level values.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ConfigurationError

Ngram = tuple[str, ...]

# Multi-character operators recognized by the code scanner, longest first.
_OPERATORS = (
    "**=", "//=", ">>=", "<<=", "...",
    "==", "!=", "<=", ">=", "->", ":=", "**", "//", "<<", ">>",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=",
)

_TOKEN_RE = re.compile(
    r"[A-Za-z_][A-Za-z0-9_]*"                 # identifier / keyword
    r"|\d+(?:\.\d+)?(?:[eE][+-]?\d+)?"        # number literal
    r"|" + "|".join(re.escape(op) for op in _OPERATORS) +
    r"|\S"                                    # any other single character
)


@dataclass(frozen=True)
class TokenSequence:
    """Code token stream for n-gram metrics."""

    tokens: tuple[str, ...]
    source: str = "candidate"  # "candidate" or "reference"

    def __post_init__(self) -> None:
        if any(t == "" for t in self.tokens):
            raise ValueError("TokenSequence must not contain empty tokens")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class BleuParams:
    """Knobs for the BLEU family.

    `weights` defaults to uniform over orders 1..max_order and must sum to 1.
    `smoothing` is "none" (a zero clipped count zeroes the score) or
    "epsilon_floor" (precisions are floored at `epsilon`).
    """

    max_order: int = 4
    weights: tuple[float, ...] = ()
    smoothing: str = "none"
    epsilon: float = 1e-9

    def __post_init__(self) -> None:
        if self.max_order < 1:
            raise ConfigurationError("max_order must be >= 1")
        if not self.weights:
            object.__setattr__(
                self, "weights", tuple(1.0 / self.max_order for _ in range(self.max_order))
            )
        if len(self.weights) != self.max_order:
            raise ConfigurationError(
                f"expected {self.max_order} weights, got {len(self.weights)}"
            )
        if any(w < 0 for w in self.weights):
            raise ConfigurationError("weights must be non-negative")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ConfigurationError(f"weights must sum to 1, got {sum(self.weights)}")
        if self.smoothing not in ("none", "epsilon_floor"):
            raise ConfigurationError(f"unknown smoothing {self.smoothing!r}")
        if self.epsilon <= 0:
            raise ConfigurationError("epsilon must be positive")


@dataclass(frozen=True)
class TrivialNgramSet:
    """The k corpus-wide most frequent n-grams, with their frequencies.

    Membership ties at the frequency cutoff are broken lexicographically so
    the set is deterministic for a given corpus.
    """

    k: int
    ngrams: Mapping[Ngram, int] = field(default_factory=dict)

    def __contains__(self, ngram: Ngram) -> bool:
        return ngram in self.ngrams

    def __len__(self) -> int:
        return len(self.ngrams)

    @classmethod
    def empty(cls) -> "TrivialNgramSet":
        return cls(k=0, ngrams={})


def tokenize_code(code: str, language: str = "python") -> TokenSequence:
    """Split code into identifier / number / operator / punctuation tokens.

    Whitespace is dropped; runs of word characters form one token; multi-char
    operators from a fixed table are kept whole; every other non-space
    character is its own token. The same scanner currently backs every
    language tag.
    """
    del language  # one scanner for all supported tags, kept for the contract
    return TokenSequence(tokens=tuple(_TOKEN_RE.findall(code)))


def exact_match(cand: str, ref: str) -> float:
    """1.0 iff the strings are identical after trailing-whitespace strip."""
    return 1.0 if cand.rstrip() == ref.rstrip() else 0.0


def ngram_counts(tokens: Sequence[str], order: int) -> Counter:
    """Multiset of contiguous n-grams of exactly `order` tokens."""
    return Counter(
        tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1)
    )


def _modified_precisions(
    cand: Sequence[str],
    ref: Sequence[str],
    params: BleuParams,
    ngram_weight: Callable[[Ngram], float] | None = None,
    exclude: Callable[[Ngram], bool] | None = None,
) -> list[float | None]:
    """Per-order clipped precisions shared by the BLEU variants.

    Returns one entry per order 1..max_order: the (possibly weighted,
    possibly filtered) clipped precision, or None when the candidate
    contributes no counted n-grams at that order. None orders are treated as
    precision 1 by the combiner so that short-but-identical pairs still
    score 1.0; this also keeps crystal_bleu with an empty trivial set
    bit-identical to bleu.
    """
    precisions: list[float | None] = []
    for order in range(1, params.max_order + 1):
        cand_counts = ngram_counts(cand, order)
        ref_counts = ngram_counts(ref, order)
        numer = 0.0
        denom = 0.0
        for gram, count in cand_counts.items():
            if exclude is not None and exclude(gram):
                continue
            weight = 1.0 if ngram_weight is None else ngram_weight(gram)
            denom += weight * count
            clipped = min(count, ref_counts.get(gram, 0))
            if clipped:
                numer += weight * clipped
        precisions.append(None if denom == 0 else numer / denom)
    return precisions


def brevity_penalty(cand_len: int, ref_len: int) -> float:
    """Multiplicative penalty for candidates not longer than the reference."""
    if cand_len > ref_len:
        return 1.0
    if cand_len == 0:
        return 0.0
    return math.exp(1.0 - ref_len / cand_len)


def _combine(
    precisions: Sequence[float | None], params: BleuParams, bp: float
) -> float:
    log_sum = 0.0
    for weight, prec in zip(params.weights, precisions):
        if prec is None:
            continue  # no n-grams of this order: neutral by convention
        if prec == 0.0:
            if params.smoothing == "none":
                return 0.0
            prec = params.epsilon
        elif params.smoothing == "epsilon_floor" and prec < params.epsilon:
            prec = params.epsilon
        log_sum += weight * math.log(prec)
    return bp * math.exp(log_sum)


def bleu(
    cand: TokenSequence, ref: TokenSequence, params: BleuParams | None = None
) -> float:
    """Sentence-level BLEU: BP * exp(sum_n w_n * log(clipped_n / total_n)).

    An empty candidate scores 0.0 (degenerate input; callers flag it).
    """
    params = params or BleuParams()
    if len(cand) == 0:
        return 0.0
    precisions = _modified_precisions(cand.tokens, ref.tokens, params)
    return _combine(precisions, params, brevity_penalty(len(cand), len(ref)))


def extract_trivial_ngrams(
    corpus_refs: Iterable[TokenSequence], k: int, max_order: int = 4
) -> TrivialNgramSet:
    """The k most frequent n-grams (orders 1..max_order) across a corpus.

    Selection is by frequency descending, ties broken lexicographically, so
    the result is deterministic. k=0 yields an empty set.
    """
    if k < 0:
        raise ConfigurationError("k must be >= 0")
    totals: Counter = Counter()
    for seq in corpus_refs:
        for order in range(1, max_order + 1):
            totals.update(ngram_counts(seq.tokens, order))
    ranked = sorted(totals.items(), key=lambda item: (-item[1], item[0]))
    return TrivialNgramSet(k=k, ngrams=dict(ranked[:k]))


def crystal_bleu(
    cand: TokenSequence,
    ref: TokenSequence,
    params: BleuParams | None = None,
    trivial: TrivialNgramSet | None = None,
) -> float:
    """BLEU with trivially-frequent n-grams removed from both count sides.

    Orders whose candidate counts vanish entirely after removal contribute
    precision 1 (neutral); with an empty trivial set this is exactly bleu().
    """
    params = params or BleuParams()
    trivial = trivial or TrivialNgramSet.empty()
    if len(cand) == 0:
        return 0.0
    precisions = _modified_precisions(
        cand.tokens, ref.tokens, params, exclude=lambda gram: gram in trivial
    )
    return _combine(precisions, params, brevity_penalty(len(cand), len(ref)))


_WHITESPACE_RE = re.compile(r"\s+")


def _char_ngrams(s: str, order: int) -> Counter:
    return Counter(s[i : i + order] for i in range(len(s) - order + 1))


def chrf(cand: str, ref: str, max_n: int = 6, beta: float = 2.0) -> float:
    """Character n-gram F_beta score (whitespace removed, orders 1..max_n).

    Per-order precision and recall are averaged over the orders where both
    sides have n-grams, then combined once with beta weighting recall.
    Both sides empty (after whitespace removal) -> 1.0; exactly one empty
    -> 0.0.
    """
    if max_n < 1:
        raise ConfigurationError("max_n must be >= 1")
    if beta <= 0:
        raise ConfigurationError("beta must be positive")
    cand = _WHITESPACE_RE.sub("", cand)
    ref = _WHITESPACE_RE.sub("", ref)
    if not cand and not ref:
        return 1.0
    if not cand or not ref:
        return 0.0
    precision_sum = 0.0
    recall_sum = 0.0
    effective_orders = 0
    for order in range(1, max_n + 1):
        cand_counts = _char_ngrams(cand, order)
        ref_counts = _char_ngrams(ref, order)
        cand_total = sum(cand_counts.values())
        ref_total = sum(ref_counts.values())
        if cand_total == 0 or ref_total == 0:
            continue
        common = sum((cand_counts & ref_counts).values())
        precision_sum += common / cand_total
        recall_sum += common / ref_total
        effective_orders += 1
    if effective_orders == 0:
        return 0.0
    precision = precision_sum / effective_orders
    recall = recall_sum / effective_orders
    if precision + recall == 0.0:
        return 0.0
    beta_sq = beta * beta
    return (1.0 + beta_sq) * precision * recall / (beta_sq * precision + recall)
