"""Functional-correctness constructs from execution records.

pass@k is the unbiased estimator 1 - C(n-c, k) / C(n, k), computed with the
numerically stable product form so large n cannot overflow.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

from .errors import DegenerateInputError

if TYPE_CHECKING:  # pragma: no cover
    from .corpus import Corpus, ExecutionRecord


@dataclass(frozen=True)
class PassAtKInput:
    n: int
    c: int
    k: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.c <= self.n:
            raise ValueError(f"c must be in [0, n], got c={self.c}, n={self.n}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"k must be in [1, n], got k={self.k}, n={self.n}")


def pass_at_k(n: int, c: int, k: int) -> float:
    """Probability that at least one of k draws (from n samples, c passing)
    passes, i.e. 1 - C(n-c, k) / C(n, k) via prod_{i=n-c+1..n} (1 - k/i).
    """
    PassAtKInput(n=n, c=c, k=k)
    if n - c < k:
        return 1.0
    prod = 1.0
    for i in range(n - c + 1, n + 1):
        prod *= 1.0 - k / i
    return 1.0 - prod


def instance_pass(rec: "ExecutionRecord") -> bool:
    """Dichotomous correctness: every test passed."""
    return rec.tests_passed == rec.tests_total


def corpus_pass_rate(corpus: "Corpus", model_id: str, k: int = 1) -> float:
    """Mean over tasks of pass@k, with (n, c) aggregated over sample_index."""
    per_task: dict[str, list[bool]] = {}
    for inst in corpus.instances:
        if inst.model_id != model_id:
            continue
        rec = corpus.executions.get(inst.key)
        if rec is None:
            continue
        per_task.setdefault(inst.task_id, []).append(instance_pass(rec))
    if not per_task:
        raise DegenerateInputError(f"no execution-labeled instances for model {model_id!r}")
    rates = []
    for task_id in sorted(per_task):
        outcomes = per_task[task_id]
        rates.append(pass_at_k(n=len(outcomes), c=sum(outcomes), k=k))
    return sum(rates) / len(rates)


def pass_rate_table(
    corpus: "Corpus", ks: Iterable[int]
) -> dict[str, dict[int, float]]:
    """pass@k per model for each requested k; drives the passk subcommand."""
    table: dict[str, dict[int, float]] = {}
    for model_id in corpus.model_ids():
        labeled = [
            inst for inst in corpus.instances
            if inst.model_id == model_id and inst.key in corpus.executions
        ]
        if not labeled:
            continue
        table[model_id] = {k: corpus_pass_rate(corpus, model_id, k) for k in ks}
    return table
