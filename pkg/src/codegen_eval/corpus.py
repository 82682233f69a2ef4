"""Corpus ingestion: evaluation instances, execution records, and the join
between them, keyed by (task_id, model_id, sample_index).

Files are JSONL, one UTF-8 record per line. Instances store code verbatim;
any candidate normalization (like stripping markdown fences) is opt-in at
scoring time.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError

Key = tuple[str, str, int]

_INSTANCE_FIELDS = (
    "task_id", "model_id", "sample_index", "nl_context",
    "reference_code", "candidate_code", "language",
)
_EXECUTION_FIELDS = ("task_id", "model_id", "sample_index", "tests_passed", "tests_total")


@dataclass(frozen=True)
class EvaluationInstance:
    task_id: str
    model_id: str
    sample_index: int
    nl_context: str
    reference_code: str
    candidate_code: str
    language: str = "python"
    transform: str | None = None
    transform_error: str | None = None
    line_number: int | None = None  # 1-based source line, for diagnostics

    @property
    def key(self) -> Key:
        return (self.task_id, self.model_id, self.sample_index)

    def to_json(self) -> dict:
        record = {name: getattr(self, name) for name in _INSTANCE_FIELDS}
        if self.transform is not None:
            record["transform"] = self.transform
        if self.transform_error is not None:
            record["transform_error"] = self.transform_error
        return record


@dataclass(frozen=True)
class ExecutionRecord:
    task_id: str
    model_id: str
    sample_index: int
    tests_passed: int
    tests_total: int

    @property
    def key(self) -> Key:
        return (self.task_id, self.model_id, self.sample_index)

    @property
    def passed_all(self) -> bool:
        return self.tests_passed == self.tests_total

    def to_json(self) -> dict:
        return {name: getattr(self, name) for name in _EXECUTION_FIELDS}


@dataclass(frozen=True)
class Corpus:
    instances: tuple[EvaluationInstance, ...]
    executions: Mapping[Key, ExecutionRecord] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.instances)

    def by_key(self, key: Key) -> EvaluationInstance:
        for inst in self.instances:
            if inst.key == key:
                return inst
        raise KeyError(key)

    def model_ids(self) -> tuple[str, ...]:
        return tuple(sorted({inst.model_id for inst in self.instances}))

    def task_ids(self) -> tuple[str, ...]:
        return tuple(sorted({inst.task_id for inst in self.instances}))


def validate_instance(inst: EvaluationInstance) -> list[str]:
    """Invariant violations for one instance; empty list means valid."""
    violations = []
    if not inst.task_id:
        violations.append("empty task_id")
    if not inst.model_id:
        violations.append("empty model_id")
    if inst.sample_index < 0:
        violations.append("negative index")
    if not inst.reference_code:
        violations.append("empty reference")
    return violations


def _parse_instance(record: dict, line_number: int) -> EvaluationInstance:
    missing = [name for name in _INSTANCE_FIELDS if name not in record]
    if missing:
        raise DataError(f"line {line_number}: missing fields {', '.join(missing)}")
    if not isinstance(record["sample_index"], int) or isinstance(record["sample_index"], bool):
        raise DataError(f"line {line_number}: sample_index must be an integer")
    inst = EvaluationInstance(
        task_id=str(record["task_id"]),
        model_id=str(record["model_id"]),
        sample_index=record["sample_index"],
        nl_context=str(record["nl_context"]),
        reference_code=str(record["reference_code"]),
        candidate_code=str(record["candidate_code"]),
        language=str(record["language"]),
        transform=record.get("transform"),
        transform_error=record.get("transform_error"),
        line_number=line_number,
    )
    violations = validate_instance(inst)
    if violations:
        raise DataError(f"line {line_number}: {'; '.join(violations)}")
    return inst


def _iter_jsonl(path: str | Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {line_number}: malformed JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise DataError(f"line {line_number}: record is not an object")
            yield line_number, record


def load_instances(path: str | Path, format: str = "jsonl") -> Corpus:
    """Read an instances file into a Corpus, preserving file order."""
    if format != "jsonl":
        raise DataError(f"unsupported format {format!r}")
    instances: list[EvaluationInstance] = []
    seen: dict[Key, int] = {}
    for line_number, record in _iter_jsonl(path):
        inst = _parse_instance(record, line_number)
        if inst.key in seen:
            raise DataError(
                f"line {line_number}: duplicate key {inst.key} "
                f"(first seen on line {seen[inst.key]})"
            )
        seen[inst.key] = line_number
        instances.append(inst)
    return Corpus(instances=tuple(instances))


def load_executions(path: str | Path) -> list[ExecutionRecord]:
    records: list[ExecutionRecord] = []
    for line_number, record in _iter_jsonl(path):
        missing = [name for name in _EXECUTION_FIELDS if name not in record]
        if missing:
            raise DataError(f"line {line_number}: missing fields {', '.join(missing)}")
        rec = ExecutionRecord(
            task_id=str(record["task_id"]),
            model_id=str(record["model_id"]),
            sample_index=int(record["sample_index"]),
            tests_passed=int(record["tests_passed"]),
            tests_total=int(record["tests_total"]),
        )
        if rec.tests_total < 1:
            raise DataError(f"line {line_number}: tests_total must be >= 1")
        if not 0 <= rec.tests_passed <= rec.tests_total:
            raise DataError(f"line {line_number}: tests_passed must be in [0, tests_total]")
        records.append(rec)
    return records


def join_executions(corpus: Corpus, records: Sequence[ExecutionRecord]) -> Corpus:
    """Attach execution records to their instances. Idempotent; instances
    without records stay unlabeled; unknown keys are an error."""
    known = {inst.key for inst in corpus.instances}
    dangling = sorted({rec.key for rec in records} - known)
    if dangling:
        raise DataError(f"execution records with no matching instance: {dangling}")
    executions = dict(corpus.executions)
    executions.update({rec.key: rec for rec in records})
    return Corpus(instances=corpus.instances, executions=executions)


def save_instances(instances: Iterable[EvaluationInstance], path: str | Path) -> None:
    """Round-trip serialization: one JSON object per line, file order kept."""
    with open(path, "w", encoding="utf-8") as handle:
        for inst in instances:
            handle.write(json.dumps(inst.to_json(), ensure_ascii=False) + "\n")


_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def strip_code_fences(text: str) -> str:
    """Extract fenced code blocks from prose-wrapped model output.

    If the text contains markdown fences, the fenced contents (joined in
    order) replace it; otherwise the text is returned verbatim. Used by the
    scoring CLI behind an explicit flag; ingestion never alters code.
    """
    blocks = _FENCE_RE.findall(text)
    if not blocks:
        return text
    return "\n".join(block.rstrip("\n") for block in blocks)


def normalize_candidates(corpus: Corpus) -> Corpus:
    instances = tuple(
        replace(inst, candidate_code=strip_code_fences(inst.candidate_code))
        for inst in corpus.instances
    )
    return Corpus(instances=instances, executions=dict(corpus.executions))
