"""Score tables and byte-stable report emission.

A ScoreTable holds one row per (task_id, model_id, sample_index) and one
column per metric. Cells are floats or None; every None carries a flag
explaining it. Markdown output rounds to 3 decimals; CSV/TSV keep full
precision (shortest round-trip float repr).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import ConfigurationError, DataError
from .metastats import ScoreVector

Key = tuple[str, str, int]

FORMATS = ("md", "tsv", "csv")


@dataclass
class ScoreTable:
    metrics: tuple[str, ...]
    rows: dict[Key, dict[str, float | None]] = field(default_factory=dict)
    flags: dict[Key, dict[str, str]] = field(default_factory=dict)

    def ensure_row(self, key: Key) -> None:
        if key not in self.rows:
            self.rows[key] = {metric: None for metric in self.metrics}
            self.flags[key] = {}

    def set_value(self, key: Key, metric: str, value: float | None) -> None:
        self.ensure_row(key)
        self.rows[key][metric] = value

    def set_flag(self, key: Key, metric: str, reason: str) -> None:
        self.ensure_row(key)
        self.flags[key][metric] = reason

    def sorted_keys(self) -> list[Key]:
        return sorted(self.rows)

    def model_ids(self) -> list[str]:
        return sorted({key[1] for key in self.rows})

    def model_means(self) -> dict[str, dict[str, float | None]]:
        """Per-model macro-average: mean within task, then across tasks."""
        per_task: dict[tuple[str, str], dict[str, list[float]]] = {}
        for key, values in self.rows.items():
            task_id, model_id, _ = key
            bucket = per_task.setdefault((model_id, task_id), {m: [] for m in self.metrics})
            for metric, value in values.items():
                if value is not None:
                    bucket[metric].append(value)
        means: dict[str, dict[str, float | None]] = {}
        for model_id in self.model_ids():
            metric_means: dict[str, float | None] = {}
            for metric in self.metrics:
                task_means = [
                    sum(bucket[metric]) / len(bucket[metric])
                    for (mid, _), bucket in sorted(per_task.items())
                    if mid == model_id and bucket[metric]
                ]
                metric_means[metric] = (
                    sum(task_means) / len(task_means) if task_means else None
                )
            means[model_id] = metric_means
        return means

    def score_vectors(self, metric: str) -> list[ScoreVector]:
        """Aligned per-model vectors for one metric, ordered by sorted
        (task_id, sample_index). Positions where any model has a null are
        dropped from every model so the vectors stay comparable."""
        if metric not in self.metrics:
            raise ConfigurationError(f"table has no metric {metric!r}")
        models = self.model_ids()
        positions = sorted({(key[0], key[2]) for key in self.rows})
        kept: list[tuple[str, int]] = []
        for task_id, sample_index in positions:
            cells = [
                self.rows.get((task_id, model, sample_index), {}).get(metric)
                for model in models
            ]
            if all(cell is not None for cell in cells):
                kept.append((task_id, sample_index))
        vectors = []
        for model in models:
            values = tuple(
                self.rows[(task_id, model, sample_index)][metric]
                for task_id, sample_index in kept
            )
            vectors.append(ScoreVector(metric_id=metric, model_id=model, values=values))
        return vectors

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["task_id", "model_id", "sample_index", *self.metrics, "flags"])
            for key in self.sorted_keys():
                row = self.rows[key]
                cells = [
                    "" if row[metric] is None else repr(row[metric])
                    for metric in self.metrics
                ]
                flag_text = ";".join(
                    f"{metric}={reason}" for metric, reason in sorted(self.flags[key].items())
                )
                writer.writerow([key[0], key[1], key[2], *cells, flag_text])

    @classmethod
    def from_csv(cls, path: str | Path) -> "ScoreTable":
        with open(path, encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty score table") from None
            if header[:3] != ["task_id", "model_id", "sample_index"] or header[-1] != "flags":
                raise DataError(f"{path}: unrecognized score table header")
            metrics = tuple(header[3:-1])
            table = cls(metrics=metrics)
            for line_number, row in enumerate(reader, 2):
                if len(row) != len(header):
                    raise DataError(f"{path}: line {line_number}: wrong column count")
                try:
                    key = (row[0], row[1], int(row[2]))
                except ValueError as exc:
                    raise DataError(f"{path}: line {line_number}: bad sample_index") from exc
                table.ensure_row(key)
                for metric, cell in zip(metrics, row[3:-1]):
                    if cell:
                        try:
                            table.rows[key][metric] = float(cell)
                        except ValueError as exc:
                            raise DataError(
                                f"{path}: line {line_number}: bad value for {metric}"
                            ) from exc
                if row[-1]:
                    for item in row[-1].split(";"):
                        metric, _, reason = item.partition("=")
                        table.flags[key][metric] = reason
        return table


def _format_cell(value: float | None, decimals: int | None) -> str:
    if value is None:
        return ""
    if decimals is None:
        return repr(value)
    return f"{value:.{decimals}f}"


def emit_report(table: ScoreTable, format: str, path: str | Path) -> None:
    """Write the per-row score table; byte-identical for identical input."""
    if format not in FORMATS:
        raise ConfigurationError(f"unknown report format {format!r}")
    header = ["task_id", "model_id", "sample_index", *table.metrics, "flags"]
    lines: list[str] = []
    decimals = 3 if format == "md" else None
    for key in table.sorted_keys():
        row = table.rows[key]
        flag_text = ";".join(
            f"{metric}={reason}" for metric, reason in sorted(table.flags[key].items())
        )
        cells = [
            key[0],
            key[1],
            str(key[2]),
            *(_format_cell(row[metric], decimals) for metric in table.metrics),
            flag_text,
        ]
        lines.append(cells)
    out = Path(path)
    if format == "md":
        body = ["| " + " | ".join(header) + " |"]
        body.append("|" + "|".join(" --- " for _ in header) + "|")
        body.extend("| " + " | ".join(cells) + " |" for cells in lines)
        out.write_text("\n".join(body) + "\n", encoding="utf-8")
    else:
        sep = "\t" if format == "tsv" else ","
        body = [sep.join(header)]
        body.extend(sep.join(cells) for cells in lines)
        out.write_text("\n".join(body) + "\n", encoding="utf-8")


def summary_markdown(table: ScoreTable, title: str = "Per-model means") -> str:
    """Model-by-metric mean block shaped like a results table."""
    means = table.model_means()
    lines = [f"## {title}", ""]
    header = ["model_id", *table.metrics]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join(" --- " for _ in header) + "|")
    for model_id in table.model_ids():
        cells = [
            _format_cell(means[model_id][metric], 3) for metric in table.metrics
        ]
        lines.append("| " + " | ".join([model_id, *cells]) + " |")
    return "\n".join(lines) + "\n"


def write_lines(path: str | Path, rows: Iterable[str]) -> None:
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")
