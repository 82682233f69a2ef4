"""Semantics-preserving code perturbations for robustness testing.

Five transforms: rename variables in the candidate, the reference, or both
(to var0, var1, ... by first-occurrence order, parameters first), and rename
the single top-level function of both snippets to the same or to different
generic names.

Renames are applied as span edits on the original text so formatting is
untouched. Variable identification is scope-naive within a snippet:
shadowing collapses onto the first binding's ordinal.
"""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass, replace
from enum import Enum

from .corpus import EvaluationInstance
from .errors import ConfigurationError, TransformError

CANDIDATE_FUNCTION_NAME = "candidate_function"
REFERENCE_FUNCTION_NAME = "reference_function"


class TransformKind(str, Enum):
    VAR_CAND_ONLY = "var_cand_only"
    VAR_REF_ONLY = "var_ref_only"
    VAR_CAND_AND_REF = "var_cand_and_ref"
    FUNC_SAME = "func_same"
    FUNC_DIFFERENT = "func_different"

    @classmethod
    def from_cli_name(cls, name: str) -> "TransformKind":
        mapping = {
            "var-cand": cls.VAR_CAND_ONLY,
            "var-ref": cls.VAR_REF_ONLY,
            "var-both": cls.VAR_CAND_AND_REF,
            "func-same": cls.FUNC_SAME,
            "func-diff": cls.FUNC_DIFFERENT,
        }
        if name not in mapping:
            raise ConfigurationError(f"unknown transform {name!r}")
        return mapping[name]

    @property
    def cli_name(self) -> str:
        return {
            TransformKind.VAR_CAND_ONLY: "var-cand",
            TransformKind.VAR_REF_ONLY: "var-ref",
            TransformKind.VAR_CAND_AND_REF: "var-both",
            TransformKind.FUNC_SAME: "func-same",
            TransformKind.FUNC_DIFFERENT: "func-diff",
        }[self]


@dataclass(frozen=True)
class IdentifierInventory:
    """Identifiers of one role with their dense 0-based ordinals."""

    entries: tuple[tuple[str, int], ...]
    role: str


@dataclass(frozen=True)
class _Occurrence:
    name: str
    lineno: int
    col: int  # UTF-8 byte offset within the line, as ast reports
    end_col: int
    is_param: bool
    is_binding: bool


def _parse(code: str) -> ast.Module:
    try:
        return ast.parse(code)
    except (SyntaxError, ValueError) as exc:
        raise TransformError(f"cannot parse code: {exc}") from exc


def _collect_occurrences(tree: ast.Module) -> tuple[list[_Occurrence], set[str]]:
    """All Name/parameter occurrences plus names excluded from variable
    treatment (function and class names, imports, global/nonlocal)."""
    occurrences: list[_Occurrence] = []
    excluded: set[str] = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Name):
            occurrences.append(
                _Occurrence(
                    name=node.id,
                    lineno=node.lineno,
                    col=node.col_offset,
                    end_col=node.end_col_offset or node.col_offset,
                    is_param=False,
                    is_binding=isinstance(node.ctx, ast.Store),
                )
            )
        elif isinstance(node, ast.arg):
            occurrences.append(
                _Occurrence(
                    name=node.arg,
                    lineno=node.lineno,
                    col=node.col_offset,
                    end_col=node.col_offset + len(node.arg.encode("utf-8")),
                    is_param=True,
                    is_binding=True,
                )
            )
        elif isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            excluded.add(node.name)
        elif isinstance(node, (ast.Import, ast.ImportFrom)):
            for alias in node.names:
                excluded.add(alias.asname or alias.name.split(".")[0])
        elif isinstance(node, (ast.Global, ast.Nonlocal)):
            excluded.update(node.names)
    occurrences.sort(key=lambda occ: (occ.lineno, occ.col))
    return occurrences, excluded


def _variable_ordinals(tree: ast.Module) -> dict[str, int]:
    occurrences, excluded = _collect_occurrences(tree)
    variables = {
        occ.name for occ in occurrences if occ.is_binding and occ.name not in excluded
    }
    ordinals: dict[str, int] = {}
    for occ in occurrences:  # parameters first, in source order
        if occ.is_param and occ.name in variables and occ.name not in ordinals:
            ordinals[occ.name] = len(ordinals)
    for occ in occurrences:  # remaining variables by first occurrence
        if occ.name in variables and occ.name not in ordinals:
            ordinals[occ.name] = len(ordinals)
    return ordinals


def identifier_inventory(code: str, role: str = "variable") -> IdentifierInventory:
    """Ordered (identifier, ordinal) pairs for variables or functions."""
    tree = _parse(code)
    if role == "variable":
        ordinals = _variable_ordinals(tree)
        entries = tuple(sorted(ordinals.items(), key=lambda item: item[1]))
        return IdentifierInventory(entries=entries, role=role)
    if role == "function":
        names: list[str] = []
        for node in ast.walk(tree):
            if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
                if node.name not in names:
                    names.append(node.name)
        entries = tuple((name, i) for i, name in enumerate(names))
        return IdentifierInventory(entries=entries, role=role)
    raise ConfigurationError(f"unknown identifier role {role!r}")


def _apply_edits(code: str, edits: list[tuple[int, int, int, str]]) -> str:
    """Apply (lineno, col, end_col, replacement) span edits; offsets are
    UTF-8 byte positions within each line, matching ast's convention."""
    lines = code.split("\n")
    by_line: dict[int, list[tuple[int, int, str]]] = {}
    for lineno, col, end_col, new in edits:
        by_line.setdefault(lineno, []).append((col, end_col, new))
    for lineno, spans in by_line.items():
        raw = lines[lineno - 1].encode("utf-8")
        for col, end_col, new in sorted(spans, reverse=True):
            raw = raw[:col] + new.encode("utf-8") + raw[end_col:]
        lines[lineno - 1] = raw.decode("utf-8")
    return "\n".join(lines)


def rename_variables(code: str, language: str = "python") -> str:
    """Rename every variable to var{ordinal} by first-occurrence order.

    Parameters take the leading ordinals in source order; function names,
    attributes, keywords, imports, and string literals are untouched.
    Idempotent: already-generic code comes back unchanged.
    """
    if language != "python":
        raise ConfigurationError(f"unsupported language {language!r}")
    tree = _parse(code)
    ordinals = _variable_ordinals(tree)
    if not ordinals:
        return code
    mapping = {name: f"var{ordinal}" for name, ordinal in ordinals.items()}
    occurrences, _ = _collect_occurrences(tree)
    edits = [
        (occ.lineno, occ.col, occ.end_col, mapping[occ.name])
        for occ in occurrences
        if occ.name in mapping
    ]
    return _apply_edits(code, edits)


def _single_top_level_function(tree: ast.Module) -> ast.FunctionDef | ast.AsyncFunctionDef:
    defs = [
        node for node in tree.body
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef))
    ]
    if len(defs) != 1:
        raise TransformError(
            f"expected exactly one top-level function definition, found {len(defs)}"
        )
    return defs[0]


def _rename_function(code: str, new_name: str) -> str:
    tree = _parse(code)
    fn = _single_top_level_function(tree)
    old = fn.name
    edits: list[tuple[int, int, int, str]] = []
    line = code.split("\n")[fn.lineno - 1].encode("utf-8")
    pattern = re.compile(rb"\bdef\s+(" + re.escape(old.encode("utf-8")) + rb")\b")
    match = pattern.search(line, fn.col_offset)
    if match is None:  # pragma: no cover - grammar guarantees the token
        raise TransformError(f"could not locate definition of {old!r}")
    edits.append((fn.lineno, match.start(1), match.end(1), new_name))
    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and node.id == old:
            edits.append(
                (node.lineno, node.col_offset, node.end_col_offset or node.col_offset, new_name)
            )
    return _apply_edits(code, edits)


def rename_functions(cand: str, ref: str, mode: str = "same") -> tuple[str, str]:
    """Rename both snippets' single top-level functions (and references to
    them) to generic names: both the same, or candidate/reference-specific.
    """
    if mode not in ("same", "different"):
        raise ConfigurationError(f"unknown rename mode {mode!r}")
    cand_name = CANDIDATE_FUNCTION_NAME
    ref_name = CANDIDATE_FUNCTION_NAME if mode == "same" else REFERENCE_FUNCTION_NAME
    return _rename_function(cand, cand_name), _rename_function(ref, ref_name)


def apply_transform_pairwise(
    inst: EvaluationInstance, kind: TransformKind | str
) -> EvaluationInstance:
    """Rewrite candidate and/or reference per the transform kind.

    Failures are non-fatal: the instance comes back unmodified with
    transform_error set, so corpus statistics can exclude it.
    """
    kind = TransformKind(kind)
    try:
        if kind is TransformKind.VAR_CAND_ONLY:
            changed = {"candidate_code": rename_variables(inst.candidate_code)}
        elif kind is TransformKind.VAR_REF_ONLY:
            changed = {"reference_code": rename_variables(inst.reference_code)}
        elif kind is TransformKind.VAR_CAND_AND_REF:
            changed = {
                "candidate_code": rename_variables(inst.candidate_code),
                "reference_code": rename_variables(inst.reference_code),
            }
        else:
            mode = "same" if kind is TransformKind.FUNC_SAME else "different"
            cand, ref = rename_functions(inst.candidate_code, inst.reference_code, mode)
            changed = {"candidate_code": cand, "reference_code": ref}
    except TransformError as exc:
        return replace(inst, transform=kind.value, transform_error=str(exc))
    return replace(inst, transform=kind.value, transform_error=None, **changed)
