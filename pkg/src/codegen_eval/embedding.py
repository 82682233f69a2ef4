"""Embedding-based precision/recall/F1/F3 over pluggable token embedders.

Precision is the mean, over included candidate tokens, of each token's best
cosine similarity to any included reference token; recall is the mirror
image; F1 weights them equally and F3 weights recall nine times as heavily.

Three backends ship: a deterministic hash-projection embedder (CI and
testing), a reader for pre-exported .cemb directories, and an HTTP client
for a live embedding service.
"""
from __future__ import annotations

import hashlib
import json
import string
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from . import cemb
from .errors import BackendError, ConfigurationError, DegenerateInputError, ShapeError
from .lexical import tokenize_code

MASK_POLICIES = ("punctuation_off", "all_on")

# Sentinel tokens produced by subword tokenizers; always excluded by the
# punctuation_off policy.
SPECIAL_TOKENS = frozenset(
    {
        "[CLS]", "[SEP]", "[PAD]", "[UNK]", "[MASK]",
        "<s>", "</s>", "<pad>", "<unk>", "<mask>", "<cls>", "<sep>",
    }
)

# Markers some tokenizers prepend to encode "preceded by whitespace".
_SUBWORD_MARKERS = "Ġ▁"  # Ġ, ▁


@dataclass
class TokenEmbeddingMatrix:
    """Per-token embedding rows; one row per token, fixed dimension."""

    tokens: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ShapeError(f"vectors must be 2-D, got {self.vectors.ndim}-D")
        if self.vectors.shape[0] != len(self.tokens):
            raise ShapeError(
                f"{len(self.tokens)} tokens but {self.vectors.shape[0]} vector rows"
            )
        if len(self.tokens) and self.vectors.shape[1] < 1:
            raise ShapeError("embedding dimension must be >= 1")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class TokenMask:
    include: tuple[bool, ...]

    @property
    def included_count(self) -> int:
        return sum(self.include)

    def indices(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.include, dtype=bool))


@dataclass(frozen=True)
class PairScore:
    precision: float
    recall: float
    f1: float
    f3: float


def _is_punctuation_only(token: str) -> bool:
    stripped = token.strip(_SUBWORD_MARKERS).strip()
    return bool(stripped) and all(c in string.punctuation for c in stripped)


def build_mask(tokens: tuple[str, ...] | list[str], policy: str = "punctuation_off") -> TokenMask:
    """Token inclusion mask. punctuation_off drops punctuation-only tokens,
    whitespace-only tokens, and tokenizer sentinels; all_on keeps everything.
    """
    if policy == "all_on":
        return TokenMask(include=tuple(True for _ in tokens))
    if policy != "punctuation_off":
        raise ConfigurationError(f"unknown mask policy {policy!r}")
    include = []
    for token in tokens:
        if token in SPECIAL_TOKENS:
            include.append(False)
        elif not token.strip(_SUBWORD_MARKERS).strip():
            include.append(False)
        else:
            include.append(not _is_punctuation_only(token))
    return TokenMask(include=tuple(include))


def similarity_matrix(
    cand: TokenEmbeddingMatrix, ref: TokenEmbeddingMatrix
) -> np.ndarray:
    """Cosine similarities, entry (i, j) = sim(ref row i, cand row j).

    Rows are normalized once; results are clipped to [-1, 1], and pairs of
    bitwise-identical vectors score exactly 1.0 (the mathematically exact
    value, which a float dot product may miss by an ulp).
    """
    if cand.dim != ref.dim:
        raise ShapeError(f"dimension mismatch: cand {cand.dim} vs ref {ref.dim}")
    for label, matrix in (("candidate", cand), ("reference", ref)):
        norms = np.linalg.norm(matrix.vectors, axis=1)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise DegenerateInputError(f"{label} row {zero[0]} has zero norm")
    cand_unit = cand.vectors / np.linalg.norm(cand.vectors, axis=1, keepdims=True)
    ref_unit = ref.vectors / np.linalg.norm(ref.vectors, axis=1, keepdims=True)
    sims = ref_unit @ cand_unit.T
    np.clip(sims, -1.0, 1.0, out=sims)
    by_bytes: dict[bytes, list[int]] = {}
    for j in range(cand.vectors.shape[0]):
        by_bytes.setdefault(cand.vectors[j].tobytes(), []).append(j)
    for i in range(ref.vectors.shape[0]):
        for j in by_bytes.get(ref.vectors[i].tobytes(), ()):
            sims[i, j] = 1.0
    return sims


def f_scores(precision: float, recall: float) -> tuple[float, float]:
    """(F1, F3) from precision and recall; exact passthrough when P == R."""
    if precision == recall:
        return precision, precision
    denom1 = precision + recall
    f1 = 2.0 * precision * recall / denom1 if denom1 > 0 else 0.0
    denom3 = 9.0 * precision + recall
    f3 = 10.0 * precision * recall / denom3 if denom3 > 0 else 0.0
    return f1, f3


def score_pair(
    cand: TokenEmbeddingMatrix,
    cand_mask: TokenMask,
    ref: TokenEmbeddingMatrix,
    ref_mask: TokenMask,
) -> PairScore:
    """Greedy-matching precision/recall and the derived F1/F3."""
    if len(cand_mask.include) != len(cand.tokens):
        raise ShapeError("candidate mask not aligned with tokens")
    if len(ref_mask.include) != len(ref.tokens):
        raise ShapeError("reference mask not aligned with tokens")
    cand_idx = cand_mask.indices()
    ref_idx = ref_mask.indices()
    if cand_idx.size == 0:
        raise DegenerateInputError("candidate mask has no included tokens")
    if ref_idx.size == 0:
        raise DegenerateInputError("reference mask has no included tokens")
    sims = similarity_matrix(cand, ref)[np.ix_(ref_idx, cand_idx)]
    precision = float(np.mean(np.max(sims, axis=0)))
    recall = float(np.mean(np.max(sims, axis=1)))
    f1, f3 = f_scores(precision, recall)
    return PairScore(precision=precision, recall=recall, f1=f1, f3=f3)


class EmbedderBackend(Protocol):
    """Contract for token embedders: deterministic, mask aligned to tokens."""

    identity: str

    def embed(self, code: str, language: str) -> tuple[TokenEmbeddingMatrix, TokenMask]:
        ...


class HashEmbedder:
    """Deterministic test backend: each token string hashes to a fixed
    pseudo-random vector with positive entries, so all cosine similarities
    are non-negative and identical tokens embed identically.
    """

    def __init__(self, dim: int = 64, mask_policy: str = "punctuation_off"):
        if dim < 1:
            raise ConfigurationError("dim must be >= 1")
        if mask_policy not in MASK_POLICIES:
            raise ConfigurationError(f"unknown mask policy {mask_policy!r}")
        self.dim = dim
        self.mask_policy = mask_policy
        self.identity = f"hash-v1-dim{dim}"
        self._cache: dict[str, np.ndarray] = {}

    def _vector(self, token: str) -> np.ndarray:
        cached = self._cache.get(token)
        if cached is None:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            cached = rng.random(self.dim) + 1e-3
            self._cache[token] = cached
        return cached

    def embed(self, code: str, language: str = "python") -> tuple[TokenEmbeddingMatrix, TokenMask]:
        tokens = tokenize_code(code, language).tokens
        if tokens:
            vectors = np.stack([self._vector(t) for t in tokens])
        else:
            vectors = np.zeros((0, self.dim))
        matrix = TokenEmbeddingMatrix(tokens=tokens, vectors=vectors)
        return matrix, build_mask(tokens, self.mask_policy)


class CembDirectoryBackend:
    """Reads pre-exported .cemb files addressed by code content hash."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise BackendError(f"embedding directory not found: {self.directory}")
        self.identity = f"cemb-dir:{self.directory}"

    def embed(self, code: str, language: str = "python") -> tuple[TokenEmbeddingMatrix, TokenMask]:
        del language  # the exporter fixed the language at export time
        path = self.directory / cemb.cemb_filename(code)
        if not path.is_file():
            raise BackendError(f"no embedding file for code hash {cemb.content_hash(code)}")
        tokens, mask, vectors = cemb.read_cemb(path)
        matrix = TokenEmbeddingMatrix(tokens=tuple(tokens), vectors=vectors)
        return matrix, TokenMask(include=tuple(mask))


class RemoteEmbedder:
    """Client for an embedding service speaking POST /embed -> .cemb bytes."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.identity = f"remote:{self.base_url}"

    def health(self) -> dict:
        try:
            with urllib.request.urlopen(
                self.base_url + "/health", timeout=self.timeout
            ) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise BackendError(f"embedding service unreachable: {exc}") from exc

    def embed(self, code: str, language: str = "python") -> tuple[TokenEmbeddingMatrix, TokenMask]:
        payload = json.dumps({"code": code, "language": language}).encode("utf-8")
        request = urllib.request.Request(
            self.base_url + "/embed",
            data=payload,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                body = resp.read()
        except urllib.error.HTTPError as exc:
            raise BackendError(f"embed request failed: HTTP {exc.code} {exc.reason}") from exc
        except (urllib.error.URLError, OSError) as exc:
            raise BackendError(f"embedding service unreachable: {exc}") from exc
        tokens, mask, vectors = cemb.from_bytes(body)
        matrix = TokenEmbeddingMatrix(tokens=tuple(tokens), vectors=vectors)
        return matrix, TokenMask(include=tuple(mask))


def make_backend(spec: str, dim: int = 64, mask_policy: str = "punctuation_off"):
    """Backend factory for config values: "hash", "dir:<path>", or an URL."""
    if spec == "hash":
        return HashEmbedder(dim=dim, mask_policy=mask_policy)
    if spec.startswith("dir:"):
        return CembDirectoryBackend(spec[4:])
    if spec.startswith(("http://", "https://")):
        return RemoteEmbedder(spec)
    raise ConfigurationError(f"unknown embedding backend {spec!r}")
