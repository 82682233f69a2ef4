"""Binary token-embedding file format (.cemb).

Layout, all integers little-endian:
    magic   4 bytes  b"CEMB"
    version u32      1
    n_tokens u32
    dim      u32
    tokens   n_tokens x (u32 byte length + UTF-8 bytes)
    mask     ceil(n_tokens / 8) bytes, LSB-first within each byte
    vectors  n_tokens x dim float32, row-major

Files are content-addressed: the file name is the lowercase hex SHA-256 of
the UTF-8 encoding of the embedded code, with extension ".cemb".
"""
from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BackendError

MAGIC = b"CEMB"
VERSION = 1


def content_hash(code: str) -> str:
    return hashlib.sha256(code.encode("utf-8")).hexdigest()


def cemb_filename(code: str) -> str:
    return content_hash(code) + ".cemb"


def to_bytes(
    tokens: Sequence[str], mask: Sequence[bool], vectors: np.ndarray
) -> bytes:
    n = len(tokens)
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if vectors.ndim != 2 or vectors.shape[0] != n:
        raise ValueError(f"vectors must be ({n}, dim), got {vectors.shape}")
    if len(mask) != n:
        raise ValueError(f"mask length {len(mask)} != token count {n}")
    dim = vectors.shape[1] if n else 0
    out = bytearray()
    out += MAGIC
    out += struct.pack("<III", VERSION, n, dim)
    for token in tokens:
        raw = token.encode("utf-8")
        out += struct.pack("<I", len(raw))
        out += raw
    mask_bytes = bytearray((n + 7) // 8)
    for i, included in enumerate(mask):
        if included:
            mask_bytes[i // 8] |= 1 << (i % 8)
    out += bytes(mask_bytes)
    out += vectors.tobytes(order="C")
    return bytes(out)


def from_bytes(data: bytes) -> tuple[list[str], list[bool], np.ndarray]:
    """Decode a .cemb payload; raises BackendError on any malformation."""
    if len(data) < 16:
        raise BackendError("cemb payload too short for header")
    if data[:4] != MAGIC:
        raise BackendError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    version, n, dim = struct.unpack_from("<III", data, 4)
    if version != VERSION:
        raise BackendError(f"unsupported cemb version {version}")
    offset = 16
    tokens: list[str] = []
    for i in range(n):
        if offset + 4 > len(data):
            raise BackendError(f"truncated token table at token {i}")
        (length,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + length > len(data):
            raise BackendError(f"truncated token {i}")
        try:
            tokens.append(data[offset : offset + length].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise BackendError(f"token {i} is not valid UTF-8") from exc
        offset += length
    mask_len = (n + 7) // 8
    if offset + mask_len > len(data):
        raise BackendError("truncated mask")
    mask_bytes = data[offset : offset + mask_len]
    offset += mask_len
    mask = [bool(mask_bytes[i // 8] >> (i % 8) & 1) for i in range(n)]
    expected = n * dim * 4
    if len(data) - offset != expected:
        raise BackendError(
            f"vector block is {len(data) - offset} bytes, expected {expected}"
        )
    vectors = np.frombuffer(data, dtype="<f4", count=n * dim, offset=offset)
    vectors = vectors.reshape(n, dim).astype(np.float64)
    return tokens, mask, vectors


def write_cemb(
    path: str | Path, tokens: Sequence[str], mask: Sequence[bool], vectors: np.ndarray
) -> None:
    Path(path).write_bytes(to_bytes(tokens, mask, vectors))


def read_cemb(path: str | Path) -> tuple[list[str], list[bool], np.ndarray]:
    return from_bytes(Path(path).read_bytes())


def validate_cemb(path: str | Path) -> list[str]:
    """Format conformance check. Returns problems; empty list means valid."""
    problems: list[str] = []
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        return [f"unreadable: {exc}"]
    try:
        tokens, mask, vectors = from_bytes(data)
    except BackendError as exc:
        return [str(exc)]
    if not np.all(np.isfinite(vectors)):
        problems.append("non-finite vector entries")
    n = len(tokens)
    mask_bytes = (n + 7) // 8
    if mask_bytes and n % 8:
        # re-extract the final mask byte to check padding bits are zero
        token_block = sum(4 + len(t.encode("utf-8")) for t in tokens)
        last = data[16 + token_block + mask_bytes - 1]
        if last >> (n % 8):
            problems.append("nonzero padding bits in mask")
    return problems
