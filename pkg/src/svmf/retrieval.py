"""Fingerprint comparison, indexing and ranked retrieval.

The comparison score is ``||a - b|| / ||a + b||`` (Euclidean norms).  It
is 0 for identical fingerprints and at most 1 for nonnegative ones, so it
behaves as a dissimilarity: results are ranked ascending, ties broken by
insertion order.

Index file layout (little-endian)::

    b"SVIX" | version:u8 | n:u32 | count:u32 |
        count * (key_len:u16 | key:utf-8 | SVMF payload)

An index that has never received a fingerprint stores ``n = 0``.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass
from typing import Iterable, Iterator

from .fingerprint import SVMF, FormatError, VersionError, _decode_prefix, encode_svmf

__all__ = [
    "ComparisonError",
    "DuplicateKeyError",
    "FingerprintIndex",
    "RankedResult",
    "similarity",
    "index_add",
    "search",
    "rank_of",
    "index_save",
    "index_load",
    "encode_index",
    "decode_index",
    "atomic_write_bytes",
]

MAGIC = b"SVIX"
VERSION = 1
_HEADER = struct.Struct("<4sBII")
_KEYLEN = struct.Struct("<H")


class ComparisonError(ValueError):
    """Fingerprints built over catalogs of different sizes."""


class DuplicateKeyError(ValueError):
    pass


def similarity(f1: SVMF, f2: SVMF) -> float:
    """Norm of the difference over norm of the sum; 0 means identical.

    Two empty fingerprints compare as identical (0.0).
    """
    if f1.n != f2.n:
        raise ComparisonError(f"cannot compare fingerprints with n={f1.n} and n={f2.n}")
    a, b = f1.entries, f2.entries
    diff_sq = []
    sum_sq = []
    for k in a.keys() | b.keys():
        x, y = a.get(k, 0.0), b.get(k, 0.0)
        diff_sq.append((x - y) ** 2)
        sum_sq.append((x + y) ** 2)
    denom = math.sqrt(math.fsum(sum_sq))
    if denom == 0.0:
        return 0.0
    return math.sqrt(math.fsum(diff_sq)) / denom


@dataclass(frozen=True)
class RankedResult:
    key: str
    score: float
    rank: int


class FingerprintIndex:
    """Insertion-ordered collection of keyed fingerprints sharing one ``n``.

    Reads (:meth:`search`, :meth:`rank_of`) do not mutate the index and may
    run concurrently; :meth:`add` needs exclusive access.
    """

    def __init__(self, n: int | None = None):
        self.n = n
        self._keys: list[str] = []
        self._fps: list[SVMF] = []
        self._pos: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, key: str) -> bool:
        return key in self._pos

    def __iter__(self) -> Iterator[tuple[str, SVMF]]:
        return iter(zip(self._keys, self._fps))

    def __getitem__(self, key: str) -> SVMF:
        return self._fps[self._pos[key]]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FingerprintIndex):
            return NotImplemented
        return self.n == other.n and self._keys == other._keys and self._fps == other._fps

    def __repr__(self) -> str:
        return f"FingerprintIndex(n={self.n}, size={len(self)})"

    @property
    def keys(self) -> list[str]:
        return list(self._keys)

    def add(self, key: str, fp: SVMF) -> "FingerprintIndex":
        if key in self._pos:
            raise DuplicateKeyError(f"key {key!r} already indexed")
        if self.n is None:
            self.n = fp.n
        elif fp.n != self.n:
            raise ComparisonError(f"index holds n={self.n} fingerprints, got n={fp.n}")
        self._pos[key] = len(self._keys)
        self._keys.append(key)
        self._fps.append(fp)
        return self

    def extend(self, items: Iterable[tuple[str, SVMF]]) -> "FingerprintIndex":
        for key, fp in items:
            self.add(key, fp)
        return self

    def scores(self, query: SVMF) -> list[float]:
        if not self._keys:
            raise ValueError("index is empty")
        if query.n != self.n:
            raise ComparisonError(f"query has n={query.n}, index has n={self.n}")
        return [similarity(query, fp) for fp in self._fps]

    def search(self, query: SVMF, k: int = 10) -> list[RankedResult]:
        if k < 1:
            raise ValueError("k must be at least 1")
        scores = self.scores(query)
        order = sorted(range(len(scores)), key=lambda i: (scores[i], i))[:k]
        return [RankedResult(self._keys[i], scores[i], r) for r, i in enumerate(order, start=1)]

    def rank_of(self, query: SVMF, target_key: str) -> int:
        """1-based position of ``target_key``; earlier-inserted ties rank first."""
        if target_key not in self._pos:
            raise KeyError(f"target {target_key!r} not in index")
        scores = self.scores(query)
        t = self._pos[target_key]
        target = scores[t]
        return 1 + sum(1 for i, s in enumerate(scores) if s < target or (s == target and i < t))


def index_add(idx: FingerprintIndex, key: str, fp: SVMF) -> FingerprintIndex:
    return idx.add(key, fp)


def search(idx: FingerprintIndex, query: SVMF, k: int = 10) -> list[RankedResult]:
    return idx.search(query, k)


def rank_of(idx: FingerprintIndex, query: SVMF, target_key: str) -> int:
    return idx.rank_of(query, target_key)


def encode_index(idx: FingerprintIndex) -> bytes:
    parts = [_HEADER.pack(MAGIC, VERSION, idx.n or 0, len(idx))]
    for key, fp in idx:
        raw = key.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"key too long to serialize ({len(raw)} bytes)")
        parts.append(_KEYLEN.pack(len(raw)))
        parts.append(raw)
        parts.append(encode_svmf(fp))
    return b"".join(parts)


def decode_index(data: bytes) -> FingerprintIndex:
    buf = memoryview(data)
    if len(buf) < _HEADER.size:
        raise FormatError("truncated index header")
    magic, version, n, count = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FormatError(f"bad index magic {bytes(magic)!r}")
    if version != VERSION:
        raise VersionError(f"unsupported index version {version} (expected {VERSION})")
    idx = FingerprintIndex(n if count or n else None)
    off = _HEADER.size
    for _ in range(count):
        if off + _KEYLEN.size > len(buf):
            raise FormatError("truncated index entry")
        (klen,) = _KEYLEN.unpack_from(buf, off)
        off += _KEYLEN.size
        if off + klen > len(buf):
            raise FormatError("truncated index key")
        try:
            key = bytes(buf[off : off + klen]).decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("index key is not valid UTF-8") from None
        off += klen
        fp, off = _decode_prefix(buf, off)
        if fp.n != n:
            raise FormatError(f"entry {key!r} has n={fp.n}, index header says n={n}")
        try:
            idx.add(key, SVMF(fp.n, fp.entries, key))
        except DuplicateKeyError as exc:
            raise FormatError(str(exc)) from None
    if off != len(buf):
        raise FormatError(f"{len(buf) - off} trailing bytes after index")
    return idx


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def index_save(idx: FingerprintIndex, path: str | os.PathLike) -> None:
    atomic_write_bytes(path, encode_index(idx))


def index_load(path: str | os.PathLike) -> FingerprintIndex:
    with open(path, "rb") as fh:
        return decode_index(fh.read())
