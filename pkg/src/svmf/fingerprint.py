"""Substructure-based visual molecular fingerprints.

A fingerprint is an upper-triangular ``n x n`` matrix over catalog
classes.  Diagonal cells hold ``h1 * count_i + g_ii``; off-diagonal cells
``(i, j)`` with ``i < j`` hold ``g_ij``, the sum over instance pairs of
classes ``i`` and ``j`` of a distance weight ``h2(d)``.  Pair weights are
divided by ``carbon_divisor`` once per carbon-backbone endpoint, and pairs
further apart than ``distance_cap`` (or disconnected) contribute nothing.

Only non-zero cells are kept, keyed by the row-major index ``i * n + j``
into the flattened full matrix.

Binary layout (little-endian)::

    b"SVMF" | version:u8 | n:u32 | count:u32 | count * (k:u64, value:f64)

with entries strictly ascending in ``k``.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .catalog import Catalog
from .graph import (
    REFERENCE_CAP,
    SubstructureGraph,
    all_pairs_distances_capped,
    graph_from_edges,
)

__all__ = [
    "FormatError",
    "VersionError",
    "Hyperparams",
    "SVMF",
    "linear_index",
    "cell_of",
    "compute_svmf",
    "svmf_from_matches",
    "encode_svmf",
    "decode_svmf",
    "nnz",
    "REFERENCE_H2",
]

MAGIC = b"SVMF"
VERSION = 1
_HEADER = struct.Struct("<4sBII")
_ENTRY = np.dtype([("k", "<u8"), ("v", "<f8")])

# distance -> weight: 2, 2, 2/4, 2/16, 2/256
REFERENCE_H2 = (2.0, 2.0, 0.5, 0.125, 0.0078125)


class FormatError(ValueError):
    """Corrupt or truncated serialized payload."""


class VersionError(FormatError):
    """Payload written with an unsupported format version."""


@dataclass(frozen=True)
class Hyperparams:
    h1: float = 10.0
    h2_table: tuple[float, ...] = REFERENCE_H2
    distance_cap: int = REFERENCE_CAP
    carbon_divisor: float = 2.0
    expansion_factor: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "h2_table", tuple(float(w) for w in self.h2_table))
        self.validate()

    def validate(self) -> None:
        if not (math.isfinite(self.h1) and self.h1 > 0):
            raise ValueError(f"h1 must be positive, got {self.h1}")
        if self.distance_cap < 0:
            raise ValueError("distance_cap must be nonnegative")
        if len(self.h2_table) != self.distance_cap + 1:
            raise ValueError(
                f"h2_table needs exactly {self.distance_cap + 1} weights (d = 0..{self.distance_cap}), "
                f"got {len(self.h2_table)}"
            )
        if any(not math.isfinite(w) or w < 0 for w in self.h2_table):
            raise ValueError("h2 weights must be finite and nonnegative")
        if not (math.isfinite(self.carbon_divisor) and self.carbon_divisor > 0):
            raise ValueError("carbon_divisor must be positive")
        if not math.isfinite(self.expansion_factor):
            raise ValueError("expansion_factor must be finite")

    def h2(self, d: int | None) -> float:
        if d is None or d > self.distance_cap:
            return 0.0
        return self.h2_table[d]


@dataclass(frozen=True)
class SVMF:
    """Sparse fingerprint: ``entries`` maps linear index to a positive value."""

    n: int
    entries: Mapping[int, float] = field(default_factory=dict)
    key: str = ""

    def __post_init__(self):
        object.__setattr__(self, "entries", dict(sorted(self.entries.items())))

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SVMF):
            return NotImplemented
        return self.n == other.n and self.entries == other.entries

    def __hash__(self):
        return hash((self.n, tuple(self.entries.items())))

    def cell(self, i: int, j: int) -> float:
        return self.entries.get(linear_index(i, j, self.n), 0.0)

    def cells(self) -> dict[tuple[int, int], float]:
        return {cell_of(k, self.n): v for k, v in self.entries.items()}

    def scaled(self, c: float) -> "SVMF":
        return SVMF(self.n, {k: v * c for k, v in self.entries.items()}, self.key)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.n * self.n)
        for k, v in self.entries.items():
            out[k] = v
        return out.reshape(self.n, self.n)

    def to_json(self) -> dict:
        return {"n": self.n, "entries": {str(k): v for k, v in self.entries.items()}}

    @classmethod
    def from_json(cls, obj, key: str = "") -> "SVMF":
        if not isinstance(obj, dict) or not isinstance(obj.get("n"), int) or not isinstance(obj.get("entries"), dict):
            raise FormatError('expected {"n": int, "entries": {"k": value}}')
        n = obj["n"]
        entries = {}
        for raw_k, v in obj["entries"].items():
            try:
                k = int(raw_k)
            except ValueError:
                raise FormatError(f"entry key {raw_k!r} is not an integer") from None
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise FormatError(f"entry {k} value {v!r} is not a number")
            entries[k] = float(v)
        _check_entries(n, entries)
        return cls(n, entries, key)


def linear_index(i: int, j: int, n: int) -> int:
    """Row-major index of upper-triangular cell ``(i, j)`` in an ``n x n`` matrix."""
    if not (0 <= i <= j < n):
        raise ValueError(f"cell ({i}, {j}) is not an upper-triangular cell of a {n}x{n} matrix")
    return i * n + j


def cell_of(k: int, n: int) -> tuple[int, int]:
    i, j = divmod(k, n)
    if not (0 <= i <= j < n):
        raise ValueError(f"index {k} does not address an upper-triangular cell for n={n}")
    return i, j


def _check_entries(n: int, entries: Mapping[int, float]) -> None:
    if not 0 <= n < 2**32:
        raise FormatError(f"n={n} out of range")
    for k, v in entries.items():
        i, j = divmod(k, n) if n else (-1, -1)
        if k < 0 or not (0 <= i <= j < n):
            raise FormatError(f"index {k} does not address an upper-triangular cell for n={n}")
        if not (math.isfinite(v) and v > 0):
            raise FormatError(f"entry {k} has non-positive or non-finite value {v!r}")


def compute_svmf(g: SubstructureGraph, catalog: Catalog, hp: Hyperparams = Hyperparams()) -> SVMF:
    n = catalog.n
    class_of = g.class_of
    carbon = {cid: catalog.is_carbon(cid) for cid in set(class_of.values())}

    counts: dict[int, int] = {}
    for cid in class_of.values():
        counts[cid] = counts.get(cid, 0) + 1

    contributions: dict[tuple[int, int], list[float]] = {}
    for (a, b), d in all_pairs_distances_capped(g, hp.distance_cap):
        w = hp.h2(d)
        ca, cb = class_of[a], class_of[b]
        w /= hp.carbon_divisor ** (carbon[ca] + carbon[cb])
        cell = (ca, cb) if ca <= cb else (cb, ca)
        contributions.setdefault(cell, []).append(w)

    # fsum keeps each cell independent of pair enumeration order
    values: dict[tuple[int, int], float] = {
        cell: math.fsum(ws) for cell, ws in contributions.items()
    }
    for cid, count in counts.items():
        values[(cid, cid)] = hp.h1 * count + values.get((cid, cid), 0.0)

    entries = {linear_index(i, j, n): v for (i, j), v in values.items() if v > 0.0}
    return SVMF(n, entries, g.image_key)


def svmf_from_matches(
    matches: Sequence[tuple[int, Iterable[int]]],
    catalog: Catalog,
    hp: Hyperparams = Hyperparams(),
    bonds: Iterable[tuple[int, int]] | None = None,
    key: str = "",
) -> SVMF:
    """Fingerprint from ground-truth substructure matches on a molecule.

    ``matches`` pairs a class id with the atom indices it covers.  Two
    matches are linked when they share an atom or, if ``bonds`` is given,
    when a bond joins an atom of one to an atom of the other.
    """
    atom_sets = []
    for idx, (cid, atoms) in enumerate(matches):
        catalog.kind_of(cid)  # KeyError for unknown classes
        atoms = frozenset(atoms)
        if not atoms:
            raise ValueError(f"match {idx} has an empty atom set")
        atom_sets.append(atoms)

    bond_list = [(a, b) for a, b in bonds] if bonds is not None else []
    edges = []
    for x in range(len(atom_sets)):
        for y in range(x + 1, len(atom_sets)):
            sx, sy = atom_sets[x], atom_sets[y]
            if sx & sy or any((a in sx and b in sy) or (a in sy and b in sx) for a, b in bond_list):
                edges.append((x, y))
    nodes = [(idx, cid) for idx, (cid, _) in enumerate(matches)]
    return compute_svmf(graph_from_edges(nodes, edges, key), catalog, hp)


def nnz(fp: SVMF) -> int:
    return len(fp.entries)


def encode_svmf(fp: SVMF) -> bytes:
    _check_entries(fp.n, fp.entries)
    arr = np.empty(len(fp.entries), dtype=_ENTRY)
    if len(arr):
        arr["k"] = list(fp.entries.keys())
        arr["v"] = list(fp.entries.values())
    return _HEADER.pack(MAGIC, VERSION, fp.n, len(arr)) + arr.tobytes()


def _decode_prefix(buf: bytes | memoryview, offset: int = 0) -> tuple[SVMF, int]:
    """Decode one fingerprint starting at ``offset``; return it and the end offset."""
    if len(buf) - offset < _HEADER.size:
        raise FormatError("truncated SVMF header")
    magic, version, n, count = _HEADER.unpack_from(buf, offset)
    if magic != MAGIC:
        raise FormatError(f"bad magic {bytes(magic)!r}")
    if version != VERSION:
        raise VersionError(f"unsupported SVMF version {version} (expected {VERSION})")
    start = offset + _HEADER.size
    end = start + count * _ENTRY.itemsize
    if end > len(buf):
        raise FormatError(f"truncated SVMF body: need {count} entries")
    arr = np.frombuffer(buf, dtype=_ENTRY, count=count, offset=start)
    ks = arr["k"]
    if count > 1 and not np.all(ks[1:] > ks[:-1]):
        raise FormatError("entries are not strictly ascending")
    entries = dict(zip(ks.tolist(), arr["v"].tolist()))
    _check_entries(n, entries)
    return SVMF(n, entries), end


def decode_svmf(data: bytes) -> SVMF:
    fp, end = _decode_prefix(data)
    if end != len(data):
        raise FormatError(f"{len(data) - end} trailing bytes after SVMF payload")
    return fp


def dumps_json(fp: SVMF) -> str:
    return json.dumps(fp.to_json(), separators=(",", ":"))


def loads_json(text: str, key: str = "") -> SVMF:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed JSON: {exc.msg}") from None
    return SVMF.from_json(obj, key)
