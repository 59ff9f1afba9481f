"""Detection and retrieval metrics.

Substructure detection is scored without positions: predictions and
ground truth are multisets of class ids, matched per class by minimum
count.  A molecule is an exact match when its F1 is exactly 1.
"""

from __future__ import annotations

import io
import json
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

from .fingerprint import SVMF, FormatError
from .retrieval import FingerprintIndex

__all__ = [
    "EvalRecord",
    "substructure_f1",
    "molecule_exact_match",
    "average_rank",
    "aggregate_detection_report",
    "parse_eval_records",
    "parse_queries",
]


def _multiset(counts: Mapping[int, int] | Iterable[int]) -> Counter:
    if isinstance(counts, Mapping):
        out = Counter()
        for cid, c in counts.items():
            if isinstance(c, bool) or not isinstance(c, int) or c < 0:
                raise ValueError(f"count for class {cid} must be a nonnegative integer, got {c!r}")
            if c:
                out[int(cid)] = c
        return out
    return Counter(int(c) for c in counts)


@dataclass(frozen=True)
class EvalRecord:
    molecule_key: str
    predicted: Counter
    ground_truth: Counter

    def __post_init__(self):
        if not self.molecule_key:
            raise ValueError("molecule_key must be nonempty")
        object.__setattr__(self, "predicted", _multiset(self.predicted))
        object.__setattr__(self, "ground_truth", _multiset(self.ground_truth))

    @property
    def f1(self) -> float:
        return substructure_f1(self.predicted, self.ground_truth)


def substructure_f1(pred: Mapping[int, int] | Iterable[int], gt: Mapping[int, int] | Iterable[int]) -> float:
    """Multiset F1 between predicted and ground-truth substructure classes.

    >>> substructure_f1({1: 2}, {1: 1})
    0.6666666666666666
    >>> substructure_f1({}, {})
    1.0
    """
    pred, gt = _multiset(pred), _multiset(gt)
    n_pred, n_gt = sum(pred.values()), sum(gt.values())
    if n_pred == 0 and n_gt == 0:
        return 1.0
    if n_pred == 0 or n_gt == 0:
        return 0.0
    matched = sum((pred & gt).values())
    if matched == 0:
        return 0.0
    # 2PR/(P+R) with P = m/n_pred, R = m/n_gt simplifies to 2m/(n_pred+n_gt)
    return 2.0 * matched / (n_pred + n_gt)


def molecule_exact_match(records: Sequence[EvalRecord]) -> float:
    """Percentage of records whose F1 equals 1."""
    if not records:
        raise ValueError("no records to evaluate")
    perfect = sum(1 for r in records if r.f1 == 1.0)
    return 100.0 * perfect / len(records)


def aggregate_detection_report(records: Sequence[EvalRecord]) -> tuple[float, float]:
    """Return ``(mean S-F1 x 100 rounded to 0.1, M-EM %)``.

    S-F1 is macro-averaged: the mean of per-molecule scores.
    """
    if not records:
        raise ValueError("no records to evaluate")
    mean_f1 = sum(r.f1 for r in records) / len(records)
    return round(100.0 * mean_f1, 1), molecule_exact_match(records)


def average_rank(queries: Sequence[tuple[SVMF, str]], idx: FingerprintIndex) -> float:
    if not queries:
        raise ValueError("no queries")
    ranks = [idx.rank_of(q, target) for q, target in queries]
    return sum(ranks) / len(ranks)


def _lines(stream: IO | bytes | str):
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        if raw.strip():
            try:
                yield lineno, json.loads(raw)
            except json.JSONDecodeError as exc:
                raise FormatError(f"line {lineno}: malformed JSON: {exc.msg}") from None


def _counts_from_json(obj, lineno: int, name: str) -> dict[int, int]:
    if not isinstance(obj, dict):
        raise FormatError(f"line {lineno}: {name} must be an object of class_id -> count")
    try:
        return {int(k): v for k, v in obj.items()}
    except ValueError:
        raise FormatError(f"line {lineno}: {name} has a non-integer class id") from None


def parse_eval_records(stream: IO | bytes | str) -> list[EvalRecord]:
    records = []
    for lineno, obj in _lines(stream):
        if not isinstance(obj, dict):
            raise FormatError(f"line {lineno}: record must be an object")
        try:
            records.append(
                EvalRecord(
                    obj.get("molecule_key", ""),
                    _counts_from_json(obj.get("predicted"), lineno, "predicted"),
                    _counts_from_json(obj.get("ground_truth"), lineno, "ground_truth"),
                )
            )
        except FormatError:
            raise
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
    return records


def parse_queries(stream: IO | bytes | str) -> list[tuple[SVMF, str]]:
    out = []
    for lineno, obj in _lines(stream):
        if not isinstance(obj, dict) or not isinstance(obj.get("target_key"), str):
            raise FormatError(f"line {lineno}: expected {{'target_key': str, 'query_fp': ...}}")
        try:
            fp = SVMF.from_json(obj.get("query_fp"))
        except FormatError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        out.append((fp, obj["target_key"]))
    return out
