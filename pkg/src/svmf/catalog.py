"""Substructure class catalog.

The catalog fixes the fingerprint dimension ``n`` and tells the engine
which classes are functional groups and which are carbon backbones.  It is
stored as a tab-separated file with the header
``class_id<TAB>kind<TAB>name<TAB>smarts``; ``kind`` is ``FG`` or ``CB``.
The SMARTS column is carried along verbatim and never interpreted.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from importlib import resources
from typing import Iterable

__all__ = [
    "CatalogError",
    "Catalog",
    "Kind",
    "SubstructureClass",
    "load_catalog",
    "parse_catalog",
    "reference_catalog",
    "toy_catalog",
    "kind_of",
]

HEADER = ("class_id", "kind", "name", "smarts")


class CatalogError(ValueError):
    """Raised for malformed or inconsistent catalog files."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Kind(enum.Enum):
    FUNCTIONAL_GROUP = "FG"
    CARBON_BACKBONE = "CB"


@dataclass(frozen=True)
class SubstructureClass:
    class_id: int
    kind: Kind
    name: str
    smarts: str = ""


@dataclass(frozen=True)
class Catalog:
    classes: tuple[SubstructureClass, ...]

    @property
    def n(self) -> int:
        return len(self.classes)

    def __len__(self) -> int:
        return len(self.classes)

    def __getitem__(self, class_id: int) -> SubstructureClass:
        return self.classes[_check_id(self, class_id)]

    def __contains__(self, class_id: object) -> bool:
        return isinstance(class_id, int) and 0 <= class_id < self.n

    def kind_of(self, class_id: int) -> Kind:
        return self[class_id].kind

    def is_carbon(self, class_id: int) -> bool:
        return self[class_id].kind is Kind.CARBON_BACKBONE

    def ids_of_kind(self, kind: Kind) -> list[int]:
        return [c.class_id for c in self.classes if c.kind is kind]

    def to_tsv(self) -> str:
        rows = ["\t".join(HEADER)]
        for c in self.classes:
            rows.append(f"{c.class_id}\t{c.kind.value}\t{c.name}\t{c.smarts}")
        return "\n".join(rows) + "\n"


def _check_id(catalog: Catalog, class_id: int) -> int:
    if isinstance(class_id, bool) or not isinstance(class_id, int):
        raise TypeError(f"class_id must be an int, got {class_id!r}")
    if not 0 <= class_id < catalog.n:
        raise KeyError(f"class_id {class_id} outside catalog range [0, {catalog.n})")
    return class_id


def kind_of(catalog: Catalog, class_id: int) -> Kind:
    """Return the kind of ``class_id``; raises ``KeyError`` when out of range."""
    return catalog.kind_of(class_id)


def _validate(classes: Iterable[SubstructureClass], require_both_kinds: bool) -> Catalog:
    by_id: dict[int, SubstructureClass] = {}
    for c in classes:
        if c.class_id in by_id:
            raise CatalogError(f"duplicate class_id {c.class_id}")
        by_id[c.class_id] = c
    ordered = tuple(by_id[k] for k in sorted(by_id))
    for expected, c in enumerate(ordered):
        if c.class_id != expected:
            raise CatalogError(f"class_id range has a gap: missing {expected}")
    if require_both_kinds and ordered:
        kinds = {c.kind for c in ordered}
        if kinds != set(Kind):
            missing = ", ".join(k.value for k in set(Kind) - kinds)
            raise CatalogError(f"catalog has no classes of kind {missing}")
    return Catalog(ordered)


def parse_catalog(text: str, *, require_both_kinds: bool = True) -> Catalog:
    """Parse catalog TSV text.

    Raises :class:`CatalogError` carrying the 1-based line number for
    malformed rows, and without a line number for duplicate ids or gaps in
    the id range.
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CatalogError("empty catalog file")
    header = tuple(lines[0].rstrip("\r").split("\t"))
    if header != HEADER:
        raise CatalogError("expected header " + repr("\t".join(HEADER)), line=1)
    classes = []
    seen: dict[int, int] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise CatalogError(f"expected 4 tab-separated fields, got {len(parts)}", line=lineno)
        raw_id, raw_kind, name, smarts = parts
        try:
            class_id = int(raw_id)
        except ValueError:
            raise CatalogError(f"class_id {raw_id!r} is not an integer", line=lineno) from None
        if class_id < 0:
            raise CatalogError(f"class_id {class_id} is negative", line=lineno)
        try:
            kind = Kind(raw_kind)
        except ValueError:
            raise CatalogError(f"kind {raw_kind!r} is not FG or CB", line=lineno) from None
        if class_id in seen:
            raise CatalogError(f"duplicate class_id {class_id} (first seen on line {seen[class_id]})", line=lineno)
        seen[class_id] = lineno
        classes.append(SubstructureClass(class_id, kind, name, smarts))
    return _validate(classes, require_both_kinds)


def load_catalog(path: str | os.PathLike, *, require_both_kinds: bool = True) -> Catalog:
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CatalogError(f"catalog is not valid UTF-8: {exc}") from None
    return parse_catalog(text, require_both_kinds=require_both_kinds)


def reference_catalog() -> Catalog:
    """The bundled 1561-class catalog (1534 functional groups, 27 carbon backbones)."""
    text = resources.files("svmf").joinpath("data/reference_catalog.tsv").read_text("utf-8")
    return parse_catalog(text)


def toy_catalog(kinds: str) -> Catalog:
    """Build a small catalog from a kind string such as ``"FFC"``.

    ``F`` marks a functional group and ``C`` a carbon backbone.  Mixed
    kinds are not required, which lets tests use all-FG catalogs.
    """
    mapping = {"F": Kind.FUNCTIONAL_GROUP, "C": Kind.CARBON_BACKBONE}
    classes = [
        SubstructureClass(i, mapping[ch], f"toy_{ch.lower()}{i}") for i, ch in enumerate(kinds.upper())
    ]
    return _validate(classes, require_both_kinds=False)
