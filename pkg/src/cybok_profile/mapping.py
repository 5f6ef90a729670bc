"""Concept normalisation and lookup against a CyBOK mapping reference.

A mapping reference is a CSV file with header ``kind,key,ka,topic,depth``
and one row per triplet. ``kind`` is ``concept`` (key is a keyword or
phrase) or ``credential`` (key is a certification name from the catalog of
pre-mapped credentials). Concepts that have no entry are never guessed at;
they end up in a review queue for a human to map.
"""

from __future__ import annotations

import csv
import unicodedata
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .taxonomy import Taxonomy, validate_triplet

REFERENCE_HEADER = ("kind", "key", "ka", "topic", "depth")


class InvalidConcept(ValueError):
    pass


class MappingFileError(ValueError):
    """Malformed or invalid mapping reference file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class VersionMismatch(ValueError):
    pass


@dataclass(frozen=True, order=True)
class MappingTriplet:
    ka: str
    topic: str
    depth: int

    def __str__(self) -> str:
        return f"<{self.ka}, {self.topic}, {self.depth}>"


@dataclass(frozen=True)
class Concept:
    raw: str
    norm: str


def _normalize_text(raw: str) -> str:
    chars = []
    for ch in unicodedata.normalize("NFKC", raw).casefold():
        chars.append(ch if ch.isalnum() or ch.isspace() else " ")
    return " ".join("".join(chars).split())


def normalize(raw: str | Concept) -> Concept:
    """Canonicalise a phrase: casefold, punctuation to spaces, collapse whitespace."""
    if isinstance(raw, Concept):
        raw = raw.raw
    norm = _normalize_text(raw)
    if not norm:
        raise InvalidConcept(f"{raw!r} is empty after normalisation")
    return Concept(raw, norm)


class Status(str, Enum):
    RESOLVED = "resolved"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class MappingOutcome:
    concept: Concept
    triplets: frozenset[MappingTriplet]

    @property
    def status(self) -> Status:
        return Status.RESOLVED if self.triplets else Status.UNRESOLVED

    @property
    def resolved(self) -> bool:
        return bool(self.triplets)


@dataclass(frozen=True)
class MappingReference:
    version: str
    entries: Mapping[str, frozenset[MappingTriplet]]
    catalog: Mapping[str, frozenset[MappingTriplet]]


def load_reference(path: str | Path, tax: Taxonomy) -> MappingReference:
    """Read and validate a mapping reference CSV against *tax*."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MappingFileError(f"cannot read {path}: {exc}") from exc
    return parse_reference(text.splitlines(), tax)


def parse_reference(lines: Iterable[str], tax: Taxonomy) -> MappingReference:
    entries: dict[str, set[MappingTriplet]] = {}
    catalog: dict[str, set[MappingTriplet]] = {}
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != REFERENCE_HEADER:
        raise MappingFileError(f"expected header {','.join(REFERENCE_HEADER)}", 1)
    for row in reader:
        lineno = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(REFERENCE_HEADER):
            raise MappingFileError(f"expected {len(REFERENCE_HEADER)} fields, got {len(row)}", lineno)
        kind, key, ka, topic, depth = (cell.strip() for cell in row)
        if kind not in ("concept", "credential"):
            raise MappingFileError(f"unknown kind {kind!r}", lineno)
        try:
            norm = normalize(key).norm
        except InvalidConcept:
            raise MappingFileError(f"empty key {key!r}", lineno) from None
        try:
            triplet = MappingTriplet(ka, topic, int(depth))
        except ValueError:
            raise MappingFileError(f"depth {depth!r} is not an integer", lineno) from None
        check = validate_triplet(triplet, tax)
        if not check:
            raise MappingFileError(f"{check.reason.value}: {check.detail}", lineno)
        table = entries if kind == "concept" else catalog
        table.setdefault(norm, set()).add(triplet)
    return MappingReference(
        tax.version,
        {k: frozenset(v) for k, v in entries.items()},
        {k: frozenset(v) for k, v in catalog.items()},
    )


def map_concept(c: Concept | str, ref: MappingReference) -> MappingOutcome:
    concept = c if isinstance(c, Concept) else normalize(c)
    return MappingOutcome(concept, ref.entries.get(concept.norm, frozenset()))


def map_concept_set(cs: Iterable[Concept | str], ref: MappingReference) -> list[MappingOutcome | InvalidConcept]:
    """Map each concept in input order, collapsing duplicates by normalised form.

    Invalid phrases come back in place as :class:`InvalidConcept` instances
    rather than aborting the batch.
    """
    out: list[MappingOutcome | InvalidConcept] = []
    seen: set[str] = set()
    for c in cs:
        try:
            concept = c if isinstance(c, Concept) else normalize(c)
        except InvalidConcept as exc:
            out.append(exc)
            continue
        if concept.norm in seen:
            continue
        seen.add(concept.norm)
        out.append(map_concept(concept, ref))
    return out


def catalog_lookup(name: str, ref: MappingReference) -> frozenset[MappingTriplet]:
    try:
        key = normalize(name).norm
    except InvalidConcept:
        return frozenset()
    return ref.catalog.get(key, frozenset())


def review_queue(outcomes: Iterable[MappingOutcome | InvalidConcept]) -> list[Concept]:
    """Concepts still needing a manual mapping, deduplicated and sorted by norm."""
    pending: dict[str, Concept] = {}
    for o in outcomes:
        if isinstance(o, MappingOutcome) and not o.resolved:
            pending.setdefault(o.concept.norm, o.concept)
    return [pending[k] for k in sorted(pending)]


def write_reference(path: str | Path, ref: MappingReference) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REFERENCE_HEADER)
        for kind, table in (("concept", ref.entries), ("credential", ref.catalog)):
            for key in sorted(table):
                for t in sorted(table[key]):
                    w.writerow([kind, key, t.ka, t.topic, t.depth])
