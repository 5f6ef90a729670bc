"""CyBOK structure: versions, broad categories, knowledge areas and topic trees.

Taxonomies ship as line-oriented CSV files, one per version::

    VERSION,1.0.0
    CAT,<code>,<name>
    KA,<code>,<name>,<category-code or ->
    TOPIC,<ka-code>,<node-id>,<level>,<label>

Topic ids are slash-delimited slugs that prefix-encode the path from the KA
root (``soim/monitor-data-sources/syslog``). The Introduction chapter is a
KA record with category ``-``; it is addressable as ``INTRO`` but is not
counted among the knowledge areas.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterator

INTRO = "INTRO"

#: Published KA counts; unknown versions are accepted without a count check.
PUBLISHED_KA_COUNTS = {"1.0.0": 19, "1.1.0": 21}
CATEGORY_COUNT = 5


class TaxonomyError(ValueError):
    """Raised when a taxonomy file cannot be loaded."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def slugify(label: str) -> str:
    s = label.lower().replace("&", " and ")
    return re.sub(r"[^a-z0-9]+", "-", s).strip("-")


@dataclass(frozen=True)
class BroadCategory:
    code: str
    name: str


@dataclass(frozen=True)
class TopicNode:
    id: str
    label: str
    level: int
    children: tuple[TopicNode, ...] = ()

    def walk(self) -> Iterator[TopicNode]:
        """Pre-order traversal, children in file order."""
        yield self
        for child in self.children:
            yield from child.walk()

    @property
    def parent_id(self) -> str | None:
        head, sep, _ = self.id.rpartition("/")
        return head if sep else None


@dataclass(frozen=True)
class KnowledgeArea:
    code: str
    name: str
    category: str | None  # None only for INTRO
    root: TopicNode
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {n.id: n for n in self.root.walk()})

    def node(self, topic_id: str) -> TopicNode | None:
        return self._index.get(topic_id)

    def nodes(self, max_level: int | None = None) -> list[TopicNode]:
        return [n for n in self.root.walk() if max_level is None or n.level <= max_level]

    @property
    def is_intro(self) -> bool:
        return self.category is None


@dataclass(frozen=True)
class Taxonomy:
    version: str
    categories: tuple[BroadCategory, ...]
    kas: tuple[KnowledgeArea, ...]  # file order, INTRO excluded
    intro: KnowledgeArea | None = None

    def ka(self, code: str) -> KnowledgeArea:
        if self.intro is not None and code == self.intro.code:
            return self.intro
        for ka in self.kas:
            if ka.code == code:
                return ka
        raise KeyError(code)

    def has_ka(self, code: str) -> bool:
        try:
            self.ka(code)
        except KeyError:
            return False
        return True

    def all_areas(self) -> tuple[KnowledgeArea, ...]:
        """Knowledge areas in table order, followed by INTRO when present."""
        return self.kas + ((self.intro,) if self.intro is not None else ())

    def kas_in(self, category: str) -> list[KnowledgeArea]:
        return [ka for ka in self.kas if ka.category == category]

    def category(self, code: str) -> BroadCategory:
        for cat in self.categories:
            if cat.code == code:
                return cat
        raise KeyError(code)


class Rejection(str, Enum):
    UNKNOWN_KA = "unknown-ka"
    UNKNOWN_TOPIC = "unknown-topic"
    DEPTH_MISMATCH = "depth-mismatch"


@dataclass(frozen=True)
class Validation:
    ok: bool
    reason: Rejection | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate_triplet(triplet, tax: Taxonomy) -> Validation:
    """Check a ``(ka, topic, depth)`` triplet against *tax*. Never raises."""
    ka_code, topic, depth = triplet.ka, triplet.topic, triplet.depth
    if not tax.has_ka(ka_code):
        return Validation(False, Rejection.UNKNOWN_KA, f"no knowledge area {ka_code!r} in CyBOK {tax.version}")
    node = tax.ka(ka_code).node(topic)
    if node is None:
        return Validation(False, Rejection.UNKNOWN_TOPIC, f"no topic {topic!r} under {ka_code}")
    if node.level != depth:
        return Validation(False, Rejection.DEPTH_MISMATCH, f"{topic!r} is at level {node.level}, not {depth}")
    return Validation(True)


def topic_lookup(tax: Taxonomy, ka: str, path: str) -> TopicNode | None:
    """Return the node with id *path* under *ka*, or None. Unknown KA raises KeyError."""
    return tax.ka(ka).node(path)


def available_versions(source: str | Path | None = None) -> list[str]:
    directory = Path(source) if source is not None else _bundled_dir()
    return sorted(p.stem.removeprefix("cybok-") for p in directory.glob("cybok-*.csv"))


def _bundled_dir() -> Path:
    return Path(str(resources.files("cybok_profile") / "data"))


def _resolve(version: str, source: str | Path | None) -> Path:
    if source is None:
        return _bundled_dir() / f"cybok-{version}.csv"
    path = Path(source)
    if path.is_dir():
        return path / f"cybok-{version}.csv"
    return path


def load_taxonomy(version: str, source: str | Path | None = None) -> Taxonomy:
    """Load the taxonomy for *version*.

    *source* may be a taxonomy file, a directory holding ``cybok-<version>.csv``
    files, or None for the bundled data.
    """
    path = _resolve(version, source)
    if not path.is_file():
        raise TaxonomyError(f"taxonomy file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        return parse_taxonomy(fh, expected_version=version)


def parse_taxonomy(lines, expected_version: str | None = None) -> Taxonomy:
    declared = None
    categories: dict[str, BroadCategory] = {}
    ka_rows: dict[str, tuple[str, str | None]] = {}
    # ka code -> list of (id, label, level), in file order
    topics: dict[str, list[tuple[str, str, int]]] = {}
    seen_ids: dict[str, set[str]] = {}

    numbered = ((n, line) for n, line in enumerate(lines, start=1) if line.strip() and not line.lstrip().startswith("#"))
    for lineno, line in numbered:
        row = next(csv.reader([line]))
        kind = row[0].strip()
        if kind == "VERSION":
            _arity(row, 2, lineno)
            declared = row[1].strip()
        elif kind == "CAT":
            _arity(row, 3, lineno)
            code = row[1].strip()
            if code in categories:
                raise TaxonomyError(f"duplicate category {code!r}", lineno)
            categories[code] = BroadCategory(code, row[2].strip())
        elif kind == "KA":
            _arity(row, 4, lineno)
            code, cat = row[1].strip(), row[3].strip()
            if code in ka_rows:
                raise TaxonomyError(f"duplicate knowledge area {code!r}", lineno)
            if cat != "-" and cat not in categories:
                raise TaxonomyError(f"knowledge area {code} references unknown category {cat!r}", lineno)
            ka_rows[code] = (row[2].strip(), None if cat == "-" else cat)
            topics[code] = []
            seen_ids[code] = set()
        elif kind == "TOPIC":
            _arity(row, 5, lineno)
            code, node_id = row[1].strip(), row[2].strip()
            if code not in ka_rows:
                raise TaxonomyError(f"topic for unknown knowledge area {code!r}", lineno)
            try:
                level = int(row[3])
            except ValueError:
                raise TaxonomyError(f"level {row[3]!r} is not an integer", lineno) from None
            if node_id in seen_ids[code]:
                raise TaxonomyError(f"duplicate topic id {node_id!r} in {code}", lineno)
            _check_placement(code, node_id, level, topics[code], lineno)
            seen_ids[code].add(node_id)
            topics[code].append((node_id, row[4].strip(), level))
        else:
            raise TaxonomyError(f"unknown record kind {kind!r}", lineno)

    if declared is None:
        raise TaxonomyError("missing VERSION record")
    if expected_version is not None and declared != expected_version:
        raise TaxonomyError(f"file declares version {declared}, requested {expected_version}")

    areas = []
    for code, (name, cat) in ka_rows.items():
        if not topics[code]:
            raise TaxonomyError(f"knowledge area {code} has no topic tree")
        areas.append(KnowledgeArea(code, name, cat, _build_tree(topics[code])))

    intros = [a for a in areas if a.is_intro]
    if len(intros) > 1:
        raise TaxonomyError("more than one uncategorised area")
    kas = tuple(a for a in areas if not a.is_intro)
    tax = Taxonomy(declared, tuple(categories.values()), kas, intros[0] if intros else None)

    if len(tax.categories) != CATEGORY_COUNT:
        raise TaxonomyError(f"expected {CATEGORY_COUNT} broad categories, found {len(tax.categories)}")
    expected = PUBLISHED_KA_COUNTS.get(declared)
    if expected is not None and len(kas) != expected:
        raise TaxonomyError(f"CyBOK {declared} has {expected} knowledge areas, file defines {len(kas)}")
    return tax


def _arity(row: list[str], n: int, lineno: int) -> None:
    if len(row) != n:
        raise TaxonomyError(f"{row[0]} record needs {n} fields, got {len(row)}", lineno)


def _check_placement(code, node_id, level, existing, lineno):
    if not existing:
        if level != 1 or "/" in node_id:
            raise TaxonomyError(f"first topic of {code} must be its level-1 root", lineno)
        return
    if level < 2:
        raise TaxonomyError(f"{code} already has a root", lineno)
    parent_id = node_id.rpartition("/")[0]
    parent = next((t for t in existing if t[0] == parent_id), None)
    if parent is None:
        raise TaxonomyError(f"topic {node_id!r} has no parent {parent_id!r} defined before it", lineno)
    if level != parent[2] + 1:
        raise TaxonomyError(f"topic {node_id!r} at level {level} under a level-{parent[2]} parent", lineno)


def _build_tree(rows: list[tuple[str, str, int]]) -> TopicNode:
    children: dict[str, list[str]] = {r[0]: [] for r in rows}
    for node_id, _, level in rows[1:]:
        children[node_id.rpartition("/")[0]].append(node_id)
    info = {r[0]: r for r in rows}

    def build(node_id: str) -> TopicNode:
        _, label, level = info[node_id]
        return TopicNode(node_id, label, level, tuple(build(c) for c in children[node_id]))

    return build(rows[0][0])
