"""Reports derived from profiles: category shares, per-KA coverage, tree
annotation, source composition, gaps and snapshot diffs.

Percentages are truncated (not rounded) to two decimals, computed in integer
hundredths so that e.g. 25/34 reports as 73.52 exactly.
"""

from __future__ import annotations

import datetime as dt
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Union

from .mapping import MappingTriplet, VersionMismatch
from .profile import (
    EmployeeProfile,
    OrgProfile,
    Snapshot,
    SourceKind,
    currency_filter,
    triplet_from_dict,
    triplet_to_dict,
)
from .taxonomy import Taxonomy

SCHEMA = 1
INTRO_BUCKET = "Introduction"
DEFAULT_DEPTH = 2

TRAINED = (SourceKind.TRA, SourceKind.CER)
PRACTISED = (SourceKind.EXP, SourceKind.RES)

Profile = Union[EmployeeProfile, OrgProfile]


def hundredths(num: int, den: int) -> int:
    """100 * num / den truncated to two decimals, in integer hundredths."""
    return 0 if den == 0 else (num * 10000) // den


def pct(num: int, den: int) -> float:
    return hundredths(num, den) / 100


def _subject(profile: Profile) -> str:
    return profile.org if isinstance(profile, OrgProfile) else profile.employee


def _header(view: str, profile: Profile, tax: Taxonomy) -> dict[str, Any]:
    return {
        "schema": SCHEMA,
        "view": view,
        "subject": _subject(profile),
        "as_of": profile.as_of.isoformat() if profile.as_of else None,
        "taxonomy_version": tax.version,
    }


def _columns(rows: list[tuple], header: tuple) -> str:
    table = [tuple(str(c) for c in header)] + [tuple(str(c) for c in r) for r in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    lines = []
    for r in table:
        cells = [c.rjust(w) if c.replace(".", "").isdigit() else c.ljust(w) for c, w in zip(r, widths)]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


# --- broad categories --------------------------------------------------------


@dataclass(frozen=True)
class BroadCategoryShare:
    meta: Mapping[str, Any]
    names: Mapping[str, str]  # category code -> display name, table order
    counts: Mapping[str, int]
    basis: int
    unattributed_count: int

    @property
    def shares(self) -> dict[str, float]:
        return {code: pct(n, self.basis) for code, n in self.counts.items()}

    @property
    def unattributed(self) -> float:
        return pct(self.unattributed_count, self.basis)

    @property
    def empty(self) -> bool:
        return self.basis == 0

    def to_dict(self) -> dict[str, Any]:
        return {
            **self.meta,
            "basis": self.basis,
            "empty": self.empty,
            "categories": [
                {"code": c, "name": self.names[c], "count": self.counts[c], "share": self.shares[c]} for c in self.names
            ],
            "unattributed": {"name": INTRO_BUCKET, "count": self.unattributed_count, "share": self.unattributed},
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> BroadCategoryShare:
        meta = {k: d[k] for k in ("schema", "view", "subject", "as_of", "taxonomy_version")}
        cats = d["categories"]
        return cls(
            meta,
            {c["code"]: c["name"] for c in cats},
            {c["code"]: int(c["count"]) for c in cats},
            int(d["basis"]),
            int(d["unattributed"]["count"]),
        )

    def to_text(self) -> str:
        rows = [(c, self.names[c], self.counts[c], f"{self.shares[c]:.2f}") for c in self.names]
        rows.append(("-", INTRO_BUCKET, self.unattributed_count, f"{self.unattributed:.2f}"))
        return f"Broad category shares for {self.meta['subject']} (basis {self.basis})\n" + _columns(
            rows, ("code", "category", "triplets", "share%")
        )


def broad_shares(profile: Profile, tax: Taxonomy) -> BroadCategoryShare:
    triplets = profile.mapped
    counts = {cat.code: 0 for cat in tax.categories}
    unattributed = 0
    for t in triplets:
        ka = tax.ka(t.ka)
        if ka.category is None:
            unattributed += 1
        else:
            counts[ka.category] += 1
    return BroadCategoryShare(
        _header("broad", profile, tax),
        {cat.code: cat.name for cat in tax.categories},
        counts,
        len(triplets),
        unattributed,
    )


# --- per-KA coverage ----------------------------------------------------------


@dataclass(frozen=True)
class KAEntry:
    code: str
    name: str
    category: str | None
    count: int
    nodes: int
    max_headcount: int | None = None

    @property
    def share(self) -> float:
        return pct(self.count, self.nodes)


@dataclass(frozen=True)
class KACoverage:
    meta: Mapping[str, Any]
    depth: int
    entries: tuple[KAEntry, ...]

    def count(self, code: str) -> int:
        return next(e.count for e in self.entries if e.code == code)

    @property
    def counts(self) -> dict[str, int]:
        return {e.code: e.count for e in self.entries}

    def to_dict(self) -> dict[str, Any]:
        return {
            **self.meta,
            "depth": self.depth,
            "areas": [
                {
                    "code": e.code,
                    "name": e.name,
                    "category": e.category,
                    "count": e.count,
                    "nodes": e.nodes,
                    "share": e.share,
                    "max_headcount": e.max_headcount,
                }
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> KACoverage:
        meta = {k: d[k] for k in ("schema", "view", "subject", "as_of", "taxonomy_version")}
        entries = tuple(
            KAEntry(a["code"], a["name"], a["category"], int(a["count"]), int(a["nodes"]), a.get("max_headcount"))
            for a in d["areas"]
        )
        return cls(meta, int(d["depth"]), entries)

    def to_text(self) -> str:
        with_hc = any(e.max_headcount is not None for e in self.entries)
        rows = []
        for e in self.entries:
            row = (e.code, e.name, e.count, e.nodes, f"{e.share:.2f}")
            rows.append(row + ((e.max_headcount if e.max_headcount is not None else "-",) if with_hc else ()))
        header = ("code", "knowledge area", "topics", "of", "share%") + (("max headcount",) if with_hc else ())
        return f"Knowledge area coverage for {self.meta['subject']} (depth <= {self.depth})\n" + _columns(rows, header)


def _project(topic: str, depth: int) -> str:
    """Ancestor of *topic* at level *depth* (or the topic itself if shallower)."""
    return "/".join(topic.split("/")[:depth])


def ka_coverage(profile: Profile, tax: Taxonomy, depth: int = DEFAULT_DEPTH) -> KACoverage:
    """Distinct covered topics per KA, deeper claims counted at their level-*depth* ancestor."""
    if depth < 1:
        raise ValueError("reporting depth must be >= 1")
    covered: dict[str, set[str]] = {}
    headcount: dict[str, int] = {}
    for t in profile.mapped:
        covered.setdefault(t.ka, set()).add(_project(t.topic, depth))
        if isinstance(profile, OrgProfile):
            headcount[t.ka] = max(headcount.get(t.ka, 0), profile.headcount[t])
    org = isinstance(profile, OrgProfile)
    entries = tuple(
        KAEntry(
            ka.code,
            ka.name,
            ka.category,
            len(covered.get(ka.code, ())),
            len(ka.nodes(depth)),
            headcount.get(ka.code, 0) if org else None,
        )
        for ka in tax.all_areas()
    )
    meta = _header("ka", profile, tax)
    return KACoverage(meta, depth, entries)


# --- tree annotation ------------------------------------------------------------


@dataclass(frozen=True)
class NodeFlags:
    covered_total: bool
    covered_practiced: bool


@dataclass(frozen=True)
class TreeAnnotation:
    meta: Mapping[str, Any]
    ka: str
    nodes: Mapping[str, NodeFlags]  # pre-order over the KA tree

    def total(self) -> set[str]:
        return {n for n, f in self.nodes.items() if f.covered_total}

    def practiced(self) -> set[str]:
        return {n for n, f in self.nodes.items() if f.covered_practiced}

    def to_dict(self) -> dict[str, Any]:
        return {
            **self.meta,
            "ka": self.ka,
            "nodes": [
                {"id": n, "covered_total": f.covered_total, "covered_practiced": f.covered_practiced}
                for n, f in self.nodes.items()
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> TreeAnnotation:
        meta = {k: d[k] for k in ("schema", "view", "subject", "as_of", "taxonomy_version", "practiced_at")}
        nodes = {n["id"]: NodeFlags(bool(n["covered_total"]), bool(n["covered_practiced"])) for n in d["nodes"]}
        return cls(meta, d["ka"], nodes)

    def to_text(self) -> str:
        lines = [f"{self.ka} coverage for {self.meta['subject']} (practiced at {self.meta.get('practiced_at') or '-'})"]
        for node_id, f in self.nodes.items():
            depth = node_id.count("/")
            mark = "#" if f.covered_practiced else ("+" if f.covered_total else ".")
            lines.append(f"{'  ' * depth}{mark} {node_id.rsplit('/', 1)[-1]}")
        return "\n".join(lines) + "\n"


def _closure(topics: Iterable[str]) -> set[str]:
    out = set()
    for topic in topics:
        parts = topic.split("/")
        out.update("/".join(parts[:i]) for i in range(1, len(parts) + 1))
    return out


def annotate_tree(profile: Profile, tax: Taxonomy, ka: str, as_of: dt.date | None) -> TreeAnnotation:
    """Flag topic nodes covered in total and as practiced (current at *as_of*).

    Both flag sets are closed under ancestors. With *as_of* None no practiced
    overlay is computed and every practiced flag is False.
    """
    area = tax.ka(ka)
    total = _closure(t.topic for t in profile.mapped if t.ka == ka)
    if as_of is None:
        practiced: set[str] = set()
    else:
        current = currency_filter(profile, as_of)
        practiced = _closure(t.topic for t in current.mapped if t.ka == ka)
    nodes = {n.id: NodeFlags(n.id in total, n.id in practiced) for n in area.root.walk()}
    meta = {**_header("tree", profile, tax), "practiced_at": as_of.isoformat() if as_of else None}
    return TreeAnnotation(meta, ka, nodes)


# --- source composition ---------------------------------------------------------


@dataclass(frozen=True)
class CompositionStats:
    meta: Mapping[str, Any]
    per_kind: Mapping[str, int]  # distinct (triplet, kind) contributions
    overlap: int  # triplets contributed by both groups

    @property
    def basis(self) -> int:
        return sum(self.per_kind.values())

    @property
    def trained_count(self) -> int:
        return sum(self.per_kind[k.value] for k in TRAINED)

    @property
    def practised_count(self) -> int:
        return sum(self.per_kind[k.value] for k in PRACTISED)

    @property
    def trained(self) -> float:
        return pct(self.trained_count, self.basis)

    @property
    def practised(self) -> float:
        return pct(self.practised_count, self.basis)

    @property
    def unattributed(self) -> float:
        if self.basis == 0:
            return 0.0
        return (10000 - hundredths(self.trained_count, self.basis) - hundredths(self.practised_count, self.basis)) / 100

    @property
    def empty(self) -> bool:
        return self.basis == 0

    def to_dict(self) -> dict[str, Any]:
        return {
            **self.meta,
            "basis": self.basis,
            "empty": self.empty,
            "per_kind": dict(self.per_kind),
            "TRA+CER": {"count": self.trained_count, "share": self.trained},
            "EXP+RES": {"count": self.practised_count, "share": self.practised},
            "unattributed": self.unattributed,
            "overlap": self.overlap,
        }

    def to_text(self) -> str:
        rows = [
            ("TRA+CER", self.trained_count, f"{self.trained:.2f}"),
            ("EXP+RES", self.practised_count, f"{self.practised:.2f}"),
            ("unattributed", "-", f"{self.unattributed:.2f}"),
        ]
        tail = "".join(f"{k}: {v}\n" for k, v in self.per_kind.items()) + f"overlap: {self.overlap}\n"
        return f"Source composition for {self.meta['subject']} (basis {self.basis})\n" + _columns(
            rows, ("group", "contributions", "share%")
        ) + tail


def composition_stats(profiles: Iterable[EmployeeProfile] | OrgProfile, subject: str | None = None) -> CompositionStats:
    """Split distinct (triplet, kind) contributions between TRA+CER and EXP+RES."""
    if isinstance(profiles, OrgProfile):
        subject = subject or profiles.org
        as_of, version = profiles.as_of, profiles.taxonomy_version
        profiles = profiles.members
    else:
        profiles = list(profiles)
        as_of = profiles[0].as_of if profiles else None
        version = profiles[0].taxonomy_version if profiles else None
    pairs = {(p.triplet, p.kind) for prof in profiles for p in prof.triplets}
    per_kind = Counter({k.value: 0 for k in SourceKind})
    per_kind.update(kind.value for _, kind in pairs)
    trained = {t for t, k in pairs if k in TRAINED}
    practised = {t for t, k in pairs if k in PRACTISED}
    meta = {
        "schema": SCHEMA,
        "view": "composition",
        "subject": subject or "profiles",
        "as_of": as_of.isoformat() if as_of else None,
        "taxonomy_version": version,
    }
    return CompositionStats(meta, dict(per_kind), len(trained & practised))


# --- gaps ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gap:
    ka: str
    category: str | None
    topic: str | None = None  # None: the whole KA is uncovered
    label: str = ""


@dataclass(frozen=True)
class GapReport:
    meta: Mapping[str, Any]
    depth: int
    entries: tuple[Gap, ...]

    @property
    def kas(self) -> list[str]:
        """Knowledge areas with no coverage at all."""
        return [g.ka for g in self.entries if g.topic is None]

    def topics(self, ka: str | None = None) -> list[str]:
        return [g.topic for g in self.entries if g.topic is not None and (ka is None or g.ka == ka)]

    def to_dict(self) -> dict[str, Any]:
        return {
            **self.meta,
            "depth": self.depth,
            "gaps": [{"ka": g.ka, "category": g.category, "topic": g.topic, "label": g.label} for g in self.entries],
        }

    def to_text(self) -> str:
        rows = [(g.category or "-", g.ka, g.topic or "(entire area)", g.label) for g in self.entries]
        return f"Coverage gaps for {self.meta['subject']}\n" + _columns(rows, ("category", "ka", "topic", "label"))


def gaps(profile: Profile, tax: Taxonomy, depth: int = DEFAULT_DEPTH) -> GapReport:
    """Uncovered KAs, plus uncovered level-2 topics of covered KAs when depth >= 2.

    Ordered by broad category, then KA in table order. INTRO is not a KA and
    never appears.
    """
    covered = _closure(t.topic for t in profile.mapped)
    touched = {t.ka for t in profile.mapped}
    out: list[Gap] = []
    for cat in tax.categories:
        for ka in tax.kas_in(cat.code):
            if ka.code not in touched:
                out.append(Gap(ka.code, cat.code, None, ka.name))
            elif depth >= 2:
                out.extend(Gap(ka.code, cat.code, n.id, n.label) for n in ka.root.children if n.id not in covered)
    meta = _header("gaps", profile, tax)
    return GapReport(meta, depth, tuple(out))


# --- snapshot diffs ----------------------------------------------------------------


@dataclass(frozen=True)
class ProfileDiff:
    added: tuple[MappingTriplet, ...]
    removed: tuple[MappingTriplet, ...]
    headcount: Mapping[MappingTriplet, int] = field(default_factory=dict)  # non-zero deltas on common triplets
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False)

    @property
    def empty(self) -> bool:
        return not (self.added or self.removed or self.headcount)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA,
            "view": "diff",
            **self.meta,
            "added": [triplet_to_dict(t) for t in self.added],
            "removed": [triplet_to_dict(t) for t in self.removed],
            "headcount_deltas": [{**triplet_to_dict(t), "delta": d} for t, d in self.headcount.items()],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ProfileDiff:
        return cls(
            tuple(triplet_from_dict(t) for t in d["added"]),
            tuple(triplet_from_dict(t) for t in d["removed"]),
            {triplet_from_dict(t): int(t["delta"]) for t in d["headcount_deltas"]},
        )

    def to_text(self) -> str:
        lines = [f"+ {t}" for t in self.added] + [f"- {t}" for t in self.removed]
        lines += [f"~ {t} headcount {d:+d}" for t, d in self.headcount.items()]
        return "\n".join(lines) + "\n" if lines else "no changes\n"


def _view(s: Snapshot | OrgProfile) -> OrgProfile:
    return s.current if isinstance(s, Snapshot) else s


def diff(a: Snapshot | OrgProfile, b: Snapshot | OrgProfile) -> ProfileDiff:
    """Changes going from *a* to *b*."""
    pa, pb = _view(a), _view(b)
    if pa.taxonomy_version and pb.taxonomy_version and pa.taxonomy_version != pb.taxonomy_version:
        raise VersionMismatch(f"cannot diff CyBOK {pa.taxonomy_version} against {pb.taxonomy_version}")
    common = sorted(pa.triplets & pb.triplets)
    deltas = {t: pb.headcount[t] - pa.headcount[t] for t in common if pb.headcount[t] != pa.headcount[t]}
    meta = {
        "from": pa.as_of.isoformat() if pa.as_of else None,
        "to": pb.as_of.isoformat() if pb.as_of else None,
        "subject": pb.org,
    }
    return ProfileDiff(tuple(sorted(pb.triplets - pa.triplets)), tuple(sorted(pa.triplets - pb.triplets)), deltas, meta)
