"""Employee and organisational knowledge profiles.

An employee profile is the union of the triplets mapped from each of their
knowledge sources (certifications, training, experience, current-role
responsibilities). Every triplet keeps the kind, label and validity interval
of the source it came from, so a profile can be cut down to what is still
current at a given date. The organisational profile is the union of employee
profiles, with a per-triplet headcount carried alongside.
"""

from __future__ import annotations

import calendar
import datetime as dt
import functools
import json
import sys
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .mapping import (
    Concept,
    MappingReference,
    MappingTriplet,
    VersionMismatch,
    catalog_lookup,
    map_concept_set,
    normalize,
    review_queue,
)
from .taxonomy import Taxonomy

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA = 1


class SourceKind(str, Enum):
    CER = "CER"
    TRA = "TRA"
    EXP = "EXP"
    RES = "RES"


class RecordError(ValueError):
    pass


def add_years(d: dt.date, years: int) -> dt.date:
    year = d.year + years
    # Feb 29 lands on Feb 28 in non-leap years
    day = min(d.day, calendar.monthrange(year, d.month)[1])
    return d.replace(year=year, day=day)


@dataclass(frozen=True)
class Window:
    years: int = 0
    days: int = 0

    def __post_init__(self):
        if self.years < 0 or self.days < 0 or (self.years == 0 and self.days == 0):
            raise ValueError(f"validity window must be positive: {self}")

    def after(self, start: dt.date) -> dt.date:
        return add_years(start, self.years) + dt.timedelta(days=self.days)


@dataclass(frozen=True)
class ValidityPolicy:
    """Default validity windows per source kind when a source has no explicit end.

    For EXP sources the window runs from the end of the role, which records
    carry as the ``acquired`` date. RES is always open-ended.
    """

    cer: Window = Window(years=3)
    tra: Window = Window(years=5)
    exp: Window = Window(years=10)

    def window(self, kind: SourceKind) -> Window | None:
        return {SourceKind.CER: self.cer, SourceKind.TRA: self.tra, SourceKind.EXP: self.exp}.get(kind)

    @classmethod
    def from_days(cls, overrides: Mapping[str, int], base: ValidityPolicy | None = None) -> ValidityPolicy:
        policy = base or cls()
        changes = {}
        for key, days in overrides.items():
            kind = SourceKind(key.upper())
            if kind is SourceKind.RES:
                raise ValueError("RES sources are always open-ended")
            changes[kind.value.lower()] = Window(days=int(days))
        return replace(policy, **changes)


DEFAULT_POLICY = ValidityPolicy()


@functools.total_ordering
@dataclass(frozen=True)
class ValidityInterval:
    start: dt.date
    end: dt.date | None = None  # inclusive; None means open-ended

    def __post_init__(self):
        if self.end is not None and self.end < self.start:
            raise ValueError(f"interval ends before it starts: {self.start} .. {self.end}")

    def __contains__(self, at: dt.date) -> bool:
        return self.start <= at and (self.end is None or at <= self.end)

    def __lt__(self, other: ValidityInterval) -> bool:
        return (self.start, self.end or dt.date.max) < (other.start, other.end or dt.date.max)

    def hull(self, other: ValidityInterval) -> ValidityInterval:
        end = None if self.end is None or other.end is None else max(self.end, other.end)
        return ValidityInterval(min(self.start, other.start), end)


@dataclass(frozen=True)
class KnowledgeSource:
    kind: SourceKind
    label: str
    acquired: dt.date
    concepts: tuple[str, ...] = ()
    credential: str | None = None
    valid_until: dt.date | None = None
    valid_from: dt.date | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SourceKind(self.kind))
        object.__setattr__(self, "concepts", tuple(self.concepts))


def validity_of(src: KnowledgeSource, policy: ValidityPolicy = DEFAULT_POLICY) -> ValidityInterval:
    start = src.valid_from or src.acquired
    if src.kind is SourceKind.RES:
        return ValidityInterval(start, None)
    if src.valid_until is not None:
        return ValidityInterval(start, src.valid_until)
    return ValidityInterval(start, policy.window(src.kind).after(src.acquired))


@dataclass(frozen=True, order=True)
class ProvenancedTriplet:
    triplet: MappingTriplet
    kind: SourceKind
    source_label: str
    validity: ValidityInterval


@dataclass(frozen=True)
class EmployeeProfile:
    employee: str
    triplets: frozenset[ProvenancedTriplet] = frozenset()
    as_of: dt.date | None = None
    taxonomy_version: str | None = None
    unresolved: tuple[Concept, ...] = ()

    @property
    def mapped(self) -> frozenset[MappingTriplet]:
        return frozenset(p.triplet for p in self.triplets)


@dataclass(frozen=True)
class OrgProfile:
    org: str
    triplets: frozenset[MappingTriplet]
    headcount: Mapping[MappingTriplet, int]
    employees: int
    as_of: dt.date | None = None
    taxonomy_version: str | None = None
    members: tuple[EmployeeProfile, ...] = field(default=(), repr=False)

    @property
    def mapped(self) -> frozenset[MappingTriplet]:
        return self.triplets


def _merge_duplicates(sources: Iterable[KnowledgeSource], policy: ValidityPolicy):
    """Fold sources sharing (kind, label) into one, keeping the widest validity."""
    merged: dict[tuple[SourceKind, str], tuple[KnowledgeSource, ValidityInterval]] = {}
    for src in sources:
        key = (src.kind, src.label)
        validity = validity_of(src, policy)
        if key not in merged:
            merged[key] = (src, validity)
            continue
        prev, prev_validity = merged[key]
        concepts = prev.concepts + tuple(c for c in src.concepts if c not in prev.concepts)
        credential = prev.credential or src.credential
        merged[key] = (replace(prev, concepts=concepts, credential=credential), prev_validity.hull(validity))
    return list(merged.values())


def build_source_profile(
    src: KnowledgeSource,
    ref: MappingReference,
    tax: Taxonomy,
    policy: ValidityPolicy = DEFAULT_POLICY,
    validity: ValidityInterval | None = None,
) -> tuple[frozenset[ProvenancedTriplet], list[Concept]]:
    """Map one source to provenanced triplets plus the concepts that did not resolve."""
    if ref.version != tax.version:
        raise VersionMismatch(f"reference is for CyBOK {ref.version}, taxonomy is {tax.version}")
    validity = validity or validity_of(src, policy)
    triplets: set[MappingTriplet] = set()
    queue: list[Concept] = []
    if src.credential:
        found = catalog_lookup(src.credential, ref)
        if found:
            triplets |= found
        else:
            queue.append(normalize(src.credential))
    outcomes = map_concept_set(src.concepts, ref)
    for o in outcomes:
        if isinstance(o, Exception):
            continue
        triplets |= o.triplets
    queue.extend(review_queue(outcomes))
    stamped = frozenset(ProvenancedTriplet(t, src.kind, src.label, validity) for t in triplets)
    return stamped, queue


def compose_employee(
    employee: str,
    sources: Sequence[KnowledgeSource],
    ref: MappingReference,
    tax: Taxonomy,
    policy: ValidityPolicy = DEFAULT_POLICY,
    as_of: dt.date | None = None,
) -> EmployeeProfile:
    triplets: set[ProvenancedTriplet] = set()
    pending: dict[str, Concept] = {}
    for src, validity in _merge_duplicates(sources, policy):
        stamped, queue = build_source_profile(src, ref, tax, policy, validity)
        triplets |= stamped
        for c in queue:
            pending.setdefault(c.norm, c)
    profile = EmployeeProfile(
        employee,
        frozenset(triplets),
        taxonomy_version=tax.version,
        unresolved=tuple(pending[k] for k in sorted(pending)),
    )
    return currency_filter(profile, as_of) if as_of is not None else profile


def currency_filter(profile, at: dt.date):
    """Keep only what is current at *at*: a triplet survives iff *at* lies in its validity."""
    if isinstance(profile, OrgProfile):
        members = tuple(currency_filter(m, at) for m in profile.members)
        return replace(compose_org(members, org=profile.org), as_of=at, taxonomy_version=profile.taxonomy_version)
    kept = frozenset(p for p in profile.triplets if at in p.validity)
    return replace(profile, triplets=kept, as_of=at)


def compose_org(profiles: Sequence[EmployeeProfile], org: str = "org") -> OrgProfile:
    """Union employee profiles; headcount counts contributing profiles per triplet."""
    profiles = tuple(profiles)
    as_ofs = {p.as_of for p in profiles}
    if len(as_ofs) > 1:
        raise ValueError(f"profiles are filtered at different dates: {sorted(map(str, as_ofs - {None}))}")
    versions = {p.taxonomy_version for p in profiles} - {None}
    if len(versions) > 1:
        raise VersionMismatch(f"profiles use different CyBOK versions: {sorted(versions)}")
    counts: Counter[MappingTriplet] = Counter()
    for p in profiles:
        counts.update(p.mapped)
    return OrgProfile(
        org=org,
        triplets=frozenset(counts),
        headcount=dict(sorted(counts.items())),
        employees=len(profiles),
        as_of=as_ofs.pop() if as_ofs else None,
        taxonomy_version=versions.pop() if versions else None,
        members=profiles,
    )



def merge_orgs(*orgs: OrgProfile, org: str | None = None) -> OrgProfile:
    """Combine organisational profiles by pooling their members."""
    members = tuple(m for o in orgs for m in o.members)
    return compose_org(members, org=org or (orgs[0].org if orgs else "org"))

# --- snapshots -------------------------------------------------------------


@dataclass(frozen=True)
class Snapshot:
    """An organisational profile pinned to a date.

    ``profile`` keeps the full history handed in; ``current`` is that profile
    cut down to what was valid on ``taken_at``.
    """

    taken_at: dt.date
    profile: OrgProfile

    @property
    def current(self) -> OrgProfile:
        return currency_filter(self.profile, self.taken_at)

    @property
    def taxonomy_version(self) -> str | None:
        return self.profile.taxonomy_version


def snapshot(profile: OrgProfile, at: dt.date) -> Snapshot:
    return Snapshot(at, profile)


def _interval_to_dict(v: ValidityInterval) -> dict[str, Any]:
    return {"valid_from": v.start.isoformat(), "valid_until": v.end.isoformat() if v.end else None}


def _date(value: Any) -> dt.date | None:
    if value is None or isinstance(value, dt.date) and not isinstance(value, dt.datetime):
        return value
    if isinstance(value, dt.datetime):
        return value.date()
    return dt.date.fromisoformat(str(value))


def triplet_to_dict(t: MappingTriplet) -> dict[str, Any]:
    return {"ka": t.ka, "topic": t.topic, "depth": t.depth}


def triplet_from_dict(d: Mapping[str, Any]) -> MappingTriplet:
    return MappingTriplet(d["ka"], d["topic"], int(d["depth"]))


def employee_to_dict(p: EmployeeProfile) -> dict[str, Any]:
    return {
        "schema": SCHEMA,
        "kind": "employee-profile",
        "employee": p.employee,
        "as_of": p.as_of.isoformat() if p.as_of else None,
        "taxonomy_version": p.taxonomy_version,
        "triplets": [
            {**triplet_to_dict(t.triplet), "source_kind": t.kind.value, "source": t.source_label, **_interval_to_dict(t.validity)}
            for t in sorted(p.triplets)
        ],
        "unresolved": [{"raw": c.raw, "norm": c.norm} for c in p.unresolved],
    }


def employee_from_dict(d: Mapping[str, Any]) -> EmployeeProfile:
    triplets = frozenset(
        ProvenancedTriplet(
            triplet_from_dict(t),
            SourceKind(t["source_kind"]),
            t["source"],
            ValidityInterval(_date(t["valid_from"]), _date(t["valid_until"])),
        )
        for t in d.get("triplets", ())
    )
    return EmployeeProfile(
        d["employee"],
        triplets,
        _date(d.get("as_of")),
        d.get("taxonomy_version"),
        tuple(Concept(c["raw"], c["norm"]) for c in d.get("unresolved", ())),
    )


def snapshot_to_dict(s: Snapshot) -> dict[str, Any]:
    current = s.current
    p = s.profile
    return {
        "schema": SCHEMA,
        "kind": "org-snapshot",
        "org": p.org,
        "as_of": s.taken_at.isoformat(),
        "taxonomy_version": p.taxonomy_version,
        "employees": current.employees,
        "triplets": [{**triplet_to_dict(t), "headcount": n} for t, n in current.headcount.items()],
        "history": {
            "as_of": p.as_of.isoformat() if p.as_of else None,
            "members": [employee_to_dict(m) for m in p.members],
        },
    }


def snapshot_from_dict(d: Mapping[str, Any]) -> Snapshot:
    if d.get("kind") != "org-snapshot":
        raise RecordError(f"not an org snapshot (kind={d.get('kind')!r})")
    if d.get("schema") != SCHEMA:
        raise RecordError(f"unsupported snapshot schema {d.get('schema')!r}")
    members = tuple(employee_from_dict(m) for m in d["history"]["members"])
    profile = compose_org(members, org=d["org"])
    if not members:
        profile = replace(profile, taxonomy_version=d.get("taxonomy_version"), as_of=_date(d["history"].get("as_of")))
    snap = Snapshot(_date(d["as_of"]), profile)
    listed = {triplet_from_dict(t): int(t["headcount"]) for t in d.get("triplets", ())}
    if listed != dict(snap.current.headcount):
        raise RecordError("snapshot triplet table disagrees with its member history")
    return snap


def dumps(obj: Mapping[str, Any]) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def serialize(s: Snapshot) -> str:
    return dumps(snapshot_to_dict(s))


def deserialize(text: str) -> Snapshot:
    return snapshot_from_dict(json.loads(text))


def write_snapshot(path: str | Path, s: Snapshot) -> None:
    Path(path).write_text(serialize(s), encoding="utf-8")


def read_snapshot(path: str | Path) -> Snapshot:
    return deserialize(Path(path).read_text(encoding="utf-8"))


# --- employee record files ---------------------------------------------------


@dataclass(frozen=True)
class EmployeeRecord:
    employee: str
    sources: tuple[KnowledgeSource, ...]
    taxonomy_version: str | None = None


def parse_employee_record(data: Mapping[str, Any], where: str = "<record>") -> EmployeeRecord:
    """Build a record from the parsed TOML table (``employee_id`` + ``[[source]]`` blocks)."""
    try:
        employee = str(data["employee_id"])
    except KeyError:
        raise RecordError(f"{where}: missing employee_id") from None
    sources = []
    for i, block in enumerate(data.get("source", []), start=1):
        try:
            kind = SourceKind(str(block["kind"]).upper())
            sources.append(
                KnowledgeSource(
                    kind=kind,
                    label=str(block.get("label") or block.get("credential") or f"{kind.value}-{i}"),
                    acquired=_date(block["acquired"]),
                    concepts=tuple(str(c) for c in block.get("concepts", [])),
                    credential=block.get("credential"),
                    valid_until=_date(block.get("valid_until")),
                    valid_from=_date(block.get("valid_from")),
                )
            )
        except KeyError as exc:
            raise RecordError(f"{where}: source {i} missing field {exc.args[0]!r}") from None
        except ValueError as exc:
            raise RecordError(f"{where}: source {i}: {exc}") from None
    return EmployeeRecord(employee, tuple(sources), data.get("taxonomy_version"))


def load_employee_record(path: str | Path) -> EmployeeRecord:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise RecordError(f"{path}: {exc}") from None
    return parse_employee_record(data, where=str(path))
