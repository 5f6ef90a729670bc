import datetime as dt
import json

import pytest
from builders import SAMPLE, D, employee, node_triplets, one_concept_per_triplet, reference, source
from hypothesis import given, settings
from hypothesis import strategies as st

from cybok_profile.mapping import MappingTriplet, VersionMismatch
from cybok_profile.profile import (
    DEFAULT_POLICY,
    EmployeeProfile,
    KnowledgeSource,
    ProvenancedTriplet,
    RecordError,
    Snapshot,
    SourceKind,
    ValidityInterval,
    ValidityPolicy,
    Window,
    add_years,
    build_source_profile,
    compose_org,
    currency_filter,
    deserialize,
    employee_from_dict,
    employee_to_dict,
    load_employee_record,
    merge_orgs,
    parse_employee_record,
    read_snapshot,
    serialize,
    snapshot,
    validity_of,
    write_snapshot,
)


def oracle_add_years(d, n):
    # Independent of the library: let the constructor reject Feb 29.
    try:
        return dt.date(d.year + n, d.month, d.day)
    except ValueError:
        return dt.date(d.year + n, 2, 28)


def oracle_days_in_years(start_year, n):
    return sum(366 if (y % 4 == 0 and y % 100 != 0) or y % 400 == 0 else 365 for y in range(start_year, start_year + n))


# --- validity ------------------------------------------------------------------


def test_tra_default_window_five_years():
    iv = validity_of(source("TRA", "course", "2020-01-01"))
    # 2020..2024 holds two leap years: 366 + 365 + 365 + 365 + 366
    assert (iv.end - iv.start).days == oracle_days_in_years(2020, 5) == 1827
    assert iv == ValidityInterval(D("2020-01-01"), D("2025-01-01"))


@pytest.mark.parametrize(
    "kind,acquired,end",
    [
        ("CER", "2021-06-15", "2024-06-15"),
        ("CER", "2020-02-29", "2023-02-28"),
        ("TRA", "2016-02-29", "2021-02-28"),
        ("EXP", "2014-03-31", "2024-03-31"),
        ("EXP", "2012-02-29", "2022-02-28"),
    ],
)
def test_default_windows(kind, acquired, end):
    src = source(kind, "x", acquired)
    assert validity_of(src).end == D(end)
    assert validity_of(src).start == D(acquired)


def test_res_is_open_ended_and_cannot_be_overridden():
    assert validity_of(source("RES", "role", "2022-01-01")).end is None
    assert validity_of(source("RES", "role", "2022-01-01", valid_until=D("2023-01-01"))).end is None
    with pytest.raises(ValueError):
        ValidityPolicy.from_days({"RES": 10})


def test_explicit_end_and_start_win():
    src = source("CER", "c", "2020-01-01", valid_until=D("2020-06-30"), valid_from=D("2020-02-01"))
    assert validity_of(src) == ValidityInterval(D("2020-02-01"), D("2020-06-30"))


def test_policy_override_in_days():
    policy = ValidityPolicy.from_days({"cer": 30})
    assert validity_of(source("CER", "c", "2020-01-01"), policy).end == D("2020-01-31")
    assert policy.tra == DEFAULT_POLICY.tra
    with pytest.raises(ValueError):
        Window()
    with pytest.raises(ValueError):
        ValidityInterval(D("2020-01-02"), D("2020-01-01"))


@settings(max_examples=300)
@given(st.dates(dt.date(1990, 1, 1), dt.date(2060, 12, 31)), st.integers(0, 30))
def test_add_years_matches_oracle(d, n):
    assert add_years(d, n) == oracle_add_years(d, n)


def test_interval_hull_and_membership():
    a = ValidityInterval(D("2020-01-01"), D("2020-12-31"))
    b = ValidityInterval(D("2021-06-01"), D("2022-01-01"))
    assert a.hull(b) == ValidityInterval(D("2020-01-01"), D("2022-01-01"))
    assert a.hull(ValidityInterval(D("2025-01-01"))).end is None
    assert D("2020-12-31") in a and D("2021-01-01") not in a and D("2019-12-31") not in a
    assert sorted([ValidityInterval(D("2020-01-01")), a]) == [a, ValidityInterval(D("2020-01-01"))]


# --- exhaustive currency boundaries ----------------------------------------------

EXPIRY = D("2024-03-01")
ACQ = D("2021-03-01")


@pytest.mark.parametrize("offset", range(-40, 41))
def test_cer_boundary_every_day_around_expiry(tax10, offset):
    t = node_triplets(tax10, "RMG")[1]
    ref = one_concept_per_triplet(tax10, [t])
    prof = employee("e", [source("CER", "c", ACQ, ["t0"], valid_until=EXPIRY)], ref, tax10)
    at = EXPIRY + dt.timedelta(days=offset)
    assert (t in currency_filter(prof, at).mapped) == (offset <= 0)


@pytest.mark.parametrize("offset", range(-5, 6))
def test_boundary_at_start(tax10, offset):
    t = node_triplets(tax10, "RMG")[1]
    ref = one_concept_per_triplet(tax10, [t])
    for kind in SourceKind:
        prof = employee("e", [source(kind, "s", ACQ, ["t0"])], ref, tax10)
        at = ACQ + dt.timedelta(days=offset)
        assert (t in currency_filter(prof, at).mapped) == (offset >= 0)


@pytest.mark.parametrize("kind,years", [("CER", 3), ("TRA", 5), ("EXP", 10)])
def test_default_window_boundaries(tax10, kind, years):
    t = node_triplets(tax10, "LR")[1]
    ref = one_concept_per_triplet(tax10, [t])
    prof = employee("e", [source(kind, "s", ACQ, ["t0"])], ref, tax10)
    end = oracle_add_years(ACQ, years)
    assert t in currency_filter(prof, end).mapped
    assert t not in currency_filter(prof, end + dt.timedelta(days=1)).mapped


def test_res_survives_far_future(tax10):
    t = node_triplets(tax10, "LR")[1]
    ref = one_concept_per_triplet(tax10, [t])
    prof = employee("e", [source("RES", "role", ACQ, ["t0"])], ref, tax10)
    for years in (0, 1, 10, 100, 500):
        assert t in currency_filter(prof, oracle_add_years(ACQ, years)).mapped


# --- composition ---------------------------------------------------------------------


def test_compose_employee_tracks_provenance_and_queue(tax10, sample_ref):
    prof = employee(
        "A",
        [
            source("TRA", "ids course", "2020-05-11", ["Intrusion Detection", "underwater welding"]),
            source("CER", "CISM", "2021-01-01", credential="CISM"),
            source("CER", "Made-up Cert", "2021-01-01", credential="Made-up Cert"),
        ],
        sample_ref,
        tax10,
    )
    kinds = {p.kind for p in prof.triplets}
    assert kinds == {SourceKind.TRA, SourceKind.CER}
    assert len([p for p in prof.triplets if p.source_label == "ids course"]) == 2
    assert len([p for p in prof.triplets if p.source_label == "CISM"]) == 4
    assert [c.norm for c in prof.unresolved] == ["made up cert", "underwater welding"]
    assert prof.taxonomy_version == "1.0.0" and prof.as_of is None


def test_duplicate_sources_merge_to_widest_validity(tax10):
    t = node_triplets(tax10, "HF")[1]
    ref = one_concept_per_triplet(tax10, [t])
    prof = employee(
        "e",
        [source("CER", "same", "2018-01-01", ["t0"]), source("CER", "same", "2020-01-01", ["t0"])],
        ref,
        tax10,
    )
    (p,) = prof.triplets
    assert p.validity == ValidityInterval(D("2018-01-01"), D("2023-01-01"))


def test_version_mismatch_is_rejected(tax10, tax11, sample_ref):
    with pytest.raises(VersionMismatch):
        build_source_profile(source("TRA", "x", "2020-01-01", ["siem"]), sample_ref, tax11)
    a = EmployeeProfile("a", taxonomy_version="1.0.0")
    b = EmployeeProfile("b", taxonomy_version="1.1.0")
    with pytest.raises(VersionMismatch):
        compose_org([a, b])


def test_compose_org_disjoint_and_headcount(tax10):
    pool = node_triplets(tax10)
    ref = one_concept_per_triplet(tax10, pool[:7])
    a = employee("a", [source("TRA", "x", "2020-01-01", ["t0", "t1", "t2"])], ref, tax10)
    b = employee("b", [source("TRA", "x", "2020-01-01", ["t3", "t4", "t5", "t6"])], ref, tax10)
    org = compose_org([a, b])
    assert len(org.triplets) == 7 and org.employees == 2
    assert set(org.headcount.values()) == {1}
    twice = compose_org([a, a])
    assert twice.triplets == a.mapped and set(twice.headcount.values()) == {2}


def test_compose_org_rejects_mixed_dates():
    with pytest.raises(ValueError):
        compose_org([EmployeeProfile("a", as_of=D("2024-01-01")), EmployeeProfile("b", as_of=D("2024-01-02"))])


def test_empty_org_keeps_filter_date():
    org = currency_filter(compose_org([], org="x"), D("2024-01-01"))
    assert org.as_of == D("2024-01-01") and not org.triplets and org.employees == 0


# --- union algebra against a brute-force oracle -------------------------------------


def oracle_union(sets):
    out = []
    for s in sets:
        for t in s:
            if t not in out:
                out.append(t)
    return set(out)


def oracle_headcount(sets):
    return {t: sum(1 for s in sets if t in s) for t in oracle_union(sets)}


@settings(max_examples=150, deadline=None)
@given(st.lists(st.lists(st.integers(0, 59), max_size=20), max_size=10), st.randoms(use_true_random=False))
def test_org_union_matches_oracle(tax10, choices, rnd):
    pool = node_triplets(tax10)[:60]
    profiles = [
        EmployeeProfile(f"e{i}", frozenset(_stamp(pool[j]) for j in picks), taxonomy_version="1.0.0")
        for i, picks in enumerate(choices)
    ]
    sets = [{pool[j] for j in picks} for picks in choices]
    org = compose_org(profiles)
    assert org.triplets == oracle_union(sets)
    assert dict(org.headcount) == oracle_headcount(sets)
    shuffled = profiles[:]
    rnd.shuffle(shuffled)
    again = compose_org(shuffled)
    assert again.triplets == org.triplets and again.headcount == org.headcount
    cut = len(profiles) // 2
    merged = merge_orgs(compose_org(profiles[:cut]), compose_org(profiles[cut:]))
    assert merged.triplets == org.triplets and merged.headcount == org.headcount


def _stamp(t, kind=SourceKind.TRA):
    return ProvenancedTriplet(t, kind, "s", ValidityInterval(D("2020-01-01")))


# --- snapshots -----------------------------------------------------------------------


@pytest.fixture
def org_a(tax10, sample_ref):
    profiles = [
        employee(rec.employee, rec.sources, sample_ref, tax10)
        for rec in (load_employee_record(p) for p in sorted((SAMPLE / "org_a").glob("*.toml")))
    ]
    return compose_org(profiles, org="org-a")


def test_snapshot_round_trip(tmp_path, org_a):
    snap = snapshot(org_a, D("2024-06-30"))
    text = serialize(snap)
    again = deserialize(text)
    assert again == snap
    assert serialize(again) == text
    data = json.loads(text)
    assert data["schema"] == 1 and data["as_of"] == "2024-06-30"
    assert len(data["triplets"]) == len(snap.current.triplets)
    path = tmp_path / "s.json"
    write_snapshot(path, snap)
    assert read_snapshot(path) == snap


def test_snapshot_current_drops_expired(org_a):
    snap = snapshot(org_a, D("2024-06-30"))
    assert snap.current.triplets < snap.profile.triplets
    assert snap.current.as_of == D("2024-06-30")


def _boundaries(org):
    days = set()
    for m in org.members:
        for p in m.triplets:
            days.add(p.validity.start)
            if p.validity.end is not None:
                days.add(p.validity.end + dt.timedelta(days=1))
    return sorted(days)


def test_snapshots_between_boundaries_differ_only_in_date(org_a):
    edges = _boundaries(org_a)
    # pick two dates strictly inside one gap between consecutive boundaries
    lo, hi = next((a, b) for a, b in zip(edges, edges[1:]) if (b - a).days >= 3 and a > D("2022-01-01"))
    s1 = json.loads(serialize(snapshot(org_a, lo)))
    s2 = json.loads(serialize(snapshot(org_a, hi - dt.timedelta(days=1))))
    assert s1["as_of"] != s2["as_of"]
    s1.pop("as_of"), s2.pop("as_of")
    assert s1 == s2


def test_tampered_snapshot_is_rejected(org_a):
    data = json.loads(serialize(snapshot(org_a, D("2024-06-30"))))
    data["triplets"] = data["triplets"][1:]
    with pytest.raises(ValueError):
        deserialize(json.dumps(data))


def test_employee_dict_round_trip(org_a):
    for m in org_a.members:
        assert employee_from_dict(employee_to_dict(m)) == m


# --- record files ---------------------------------------------------------------------


def test_sample_records_parse():
    rec = load_employee_record(SAMPLE / "org_a" / "a1.toml")
    assert rec.employee == "A1" and rec.taxonomy_version == "1.0.0"
    assert rec.sources[0] == KnowledgeSource(
        SourceKind.CER, "CISSP", D("2016-03-01"), (), credential="CISSP", valid_until=D("2019-03-01")
    )


@pytest.mark.parametrize(
    "data,fragment",
    [
        ({}, "employee_id"),
        ({"employee_id": "x", "source": [{"kind": "CER", "label": "c"}]}, "acquired"),
        ({"employee_id": "x", "source": [{"kind": "JOB", "acquired": "2020-01-01"}]}, "source 1"),
        ({"employee_id": "x", "source": [{"kind": "TRA", "acquired": "yesterday"}]}, "source 1"),
    ],
)
def test_bad_records(data, fragment):
    with pytest.raises(RecordError, match=fragment):
        parse_employee_record(data)


def test_bad_toml(tmp_path):
    p = tmp_path / "r.toml"
    p.write_text("employee_id = \n")
    with pytest.raises(RecordError):
        load_employee_record(p)


def test_record_helpers_share_reference(tax10):
    # a reference built in tests behaves like one loaded from disk
    t = MappingTriplet("RMG", "rmg/what-is-risk", 2)
    ref = reference(tax10, {"risk": [t]})
    assert employee("e", [source("TRA", "r", "2020-01-01", ["Risk"])], ref, tax10).mapped == {t}
    assert isinstance(Snapshot(D("2020-01-01"), compose_org([])).current.triplets, frozenset)
