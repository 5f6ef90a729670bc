import datetime as dt
import math
from fractions import Fraction

import pytest
from builders import D, employee, node_triplets, one_concept_per_triplet, source, tax_for
from hypothesis import given, settings
from hypothesis import strategies as st

from cybok_profile.analytics import (
    BroadCategoryShare,
    KACoverage,
    TreeAnnotation,
    annotate_tree,
    broad_shares,
    composition_stats,
    diff,
    gaps,
    hundredths,
    ka_coverage,
    pct,
)
from cybok_profile.mapping import MappingTriplet, VersionMismatch
from cybok_profile.profile import EmployeeProfile, ProvenancedTriplet, SourceKind, ValidityInterval, compose_org, snapshot


def truncate2(num, den):
    """Oracle: exact rational, floored at two decimals."""
    return math.floor(Fraction(100 * num, den) * 100) / 100


def stamped(triplets, kind=SourceKind.TRA, start="2020-01-01", end=None):
    v = ValidityInterval(D(start), D(end) if end else None)
    return frozenset(ProvenancedTriplet(t, SourceKind(kind), f"{kind}-src", v) for t in triplets)


def prof(name, *parts, version="1.0.0"):
    return EmployeeProfile(name, frozenset().union(*parts), taxonomy_version=version)


# --- truncation ------------------------------------------------------------------


@pytest.mark.parametrize(
    "num,den,expected",
    [(25, 34, 73.52), (9, 34, 26.47), (547, 625, 87.52), (78, 625, 12.48), (1, 3, 33.33), (2, 3, 66.66), (3, 4, 75.0), (0, 5, 0.0), (5, 5, 100.0)],
)
def test_pct_examples(num, den, expected):
    assert pct(num, den) == expected == truncate2(num, den)


@settings(max_examples=500)
@given(st.integers(1, 10**6).flatmap(lambda d: st.tuples(st.integers(0, d), st.just(d))))
def test_pct_matches_rational_oracle(nd):
    num, den = nd
    assert pct(num, den) == truncate2(num, den)
    assert hundredths(num, den) <= 10000


def test_pct_of_empty_basis_is_zero():
    assert pct(0, 0) == 0.0


# --- broad shares -------------------------------------------------------------------


def test_broad_shares_hand_counted(tax10):
    rmg, lr = node_triplets(tax10, "RMG")[1], node_triplets(tax10, "LR")[1]
    ns = node_triplets(tax10, "NS")[1]
    intro = MappingTriplet("INTRO", "intro", 1)
    share = broad_shares(prof("x", stamped([rmg, lr, ns, intro])), tax10)
    assert share.basis == 4
    assert share.counts == {"HORA": 2, "AD": 0, "SYS": 0, "SPS": 0, "INFRA": 1}
    assert share.shares["HORA"] == 50.0 and share.shares["INFRA"] == 25.0
    assert share.unattributed == 25.0
    assert BroadCategoryShare.from_dict(share.to_dict()) == share


def test_broad_shares_empty(tax10):
    share = broad_shares(prof("x"), tax10)
    assert share.empty and set(share.shares.values()) == {0.0}
    assert share.to_dict()["empty"] is True


def test_sample_cissp_and_cism(tax10, sample_ref):
    cissp = employee("c", [source("CER", "CISSP", "2020-01-01", credential="CISSP")], sample_ref, tax10)
    cism = employee("c", [source("CER", "CISM", "2020-01-01", credential="CISM")], sample_ref, tax10)
    assert broad_shares(cissp, tax10).shares["HORA"] == 33.33
    assert broad_shares(cism, tax10).shares["HORA"] == 75.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 10**4), max_size=40))
def test_broad_shares_sum_within_slack(picks):
    tax = tax_for("1.0.0")
    pool = [MappingTriplet(a.code, n.id, n.level) for a in tax.all_areas() for n in a.nodes()]
    triplets = {pool[i % len(pool)] for i in picks}
    share = broad_shares(prof("x", stamped(triplets)), tax)
    total = sum(share.shares.values()) + share.unattributed
    if share.empty:
        assert total == 0
    else:
        # six truncated terms can each lose just under 0.01
        assert 100 - 6 * 0.01 < total <= 100 + 1e-9


# --- KA coverage ------------------------------------------------------------------------


def test_coverage_projects_deeper_topics(tax10):
    misuse = MappingTriplet("SOIM", "soim/analyse-analysis-methods/misuse-detection", 3)
    anomaly = MappingTriplet("SOIM", "soim/analyse-analysis-methods/anomaly-detection", 3)
    siem = MappingTriplet("SOIM", "soim/plan-security-information-and-event-management", 2)
    p = prof("x", stamped([misuse, anomaly, siem]))
    assert ka_coverage(p, tax10, 1).count("SOIM") == 1
    assert ka_coverage(p, tax10, 2).count("SOIM") == 2
    assert ka_coverage(p, tax10, 3).count("SOIM") == 3
    cov = ka_coverage(p, tax10)
    assert [e.code for e in cov.entries][-1] == "INTRO" and len(cov.entries) == 20
    assert KACoverage.from_dict(cov.to_dict()) == cov


def test_coverage_headcount_for_orgs(tax10):
    t = node_triplets(tax10, "NS")[1]
    org = compose_org([prof("a", stamped([t])), prof("b", stamped([t]))])
    cov = ka_coverage(org, tax10)
    assert next(e for e in cov.entries if e.code == "NS").max_headcount == 2
    assert next(e for e in cov.entries if e.code == "F").max_headcount == 0
    with pytest.raises(ValueError):
        ka_coverage(org, tax10, 0)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 10**4), max_size=30))
def test_coverage_monotone_in_depth(picks):
    tax = tax_for("1.0.0")
    pool = node_triplets(tax)
    p = prof("x", stamped({pool[i % len(pool)] for i in picks}))
    prev = None
    for depth in (1, 2, 3, 4):
        counts = ka_coverage(p, tax, depth).counts
        if prev is not None:
            assert all(counts[k] >= prev[k] for k in counts)
        prev = counts


# --- tree annotation -----------------------------------------------------------------------


def test_tree_practiced_subset_of_total(tax10):
    cur = MappingTriplet("SOIM", "soim/analyse-analysis-methods/misuse-detection", 3)
    old = MappingTriplet("SOIM", "soim/monitor-data-sources/syslog", 3)
    p = prof("x", stamped([cur], "RES"), stamped([old], "CER", end="2020-06-01"))
    ann = annotate_tree(p, tax10, "SOIM", D("2024-01-01"))
    assert ann.total() == {"soim", "soim/analyse-analysis-methods", cur.topic, "soim/monitor-data-sources", old.topic}
    assert ann.practiced() == {"soim", "soim/analyse-analysis-methods", cur.topic}
    assert TreeAnnotation.from_dict(ann.to_dict()) == ann
    assert annotate_tree(p, tax10, "SOIM", None).practiced() == set()


def _ancestor_closed(ids):
    return all("/".join(i.split("/")[:k]) in ids for i in ids for k in range(1, i.count("/") + 1))


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 10**4), st.sampled_from(list(SourceKind)), st.booleans()), max_size=25))
def test_tree_flags_closed_and_nested(items):
    tax = tax_for("1.0.0")
    pool = node_triplets(tax, "SOIM")
    parts = [stamped([pool[i % len(pool)]], kind, end="2021-01-01" if expired else None) for i, kind, expired in items]
    ann = annotate_tree(prof("x", *parts), tax, "SOIM", D("2023-01-01"))
    assert _ancestor_closed(ann.total()) and _ancestor_closed(ann.practiced())
    assert ann.practiced() <= ann.total()


# --- composition ------------------------------------------------------------------------------


def test_composition_counts_distinct_pairs(tax10):
    a, b, c = node_triplets(tax10)[1:4]
    p1 = prof("p1", stamped([a, b], "TRA"), stamped([a], "RES"))
    p2 = prof("p2", stamped([a, b], "TRA"), stamped([c], "CER"))
    stats = composition_stats([p1, p2])
    assert stats.per_kind == {"CER": 1, "TRA": 2, "EXP": 0, "RES": 1}
    assert stats.basis == 4 and stats.overlap == 1
    assert stats.trained == 75.0 and stats.practised == 25.0 and stats.unattributed == 0.0


def test_composition_org_b_ratio(tax10):
    pool = node_triplets(tax10)
    p = prof("b", stamped(pool[:20], "TRA"), stamped(pool[20:25], "CER"), stamped(pool[25:34], "EXP"))
    stats = composition_stats(compose_org([p]))
    assert (stats.trained_count, stats.basis) == (25, 34)
    assert (stats.trained, stats.practised, stats.unattributed) == (73.52, 26.47, 0.01)


def test_composition_empty():
    stats = composition_stats([])
    assert stats.empty and stats.trained == stats.practised == stats.unattributed == 0.0


# --- gaps ---------------------------------------------------------------------------------------


def test_gaps_whole_areas_and_topics(tax10):
    soim = tax10.ka("SOIM")
    first = soim.root.children[0]
    p = prof("x", stamped([MappingTriplet("SOIM", first.id, 2)]))
    rep = gaps(p, tax10)
    assert "SOIM" not in rep.kas and "F" in rep.kas and "INTRO" not in rep.kas
    assert rep.topics("SOIM") == [n.id for n in soim.root.children[1:]]
    assert len(rep.kas) == 18
    assert gaps(p, tax10, depth=1).topics() == []
    cats = [g.category for g in rep.entries]
    order = [c.code for c in tax10.categories]
    assert cats == sorted(cats, key=order.index)


# --- diff -----------------------------------------------------------------------------------------


def test_diff_examples_and_antisymmetry(tax10):
    a, b, c = node_triplets(tax10)[1:4]
    o1 = compose_org([prof("p", stamped([a, b])), prof("q", stamped([b]))])
    o2 = compose_org([prof("p", stamped([b, c]))])
    d = diff(o1, o2)
    assert d.added == (c,) and d.removed == (a,) and d.headcount == {b: -1}
    back = diff(o2, o1)
    assert back.added == d.removed and back.removed == d.added
    assert back.headcount == {t: -n for t, n in d.headcount.items()}
    assert diff(o1, o1).empty


def test_diff_uses_current_view_of_snapshots(tax10):
    a = node_triplets(tax10)[1]
    org = compose_org([prof("p", stamped([a], "CER", end="2022-12-31"))])
    d = diff(snapshot(org, D("2022-12-31")), snapshot(org, D("2023-01-01")))
    assert d.removed == (a,) and not d.added
    assert d.meta == {"from": "2022-12-31", "to": "2023-01-01", "subject": "org"}


def test_diff_rejects_mixed_versions(tax10):
    o1 = compose_org([prof("p", version="1.0.0")])
    o2 = compose_org([prof("p", version="1.1.0")])
    with pytest.raises(VersionMismatch):
        diff(o1, o2)


def test_reports_serialise_with_schema(tax10, sample_ref):
    p = employee("e", [source("CER", "CISSP", "2020-01-01", credential="CISSP")], sample_ref, tax10, as_of=D("2021-01-01"))
    for rep in (broad_shares(p, tax10), ka_coverage(p, tax10), gaps(p, tax10), composition_stats([p])):
        d = rep.to_dict()
        assert d["schema"] == 1 and d["as_of"] == "2021-01-01" and d["taxonomy_version"] == "1.0.0"
        assert rep.to_text().endswith("\n")
    assert dt.date.fromisoformat(annotate_tree(p, tax10, "RMG", D("2021-01-01")).to_dict()["practiced_at"])
