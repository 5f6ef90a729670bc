# coding: utf-8

# # A team's knowledge profile
#
# Seven employee records (an incident response team) are turned into
# employee profiles, unioned into an organisational profile and summarised.
# Figures are written to an output directory given on the command line
# (default: a fresh temporary directory).

# %%

import datetime as dt
import sys
import tempfile
from pathlib import Path

from cybok_profile import (
    RenderSpec,
    annotate_tree,
    broad_shares,
    compose_employee,
    compose_org,
    composition_stats,
    gaps,
    ka_coverage,
    load_reference,
    load_taxonomy,
    render_histogram,
    render_spider,
    render_tree,
    snapshot,
)
from cybok_profile.profile import load_employee_record

DATA = Path(__file__).resolve().parent.parent / "sample_data"
OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="team-profile-"))
AS_OF = dt.date(2024, 6, 30)

tax = load_taxonomy("1.0.0")
ref = load_reference(DATA / "reference-1.0.0.csv", tax)
records = [load_employee_record(p) for p in sorted((DATA / "org_a").glob("*.toml"))]


# Each employee profile keeps every triplet with the kind of source it came
# from and its validity interval.

# %%

people = [compose_employee(r.employee, r.sources, ref, tax) for r in records]
for p in people:
    print(p.employee, len(p.mapped), "triplets from", len({q.source_label for q in p.triplets}), "sources")


# A snapshot pins the team to a date. `current` drops what has lapsed by then
# (expired certifications, old training), while the snapshot keeps the history.

# %%

team = compose_org(people, org="Org A")
snap = snapshot(team, AS_OF)
now = snap.current
print(f"{len(team.triplets)} triplets ever, {len(now.triplets)} current on {AS_OF}")


# %%

print(broad_shares(now, tax).to_text())
print(ka_coverage(now, tax).to_text())


# Where does the knowledge come from? Distinct (triplet, kind) contributions
# split between formal learning and practice.

# %%

print(composition_stats(team).to_text())


# Gaps: whole knowledge areas with nothing, then missing level-2 topics.

# %%

report = gaps(now, tax)
print("uncovered areas:", ", ".join(tax.ka(k).name for k in report.kas))
print("SOIM topics not covered:", report.topics("SOIM"))


# # Figures

# %%

OUT.mkdir(parents=True, exist_ok=True)
(OUT / "spider.svg").write_text(render_spider(broad_shares(now, tax), RenderSpec("spider", "Org A")))
(OUT / "histogram.svg").write_text(render_histogram(ka_coverage(now, tax), RenderSpec("histogram", "Org A")))
svg, dot = render_tree(annotate_tree(team, tax, "SOIM", AS_OF), tax, RenderSpec("tree", "SOIM: total and practiced"))
(OUT / "tree-soim.svg").write_text(svg)
(OUT / "tree-soim.dot").write_text(dot)
print("figures in", OUT)
