# coding: utf-8

# # Watching a profile change
#
# Knowledge lapses. Certifications expire after three years unless renewed,
# training after five, past roles ten years after they end; the current role
# never lapses. Snapshots of the same team at different dates show that.

# %%

import datetime as dt
from pathlib import Path

from cybok_profile import compose_employee, compose_org, diff, load_reference, load_taxonomy, snapshot
from cybok_profile.profile import ValidityPolicy, load_employee_record

DATA = Path(__file__).resolve().parent.parent / "sample_data"
tax = load_taxonomy("1.0.0")
ref = load_reference(DATA / "reference-1.0.0.csv", tax)
records = [load_employee_record(p) for p in sorted((DATA / "org_a").glob("*.toml"))]
team = compose_org([compose_employee(r.employee, r.sources, ref, tax) for r in records], org="Org A")


# %%

dates = [dt.date(y, 6, 30) for y in range(2019, 2031, 2)]
for d in dates:
    cur = snapshot(team, d).current
    print(d, f"{len(cur.triplets):>3} triplets", f"max headcount {max(cur.headcount.values(), default=0)}")


# Consecutive snapshots, diffed. Added and removed triplets plus headcount
# changes on triplets present in both.

# %%

for a, b in zip(dates, dates[1:]):
    d = diff(snapshot(team, a), snapshot(team, b))
    print(f"{a} -> {b}: +{len(d.added)} -{len(d.removed)} ~{len(d.headcount)}")


# Swapping the arguments swaps added and removed.

# %%

fwd = diff(snapshot(team, dates[1]), snapshot(team, dates[-1]))
back = diff(snapshot(team, dates[-1]), snapshot(team, dates[1]))
print(fwd.added == back.removed, fwd.removed == back.added)


# The default windows are a policy choice. A stricter one, one year for
# certifications, shrinks the picture.

# %%

strict = ValidityPolicy.from_days({"CER": 365})
strict_team = compose_org(
    [compose_employee(r.employee, r.sources, ref, tax, strict) for r in records], org="Org A (strict)"
)
at = dt.date(2024, 6, 30)
print(len(snapshot(team, at).current.triplets), "vs", len(snapshot(strict_team, at).current.triplets))
