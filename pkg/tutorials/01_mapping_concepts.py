# coding: utf-8

# # Mapping concepts onto CyBOK
#
# Everything starts from a mapping reference: a CSV that says which CyBOK
# topics a keyword or a certification covers. Here we load the sample one,
# map a short list of concepts and look at what is left for a human.

# %%

from pathlib import Path

from cybok_profile import load_reference, load_taxonomy, map_concept_set, normalize, review_queue
from cybok_profile.mapping import catalog_lookup

DATA = Path(__file__).resolve().parent.parent / "sample_data"

tax = load_taxonomy("1.0.0")
ref = load_reference(DATA / "reference-1.0.0.csv", tax)
print(len(tax.kas), "knowledge areas,", len(ref.entries), "concepts,", len(ref.catalog), "certifications")


# Phrases are compared after normalisation, so case, punctuation and extra
# spaces do not matter.

# %%

for raw in ["Intrusion Detection", "  intrusion-detection ", "SIEM"]:
    print(repr(raw), "->", repr(normalize(raw).norm))


# %%

outcomes = map_concept_set(
    ["Intrusion Detection", "SIEM", "access control", "quantum key distribution", "siem"],
    ref,
)
for o in outcomes:
    print(f"{o.concept.raw:<28} {o.status.value:<10}", *sorted(str(t) for t in o.triplets))


# Nothing is guessed. Concepts with no entry go to the review queue, and the
# duplicate "siem" was collapsed into the first one.

# %%

print("needs a human:", [c.norm for c in review_queue(outcomes)])


# Certifications come pre-mapped from the catalog.

# %%

cism = catalog_lookup("cism", ref)
by_ka = {}
for t in cism:
    by_ka.setdefault(t.ka, []).append(t.topic)
for ka, topics in sorted(by_ka.items()):
    print(ka, tax.ka(ka).category, len(topics))
