"""Workforce knowledge profiles mapped onto the Cyber Security Body of Knowledge.

Modules
-------
taxonomy   CyBOK versions, broad categories, knowledge areas, topic trees.
mapping    concept normalisation, mapping reference, review queue.
profile    knowledge sources, validity, employee and organisation profiles, snapshots.
analytics  category shares, KA coverage, tree annotation, composition, gaps, diffs.
render     SVG spider charts, histograms and annotated trees (plus DOT text).
cli        the ``cybok-profile`` command.
"""

from .analytics import annotate_tree, broad_shares, composition_stats, diff, gaps, ka_coverage
from .mapping import (
    Concept,
    MappingReference,
    MappingTriplet,
    catalog_lookup,
    load_reference,
    map_concept,
    map_concept_set,
    normalize,
    review_queue,
)
from .profile import (
    EmployeeProfile,
    KnowledgeSource,
    OrgProfile,
    SourceKind,
    ValidityInterval,
    ValidityPolicy,
    compose_employee,
    compose_org,
    merge_orgs,
    currency_filter,
    snapshot,
    validity_of,
)
from .render import RenderSpec, render_histogram, render_spider, render_tree
from .taxonomy import Taxonomy, load_taxonomy, topic_lookup, validate_triplet

__version__ = "0.1.0"
