"""Command-line entry point: ``cybok-profile <command> ...``.

Exit codes: 0 success, 1 I/O failure, 2 validation failure, 3 unresolved
concepts were queued for manual review, 4 (``diff`` only) the snapshots differ.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import analytics, render
from .mapping import (
    InvalidConcept,
    MappingFileError,
    VersionMismatch,
    load_reference,
    map_concept_set,
    review_queue,
)
from .profile import (
    DEFAULT_POLICY,
    RecordError,
    ValidityPolicy,
    compose_employee,
    compose_org,
    currency_filter,
    dumps,
    employee_to_dict,
    load_employee_record,
    read_snapshot,
    serialize,
    snapshot,
    tomllib,
)
from .taxonomy import TaxonomyError, load_taxonomy

log = logging.getLogger("cybok_profile")

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_UNRESOLVED, EXIT_CHANGED = 0, 1, 2, 3, 4
CONFIG_ENV = "CYBOK_PROFILE_CONFIG"
REPORT_VIEWS = ("broad", "ka", "tree", "composition", "gaps")
RENDER_VIEW = {"broad": "spider", "ka": "histogram", "tree": "tree"}


class Invalid(Exception):
    """Input failed validation (exit 2)."""


@dataclass
class Config:
    taxonomy_dir: Path | None = None
    taxonomy_version: str = "1.0.0"
    reference: Path | None = None
    depth: int = analytics.DEFAULT_DEPTH
    output_dir: Path = Path(".")
    policy: ValidityPolicy = field(default_factory=lambda: DEFAULT_POLICY)

    @classmethod
    def load(cls, path: Path) -> Config:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
        base = path.parent
        cfg = cls()
        if "taxonomy_dir" in data:
            cfg.taxonomy_dir = base / data["taxonomy_dir"]
        if "reference" in data:
            cfg.reference = base / data["reference"]
        if "output_dir" in data:
            cfg.output_dir = base / data["output_dir"]
        cfg.taxonomy_version = str(data.get("taxonomy_version", cfg.taxonomy_version))
        cfg.depth = int(data.get("depth", cfg.depth))
        if "validity_days" in data:
            cfg.policy = ValidityPolicy.from_days(data["validity_days"])
        return cfg

    def check(self) -> None:
        if self.taxonomy_dir is not None and not self.taxonomy_dir.is_dir():
            raise Invalid(f"taxonomy directory not found: {self.taxonomy_dir}")
        if self.reference is not None and not self.reference.is_file():
            raise Invalid(f"mapping reference not found: {self.reference}")
        if self.depth < 1:
            raise Invalid("depth must be >= 1")


def _config(args) -> Config:
    path = args.config or os.environ.get(CONFIG_ENV)
    cfg = Config.load(Path(path)) if path else Config()
    if args.taxonomy_dir:
        cfg.taxonomy_dir = Path(args.taxonomy_dir)
    if args.taxonomy_version:
        cfg.taxonomy_version = args.taxonomy_version
    if args.reference:
        cfg.reference = Path(args.reference)
    if args.depth is not None:
        cfg.depth = args.depth
    if args.out:
        cfg.output_dir = Path(args.out)
    if args.validity_days:
        overrides = {}
        for item in args.validity_days:
            kind, _, days = item.partition("=")
            overrides[kind] = days
        try:
            cfg.policy = ValidityPolicy.from_days(overrides, base=cfg.policy)
        except ValueError as exc:
            raise Invalid(f"bad --validity-days: {exc}") from None
    cfg.check()
    return cfg


class Outputs:
    """Collects files and writes them only once every computation has succeeded."""

    def __init__(self):
        self.files: dict[Path, str] = {}

    def add(self, path: Path, text: str) -> None:
        self.files[path] = text

    def commit(self) -> None:
        for path, text in self.files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
            try:
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
                os.replace(tmp, path)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
        for path in self.files:
            print(path)


def _load_stack(cfg: Config, need_reference: bool = True):
    tax = load_taxonomy(cfg.taxonomy_version, cfg.taxonomy_dir)
    if not need_reference:
        return tax, None
    if cfg.reference is None:
        raise Invalid("no mapping reference configured (use --reference or the config file)")
    return tax, load_reference(cfg.reference, tax)


# --- commands ---------------------------------------------------------------


def cmd_map(args, cfg: Config, as_of: dt.date) -> int:
    tax, ref = _load_stack(cfg)
    path = Path(args.concepts)
    try:
        raw_lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    phrases = []
    for lineno, line in enumerate(raw_lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        phrases.append((lineno, line.strip()))
    outcomes = map_concept_set([p for _, p in phrases], ref)
    bad = [(n, p) for (n, p), o in zip(phrases, outcomes) if isinstance(o, InvalidConcept)]
    if bad:
        raise Invalid(f"{path}:{bad[0][0]}: {bad[0][1]!r} is not a usable concept")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["concept", "ka", "topic", "depth"])
    for o in outcomes:
        for t in sorted(o.triplets):
            w.writerow([o.concept.norm, t.ka, t.topic, t.depth])
    queue = review_queue(outcomes)
    out = Outputs()
    stem = path.stem
    out.add(cfg.output_dir / f"{stem}-mapped.csv", buf.getvalue())
    out.add(cfg.output_dir / f"{stem}-review.txt", "".join(f"{c.norm}\n" for c in queue))
    out.commit()
    if queue:
        log.warning("%d concept(s) need manual mapping", len(queue))
        return EXIT_UNRESOLVED
    return EXIT_OK


def cmd_profile(args, cfg: Config, as_of: dt.date) -> int:
    tax, ref = _load_stack(cfg)
    records = []
    for path in args.records:
        try:
            rec = load_employee_record(path)
        except OSError as exc:
            raise OSError(f"cannot read {path}: {exc}") from exc
        if rec.taxonomy_version and rec.taxonomy_version != tax.version:
            raise Invalid(f"{path}: record targets CyBOK {rec.taxonomy_version}, run uses {tax.version}")
        records.append(rec)
    ids = [r.employee for r in records]
    if len(set(ids)) != len(ids):
        raise Invalid("duplicate employee_id across records")

    out = Outputs()
    history = []
    pending = {}
    for rec in records:
        full = compose_employee(rec.employee, rec.sources, ref, tax, cfg.policy)
        history.append(full)
        current = currency_filter(full, as_of)
        if full.triplets and not current.triplets:
            log.warning("%s: nothing is current on %s", rec.employee, as_of)
        if rec.sources and all(s.acquired > as_of for s in rec.sources):
            log.warning("%s: --as-of %s precedes every acquisition", rec.employee, as_of)
        for c in full.unresolved:
            pending.setdefault(c.norm, c)
        out.add(cfg.output_dir / "profiles" / f"{render.slugify(rec.employee) or 'employee'}.json", dumps(employee_to_dict(current)))
    if args.org:
        org = compose_org(history, org=args.org_id)
        out.add(cfg.output_dir / f"{render.slugify(args.org_id)}-snapshot-{as_of.isoformat()}.json", serialize(snapshot(org, as_of)))
    out.add(cfg.output_dir / "review-queue.txt", "".join(f"{k}\n" for k in sorted(pending)))
    out.commit()
    if pending:
        log.warning("%d concept(s) need manual mapping", len(pending))
        return EXIT_UNRESOLVED
    return EXIT_OK


def cmd_report(args, cfg: Config, as_of: dt.date) -> int:
    snap = read_snapshot(args.snapshot)
    version = snap.taxonomy_version or cfg.taxonomy_version
    tax = load_taxonomy(version, cfg.taxonomy_dir)
    profile = snap.profile if args.total else snap.current
    view = args.view
    if view == "broad":
        report = analytics.broad_shares(profile, tax)
    elif view == "ka":
        report = analytics.ka_coverage(profile, tax, cfg.depth)
    elif view == "gaps":
        report = analytics.gaps(profile, tax, cfg.depth)
    elif view == "composition":
        report = analytics.composition_stats(snap.profile)
    else:
        if not args.ka:
            raise Invalid("tree view needs --ka")
        if not tax.has_ka(args.ka):
            raise Invalid(f"unknown knowledge area {args.ka!r} in CyBOK {tax.version}")
        practiced_at = (args.as_of_date or snap.taken_at) if args.practiced else None
        report = analytics.annotate_tree(snap.profile, tax, args.ka, practiced_at)
    data = report.to_dict()
    data["as_of"] = snap.taken_at.isoformat()
    subject = data.get("subject") or snap.profile.org
    stem_view = f"tree-{args.ka.lower()}" if view == "tree" else view
    stem = render.output_stem(stem_view, subject, snap.taken_at.isoformat())
    out = Outputs()
    out.add(cfg.output_dir / f"{stem}.json", dumps(data))
    out.add(cfg.output_dir / f"{stem}.txt", report.to_text())
    out.commit()
    return EXIT_OK


def cmd_render(args, cfg: Config, as_of: dt.date) -> int:
    path = Path(args.report)
    data = json.loads(path.read_text(encoding="utf-8"))
    kind = data.get("view")
    if kind not in RENDER_VIEW:
        raise Invalid(f"{path}: no visualisation for a {kind!r} report")
    view = RENDER_VIEW[kind]
    if args.view and args.view != view:
        raise Invalid(f"{path}: a {kind!r} report renders as {view}, not {args.view}")
    try:
        spec = render.RenderSpec(
            view,
            title=args.title if args.title is not None else _default_title(view, data),
            width=args.width,
            height=args.height,
            palette=args.palette,
            intro_axis=args.intro_axis,
            prune=not args.no_prune,
        )
    except render.RenderError as exc:
        raise Invalid(str(exc)) from None
    subject = data.get("subject") or "profile"
    stem_view = f"tree-{data['ka'].lower()}" if view == "tree" else view
    stem = render.output_stem(stem_view, subject, data.get("as_of"))
    out = Outputs()
    if view == "spider":
        out.add(cfg.output_dir / f"{stem}.svg", render.render_spider(analytics.BroadCategoryShare.from_dict(data), spec))
    elif view == "histogram":
        out.add(cfg.output_dir / f"{stem}.svg", render.render_histogram(analytics.KACoverage.from_dict(data), spec))
    else:
        tax = load_taxonomy(data["taxonomy_version"], cfg.taxonomy_dir)
        svg, dot = render.render_tree(analytics.TreeAnnotation.from_dict(data), tax, spec)
        out.add(cfg.output_dir / f"{stem}.svg", svg)
        out.add(cfg.output_dir / f"{stem}.dot", dot)
    out.commit()
    return EXIT_OK


def _default_title(view: str, data) -> str:
    subject = data.get("subject") or ""
    if view == "spider":
        return f"CyBOK broad categories: {subject}"
    if view == "histogram":
        return f"CyBOK knowledge areas: {subject}"
    return f"{data['ka']} knowledge tree: {subject}"


def cmd_diff(args, cfg: Config, as_of: dt.date) -> int:
    a, b = read_snapshot(args.a), read_snapshot(args.b)
    result = analytics.diff(a, b)
    stem = render.output_stem("diff", b.profile.org, f"{a.taken_at.isoformat()}-{b.taken_at.isoformat()}")
    out = Outputs()
    out.add(cfg.output_dir / f"{stem}.json", dumps(result.to_dict()))
    out.commit()
    sys.stdout.write(result.to_text())
    return EXIT_OK if result.empty else EXIT_CHANGED


def cmd_taxonomy(args, cfg: Config, as_of: dt.date) -> int:
    if args.check:
        load_taxonomy(cfg.taxonomy_version, args.check)
        print(f"{args.check}: ok")
        return EXIT_OK
    tax = load_taxonomy(cfg.taxonomy_version, cfg.taxonomy_dir)
    if args.ka:
        if not tax.has_ka(args.ka):
            raise Invalid(f"unknown knowledge area {args.ka!r}")
        for node in tax.ka(args.ka).root.walk():
            print(f"{'  ' * (node.level - 1)}{node.label}  [{node.id}]")
        return EXIT_OK
    print(f"CyBOK {tax.version}: {len(tax.kas)} knowledge areas")
    for cat in tax.categories:
        print(f"{cat.name} ({cat.code})")
        for ka in tax.kas_in(cat.code):
            print(f"  {ka.code:<6} {ka.name}")
    if tax.intro is not None:
        print(f"(no category)\n  {tax.intro.code:<6} {tax.intro.name}")
    return EXIT_OK


# --- wiring -------------------------------------------------------------------


def _date_arg(value: str) -> dt.date:
    try:
        return dt.date.fromisoformat(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO-8601 date: {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"TOML config file (default: ${CONFIG_ENV})")
    common.add_argument("--taxonomy-dir", help="directory of cybok-<version>.csv files")
    common.add_argument("--taxonomy-version", help="CyBOK version (default 1.0.0)")
    common.add_argument("--reference", help="mapping reference CSV")
    common.add_argument("--depth", type=int, help="reporting depth (default 2)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--as-of", dest="as_of_date", type=_date_arg, help="point in time, ISO date (default today)")
    common.add_argument("--validity-days", action="append", metavar="KIND=DAYS", help="override a validity window")

    parser = argparse.ArgumentParser(prog="cybok-profile", description="CyBOK workforce knowledge profiles")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("map", parents=[common], help="map a list of concepts")
    p.add_argument("concepts", help="text file, one keyword or phrase per line")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("profile", parents=[common], help="build employee profiles and an org snapshot")
    p.add_argument("records", nargs="+", help="employee record TOML files")
    p.add_argument("--org", action="store_true", help="also write the organisational snapshot")
    p.add_argument("--org-id", default="org", help="identifier for the organisation")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("report", parents=[common], help="derive a report from a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--view", choices=REPORT_VIEWS, required=True)
    p.add_argument("--ka", help="knowledge area code for the tree view")
    p.add_argument("--practiced", action="store_true", help="tree view: add the practiced overlay")
    p.add_argument("--total", action="store_true", help="use full history instead of what is current")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("render", parents=[common], help="draw a report as SVG")
    p.add_argument("report")
    p.add_argument("--view", choices=render.VIEWS)
    p.add_argument("--title")
    p.add_argument("--width", type=float, default=640)
    p.add_argument("--height", type=float, default=480)
    p.add_argument("--palette", default="default", choices=sorted(render.PALETTES))
    p.add_argument("--intro-axis", action="store_true", help="spider: add an Introduction axis")
    p.add_argument("--no-prune", action="store_true", help="tree: keep uncovered nodes below level 2")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("diff", parents=[common], help="compare two snapshots")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("taxonomy", parents=[common], help="inspect or check taxonomy data")
    p.add_argument("--ka", help="print this knowledge area's tree")
    p.add_argument("--check", metavar="FILE", help="validate a taxonomy file and exit")
    p.set_defaults(func=cmd_taxonomy)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    as_of = args.as_of_date or dt.date.today()
    try:
        cfg = _config(args)
        return args.func(args, cfg, as_of)
    except (Invalid, TaxonomyError, MappingFileError, RecordError, VersionMismatch, KeyError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
