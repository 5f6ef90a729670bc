"""SVG and DOT output for the three report views.

Documents are built as plain text with fixed-precision coordinates, no
timestamps and no generated ids, so the same report always renders to the
same bytes.
"""

from __future__ import annotations

import math
import textwrap
from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

from .analytics import INTRO_BUCKET, BroadCategoryShare, KACoverage, TreeAnnotation
from .taxonomy import Taxonomy, slugify

VIEWS = ("spider", "histogram", "tree")

# rough advance width of one character, as a fraction of the font size
CHAR_EM = 0.55

PALETTES = {
    "default": {
        "ink": "#222222",
        "grid": "#c8c8c8",
        "fill": "#2c7fb8",
        "fill_opacity": "0.35",
        "bar": "#2c7fb8",
        "practiced": "#1b5e20",
        "total": "#1b5e20",
        "dim": "#b0b0b0",
    },
    "mono": {
        "ink": "#000000",
        "grid": "#bbbbbb",
        "fill": "#555555",
        "fill_opacity": "0.35",
        "bar": "#555555",
        "practiced": "#000000",
        "total": "#000000",
        "dim": "#aaaaaa",
    },
}


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class RenderSpec:
    view: str
    title: str = ""
    width: float = 640
    height: float = 480
    palette: str = "default"
    intro_axis: bool = False  # spider only
    prune: bool = True  # tree only: hide uncovered nodes below level 2

    def __post_init__(self):
        if self.view not in VIEWS:
            raise RenderError(f"unknown view {self.view!r}")
        if not (self.width > 0 and self.height > 0):
            raise RenderError("dimensions must be positive")
        if self.palette not in PALETTES:
            raise RenderError(f"unknown palette {self.palette!r}")

    @property
    def colors(self) -> dict[str, str]:
        return PALETTES[self.palette]


def fmt(v: float) -> str:
    s = f"{v:.5f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _attrs(**kw) -> str:
    return " ".join(f"{k.rstrip('_').replace('_', '-')}={quoteattr(str(v))}" for k, v in kw.items() if v is not None)


def _open(width: float, height: float, view_w: float | None = None, view_h: float | None = None) -> list[str]:
    vb = f"0 0 {fmt(view_w or width)} {fmt(view_h or height)}"
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" {_attrs(width=fmt(width), height=fmt(height), viewBox=vb)}>',
    ]


def _title(lines: list[str], spec: RenderSpec, x: float) -> None:
    if spec.title:
        lines.append(
            f'  <text {_attrs(class_="title", x=fmt(x), y="24", text_anchor="middle", font_size="16", fill=spec.colors["ink"])}>'
            f"{escape(spec.title)}</text>"
        )


# --- spider ---------------------------------------------------------------------


def spider_geometry(n: int, spec: RenderSpec) -> tuple[float, float, float, list[float]]:
    cx = spec.width / 2
    cy = spec.height / 2 + 14
    # side labels need more room than the ones above and below
    radius = min(spec.width / 2 - 140, spec.height / 2 - 80)
    if radius < 20:
        raise RenderError("canvas too small for a spider chart")
    angles = [-math.pi / 2 + 2 * math.pi * i / n for i in range(n)]
    return cx, cy, radius, angles


def render_spider(share: BroadCategoryShare, spec: RenderSpec) -> str:
    """Radar chart of category shares on a 0-100 % scale, one axis per category."""
    if spec.view != "spider":
        raise RenderError(f"spec is for {spec.view!r}, not spider")
    axes = [(code, name, share.shares[code]) for code, name in share.names.items()]
    if spec.intro_axis:
        axes.append(("INTRO", INTRO_BUCKET, share.unattributed))
    if len(axes) < 3:
        raise RenderError("a spider chart needs at least 3 axes")
    c = spec.colors
    cx, cy, radius, angles = spider_geometry(len(axes), spec)

    def point(angle: float, r: float) -> tuple[float, float]:
        return cx + r * math.cos(angle), cy + r * math.sin(angle)

    lines = _open(spec.width, spec.height)
    _title(lines, spec, cx)
    for level in (25, 50, 75, 100):
        ring = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in (point(a, radius * level / 100) for a in angles))
        lines.append(f'  <polygon {_attrs(class_="grid", points=ring, fill="none", stroke=c["grid"], stroke_width="1")}/>')
    for (code, name, value), a in zip(axes, angles):
        x, y = point(a, radius)
        lines.append(
            f'  <line {_attrs(class_="axis", data_axis=code, x1=fmt(cx), y1=fmt(cy), x2=fmt(x), y2=fmt(y), stroke=c["grid"])}/>'
        )
        lx, ly = point(a, radius + 14)
        anchor = "middle" if abs(math.cos(a)) < 0.2 else ("start" if math.cos(a) > 0 else "end")
        wrapped = textwrap.wrap(f"{name} ({value:.2f}%)", 40 if anchor == "middle" else 20)
        # grow away from the chart: upwards above it, centred beside it
        shift = len(wrapped) - 1 if math.sin(a) < -0.5 else (0 if math.sin(a) > 0.5 else (len(wrapped) - 1) / 2)
        y0 = ly + 4 - shift * 13
        spans = "".join(
            f"<tspan {_attrs(x=fmt(lx), y=fmt(y0 + 13 * i))}>{escape(part)}</tspan>" for i, part in enumerate(wrapped)
        )
        lines.append(
            f'  <text {_attrs(class_="axis-label", data_axis=code, text_anchor=anchor, font_size="11", fill=c["ink"])}>{spans}</text>'
        )
    verts = [point(a, radius * value / 100) for (_, _, value), a in zip(axes, angles)]
    pts = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in verts)
    lines.append(
        f'  <polygon {_attrs(class_="profile", points=pts, fill=c["fill"], fill_opacity=c["fill_opacity"], stroke=c["fill"], stroke_width="2")}/>'
    )
    for (code, _, _), (x, y) in zip(axes, verts):
        lines.append(f'  <circle {_attrs(class_="vertex", data_axis=code, cx=fmt(x), cy=fmt(y), r="3", fill=c["fill"])}/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# --- histogram ------------------------------------------------------------------


def _tick_step(top: int) -> int:
    step = 1
    while top / step > 10:
        for mult in (2, 5, 10):
            if top / (step * mult) <= 10:
                return step * mult
        step *= 10
    return step


def render_histogram(cov: KACoverage, spec: RenderSpec) -> str:
    """One bar per KA in table order; the y axis runs from 0 to the largest count."""
    if spec.view != "histogram":
        raise RenderError(f"spec is for {spec.view!r}, not histogram")
    c = spec.colors
    entries = cov.entries
    # bar labels run up-left at 60 degrees from under each bar
    extents = [len(e.name) * 10 * CHAR_EM for e in entries]
    right, top = 20.0, 40.0
    bottom = 24 + max(extents, default=0) * math.sin(math.pi / 3)
    left = 50.0
    for _ in range(2):
        slot = (spec.width - left - right) / max(len(entries), 1)
        overhang = max((w * 0.5 - (i + 0.5) * slot for i, w in enumerate(extents)), default=0)
        left = max(50.0, overhang + 8)
    plot_w = spec.width - left - right
    plot_h = spec.height - top - bottom
    if plot_w <= 0 or plot_h < 40:
        raise RenderError("canvas too small for a histogram")
    peak = max((e.count for e in entries), default=0)
    base_y = top + plot_h
    slot = plot_w / max(len(entries), 1)

    lines = _open(spec.width, spec.height)
    _title(lines, spec, spec.width / 2)
    lines.append(
        f'  <line {_attrs(class_="baseline", x1=fmt(left), y1=fmt(base_y), x2=fmt(left + plot_w), y2=fmt(base_y), stroke=c["ink"])}/>'
    )
    lines.append(f'  <line {_attrs(class_="yaxis", x1=fmt(left), y1=fmt(top), x2=fmt(left), y2=fmt(base_y), stroke=c["ink"])}/>')
    if peak > 0:
        step = _tick_step(peak)
        ticks = list(range(0, peak + 1, step))
        if ticks[-1] != peak:
            ticks.append(peak)
        for v in ticks:
            y = base_y - plot_h * v / peak
            lines.append(
                f'  <line {_attrs(class_="tick", data_value=v, x1=fmt(left - 4), y1=fmt(y), x2=fmt(left + plot_w), y2=fmt(y), stroke=c["grid"], stroke_width="0.5")}/>'
            )
            lines.append(
                f'  <text {_attrs(class_="tick-label", x=fmt(left - 6), y=fmt(y + 4), text_anchor="end", font_size="10", fill=c["ink"])}>{v}</text>'
            )
    for i, e in enumerate(entries):
        h = plot_h * e.count / peak if peak else 0.0
        x = left + i * slot + slot * 0.15
        lines.append(
            f'  <rect {_attrs(class_="bar", data_ka=e.code, x=fmt(x), y=fmt(base_y - h), width=fmt(slot * 0.7), height=fmt(h), fill=c["bar"])}/>'
        )
        lx = left + (i + 0.5) * slot
        ly = base_y + 10
        lines.append(
            f'  <text {_attrs(class_="bar-label", x=fmt(lx), y=fmt(ly), text_anchor="end", font_size="10", fill=c["ink"], transform=f"rotate(-60 {fmt(lx)} {fmt(ly)})")}>'
            f"{escape(e.name)}</text>"
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# --- tree -----------------------------------------------------------------------


def _visible(ann: TreeAnnotation, tax: Taxonomy, spec: RenderSpec):
    area = tax.ka(ann.ka)
    unknown = set(ann.nodes) - {n.id for n in area.root.walk()}
    if unknown:
        raise RenderError(f"annotation names nodes not in {ann.ka}: {sorted(unknown)}")
    if area.root.id not in ann.nodes:
        raise RenderError(f"annotation has no entry for the {ann.ka} root")

    def keep(node) -> bool:
        flags = ann.nodes.get(node.id)
        covered = flags is not None and flags.covered_total
        return covered or not spec.prune or node.level <= 2

    return area, keep


def _layout(root, keep) -> tuple[dict[str, tuple[float, float]], list[tuple[str, str]]]:
    """Left-to-right layered layout: x from level, y from leaf order."""
    pos: dict[str, tuple[float, float]] = {}
    edges: list[tuple[str, str]] = []
    row = [0]

    def place(node) -> float:
        kids = [k for k in node.children if keep(k)]
        if kids:
            ys = [place(k) for k in kids]
            edges.extend((node.id, k.id) for k in kids)
            y = (ys[0] + ys[-1]) / 2
        else:
            y = float(row[0])
            row[0] += 1
        pos[node.id] = (float(node.level - 1), y)
        return y

    place(root)
    return pos, edges


def _node_style(flags, c: dict[str, str]) -> tuple[str, dict[str, str]]:
    if flags is not None and flags.covered_practiced:
        return "practiced", {"fill": c["practiced"], "stroke": c["practiced"], "stroke_width": "2"}
    if flags is not None and flags.covered_total:
        return "total", {"fill": "#ffffff", "stroke": c["total"], "stroke_width": "2.5"}
    return "uncovered", {"fill": "#ffffff", "stroke": c["dim"], "stroke_width": "1", "stroke_dasharray": "3 2"}


def render_tree(ann: TreeAnnotation, tax: Taxonomy, spec: RenderSpec) -> tuple[str, str]:
    """Return ``(svg, dot)`` for an annotated KA tree.

    Practiced nodes are filled, covered-but-not-practiced nodes are outlined
    only, and uncovered nodes are drawn dashed and dimmed.
    """
    if spec.view != "tree":
        raise RenderError(f"spec is for {spec.view!r}, not tree")
    area, keep = _visible(ann, tax, spec)
    pos, edges = _layout(area.root, keep)
    c = spec.colors
    col_w, row_h, box_w, box_h, margin = 230.0, 26.0, 210.0, 20.0, 20.0
    top = 40.0 if spec.title else margin
    levels = max(x for x, _ in pos.values()) + 1
    rows = max(y for _, y in pos.values()) + 1
    view_w = margin * 2 + levels * col_w
    view_h = top + margin + rows * row_h

    def anchor(node_id: str) -> tuple[float, float]:
        x, y = pos[node_id]
        return margin + x * col_w, top + y * row_h

    lines = _open(spec.width, spec.height, view_w, view_h)
    _title(lines, spec, view_w / 2)
    for parent, child in edges:
        px, py = anchor(parent)
        qx, qy = anchor(child)
        lines.append(
            f'  <line {_attrs(class_="edge", x1=fmt(px + box_w), y1=fmt(py + box_h / 2), x2=fmt(qx), y2=fmt(qy + box_h / 2), stroke=c["grid"])}/>'
        )
    nodes = {n.id: n for n in area.root.walk()}
    for node_id in (n.id for n in area.root.walk() if n.id in pos):
        x, y = anchor(node_id)
        flags = ann.nodes.get(node_id)
        state, style = _node_style(flags, c)
        lines.append(
            f'  <rect {_attrs(class_=f"node {state}", data_id=node_id, x=fmt(x), y=fmt(y), width=fmt(box_w), height=fmt(box_h), rx="4", **style)}/>'
        )
        ink = "#ffffff" if state == "practiced" else (c["dim"] if state == "uncovered" else c["ink"])
        label = nodes[node_id].label
        if len(label) > 34:
            label = label[:33] + "…"
        lines.append(
            f'  <text {_attrs(class_="node-label", x=fmt(x + 6), y=fmt(y + 14), font_size="10", fill=ink)}>{escape(label)}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n", _dot(ann, area, pos, edges, c)


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _dot(ann: TreeAnnotation, area, pos, edges, c) -> str:
    out = [f"digraph {_dot_quote(area.code)} {{", "  rankdir=LR;", '  node [shape=box, fontname="Helvetica", fontsize=10];']
    for node in area.root.walk():
        if node.id not in pos:
            continue
        state, _ = _node_style(ann.nodes.get(node.id), c)
        if state == "practiced":
            attrs = f'style="filled,bold", fillcolor="{c["practiced"]}", fontcolor="#ffffff"'
        elif state == "total":
            attrs = f'style="bold", color="{c["total"]}", penwidth=2.5'
        else:
            attrs = f'style="dashed", color="{c["dim"]}", fontcolor="{c["dim"]}"'
        out.append(f"  {_dot_quote(node.id)} [label={_dot_quote(node.label)}, class={_dot_quote(state)}, {attrs}];")
    for parent, child in edges:
        out.append(f"  {_dot_quote(parent)} -> {_dot_quote(child)};")
    out.append("}")
    return "\n".join(out) + "\n"


def output_stem(view: str, subject: str, as_of: str | None) -> str:
    return f"{view}-{slugify(subject) or 'profile'}-{as_of or 'undated'}"
