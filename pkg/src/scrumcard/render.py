"""Team assessment card (self-contained SVG) and plain-text summary."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

from . import metrics as m
from .compliance import Level, MetricPanel, TeamAssessment
from .domain import CohortDataset

BADGE_COLORS = {
    Level.EXCELLENT: "#2e7d32", Level.GOOD: "#2e7d32",
    Level.ACCEPTABLE: "#f9a825", Level.WARNING: "#f9a825",
    Level.CRITICAL: "#c62828",
}
SERIES_COLOR = "#1f77b4"
OVERALL_COLOR = "#ff7f0e"
BAND_COLOR = "#a5d6a7"

PANEL_TITLES = {
    "daily": "Team daily effort",
    "sprint": "Team sprint effort",
    "estimated": "Estimated normalized task size",
    "heatmap": "Individual sprint effort",
    "actual": "Actual normalized task size",
    "member_daily": "Individual daily effort",
    "mraee": "Mean absolute relative estimation error",
    "unestimated": "Active tasks without estimation",
    "scrum": "Tracked meetings",
    "planning": "Tracked planning meetings",
}
# (left column, right column), top to bottom
GRID = (
    ("daily", "sprint"),
    ("estimated", "heatmap"),
    ("actual", "member_daily"),
    ("mraee", "unestimated"),
    ("scrum", "planning"),
)
BADGE_FOR = {
    "daily": "daily_trend", "sprint": "budget", "estimated": "task_size",
    "heatmap": "balance", "mraee": "mraee", "unestimated": "unestimated", "scrum": "meetings",
}

SUMMARY_NAMES = {
    "budget": "budget", "balance": "balance", "daily_trend": "daily trend",
    "task_size": "task size", "mraee": "MRAEE", "unestimated": "unestimated",
    "meetings": "meeting absences",
}


@dataclass(frozen=True)
class CardLayout:
    width_px: int = 1400
    height_px: int = 1000
    margin: int = 20
    header: int = 50

    def __post_init__(self) -> None:
        if self.width_px < 400 or self.height_px < 400:
            raise ValueError("card must be at least 400x400 px")

    def panel_boxes(self) -> dict:
        rows = len(GRID)
        w = (self.width_px - 3 * self.margin) / 2
        h = (self.height_px - self.header - (rows + 1) * self.margin) / rows
        boxes = {}
        for r, pair in enumerate(GRID):
            for c, key in enumerate(pair):
                x = self.margin + c * (w + self.margin)
                y = self.header + self.margin + r * (h + self.margin)
                boxes[key] = (x, y, w, h)
        return boxes


def _n(x: float) -> str:
    text = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if text == "-0" else text


def hours_label(x: float) -> str:
    return f"{x:.1f}"


def pct_label(x: float) -> str:
    return f"{100 * x:.1f}%"


class _Svg:
    def __init__(self) -> None:
        self.parts: List[str] = []

    def el(self, tag: str, text: Optional[str] = None, **attrs) -> None:
        rendered = " ".join(
            f"{k.rstrip('_').replace('_', '-')}={quoteattr(_n(v) if isinstance(v, float) else str(v))}"
            for k, v in attrs.items() if v is not None
        )
        if text is None:
            self.parts.append(f"<{tag} {rendered}/>")
        else:
            self.parts.append(f"<{tag} {rendered}>{escape(text)}</{tag}>")

    def open(self, tag: str, **attrs) -> None:
        rendered = " ".join(f"{k.rstrip('_').replace('_', '-')}={quoteattr(str(v))}"
                            for k, v in attrs.items())
        self.parts.append(f"<{tag} {rendered}>")

    def close(self, tag: str) -> None:
        self.parts.append(f"</{tag}>")

    def text(self, x, y, s, size=11, anchor="start", **attrs) -> None:
        self.el("text", s, x=float(x), y=float(y), font_size=size, text_anchor=anchor, **attrs)


class _Plot:
    """Plot area of one panel with a linear value axis."""

    def __init__(self, svg: _Svg, box, top_value: float):
        x, y, w, h = box
        self.svg = svg
        self.x0, self.y0 = x + 50, y + 32
        self.w, self.h = w - 70, h - 52
        self.top = top_value if top_value > 0 else 1.0

    def y(self, value: float) -> float:
        clamped = max(0.0, min(value, self.top))
        return self.y0 + self.h - clamped / self.top * self.h

    def slot(self, i: int, count: int) -> tuple:
        width = self.w / max(count, 1)
        return self.x0 + i * width, width

    def axes(self, unit: str = "", fmt=None) -> None:
        s = self.svg
        s.el("line", x1=float(self.x0), y1=float(self.y0), x2=float(self.x0),
             y2=float(self.y0 + self.h), stroke="#555")
        s.el("line", x1=float(self.x0), y1=float(self.y0 + self.h), x2=float(self.x0 + self.w),
             y2=float(self.y0 + self.h), stroke="#555")
        top = fmt(self.top) if fmt else f"{_n(self.top)}{unit}"
        s.text(self.x0 - 4, self.y0 + 4, top, size=9, anchor="end")
        s.text(self.x0 - 4, self.y0 + self.h, "0", size=9, anchor="end")

    def sprint_ticks(self, count: int) -> None:
        for i in range(count):
            sx, sw = self.slot(i, count)
            self.svg.text(sx + sw / 2, self.y0 + self.h + 12, f"S{i + 1}", size=9, anchor="middle")


def _no_data(svg: _Svg, box, panel: str) -> None:
    x, y, w, h = box
    svg.text(x + w / 2, y + h / 2 + 5, "no data", size=16, anchor="middle",
             class_="no-data", data_panel=panel, fill="#888")


def _frame(svg: _Svg, box, key: str, panel: Optional[MetricPanel], extra: str = "") -> None:
    x, y, w, h = box
    svg.open("g", id=f"panel-{key}", class_="panel")
    svg.el("rect", x=float(x), y=float(y), width=float(w), height=float(h), fill="#ffffff",
           stroke="#bbbbbb", rx=6)
    svg.text(x + 10, y + 18, PANEL_TITLES[key] + extra, size=13, font_weight="bold",
             class_="panel-title")
    if panel is not None:
        color = BADGE_COLORS[panel.rating.level]
        svg.el("rect", x=float(x + w - 100), y=float(y + 5), width=90.0, height=18.0, rx=9,
               fill=color, class_="badge", data_metric=panel.metric_id,
               data_rating=panel.rating.level.label)
        svg.text(x + w - 55, y + 18, panel.rating.level.label, size=11, anchor="middle",
                 fill="#ffffff")


def _bars(svg: _Svg, plot: _Plot, values: Sequence[Optional[float]], label, css: str) -> None:
    count = len(values)
    for i, v in enumerate(values):
        sx, sw = plot.slot(i, count)
        if v is None:
            svg.text(sx + sw / 2, plot.y0 + plot.h - 4, "n/a", size=9, anchor="middle", fill="#888")
            continue
        top = plot.y(v)
        svg.el("rect", x=float(sx + sw * 0.2), y=float(top), width=float(sw * 0.6),
               height=float(plot.y0 + plot.h - top), fill=SERIES_COLOR, class_=css,
               data_sprint=i + 1, data_value=repr(v))
        svg.text(sx + sw / 2, top - 3, label(v), size=10, anchor="middle", class_="value-label")
    plot.sprint_ticks(count)


def _daily_panel(svg, box, a, ds):
    panel = a.panel("daily_trend")
    _frame(svg, box, "daily", panel)
    days = panel.detail["hours_by_day"]
    flat = [h for sprint in days for h in sprint]
    if not any(flat):
        _no_data(svg, box, "daily")
        return
    plot = _Plot(svg, box, max(flat) * 1.15)
    plot.axes(" h")
    total = len(flat)
    step = plot.w / max(total - 1, 1)
    offset = 0
    for s, sprint in enumerate(days):
        pts = " ".join(f"{_n(plot.x0 + (offset + d) * step)},{_n(plot.y(h))}"
                       for d, h in enumerate(sprint))
        svg.el("polyline", points=pts, fill="none", stroke=SERIES_COLOR, stroke_width=1.5,
               class_="daily-line", data_sprint=s + 1)
        mid = plot.x0 + (offset + len(sprint) / 2) * step
        r = panel.per_sprint[s]
        svg.text(mid, plot.y0 - 4, f"S{s + 1} r = {r:.2f}", size=10, anchor="middle",
                 class_="trend-label")
        offset += len(sprint)
        if s < len(days) - 1:
            sep = plot.x0 + (offset - 0.5) * step
            svg.el("line", x1=float(sep), y1=float(plot.y0), x2=float(sep),
                   y2=float(plot.y0 + plot.h), stroke="#dddddd")


def _sprint_panel(svg, box, a, ds):
    panel = a.panel("budget")
    lo, hi = panel.detail["band_low"], panel.detail["band_high"]
    _frame(svg, box, "sprint", panel, f"  (budget {hours_label(lo)}-{hours_label(hi)} h)")
    values = panel.per_sprint
    plot = _Plot(svg, box, max(max(values, default=0.0), hi) * 1.15)
    plot.axes(" h")
    svg.el("rect", x=float(plot.x0), y=float(plot.y(hi)), width=float(plot.w),
           height=float(plot.y(lo) - plot.y(hi)), fill=BAND_COLOR, fill_opacity=0.6,
           class_="budget-band", data_low=repr(lo), data_high=repr(hi))
    if not any(values):
        _no_data(svg, box, "sprint")
        return
    _bars(svg, plot, values, hours_label, "bar sprint-effort")


def _boxplot_panel(svg, box, a, key):
    panel = a.panel("task_size")
    _frame(svg, box, key, panel if key == "estimated" else None)
    stats = panel.detail[key]
    cap = panel.detail["cap_hours"]
    present = [s for s in stats if s["n"]]
    if not present:
        _no_data(svg, box, key)
        return
    plot = _Plot(svg, box, max(max(s["max"] for s in present), cap) * 1.15)
    plot.axes(" h")
    count = len(stats)
    for i, s in enumerate(stats):
        sx, sw = plot.slot(i, count)
        cx = sx + sw / 2
        if not s["n"]:
            svg.text(cx, plot.y0 + plot.h / 2, "no data", size=9, anchor="middle", fill="#888")
            continue
        svg.el("line", x1=float(cx), y1=float(plot.y(s["whisker_low"])), x2=float(cx),
               y2=float(plot.y(s["whisker_high"])), stroke="#333")
        svg.el("rect", x=float(cx - sw * 0.2), y=float(plot.y(s["q3"])), width=float(sw * 0.4),
               height=float(max(plot.y(s["q1"]) - plot.y(s["q3"]), 0.5)), fill="#bbdefb",
               stroke="#333", class_="box", data_sprint=i + 1, data_q3=repr(s["q3"]))
        svg.el("line", x1=float(cx - sw * 0.2), y1=float(plot.y(s["median"])),
               x2=float(cx + sw * 0.2), y2=float(plot.y(s["median"])), stroke="#333",
               stroke_width=2)
        for o in s["outliers"]:
            svg.el("circle", cx=float(cx), cy=float(plot.y(o)), r=2.5, fill="none", stroke="#333")
        svg.text(cx + sw * 0.22, plot.y(s["q3"]) + 3, hours_label(s["q3"]), size=9)
    plot.sprint_ticks(count)
    svg.el("line", x1=float(plot.x0), y1=float(plot.y(cap)), x2=float(plot.x0 + plot.w),
           y2=float(plot.y(cap)), stroke="#c62828", stroke_dasharray="6,3",
           class_="reference-line", data_value=repr(cap))
    svg.text(plot.x0 + plot.w, plot.y(cap) - 3, f"{hours_label(cap)} h", size=9, anchor="end",
             fill="#c62828")


def _shade(value: float, top: float) -> str:
    frac = max(0.0, min(value / top, 1.0)) if top > 0 else 0.0
    # white to dark blue
    r = round(255 + (13 - 255) * frac)
    g = round(255 + (71 - 255) * frac)
    b = round(255 + (161 - 255) * frac)
    return f"#{r:02x}{g:02x}{b:02x}"


def _heatmap_panel(svg, box, a, ds):
    panel = a.panel("balance")
    _frame(svg, box, "heatmap", panel, f"  (Gini {pct_label(panel.overall)})")
    rows = panel.detail["member_sprint_hours"]
    x, y, w, h = box
    top = 1.5 * ds.config.budget_hours_per_person_per_sprint
    x0, y0 = x + 90, y + 30
    cols = ds.config.sprint_count
    cw = (w - 110) / cols
    ch = min(18.0, (h - 40) / max(len(rows), 1))
    for j in range(cols):
        svg.text(x0 + j * cw + cw / 2, y0 - 2, f"S{j + 1}", size=9, anchor="middle")
    for i, (mid, hours) in enumerate(rows.items()):
        cy = y0 + 2 + i * ch
        svg.text(x0 - 6, cy + ch * 0.7, mid, size=9, anchor="end")
        for j, v in enumerate(hours):
            svg.el("rect", x=float(x0 + j * cw), y=float(cy), width=float(cw - 1),
                   height=float(ch - 1), fill=_shade(v, top), class_="heat-cell",
                   data_member=mid, data_sprint=j + 1, data_value=repr(v))
            svg.text(x0 + j * cw + cw / 2, cy + ch * 0.72, hours_label(v), size=9,
                     anchor="middle", fill="#ffffff" if v > top / 2 else "#000000")


def _member_daily_panel(svg, box, a, ds):
    _frame(svg, box, "member_daily", None)
    x, y, w, h = box
    limit = ds.config.daily_outlier_hours
    series = {mid: m.member_daily_effort(ds, mid) for mid in ds.member_ids}
    if not any(any(d.hours_by_day) for sprints in series.values() for d in sprints):
        _no_data(svg, box, "member_daily")
        return
    days = ds.config.sprint_count * ds.config.sprint_length_days
    x0, y0 = x + 90, y + 30
    cw = (w - 110) / days
    ch = min(18.0, (h - 40) / max(len(series), 1))
    for i, (mid, sprints) in enumerate(series.items()):
        cy = y0 + i * ch
        svg.text(x0 - 6, cy + ch * 0.7, mid, size=9, anchor="end")
        flat = [hrs for d in sprints for hrs in d.hours_by_day]
        for j, v in enumerate(flat):
            outlier = v > limit
            svg.el("rect", x=float(x0 + j * cw), y=float(cy), width=float(max(cw - 0.5, 0.5)),
                   height=float(ch - 1), fill=_shade(v, limit),
                   stroke="#c62828" if outlier else None,
                   class_="day-cell outlier" if outlier else "day-cell")
    svg.text(x + w - 10, y + h - 6, f"outlier above {hours_label(limit)} h/day", size=9,
             anchor="end", fill="#c62828")


def _fraction_panel(svg, box, a, key, metric_id, overall_line):
    panel = a.panel(metric_id)
    _frame(svg, box, key, panel)
    values = panel.per_sprint
    defined = [v for v in values if v is not None]
    if not defined:
        _no_data(svg, box, key)
        return
    top = max(defined + [panel.overall or 0.0])
    plot = _Plot(svg, box, (top if top > 0 else 0.1) * 1.2)
    plot.axes(fmt=pct_label)
    _bars(svg, plot, values, pct_label, f"bar {metric_id}")
    if overall_line and panel.overall is not None:
        yy = plot.y(panel.overall)
        svg.el("line", x1=float(plot.x0), y1=float(yy), x2=float(plot.x0 + plot.w), y2=float(yy),
               stroke=OVERALL_COLOR, stroke_width=2, class_="overall-line",
               data_value=repr(panel.overall))
        svg.text(plot.x0 + plot.w, yy - 3, f"overall {pct_label(panel.overall)}", size=9,
                 anchor="end", fill=OVERALL_COLOR)


def _meeting_panel(svg, box, a, key):
    panel = a.panel("meetings")
    _frame(svg, box, key, panel if key == "scrum" else None)
    stats = panel.detail[key]
    team = panel.detail["team_size"]
    if not any(s["count"] for s in stats):
        _no_data(svg, box, key)
        return
    durations = [s["mean_duration_minutes"] for s in stats]
    plot = _Plot(svg, box, max(d for d in durations if d is not None) * 1.3)
    plot.axes(" min")
    count = len(stats)
    for i, s in enumerate(stats):
        sx, sw = plot.slot(i, count)
        if not s["count"]:
            svg.text(sx + sw / 2, plot.y0 + plot.h - 4, "none", size=9, anchor="middle",
                     fill="#c62828")
            continue
        top = plot.y(s["mean_duration_minutes"])
        svg.el("rect", x=float(sx + sw * 0.25), y=float(top), width=float(sw * 0.5),
               height=float(plot.y0 + plot.h - top), fill=SERIES_COLOR, class_=f"bar {key}-meeting",
               data_sprint=i + 1, data_value=repr(s["mean_duration_minutes"]))
        svg.text(sx + sw / 2, top - 3,
                 f"{s['mean_duration_minutes']:.1f} min x{s['count']}, "
                 f"{s['mean_participants']:.1f}/{team} ppl", size=9, anchor="middle")
    plot.sprint_ticks(count)


def render_card(assessment: TeamAssessment, dataset: CohortDataset,
                layout: CardLayout = CardLayout()) -> bytes:
    svg = _Svg()
    w, h = layout.width_px, layout.height_px
    svg.parts.append('<?xml version="1.0" encoding="UTF-8"?>')
    svg.open("svg", xmlns="http://www.w3.org/2000/svg", version="1.1", width=w, height=h,
             viewBox=f"0 0 {w} {h}", font_family="Helvetica, Arial, sans-serif")
    svg.el("rect", x=0.0, y=0.0, width=float(w), height=float(h), fill="#f5f5f5")
    svg.text(layout.margin, 32, f"Team assessment card: {assessment.team_id}", size=20,
             font_weight="bold")
    boxes = layout.panel_boxes()
    _daily_panel(svg, boxes["daily"], assessment, dataset)
    svg.close("g")
    _sprint_panel(svg, boxes["sprint"], assessment, dataset)
    svg.close("g")
    _boxplot_panel(svg, boxes["estimated"], assessment, "estimated")
    svg.close("g")
    _heatmap_panel(svg, boxes["heatmap"], assessment, dataset)
    svg.close("g")
    _boxplot_panel(svg, boxes["actual"], assessment, "actual")
    svg.close("g")
    _member_daily_panel(svg, boxes["member_daily"], assessment, dataset)
    svg.close("g")
    _fraction_panel(svg, boxes["mraee"], assessment, "mraee", "mraee", True)
    svg.close("g")
    _fraction_panel(svg, boxes["unestimated"], assessment, "unestimated", "unestimated", False)
    svg.close("g")
    _meeting_panel(svg, boxes["scrum"], assessment, "scrum")
    svg.close("g")
    _meeting_panel(svg, boxes["planning"], assessment, "planning")
    svg.close("g")
    svg.close("svg")
    return ("\n".join(svg.parts) + "\n").encode("utf-8")


# -- text summary -----------------------------------------------------------

def _fmt_value(metric_id: str, v: Optional[float]) -> str:
    if v is None:
        return "n/a"
    if metric_id in ("balance", "mraee", "unestimated"):
        return pct_label(v)
    if metric_id in ("budget", "task_size"):
        return f"{hours_label(v)} h"
    if metric_id == "meetings":
        return f"{v:g}"
    return f"{v:.2f}"


def summary_lines(assessment: TeamAssessment) -> List[str]:
    lines = []
    for p in assessment.panels:
        per = ", ".join(_fmt_value(p.metric_id, v) for v in p.per_sprint)
        lines.append(f"{SUMMARY_NAMES.get(p.metric_id, p.metric_id)}: "
                     f"{_fmt_value(p.metric_id, p.overall)} "
                     f"(per sprint: {per}; {p.improvement}) — {p.rating.level.label}")
    for ma in assessment.member_assessments:
        flags = ", ".join(ma.flags) if ma.flags else "none"
        lines.append(f"member {ma.member_id}: score {ma.score:.2f}, flags: {flags}")
    d = assessment.doneness
    parts = []
    for s in d.per_sprint:
        failed = [name for name, ok in (("testing", s.testing_ok), ("demo", s.demo_ok),
                                        ("td", s.td_ok), ("release", s.release_ok))
                  if ok is False]
        parts.append(f"S{s.sprint} " + ("ok" if not failed else "failed " + "+".join(failed)))
    lines.append(f"doneness: {'ok' if d.overall_ok else 'not ok'} ({'; '.join(parts)})")
    lines.append(f"final_grade: {assessment.final_grade:.4f} "
                 f"(team {assessment.team_score:.4f}, individual {assessment.individual_score:.4f})")
    return lines


def render_summary(assessment: TeamAssessment) -> str:
    return "\n".join(summary_lines(assessment)) + "\n"
