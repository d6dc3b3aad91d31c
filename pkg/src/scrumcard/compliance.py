"""Threshold ratings, doneness and member checks, and grade aggregation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple

from . import metrics as m
from .domain import CohortDataset, ManualScores, ProjectConfig

METRIC_IDS = ("budget", "balance", "daily_trend", "task_size", "mraee", "unestimated", "meetings")
IMPROVEMENTS = ("improving", "stable", "worsening", "n/a")


class Level(enum.IntEnum):
    CRITICAL = 0
    WARNING = 1
    ACCEPTABLE = 2
    GOOD = 3
    EXCELLENT = 4

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "Level":
        return cls[text.upper()]


@dataclass(frozen=True)
class Rating:
    level: Level
    rationale: str

    def __str__(self) -> str:
        return self.level.label


@dataclass(frozen=True)
class Rubric:
    """Numeric scoring constants. None of these come from the course itself."""

    level_scores: Mapping[str, float] = field(default_factory=lambda: {
        "excellent": 1.0, "good": 0.9, "acceptable": 0.7, "warning": 0.5, "critical": 0.2,
    })
    improving_bonus: float = 0.05
    daily_outlier_deduction: float = 0.2
    budget_violation_deduction: float = 0.2
    budget_violation_cap: float = 0.4
    never_presented_deduction: float = 0.3
    low_participation_deduction: float = 0.1
    improvement_epsilon_fraction: float = 0.05

    def score(self, level: Level) -> float:
        return self.level_scores[level.label]


DEFAULT_RUBRIC = Rubric()


class ContractViolation(ValueError):
    """Raised when a caller breaks an operation's precondition."""


class IncompleteEvidenceError(ValueError):
    def __init__(self, sprints: Sequence[int]):
        self.sprints = tuple(sprints)
        super().__init__(f"missing doneness evidence for sprints {list(self.sprints)}")


@dataclass(frozen=True)
class MetricPanel:
    metric_id: str
    per_sprint: Tuple[Optional[float], ...]
    overall: Optional[float]
    rating: Rating
    improvement: str
    detail: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class SprintDoneness:
    sprint: int
    testing_ok: bool
    demo_ok: bool
    td_ok: bool
    release_ok: Optional[bool]

    def flags(self) -> list:
        out = [self.testing_ok, self.demo_ok, self.td_ok]
        if self.release_ok is not None:
            out.append(self.release_ok)
        return out


@dataclass(frozen=True)
class DonenessReport:
    per_sprint: Tuple[SprintDoneness, ...]
    overall_ok: bool

    def fraction_ok(self) -> float:
        flags = [f for s in self.per_sprint for f in s.flags()]
        return sum(flags) / len(flags) if flags else 1.0


@dataclass(frozen=True)
class MemberAssessment:
    member_id: str
    flags: Tuple[str, ...]
    score: float
    sprint_hours: Tuple[float, ...] = ()
    max_daily_hours: float = 0.0


@dataclass(frozen=True)
class TeamAssessment:
    team_id: str
    panels: Tuple[MetricPanel, ...]
    doneness: DonenessReport
    member_assessments: Tuple[MemberAssessment, ...]
    sub_scores: Mapping[str, Optional[float]]
    team_score: float
    individual_score: float
    final_grade: float
    warnings: Tuple[str, ...] = ()

    def panel(self, metric_id: str) -> MetricPanel:
        for p in self.panels:
            if p.metric_id == metric_id:
                return p
        raise KeyError(metric_id)


# -- classification ---------------------------------------------------------

def _last(values: Sequence, k: int) -> list:
    return list(values)[-k:]


def _overall(series) -> Optional[float]:
    if isinstance(series, m.SprintSeries):
        return series.overall
    return None if series is None else float(series)


def _pct(x: float) -> str:
    return f"{100 * x:.1f}%"


def classify_budget(per_sprint: Sequence[float], team_size: int, config: ProjectConfig) -> Rating:
    target = team_size * config.budget_hours_per_person_per_sprint
    band = team_size * config.budget_tolerance_hours
    recent = _last(per_sprint, 3)
    devs = [abs(h - target) for h in recent]
    if any(d > 0.25 * target for d in devs):
        return Rating(Level.CRITICAL, f"a recent sprint deviates more than 25% from {target:g} h")
    if all(d <= band for d in devs):
        return Rating(Level.GOOD, f"last {len(recent)} sprints within {target:g} ± {band:g} h")
    return Rating(Level.WARNING, f"a recent sprint lies outside {target:g} ± {band:g} h")


def classify_balance(gini: Optional[float], config: ProjectConfig) -> Rating:
    if gini is None:
        return Rating(Level.ACCEPTABLE, "no effort logged")
    if gini > config.gini_bad:
        return Rating(Level.CRITICAL, f"Gini {_pct(gini)} above {_pct(config.gini_bad)}")
    if gini > config.gini_good:
        return Rating(Level.ACCEPTABLE, f"Gini {_pct(gini)} above {_pct(config.gini_good)}")
    return Rating(Level.GOOD, f"Gini {_pct(gini)} within {_pct(config.gini_good)}")


def _trend_level(r: float, config: ProjectConfig) -> Level:
    if r > config.trend_critical:
        return Level.CRITICAL
    if r > config.trend_suspect:
        return Level.WARNING
    return Level.GOOD


def classify_daily_trend(r_values: Sequence[float], config: ProjectConfig) -> Rating:
    recent = [r for r in _last(r_values, 3) if r is not None]
    if not recent:
        return Rating(Level.GOOD, "no daily effort")
    worst = max(recent)
    level = min(_trend_level(r, config) for r in recent)
    if level == Level.CRITICAL:
        why = f"r = {worst:.2f} above {config.trend_critical:g}"
    elif level == Level.WARNING:
        why = f"r = {worst:.2f} above {config.trend_suspect:g}"
    else:
        why = f"every recent r at most {config.trend_suspect:g}"
    return Rating(level, why)


def classify_task_size(q3: Optional[float], config: ProjectConfig) -> Rating:
    cap = config.task_size_cap_hours_per_participant
    if q3 is None:
        return Rating(Level.ACCEPTABLE, "no estimated tasks")
    if q3 <= cap:
        return Rating(Level.GOOD, f"three quarters of estimated tasks at most {cap:g} h")
    if q3 <= 1.5 * cap:
        return Rating(Level.WARNING, f"upper quartile {q3:.2f} h above {cap:g} h")
    return Rating(Level.CRITICAL, f"upper quartile {q3:.2f} h above {1.5 * cap:g} h")


def classify_mraee(series: m.SprintSeries, config: ProjectConfig) -> Rating:
    overall = series.overall
    if overall is None:
        return Rating(Level.ACCEPTABLE, "no task with both estimate and effort")
    recent = [v for v in _last(series.per_sprint, 2) if v is not None]
    if overall > config.mraee_critical:
        return Rating(Level.CRITICAL, f"overall {_pct(overall)} above {_pct(config.mraee_critical)}")
    if any(v > config.mraee_critical for v in recent):
        return Rating(Level.CRITICAL, f"a recent sprint above {_pct(config.mraee_critical)}")
    if overall <= config.mraee_excellent:
        return Rating(Level.EXCELLENT, f"overall {_pct(overall)} within {_pct(config.mraee_excellent)}")
    return Rating(Level.ACCEPTABLE, f"overall {_pct(overall)}")


def classify_unestimated(fraction: Optional[float], config: ProjectConfig) -> Rating:
    if fraction is None:
        return Rating(Level.ACCEPTABLE, "no active tasks")
    if fraction > config.unestimated_critical:
        return Rating(Level.CRITICAL, f"{_pct(fraction)} of active tasks unestimated")
    if fraction > 0:
        return Rating(Level.ACCEPTABLE, f"{_pct(fraction)} of active tasks unestimated")
    return Rating(Level.GOOD, "all active tasks estimated")


def classify_meetings(scrum: m.MeetingStats, planning: m.MeetingStats,
                      config: ProjectConfig) -> Rating:
    missing_scrum = [i + 1 for i, s in enumerate(scrum.per_sprint) if s.count == 0]
    if missing_scrum:
        return Rating(Level.CRITICAL, f"no tracked scrum meeting in sprint(s) {missing_scrum}")
    missing_planning = [i + 1 for i, s in enumerate(planning.per_sprint) if s.count == 0]
    if missing_planning:
        return Rating(Level.WARNING, f"no tracked planning meeting in sprint(s) {missing_planning}")
    absences = (scrum.total_absences, planning.total_absences)
    if max(absences) == 0:
        return Rating(Level.GOOD, "every meeting tracked with full attendance")
    if max(absences) <= 1:
        return Rating(Level.ACCEPTABLE, "at most one absence per meeting kind")
    return Rating(Level.WARNING, f"{absences[0]} scrum and {absences[1]} planning absences")


def classify(metric_id: str, series, config: ProjectConfig, *, team_size: Optional[int] = None) -> Rating:
    """Rate one metric against the configured thresholds.

    ``series`` is whatever the metric is judged on: per-sprint team hours for
    ``budget`` (with ``team_size``), the Gini fraction for ``balance``, the
    per-sprint r values for ``daily_trend``, the estimated upper quartile for
    ``task_size``, a :class:`SprintSeries` for ``mraee``, the pooled fraction
    for ``unestimated`` and a ``(scrum, planning)`` pair of
    :class:`MeetingStats` for ``meetings``. SprintSeries and BoxplotStats are
    also accepted where a scalar is expected.
    """
    if metric_id == "budget":
        if team_size is None:
            raise ContractViolation("budget classification needs team_size")
        values = series.per_sprint if isinstance(series, m.SprintSeries) else series
        return classify_budget(values, team_size, config)
    if metric_id == "balance":
        return classify_balance(_overall(series), config)
    if metric_id == "daily_trend":
        values = series.per_sprint if isinstance(series, m.SprintSeries) else series
        return classify_daily_trend(values, config)
    if metric_id == "task_size":
        q3 = series.q3 if isinstance(series, m.BoxplotStats) else _overall(series)
        return classify_task_size(q3, config)
    if metric_id == "mraee":
        if not isinstance(series, m.SprintSeries):
            series = m.SprintSeries((), float(series))
        return classify_mraee(series, config)
    if metric_id == "unestimated":
        return classify_unestimated(_overall(series), config)
    if metric_id == "meetings":
        scrum, planning = series
        return classify_meetings(scrum, planning, config)
    raise ContractViolation(f"unknown metric_id {metric_id!r}")


def least_squares_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    return math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx


def improvement(values: Sequence[Optional[float]], rubric: Rubric = DEFAULT_RUBRIC) -> str:
    """Trend label for a lower-is-better per-sprint series."""
    points = [(i + 1, v) for i, v in enumerate(values) if v is not None]
    if len(points) < 2:
        return "n/a"
    xs, ys = zip(*points)
    slope = least_squares_slope(xs, ys)
    eps = rubric.improvement_epsilon_fraction * abs(math.fsum(ys) / len(ys)) or 1e-9
    if slope < -eps:
        return "improving"
    if slope > eps:
        return "worsening"
    return "stable"


# -- doneness and members ---------------------------------------------------

def check_doneness(dataset: CohortDataset) -> DonenessReport:
    cfg = dataset.config
    by_sprint = {d.sprint: d for d in dataset.doneness}
    missing = [s for s in cfg.sprints if s not in by_sprint]
    if missing:
        raise IncompleteEvidenceError(missing)
    worked = {dataset.task_by_id[e.task_id] for e in dataset.effort if e.task_id in dataset.task_by_id}
    td_sprints = {t.sprint for t in worked if t.kind == "technical_debt"}
    failures = 0
    rows = []
    for s in cfg.sprints:
        ev = by_sprint[s]
        failures += ev.demo_failures
        td_ok = ev.td_tasks_consistent and (s not in cfg.td_sprints or s in td_sprints)
        rows.append(SprintDoneness(
            sprint=s,
            testing_ok=ev.unit_test_evidence and ev.e2e_test_evidence,
            demo_ok=failures <= cfg.demo_failure_tolerance,
            td_ok=td_ok,
            release_ok=ev.docker_image_available if s in cfg.release_sprints else None,
        ))
    return DonenessReport(tuple(rows), all(all(r.flags()) for r in rows))


def assess_member(dataset: CohortDataset, member_id: str,
                  manual: Optional[ManualScores] = None,
                  rubric: Rubric = DEFAULT_RUBRIC) -> MemberAssessment:
    cfg = dataset.config
    days = m.member_daily_effort(dataset, member_id)
    sprint_hours = tuple(math.fsum(d.hours_by_day) for d in days)
    peak = max((h for d in days for h in d.hours_by_day), default=0.0)
    budget = cfg.budget_hours_per_person_per_sprint
    frac = cfg.individual_budget_tolerance_fraction
    lo, hi = budget * (1 - frac), budget * (1 + frac)
    violations = sum(1 for h in sprint_hours if not lo <= h <= hi)

    flags = []
    deduction = 0.0
    if peak > cfg.daily_outlier_hours:
        flags.append("daily_outlier")
        deduction += rubric.daily_outlier_deduction
    if violations:
        flags.append("sprint_budget_violation")
        deduction += min(rubric.budget_violation_cap, rubric.budget_violation_deduction * violations)
    if manual is not None:
        count = manual.participation.get(member_id, 0)
        if count < cfg.sprint_count:
            flags.append("low_participation")
            deduction += rubric.low_participation_deduction
        if count == 0:
            flags.append("never_presented")
            deduction += rubric.never_presented_deduction
    return MemberAssessment(member_id, tuple(flags), max(0.0, 1.0 - deduction),
                            sprint_hours, peak)


# -- panels and aggregation -------------------------------------------------

def _budget_panel(ds, cfg, rubric):
    series = m.team_sprint_effort(ds)
    n = len(ds.members)
    target = n * cfg.budget_hours_per_person_per_sprint
    band = n * cfg.budget_tolerance_hours
    devs = [abs(h - target) for h in series.per_sprint]
    return MetricPanel(
        "budget", series.per_sprint, series.overall,
        classify_budget(series.per_sprint, n, cfg), improvement(devs, rubric),
        {"target_hours": target, "band_low": target - band, "band_high": target + band},
    )


def _balance_panel(ds, cfg, rubric, warnings):
    matrix = m.member_sprint_effort(ds)
    totals = matrix.row_totals()
    if not any(totals):
        warnings.append("no effort logged: Gini index reported as 0")
    gini = m.gini_imbalance(totals)
    per = tuple(m.gini_imbalance(col) if any(col) else None for col in zip(*matrix.cells))
    return MetricPanel(
        "balance", per, gini, classify_balance(gini, cfg), improvement(per, rubric),
        {
            "gini": gini,
            "member_totals": dict(zip(matrix.member_ids, totals)),
            "member_sprint_hours": {mid: list(row) for mid, row in zip(matrix.member_ids, matrix.cells)},
            "collaboration_groups": m.collaboration_groups(ds),
        },
    )


def _daily_panel(ds, cfg, rubric):
    series = [m.daily_effort(ds, s) for s in cfg.sprints]
    rs = tuple(d.trend_r for d in series)
    return MetricPanel(
        "daily_trend", rs, math.fsum(rs) / len(rs), classify_daily_trend(rs, cfg),
        improvement(rs, rubric),
        {
            "hours_by_day": [list(d.hours_by_day) for d in series],
            "flat_sprints": [d.sprint for d in series if d.flat],
        },
    )


def _task_size_panel(ds, cfg, rubric):
    est = [m.normalized_task_sizes(ds, s, "estimated") for s in cfg.sprints]
    act = [m.normalized_task_sizes(ds, s, "actual") for s in cfg.sprints]
    pooled_est = m.boxplot_stats([x for s in cfg.sprints for x in m.normalized_sizes(ds, s, "estimated")])
    pooled_act = m.boxplot_stats([x for s in cfg.sprints for x in m.normalized_sizes(ds, s, "actual")])
    per = tuple(b.q3 for b in est)
    return MetricPanel(
        "task_size", per, pooled_est.q3, classify_task_size(pooled_est.q3, cfg),
        improvement(per, rubric),
        {
            "cap_hours": cfg.task_size_cap_hours_per_participant,
            "actual_q3": pooled_act.q3,
            "estimated": [b.to_dict() for b in est],
            "actual": [b.to_dict() for b in act],
        },
    )


def _mraee_panel(ds, cfg, rubric):
    series = m.mraee(ds)
    return MetricPanel("mraee", series.per_sprint, series.overall,
                       classify_mraee(series, cfg), improvement(series.per_sprint, rubric))


def _unestimated_panel(ds, cfg, rubric):
    series = m.unestimated_active_fraction(ds)
    counts = m.unestimated_counts(ds)
    return MetricPanel(
        "unestimated", series.per_sprint, series.overall,
        classify_unestimated(series.overall, cfg), improvement(series.per_sprint, rubric),
        {"unestimated": [u for u, _ in counts], "active": [a for _, a in counts]},
    )


def _meeting_dict(stats: m.MeetingStats) -> list:
    return [
        {
            "count": s.count, "mean_duration_minutes": s.mean_duration_minutes,
            "full_attendance": s.full_attendance, "total_absences": s.total_absences,
            "mean_participants": s.mean_participants,
        }
        for s in stats.per_sprint
    ]


def _meetings_panel(ds, cfg, rubric):
    scrum = m.meeting_stats(ds, "scrum")
    planning = m.meeting_stats(ds, "planning")
    per = tuple(
        float(a.total_absences + b.total_absences)
        for a, b in zip(scrum.per_sprint, planning.per_sprint)
    )
    return MetricPanel(
        "meetings", per, math.fsum(per), classify_meetings(scrum, planning, cfg),
        improvement(per, rubric),
        {"team_size": len(ds.members), "scrum": _meeting_dict(scrum),
         "planning": _meeting_dict(planning)},
    )


def build_panels(dataset: CohortDataset, rubric: Rubric = DEFAULT_RUBRIC,
                 warnings: Optional[list] = None) -> Tuple[MetricPanel, ...]:
    cfg = dataset.config
    warnings = [] if warnings is None else warnings
    return (
        _budget_panel(dataset, cfg, rubric),
        _balance_panel(dataset, cfg, rubric, warnings),
        _daily_panel(dataset, cfg, rubric),
        _task_size_panel(dataset, cfg, rubric),
        _mraee_panel(dataset, cfg, rubric),
        _unestimated_panel(dataset, cfg, rubric),
        _meetings_panel(dataset, cfg, rubric),
    )


def coordination_score(panels: Sequence[MetricPanel], rubric: Rubric = DEFAULT_RUBRIC) -> float:
    base = math.fsum(rubric.score(p.rating.level) for p in panels) / len(panels)
    bonus = rubric.improving_bonus * sum(p.improvement == "improving" for p in panels)
    return min(1.0, base + bonus)


def quality_score(manual: Optional[ManualScores]) -> Optional[float]:
    if manual is None:
        return None
    values = manual.review_quality + manual.retrospective_quality
    return math.fsum(values) / len(values) if values else None


def aggregate(panels: Sequence[MetricPanel], doneness: DonenessReport,
              members: Sequence[MemberAssessment], manual: Optional[ManualScores],
              config: ProjectConfig, *, team_id: str = "",
              rubric: Rubric = DEFAULT_RUBRIC, warnings: Sequence[str] = ()) -> TeamAssessment:
    ids = [p.metric_id for p in panels]
    if len(set(ids)) != len(ids):
        raise ContractViolation("metric ids must be unique per assessment")
    if not members:
        raise ContractViolation("at least one member assessment is required")
    subs = {
        "coordination": coordination_score(panels, rubric),
        "quality": quality_score(manual),
        "doneness": doneness.fraction_ok(),
    }
    present = [v for v in subs.values() if v is not None]
    team_score = math.fsum(present) / len(present)
    individual = math.fsum(a.score for a in members) / len(members)
    final = config.team_weight * team_score + config.individual_weight * individual
    return TeamAssessment(
        team_id=team_id, panels=tuple(panels), doneness=doneness,
        member_assessments=tuple(members), sub_scores=subs, team_score=team_score,
        individual_score=individual, final_grade=final, warnings=tuple(warnings),
    )


def assess(dataset: CohortDataset, rubric: Rubric = DEFAULT_RUBRIC) -> TeamAssessment:
    """Run the whole quantitative assessment for one team."""
    warnings = []
    panels = build_panels(dataset, rubric, warnings)
    doneness = check_doneness(dataset)
    members = [assess_member(dataset, mid, dataset.manual, rubric) for mid in dataset.member_ids]
    return aggregate(panels, doneness, members, dataset.manual, dataset.config,
                     team_id=dataset.team_id, rubric=rubric, warnings=warnings)
