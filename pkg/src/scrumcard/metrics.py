"""Quantitative team and member metrics computed from a validated dataset."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .domain import CohortDataset


@dataclass(frozen=True)
class SprintSeries:
    per_sprint: Tuple[Optional[float], ...]
    overall: Optional[float]

    def defined(self) -> list:
        return [v for v in self.per_sprint if v is not None]


@dataclass(frozen=True)
class DailyEffortSeries:
    sprint: int
    hours_by_day: Tuple[float, ...]
    trend_r: float
    flat: bool = False


@dataclass(frozen=True)
class BoxplotStats:
    n: int
    min: Optional[float] = None
    q1: Optional[float] = None
    median: Optional[float] = None
    q3: Optional[float] = None
    max: Optional[float] = None
    whisker_low: Optional[float] = None
    whisker_high: Optional[float] = None
    outliers: Tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "n": self.n, "min": self.min, "q1": self.q1, "median": self.median,
            "q3": self.q3, "max": self.max, "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high, "outliers": list(self.outliers),
        }


@dataclass(frozen=True)
class MeetingSprintStats:
    count: int
    mean_duration_minutes: Optional[float]
    full_attendance: bool
    total_absences: int
    mean_participants: Optional[float]


@dataclass(frozen=True)
class MeetingStats:
    kind: str
    per_sprint: Tuple[MeetingSprintStats, ...]

    @property
    def total_absences(self) -> int:
        return sum(s.total_absences for s in self.per_sprint)


@dataclass(frozen=True)
class EffortMatrix:
    """Hours per member (rows) and sprint (columns)."""

    member_ids: Tuple[str, ...]
    cells: Tuple[Tuple[float, ...], ...]

    def row(self, member_id: str) -> Tuple[float, ...]:
        return self.cells[self.member_ids.index(member_id)]

    def row_totals(self) -> list:
        return [math.fsum(r) for r in self.cells]

    def column_totals(self) -> list:
        if not self.cells:
            return []
        return [math.fsum(col) for col in zip(*self.cells)]


def _mean(values: Sequence[float]) -> Optional[float]:
    return math.fsum(values) / len(values) if values else None


def team_sprint_effort(dataset: CohortDataset) -> SprintSeries:
    cfg = dataset.config
    buckets = defaultdict(list)
    for e in dataset.effort:
        buckets[dataset.sprint_of(e)].append(e.hours)
    per = tuple(math.fsum(buckets[s]) for s in cfg.sprints)
    return SprintSeries(per, _mean(per))


def member_sprint_effort(dataset: CohortDataset) -> EffortMatrix:
    buckets = defaultdict(list)
    for e in dataset.effort:
        buckets[e.member_id, dataset.sprint_of(e)].append(e.hours)
    cells = tuple(
        tuple(math.fsum(buckets[m, s]) for s in dataset.config.sprints)
        for m in dataset.member_ids
    )
    return EffortMatrix(dataset.member_ids, cells)


def gini_imbalance(totals: Sequence[float]) -> float:
    """Gini index of non-negative totals as a fraction.

    Mean-absolute-difference form. All-zero input returns 0.0; the caller is
    responsible for flagging that as a data-quality problem.
    """
    xs = sorted(float(x) for x in totals)
    if not xs:
        raise ValueError("gini_imbalance needs at least one value")
    if xs[0] < 0:
        raise ValueError("gini_imbalance needs non-negative values")
    n = len(xs)
    total = math.fsum(xs)
    if total == 0:
        return 0.0
    # Sorted form of sum_i sum_j |x_i - x_j| = 2 * sum_i (2i - n + 1) x_i.
    weighted = math.fsum((2 * i - n + 1) * x for i, x in enumerate(xs))
    return max(0.0, min(1.0, weighted / (n * total)))


def pearson_r(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation; 0.0 when either side has zero variance."""
    n = len(xs)
    if n != len(ys):
        raise ValueError("series lengths differ")
    if n < 2 or min(xs) == max(xs) or min(ys) == max(ys):
        return 0.0
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    denom = math.sqrt(sxx) * math.sqrt(syy)
    if denom == 0.0:
        return 0.0
    r = math.fsum(a * b for a, b in zip(dx, dy)) / denom
    return max(-1.0, min(1.0, r))


def _daily(dataset: CohortDataset, sprint: int, member_id: Optional[str]) -> DailyEffortSeries:
    length = dataset.config.sprint_length_days
    buckets = [[] for _ in range(length)]
    for e in dataset.effort:
        if member_id is not None and e.member_id != member_id:
            continue
        if dataset.sprint_of(e) == sprint:
            buckets[e.day - 1].append(e.hours)
    hours = tuple(math.fsum(b) for b in buckets)
    flat = len(set(hours)) <= 1
    r = 0.0 if flat else pearson_r(range(1, length + 1), hours)
    return DailyEffortSeries(sprint, hours, r, flat)


def daily_effort(dataset: CohortDataset, sprint: int) -> DailyEffortSeries:
    return _daily(dataset, sprint, None)


def member_daily_effort(dataset: CohortDataset, member_id: str) -> list:
    if member_id not in dataset.member_ids:
        raise LookupError(f"unknown member {member_id!r}")
    return [_daily(dataset, s, member_id) for s in dataset.config.sprints]


def quantile(sorted_values: Sequence[float], p: float) -> float:
    """Linear interpolation at position (n - 1) * p of sorted data."""
    n = len(sorted_values)
    pos = (n - 1) * p
    lo = math.floor(pos)
    hi = min(lo + 1, n - 1)
    frac = pos - lo
    return sorted_values[lo] + (sorted_values[hi] - sorted_values[lo]) * frac


def boxplot_stats(values: Sequence[float], whis: float = 1.5) -> BoxplotStats:
    xs = sorted(float(v) for v in values)
    if not xs:
        return BoxplotStats(n=0)
    q1, med, q3 = (quantile(xs, p) for p in (0.25, 0.5, 0.75))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - whis * iqr, q3 + whis * iqr
    inside = [x for x in xs if lo_fence <= x <= hi_fence]
    return BoxplotStats(
        n=len(xs), min=xs[0], q1=q1, median=med, q3=q3, max=xs[-1],
        whisker_low=inside[0], whisker_high=inside[-1],
        outliers=tuple(x for x in xs if x < lo_fence or x > hi_fence),
    )


def _task_actuals(dataset: CohortDataset) -> Tuple[dict, dict]:
    hours = defaultdict(list)
    people = defaultdict(set)
    for e in dataset.effort:
        hours[e.task_id].append(e.hours)
        people[e.task_id].add(e.member_id)
    return {k: math.fsum(v) for k, v in hours.items()}, people


def normalized_sizes(dataset: CohortDataset, sprint: int, which: str) -> list:
    if which not in ("estimated", "actual"):
        raise ValueError("which must be 'estimated' or 'actual'")
    actual, people = _task_actuals(dataset)
    sizes = []
    for t in dataset.tasks:
        if t.sprint != sprint:
            continue
        if which == "estimated":
            if t.estimate_hours is None:
                continue
            amount = t.estimate_hours
        else:
            if t.task_id not in actual:
                continue
            amount = actual[t.task_id]
        divisor = t.planned_assignees or len(people.get(t.task_id, ())) or 1
        sizes.append(amount / divisor)
    return sizes


def normalized_task_sizes(dataset: CohortDataset, sprint: int, which: str) -> BoxplotStats:
    return boxplot_stats(normalized_sizes(dataset, sprint, which))


def mraee(dataset: CohortDataset) -> SprintSeries:
    """Mean absolute relative estimation error per sprint.

    Only tasks with a positive estimate and some logged effort count. The
    overall value is the mean of the defined sprint values.
    """
    actual, _ = _task_actuals(dataset)
    errors = defaultdict(list)
    for t in dataset.tasks:
        est = t.estimate_hours
        got = actual.get(t.task_id, 0.0)
        if est and got > 0:
            errors[t.sprint].append(abs(got - est) / est)
    per = tuple(_mean(errors[s]) for s in dataset.config.sprints)
    return SprintSeries(per, _mean([v for v in per if v is not None]))


def unestimated_counts(dataset: CohortDataset) -> list:
    """(unestimated active, active) task counts per sprint."""
    actual, _ = _task_actuals(dataset)
    counts = {s: [0, 0] for s in dataset.config.sprints}
    for t in dataset.tasks:
        if t.task_id in actual and t.sprint in counts:
            counts[t.sprint][1] += 1
            if t.estimate_hours is None:
                counts[t.sprint][0] += 1
    return [tuple(counts[s]) for s in dataset.config.sprints]


def unestimated_active_fraction(dataset: CohortDataset) -> SprintSeries:
    counts = unestimated_counts(dataset)
    per = tuple(u / a if a else None for u, a in counts)
    active = sum(a for _, a in counts)
    overall = sum(u for u, _ in counts) / active if active else None
    return SprintSeries(per, overall)


def meeting_stats(dataset: CohortDataset, kind: str) -> MeetingStats:
    team = set(dataset.member_ids)
    per = []
    for s in dataset.config.sprints:
        ms = [m for m in dataset.meetings if m.kind == kind and m.sprint == s]
        absences = [len(team - m.participants) for m in ms]
        per.append(MeetingSprintStats(
            count=len(ms),
            mean_duration_minutes=_mean([m.duration_minutes for m in ms]),
            full_attendance=not any(absences),
            total_absences=sum(absences),
            mean_participants=_mean([len(m.participants & team) for m in ms]),
        ))
    return MeetingStats(kind, tuple(per))


def collaboration_groups(dataset: CohortDataset) -> list:
    """Members partitioned by shared tasks (connected components).

    Members who never log effort on a task that someone else also logged
    stay in singleton groups.
    """
    parent = {m: m for m in dataset.member_ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    by_task = defaultdict(set)
    for e in dataset.effort:
        if e.member_id in parent:
            by_task[e.task_id].add(e.member_id)
    for people in by_task.values():
        first, *rest = sorted(people)
        for p in rest:
            parent[find(p)] = find(first)
    groups = defaultdict(list)
    for m in dataset.member_ids:
        groups[find(m)].append(m)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])
