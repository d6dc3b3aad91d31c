"""Data model for one team's sprint-tracking record.

Every value here is immutable once built. Local invariants (signs, enum
membership, config ordering) are enforced at construction and raise
``ValueError``; cross-record consistency is checked by
:func:`resolve_references`, which reports problems instead of raising.
"""

from __future__ import annotations

import dataclasses
import datetime as _dt
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Tuple

TASK_KINDS = ("story", "task", "technical_debt")
MEETING_KINDS = ("scrum", "planning")


@dataclass(frozen=True)
class ProjectConfig:
    sprint_count: int = 4
    sprint_length_days: int = 14
    budget_hours_per_person_per_sprint: float = 16.0
    budget_tolerance_hours: float = 1.0
    task_size_cap_hours_per_participant: float = 2.0
    gini_good: float = 0.03
    gini_bad: float = 0.09
    trend_suspect: float = 0.3
    trend_critical: float = 0.5
    mraee_excellent: float = 0.20
    mraee_critical: float = 0.50
    unestimated_critical: float = 0.05
    daily_outlier_hours: float = 10.0
    individual_budget_tolerance_fraction: float = 0.25
    release_sprints: Tuple[int, ...] = (2, 4)
    td_sprints: Tuple[int, ...] = (3, 4)
    demo_failure_tolerance: int = 1
    team_weight: float = 0.8
    individual_weight: float = 0.2
    # Needed only when ingesting ISO-dated records.
    start_date: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "release_sprints", tuple(int(s) for s in self.release_sprints))
        object.__setattr__(self, "td_sprints", tuple(int(s) for s in self.td_sprints))
        if self.sprint_count < 1:
            raise ValueError("sprint_count must be positive")
        if self.sprint_length_days < 1:
            raise ValueError("sprint_length_days must be positive")
        for name in (
            "budget_hours_per_person_per_sprint",
            "task_size_cap_hours_per_participant",
            "daily_outlier_hours",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.budget_tolerance_hours < 0:
            raise ValueError("budget_tolerance_hours must be non-negative")
        if self.demo_failure_tolerance < 0:
            raise ValueError("demo_failure_tolerance must be non-negative")
        for name in (
            "gini_good", "gini_bad", "mraee_excellent", "mraee_critical",
            "unestimated_critical", "individual_budget_tolerance_fraction",
            "team_weight", "individual_weight",
        ):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a fraction in [0, 1]")
        for name in ("trend_suspect", "trend_critical"):
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [-1, 1]")
        if not self.gini_good < self.gini_bad:
            raise ValueError("gini_good must be below gini_bad")
        if not self.trend_suspect < self.trend_critical:
            raise ValueError("trend_suspect must be below trend_critical")
        if not self.mraee_excellent < self.mraee_critical:
            raise ValueError("mraee_excellent must be below mraee_critical")
        if abs(self.team_weight + self.individual_weight - 1.0) > 1e-9:
            raise ValueError("team_weight + individual_weight must equal 1")
        for name in ("release_sprints", "td_sprints"):
            for s in getattr(self, name):
                if not 1 <= s <= self.sprint_count:
                    raise ValueError(f"{name} entry {s} outside 1..{self.sprint_count}")
        if self.start_date is not None:
            _dt.date.fromisoformat(self.start_date)

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "ProjectConfig":
        """Build a config from a partial mapping; absent keys take defaults.

        Unknown keys raise ``KeyError`` so callers can decide how loud to be.
        """
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - names)
        if unknown:
            raise KeyError(", ".join(unknown))
        return cls(**_coerce_config(values))

    def merged(self, overrides: Mapping[str, object]) -> "ProjectConfig":
        return dataclasses.replace(self, **_coerce_config(overrides))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["release_sprints"] = list(self.release_sprints)
        out["td_sprints"] = list(self.td_sprints)
        return out

    @property
    def sprints(self) -> range:
        return range(1, self.sprint_count + 1)


def _coerce_config(values: Mapping[str, object]) -> dict:
    types = {f.name: f.type for f in dataclasses.fields(ProjectConfig)}
    out = {}
    for key, value in values.items():
        kind = types.get(key)
        if kind == "int":
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(f"{key} must be an integer")
            value = int(value)
        elif kind == "float":
            if isinstance(value, bool):
                raise ValueError(f"{key} must be a number")
            value = float(value)
        elif kind == "Tuple[int, ...]":
            value = tuple(int(v) for v in value)
        out[key] = value
    return out


@dataclass(frozen=True)
class Member:
    member_id: str
    display_name: str = ""


@dataclass(frozen=True)
class Task:
    task_id: str
    title: str
    kind: str
    sprint: int
    estimate_hours: Optional[float] = None
    planned_assignees: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in TASK_KINDS:
            raise ValueError(f"kind must be one of {TASK_KINDS}, got {self.kind!r}")
        if self.estimate_hours is not None and not self.estimate_hours >= 0:
            raise ValueError("estimate_hours must be non-negative")
        if self.planned_assignees is not None and self.planned_assignees < 1:
            raise ValueError("planned_assignees must be a positive integer")


@dataclass(frozen=True)
class EffortEntry:
    task_id: str
    member_id: str
    day: int
    hours: float

    def __post_init__(self) -> None:
        if not self.hours > 0:
            raise ValueError("hours must be positive")


@dataclass(frozen=True)
class Meeting:
    meeting_id: str
    kind: str
    sprint: int
    day: int
    duration_minutes: float
    participants: frozenset

    def __post_init__(self) -> None:
        object.__setattr__(self, "participants", frozenset(self.participants))
        if self.kind not in MEETING_KINDS:
            raise ValueError(f"kind must be one of {MEETING_KINDS}, got {self.kind!r}")
        if not self.duration_minutes > 0:
            raise ValueError("duration_minutes must be positive")
        if not self.participants:
            raise ValueError("participants must not be empty")


@dataclass(frozen=True)
class DonenessEvidence:
    sprint: int
    unit_test_evidence: bool
    e2e_test_evidence: bool
    demo_failures: int
    td_tasks_consistent: bool
    docker_image_available: bool

    def __post_init__(self) -> None:
        if self.demo_failures < 0:
            raise ValueError("demo_failures must be non-negative")


@dataclass(frozen=True)
class ManualScores:
    """Instructor-entered judgments; nothing here is computed."""

    review_quality: Tuple[float, ...] = ()
    retrospective_quality: Tuple[float, ...] = ()
    participation: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "review_quality", tuple(float(v) for v in self.review_quality))
        object.__setattr__(
            self, "retrospective_quality", tuple(float(v) for v in self.retrospective_quality)
        )
        object.__setattr__(
            self, "participation", {k: int(v) for k, v in sorted(self.participation.items())}
        )
        for v in self.review_quality + self.retrospective_quality:
            if not 0.0 <= v <= 1.0:
                raise ValueError("quality scores must lie in [0, 1]")
        for k, v in self.participation.items():
            if v < 0:
                raise ValueError(f"participation count for {k} must be non-negative")

    def __hash__(self) -> int:
        return hash((self.review_quality, self.retrospective_quality,
                     tuple(self.participation.items())))


@dataclass(frozen=True)
class CohortDataset:
    team_id: str
    config: ProjectConfig
    members: Tuple[Member, ...]
    tasks: Tuple[Task, ...] = ()
    effort: Tuple[EffortEntry, ...] = ()
    meetings: Tuple[Meeting, ...] = ()
    doneness: Tuple[DonenessEvidence, ...] = ()
    manual: Optional[ManualScores] = None

    def __post_init__(self) -> None:
        for name in ("members", "tasks", "effort", "meetings", "doneness"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.members:
            raise ValueError("a dataset needs at least one member")

    @cached_property
    def task_by_id(self) -> dict:
        return {t.task_id: t for t in self.tasks}

    @cached_property
    def member_ids(self) -> Tuple[str, ...]:
        return tuple(m.member_id for m in self.members)

    def sprint_of(self, entry: EffortEntry) -> Optional[int]:
        task = self.task_by_id.get(entry.task_id)
        return task.sprint if task else None


@dataclass(frozen=True)
class ReferenceIssue:
    """One dangling reference or out-of-range index found in a dataset."""

    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.location}: {self.message}"


def resolve_references(dataset: CohortDataset) -> list:
    """Return every dangling reference and out-of-range day or sprint.

    An empty list means the dataset is internally consistent.
    """
    cfg = dataset.config
    issues = []

    def dupes(kind, ids):
        seen = set()
        for i in ids:
            if i in seen:
                issues.append(ReferenceIssue(kind, f"duplicate id {i!r}"))
            seen.add(i)

    dupes("members", [m.member_id for m in dataset.members])
    dupes("tasks", [t.task_id for t in dataset.tasks])
    dupes("meetings", [m.meeting_id for m in dataset.meetings])

    members = set(dataset.member_ids)
    for t in dataset.tasks:
        if not 1 <= t.sprint <= cfg.sprint_count:
            issues.append(ReferenceIssue(
                f"tasks[{t.task_id}]", f"sprint {t.sprint} outside 1..{cfg.sprint_count}"))
    for i, e in enumerate(dataset.effort):
        loc = f"effort[{i}]"
        if e.task_id not in dataset.task_by_id:
            issues.append(ReferenceIssue(loc, f"unknown task {e.task_id!r}"))
        if e.member_id not in members:
            issues.append(ReferenceIssue(loc, f"unknown member {e.member_id!r}"))
        if not 1 <= e.day <= cfg.sprint_length_days:
            issues.append(ReferenceIssue(
                loc, f"day {e.day} outside 1..{cfg.sprint_length_days}"))
    for m in dataset.meetings:
        loc = f"meetings[{m.meeting_id}]"
        for p in sorted(m.participants - members):
            issues.append(ReferenceIssue(loc, f"unknown member {p!r}"))
        if not 1 <= m.sprint <= cfg.sprint_count:
            issues.append(ReferenceIssue(loc, f"sprint {m.sprint} outside 1..{cfg.sprint_count}"))
        if not 1 <= m.day <= cfg.sprint_length_days:
            issues.append(ReferenceIssue(
                loc, f"day {m.day} outside 1..{cfg.sprint_length_days}"))
    for d in dataset.doneness:
        if not 1 <= d.sprint <= cfg.sprint_count:
            issues.append(ReferenceIssue(
                f"doneness[{d.sprint}]", f"sprint {d.sprint} outside 1..{cfg.sprint_count}"))
    if dataset.manual is not None:
        for k in sorted(set(dataset.manual.participation) - members):
            issues.append(ReferenceIssue("manual.participation", f"unknown member {k!r}"))
    return issues
