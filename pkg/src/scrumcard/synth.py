"""Seeded synthetic team datasets, compliant or with one planted pathology.

Violations are placed structurally instead of rejection-sampled, so each
scenario hits its target for every seed. Scenarios touch only their target
criterion, with these couplings:

* ``slacker``: the other members absorb the missing hours so the team
  budget stays on target, which pushes their individual sprint totals up.
  Individual assessments may flag budget violations for small teams.
* ``bulk_backfill``: the end-of-sprint pile-up only moves hours between
  days, but members' peak daily hours rise accordingly.
* ``subteam_split`` and ``overcommit`` target doneness, which has no
  rating of its own; their effort data is compliant.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .domain import (
    CohortDataset, DonenessEvidence, EffortEntry, ManualScores, Meeting, Member,
    ProjectConfig, Task,
)

SCENARIOS: Dict[str, Tuple[Optional[str], str]] = {
    "compliant": (None, "every criterion rated good or better"),
    "bulk_backfill": ("daily_trend", "at least 60% of each sprint's hours logged in the last "
                                     "3 days (r > 0.5)"),
    "slacker": ("balance", "one member logs under 40% of the others' mean "
                           "(Gini > 0.09 for teams of up to 5)"),
    "subteam_split": ("doneness", "two member groups never share a task; "
                                  "demo failures exceed the tolerance"),
    "ramp_up": ("daily_trend", "daily effort rises linearly through the sprint "
                               "(0.3 < r <= 0.5)"),
    "unestimated_heavy": ("unestimated", "more than 5% of active tasks have no estimate"),
    "overcommit": ("doneness", "no testing evidence in sprints 1-2 despite compliant effort"),
}

_NAMES = ("Alice", "Bruno", "Chiara", "Dmitri", "Elif", "Farid", "Giulia", "Hugo",
          "Ines", "Jonas", "Keiko", "Luca")
_VERBS = ("Implement", "Refactor", "Test", "Design", "Fix", "Document", "Review", "Deploy")
_NOUNS = ("login form", "thesis search", "proposal API", "notification service",
          "admin dashboard", "database schema", "booking flow", "docker setup",
          "E2E suite", "user profile")

CENTI = 100  # all hours are built in integer hundredths


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: str
    team_size: int = 5
    seed: int = 1
    config: ProjectConfig = field(default_factory=ProjectConfig)

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise SpecError(f"unknown scenario {self.scenario!r}; "
                            f"expected one of {', '.join(SCENARIOS)}")
        if self.team_size < 2:
            raise SpecError("team_size must be at least 2")
        if not -(2 ** 63) <= self.seed < 2 ** 64:
            raise SpecError("seed must fit in 64 bits")


def target_of(scenario: str) -> Tuple[Optional[str], str]:
    return SCENARIOS[scenario]


def _split_centi(total: int, weights: List[float]) -> List[int]:
    """Largest-remainder split of an integer total by weights."""
    wsum = math.fsum(weights)
    raw = [total * w / wsum for w in weights]
    parts = [int(math.floor(r)) for r in raw]
    short = total - sum(parts)
    order = sorted(range(len(raw)), key=lambda i: (parts[i] - raw[i], i))
    for i in order[:short]:
        parts[i] += 1
    return parts


def _working_days(length: int) -> List[int]:
    days = [d for d in range(1, length + 1) if (d - 1) % 7 < 5]
    return days or list(range(1, length + 1))


def _cov_with_day(weights: List[float]) -> float:
    n = len(weights)
    md = (n + 1) / 2
    mw = math.fsum(weights) / n
    return math.fsum((d + 1 - md) * (w - mw) for d, w in enumerate(weights))


def _spread_profile(rng: random.Random, length: int) -> List[float]:
    """Random working-day weights whose covariance with the day index is <= 0."""
    days = _working_days(length)
    k = rng.randint(max(1, len(days) - 3), len(days))
    chosen = set(rng.sample(days, k))
    w = [rng.uniform(0.6, 1.4) if d in chosen else 0.0 for d in range(1, length + 1)]
    if _cov_with_day(w) > 0:
        w.reverse()
    return w


def _backfill_profile(rng: random.Random, length: int) -> List[float]:
    tail = min(3, length)
    head_days = [d for d in _working_days(length) if d <= length - tail] or [1]
    k = rng.randint(max(1, len(head_days) - 2), len(head_days))
    head = set(rng.sample(head_days, k))
    tail_mass = rng.uniform(0.7, 0.8)
    w = [0.0] * length
    head_w = [rng.uniform(0.8, 1.2) for _ in head]
    for d, x in zip(sorted(head), head_w):
        w[d - 1] = (1 - tail_mass) * x / math.fsum(head_w)
    tail_w = [rng.uniform(0.8, 1.2) for _ in range(tail)]
    for i, x in enumerate(tail_w):
        w[length - tail + i] = tail_mass * x / math.fsum(tail_w)
    if length <= tail:
        return [x + 1e-3 * (i + 1) for i, x in enumerate(w)]
    return w


def _ramp_profile(rng: random.Random, length: int) -> List[float]:
    """Positive daily weights with Pearson r against the day index in (0.36, 0.44)."""
    target = rng.uniform(0.36, 0.44)
    days = list(range(1, length + 1))
    md = (length + 1) / 2
    lin = [d - md for d in days]
    var_d = math.fsum(x * x for x in lin) / length
    z = [rng.uniform(-1, 1) for _ in days]
    mz = math.fsum(z) / length
    z = [v - mz for v in z]
    beta_z = math.fsum(a * b for a, b in zip(z, lin)) / math.fsum(x * x for x in lin)
    z = [v - beta_z * x for v, x in zip(z, lin)]
    var_z = math.fsum(v * v for v in z) / length
    scale = math.sqrt(var_d * (1 / target ** 2 - 1) / var_z) if var_z > 0 else 0.0
    w = [x + scale * v for x, v in zip(lin, z)]
    lo, hi = min(w), max(w)
    return [x - lo + 0.25 * (hi - lo) for x in w]


class _Builder:
    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.cfg = spec.config
        self.rng = random.Random(spec.seed)
        n = spec.team_size
        self.members = [
            Member(f"m{i + 1}", _NAMES[i % len(_NAMES)] + ("" if i < len(_NAMES) else f" {i + 1}"))
            for i in range(n)
        ]
        self.tasks: List[Task] = []
        self.effort: List[EffortEntry] = []
        self.meetings: List[Meeting] = []
        self.slacker = self.rng.randrange(n) if spec.scenario == "slacker" else None

    # -- effort -------------------------------------------------------------

    def member_totals(self) -> List[int]:
        budget = self.cfg.budget_hours_per_person_per_sprint
        tol = self.cfg.budget_tolerance_hours
        n = self.spec.team_size
        totals = [budget + self.rng.uniform(-0.4, 0.4) * tol for _ in range(n)]
        if self.slacker is not None:
            low = budget * self.rng.uniform(0.2, 0.3)
            share = (totals[self.slacker] - low) / (n - 1)
            totals = [low if i == self.slacker else t + share for i, t in enumerate(totals)]
        return [int(round(t * CENTI)) for t in totals]

    def profile(self) -> List[float]:
        length = self.cfg.sprint_length_days
        if self.spec.scenario == "bulk_backfill":
            return _backfill_profile(self.rng, length)
        return _spread_profile(self.rng, length)

    def member_pieces(self, total: int, weights: List[float]) -> List[List[Tuple[int, int]]]:
        """Cut a member's daily hours into tasks: lists of (day, centi-hours)."""
        per_day = _split_centi(total, weights)
        tasks: List[List[Tuple[int, int]]] = []
        current: List[Tuple[int, int]] = []
        room = self.rng.randint(120, 190)
        for day, amount in enumerate(per_day, start=1):
            while amount > 0:
                take = min(amount, room)
                current.append((day, take))
                amount -= take
                room -= take
                if room == 0:
                    tasks.append(current)
                    current = []
                    room = self.rng.randint(120, 190)
        if current:
            if tasks and sum(c for _, c in current) < 50:
                tasks[-1].extend(current)
            else:
                tasks.append(current)
        return tasks

    def pairs(self) -> List[Tuple[int, int]]:
        n = self.spec.team_size
        if self.spec.scenario == "subteam_split":
            half = (n + 1) // 2
            groups = [list(range(half)), list(range(half, n))]
        else:
            groups = [list(range(n))]
        out = []
        for g in groups:
            if len(g) == 2:
                out.append((g[0], g[1]))
            elif len(g) > 2:
                out.extend((g[i], g[(i + 1) % len(g)]) for i in range(len(g)))
        return out

    def estimate(self, centi: int) -> float:
        ratio = self.rng.uniform(0.85, 1.15)
        return max(0.05, round(centi / CENTI / ratio * 20) / 20)

    def build_sprint(self, sprint: int) -> None:
        scenario = self.spec.scenario
        totals = self.member_totals()
        if scenario == "ramp_up":
            shared = _ramp_profile(self.rng, self.cfg.sprint_length_days)
            profiles = [shared] * len(totals)
        else:
            profiles = [self.profile() for _ in totals]
        pieces = {i: self.member_pieces(t, p) for i, (t, p) in enumerate(zip(totals, profiles))}

        # (owners, [(member index, day, centi)])
        units: List[Tuple[Tuple[int, ...], List[Tuple[int, int, int]]]] = []
        free = {i: list(range(len(p))) for i, p in pieces.items()}
        for i in free:
            self.rng.shuffle(free[i])
        for a, b in self.pairs():
            if not free[a] or not free[b]:
                continue
            pa, pb = pieces[a][free[a].pop()], pieces[b][free[b].pop()]
            units.append(((a, b), [(a, d, c) for d, c in pa] + [(b, d, c) for d, c in pb]))
        for i in sorted(free):
            for k in sorted(free[i]):
                units.append(((i,), [(i, d, c) for d, c in pieces[i][k]]))

        td_index = 0 if sprint in self.cfg.td_sprints else None
        solo = [u for u, (owners, _) in enumerate(units) if len(owners) == 1]
        if td_index is not None and solo:
            td_index = self.rng.choice(solo)
        unestimated = set()
        if scenario == "unestimated_heavy":
            count = max(2, math.ceil(0.2 * len(units)))
            unestimated = set(self.rng.sample(range(len(units)), min(count, len(units))))

        for u, (owners, entries) in enumerate(units):
            task_id = f"S{sprint}-T{u + 1:02d}"
            kind = "story" if len(owners) > 1 else "task"
            if u == td_index:
                kind = "technical_debt"
            actual = sum(c for _, _, c in entries)
            title = f"{self.rng.choice(_VERBS)} {self.rng.choice(_NOUNS)}"
            est = None if u in unestimated else self.estimate(actual)
            self.tasks.append(Task(task_id, title, kind, sprint, est,
                                   len(owners)))
            for member, day, centi in sorted(entries, key=lambda e: (e[0], e[1])):
                self.effort.append(EffortEntry(task_id, self.members[member].member_id,
                                               day, centi / CENTI))

    # -- meetings, doneness, manual -----------------------------------------

    def build_meetings(self, sprint: int) -> None:
        everyone = frozenset(m.member_id for m in self.members)
        self.meetings.append(Meeting(f"S{sprint}-P1", "planning", sprint, 1,
                                     float(self.rng.choice((60, 75, 90, 120))), everyone))
        days = _working_days(self.cfg.sprint_length_days)
        days = [d for d in days if d != 1] or days
        k = min(len(days), self.rng.randint(3, 5))
        for j, day in enumerate(sorted(self.rng.sample(days, k)), start=1):
            self.meetings.append(Meeting(f"S{sprint}-D{j}", "scrum", sprint, day,
                                         float(self.rng.choice((10, 15, 15, 20))), everyone))

    def doneness(self) -> List[DonenessEvidence]:
        cfg = self.cfg
        failures = {s: 0 for s in cfg.sprints}
        if self.spec.scenario == "subteam_split":
            late = list(cfg.sprints)[1:] or list(cfg.sprints)
            for k in range(cfg.demo_failure_tolerance + 1):
                failures[late[k % len(late)]] += 1
        untested = set(list(cfg.sprints)[:2]) if self.spec.scenario == "overcommit" else set()
        return [
            DonenessEvidence(s, s not in untested, s not in untested, failures[s], True, True)
            for s in cfg.sprints
        ]

    def manual(self) -> ManualScores:
        s = self.cfg.sprint_count
        return ManualScores(
            review_quality=[round(self.rng.uniform(0.7, 1.0), 2) for _ in range(s)],
            retrospective_quality=[round(self.rng.uniform(0.7, 1.0), 2) for _ in range(s)],
            participation={m.member_id: self.rng.randint(s, s + 3) for m in self.members},
        )

    def build(self) -> CohortDataset:
        for s in self.cfg.sprints:
            self.build_sprint(s)
            self.build_meetings(s)
        return CohortDataset(
            team_id=f"{self.spec.scenario}-{self.spec.team_size}-{self.spec.seed}",
            config=self.cfg, members=tuple(self.members), tasks=tuple(self.tasks),
            effort=tuple(self.effort), meetings=tuple(self.meetings),
            doneness=tuple(self.doneness()), manual=self.manual(),
        )


def generate(spec: ScenarioSpec) -> CohortDataset:
    """Build the dataset for ``spec``; equal specs give equal datasets."""
    return _Builder(spec).build()
