"""Exit criteria. Each test is one criterion; the terminal summary lists them."""

import dataclasses
import json
import math
import random
import time
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings, strategies as st

from scrumcard import metrics as m
from scrumcard.cli import main
from scrumcard.compliance import (
    DonenessReport, Level, MemberAssessment, MetricPanel, Rating, SprintDoneness, aggregate,
    assess, classify, least_squares_slope,
)
from scrumcard.domain import (
    CohortDataset, DonenessEvidence, EffortEntry, ManualScores, Meeting, Member, ProjectConfig,
    Task,
)
from scrumcard.synth import SCENARIOS, ScenarioSpec, generate

from oracles import gini_pairwise, pearson_cov, slope_closed_form, tukey_oracle

CFG = ProjectConfig()
TINY = 1e-9


# -- 1 ----------------------------------------------------------------------

def _levels(metric_id, values, **kw):
    return [classify(metric_id, v, CFG, **kw).level for v in values]


@pytest.mark.acceptance("AC1 threshold faithfulness sweep (< 1 s)")
def test_threshold_sweep():
    L = Level
    start = time.perf_counter()
    assert _levels("balance", [0.0299, 0.03, 0.03 + TINY, 0.09, 0.09 + TINY]) == \
        [L.GOOD, L.GOOD, L.ACCEPTABLE, L.ACCEPTABLE, L.CRITICAL]
    r = [[0.0, 0.0, v] for v in (0.3, 0.3 + TINY, 0.5, 0.5 + TINY)]
    assert _levels("daily_trend", r) == [L.GOOD, L.WARNING, L.WARNING, L.CRITICAL]
    mraee = [m.SprintSeries((v, v), v) for v in (0.2, 0.2 + TINY, 0.5, 0.5 + TINY)]
    assert _levels("mraee", mraee) == [L.EXCELLENT, L.ACCEPTABLE, L.ACCEPTABLE, L.CRITICAL]
    assert _levels("unestimated", [0.0, TINY, 0.05, 0.05 + TINY]) == \
        [L.GOOD, L.ACCEPTABLE, L.ACCEPTABLE, L.CRITICAL]
    assert _levels("task_size", [2.0, 2.0 + TINY, 3.0, 3.0 + TINY]) == \
        [L.GOOD, L.WARNING, L.WARNING, L.CRITICAL]
    for n in (1, 4, 7):
        target, band = 16.0 * n, 1.0 * n
        sweep = [target + band, target + band + TINY, target - band, target - band - TINY,
                 1.25 * target, 1.25 * target + TINY, 0.75 * target - TINY]
        got = _levels("budget", [[target, target, target, h] for h in sweep], team_size=n)
        assert got == [L.GOOD, L.WARNING, L.GOOD, L.WARNING, L.WARNING, L.CRITICAL, L.CRITICAL]
    assert time.perf_counter() - start < 1.0


# -- 2 ----------------------------------------------------------------------

CARD_ROWS = (15.0, 15.8, 16.0, 16.2, 17.0)
CARD_ERRORS = (0.45, 0.30, 0.20, 0.15)
WEEKDAYS = (1, 2, 3, 4, 5, 8, 9, 10, 11, 12)


def sample_card_dataset():
    members = tuple(Member(f"m{i}", f"Member {i}") for i in range(1, 6))
    tasks, effort, meetings = [], [], []
    for s, err in enumerate(CARD_ERRORS, 1):
        for mem, row in zip(members, CARD_ROWS):
            actual = row / 10
            for k, day in enumerate(WEEKDAYS):
                tid = f"{mem.member_id}-s{s}-{k}"
                kind = "technical_debt" if s >= 3 and k == 0 else "task"
                tasks.append(Task(tid, "work item", kind, s, actual / (1 + err)))
                effort.append(EffortEntry(tid, mem.member_id, day, actual))
        everyone = frozenset(x.member_id for x in members)
        planners = everyone - {"m5"} if s == 4 else everyone
        meetings.append(Meeting(f"P{s}", "planning", s, 1, 60, planners))
        for day in (3, 8, 10):
            meetings.append(Meeting(f"S{s}-{day}", "scrum", s, day, 15, everyone))
    doneness = tuple(DonenessEvidence(s, True, True, 0, True, True) for s in CFG.sprints)
    manual = ManualScores([1.0] * 4, [1.0] * 4, {x.member_id: 4 for x in members})
    return CohortDataset("sample-card", CFG, members, tuple(tasks), tuple(effort),
                         tuple(meetings), doneness, manual)


@pytest.mark.acceptance("AC2 sample-card narrative ratings and values (1e-9)")
def test_sample_card_narrative():
    a = assess(sample_card_dataset())
    ratings = {p.metric_id: p.rating.level.label for p in a.panels}
    assert ratings == {
        "budget": "good", "balance": "good", "daily_trend": "good", "task_size": "good",
        "mraee": "acceptable", "unestimated": "good", "meetings": "acceptable",
    }
    assert a.panel("balance").overall == pytest.approx(35.2 / 1600, abs=1e-9)
    assert a.panel("balance").overall == pytest.approx(0.022, abs=1e-9)
    mraee = a.panel("mraee")
    for got, want in zip(mraee.per_sprint, CARD_ERRORS):
        assert got == pytest.approx(want, abs=1e-9)
    assert mraee.overall == pytest.approx(sum(CARD_ERRORS) / 4, abs=1e-9)
    assert mraee.overall < 0.30
    assert mraee.improvement == "improving"
    daily = [1.0 * sum(CARD_ROWS) / 10 if d in WEEKDAYS else 0.0 for d in range(1, 15)]
    r_hand = pearson_cov(list(range(1, 15)), daily)
    for r in a.panel("daily_trend").per_sprint:
        assert r == pytest.approx(r_hand, abs=1e-9)
        assert r <= 0.3
    assert a.panel("unestimated").overall == 0.0
    assert a.panel("meetings").per_sprint == (0, 0, 0, 1)
    for h in a.panel("budget").per_sprint:
        assert h == pytest.approx(80.0, abs=1e-9)
    assert a.doneness.overall_ok


# -- 3 ----------------------------------------------------------------------

@pytest.mark.acceptance("AC3 oracle equivalence, >= 1000 inputs each (1e-9, < 10 s)")
def test_oracle_equivalence():
    rng = random.Random(20240501)
    start = time.perf_counter()
    for _ in range(1000):
        n = rng.randint(1, 30)
        xs = [rng.choice([0.0, rng.uniform(0, 100)]) for _ in range(n)]
        assert abs(m.gini_imbalance(xs) - gini_pairwise(xs)) <= 1e-9
    for _ in range(1000):
        n = rng.randint(2, 28)
        ys = [round(rng.uniform(0, 12), rng.choice([0, 2])) for _ in range(n)]
        days = list(range(1, n + 1))
        assert abs(m.pearson_r(days, ys) - pearson_cov(days, ys)) <= 1e-9
    for _ in range(1000):
        xs = [rng.expovariate(0.5) for _ in range(rng.randint(1, 40))]
        got, want = m.boxplot_stats(xs), tukey_oracle(xs)
        for key in ("min", "q1", "median", "q3", "max", "whisker_low", "whisker_high"):
            assert abs(getattr(got, key) - want[key]) <= 1e-9
        assert list(got.outliers) == want["outliers"]
    for _ in range(1000):
        n = rng.randint(2, 8)
        xs = list(range(1, n + 1))
        ys = [rng.uniform(0, 2) for _ in xs]
        assert abs(least_squares_slope(xs, ys) - slope_closed_form(xs, ys)) <= 1e-9
    assert time.perf_counter() - start < 10.0


# -- 4 ----------------------------------------------------------------------

@pytest.mark.acceptance("AC4 scenario detection matrix, seeds 1..100 (< 60 s)")
def test_scenario_matrix():
    start = time.perf_counter()
    misses = []
    for scenario, (target, _) in SCENARIOS.items():
        for seed in range(1, 101):
            ds = generate(ScenarioSpec(scenario, 5, seed))
            a = assess(ds)
            levels = {p.metric_id: p.rating.level for p in a.panels}
            if target is None:
                ok = all(lv >= Level.GOOD for lv in levels.values()) and a.doneness.overall_ok
            elif target == "doneness":
                ok = not a.doneness.overall_ok and all(lv >= Level.ACCEPTABLE for lv in levels.values())
                if scenario == "subteam_split":
                    ok = ok and len(a.panel("balance").detail["collaboration_groups"]) == 2
            else:
                others = [lv for k, lv in levels.items() if k != target]
                ok = levels[target] <= Level.WARNING and all(lv >= Level.ACCEPTABLE for lv in others)
                ok = ok and a.doneness.overall_ok
            if not ok:
                misses.append((scenario, seed))
    assert misses == []
    assert time.perf_counter() - start < 60.0


# -- 5 ----------------------------------------------------------------------

specs = st.builds(ScenarioSpec, st.sampled_from(sorted(SCENARIOS)), st.integers(2, 9),
                  st.integers(0, 2 ** 32))


@pytest.mark.acceptance("AC5 conservation and invariance properties")
@settings(max_examples=40, deadline=None)
@given(specs, st.floats(0.1, 10.0), st.randoms(use_true_random=False), st.integers(0, 6))
def test_conservation_and_invariance(spec, scale, rnd, which):
    ds = generate(spec)
    matrix = m.member_sprint_effort(ds)
    team = m.team_sprint_effort(ds)
    for got, want in zip(matrix.column_totals(), team.per_sprint):
        assert got == pytest.approx(want, abs=1e-9)
    assert math.fsum(matrix.row_totals()) == pytest.approx(math.fsum(team.per_sprint), abs=1e-9)

    totals = matrix.row_totals()
    g = m.gini_imbalance(totals)
    assert m.gini_imbalance([scale * t for t in totals]) == pytest.approx(g, abs=1e-9)
    shuffled = list(totals)
    rnd.shuffle(shuffled)
    assert m.gini_imbalance(shuffled) == pytest.approx(g, abs=1e-12)

    ids = [t.task_id for t in ds.tasks]
    fresh = [f"X{i}" for i in range(len(ids))]
    rnd.shuffle(fresh)
    rename = dict(zip(ids, fresh))
    relabeled = dataclasses.replace(
        ds,
        tasks=tuple(dataclasses.replace(t, task_id=rename[t.task_id]) for t in ds.tasks),
        effort=tuple(dataclasses.replace(e, task_id=rename[e.task_id]) for e in ds.effort),
    )
    before, after = m.mraee(ds), m.mraee(relabeled)
    assert after.overall == pytest.approx(before.overall, abs=1e-12)

    a = assess(ds)
    panels = list(a.panels)
    p = panels[which]
    if p.rating.level < Level.EXCELLENT:
        panels[which] = dataclasses.replace(p, rating=Rating(Level(p.rating.level + 1), "better"))
        better = aggregate(panels, a.doneness, a.member_assessments, ds.manual, ds.config)
        assert better.team_score >= a.team_score
        assert better.final_grade >= a.final_grade


# -- 6 ----------------------------------------------------------------------

SCORES = {Level.EXCELLENT: 1.0, Level.GOOD: 0.9, Level.ACCEPTABLE: 0.7,
          Level.WARNING: 0.5, Level.CRITICAL: 0.2}
IDS = ("budget", "balance", "daily_trend", "task_size", "mraee", "unestimated", "meetings")


@pytest.mark.acceptance("AC6 grade formula vs direct arithmetic, 100 combinations (1e-12)")
def test_grade_formula():
    rng = random.Random(6)
    for _ in range(100):
        levels = [Level(rng.randint(0, 4)) for _ in IDS]
        trends = [rng.choice(["improving", "stable", "worsening", "n/a"]) for _ in IDS]
        panels = [MetricPanel(i, (), None, Rating(lv, ""), t) for i, lv, t in zip(IDS, levels, trends)]
        rows = tuple(SprintDoneness(s, rng.random() < 0.8, rng.random() < 0.8, rng.random() < 0.8,
                                    (rng.random() < 0.8) if s in (2, 4) else None)
                     for s in range(1, 5))
        flags = [f for r in rows for f in r.flags()]
        doneness = DonenessReport(rows, all(flags))
        members = [MemberAssessment(f"m{k}", (), rng.choice([1.0, 0.9, 0.8, 0.6, 0.3, 0.0]))
                   for k in range(rng.randint(2, 8))]
        manual = None
        if rng.random() < 0.7:
            manual = ManualScores([rng.random() for _ in range(4)],
                                  [rng.random() for _ in range(4)], {})
        a = aggregate(panels, doneness, members, manual, CFG)

        coord = min(1.0, sum(SCORES[lv] for lv in levels) / 7 + 0.05 * trends.count("improving"))
        subs = [coord, sum(flags) / len(flags)]
        if manual is not None:
            q = manual.review_quality + manual.retrospective_quality
            subs.append(sum(q) / len(q))
        team = sum(subs) / len(subs)
        individual = sum(x.score for x in members) / len(members)
        assert abs(a.final_grade - (0.8 * team + 0.2 * individual)) <= 1e-12
        assert abs(a.final_grade - (0.8 * a.team_score + 0.2 * a.individual_score)) <= 1e-12


# -- 7 ----------------------------------------------------------------------

@pytest.mark.acceptance("AC7 end-to-end determinism and card content")
def test_end_to_end(tmp_path):
    data = tmp_path / "team.json"
    assert main(["generate", "compliant", "--seed", "1", "-o", str(data), "--quiet"]) == 0
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["assess", str(data), "-o", str(out), "--card", "--report", "--summary",
                     "--quiet"]) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outputs[0] == outputs[1]
    assert len(outputs[0]) == 3
    card_name = next(n for n in outputs[0] if n.endswith(".card.svg"))
    root = ET.fromstring(outputs[0][card_name])
    classes = lambda css: [e for e in root.iter() if css in (e.get("class") or "").split()]
    band, = classes("budget-band")
    assert (float(band.get("data-low")), float(band.get("data-high"))) == (75.0, 85.0)
    refs = classes("reference-line")
    assert refs and all(float(r.get("data-value")) == 2.0 for r in refs)
    report = json.loads(next(v for n, v in outputs[0].items() if n.endswith(".report.json")))
    assert len(report["panels"]) == 7
