import pytest

from scrumcard.compliance import Level, assess
from scrumcard.ingest import serialize_dataset, validate
from scrumcard.synth import SCENARIOS, ScenarioSpec, SpecError, generate

from oracles import gini_pairwise, pearson_cov


def test_same_seed_same_bytes():
    spec = ScenarioSpec("slacker", 6, 42)
    assert serialize_dataset(generate(spec)) == serialize_dataset(generate(spec))
    assert serialize_dataset(generate(ScenarioSpec("slacker", 6, 43))) != serialize_dataset(generate(spec))


@pytest.mark.parametrize("scenario", sorted(SCENARIOS))
@pytest.mark.parametrize("size", [2, 5, 9])
def test_generated_data_validates(scenario, size):
    ds = generate(ScenarioSpec(scenario, size, 11))
    report = validate(ds)
    assert [i for i in report.errors if i.severity == "error"] == []
    assert len(ds.members) == size


def test_small_team_rejected():
    with pytest.raises(SpecError):
        ScenarioSpec("compliant", 1, 1)


def test_unknown_scenario_rejected():
    with pytest.raises(SpecError):
        ScenarioSpec("chaos", 5, 1)


def test_bad_seed_rejected():
    with pytest.raises(SpecError):
        ScenarioSpec("compliant", 5, 2 ** 64)


def test_compliant_all_good():
    a = assess(generate(ScenarioSpec("compliant", 5, 1)))
    assert all(p.rating.level >= Level.GOOD for p in a.panels)
    assert a.doneness.overall_ok


def test_subteam_split_has_two_groups():
    a = assess(generate(ScenarioSpec("subteam_split", 6, 1)))
    assert len(a.panel("balance").detail["collaboration_groups"]) == 2


def _sums(ds):
    cfg = ds.config
    per_member = {m.member_id: 0.0 for m in ds.members}
    per_sprint_day = {}
    for e in ds.effort:
        per_member[e.member_id] += e.hours
        s = ds.task_by_id[e.task_id].sprint
        per_sprint_day.setdefault(s, [0.0] * cfg.sprint_length_days)[e.day - 1] += e.hours
    return per_member, per_sprint_day


def test_compliant_sprints_inside_band():
    ds = generate(ScenarioSpec("compliant", 5, 1))
    _, days = _sums(ds)
    for s in ds.config.sprints:
        assert 75.0 <= sum(days[s]) <= 85.0


def test_slacker_totals():
    ds = generate(ScenarioSpec("slacker", 5, 1))
    totals, _ = _sums(ds)
    values = sorted(totals.values())
    assert values[0] < 0.5 * sum(values[1:]) / 4
    assert gini_pairwise(values) > 0.09


def test_backfill_trend_every_sprint():
    ds = generate(ScenarioSpec("bulk_backfill", 5, 1))
    _, days = _sums(ds)
    for s in ds.config.sprints:
        assert pearson_cov(list(range(1, 15)), days[s]) > 0.5
