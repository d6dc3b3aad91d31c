import pytest

from scrumcard.domain import (
    EffortEntry, ManualScores, Meeting, ProjectConfig, Task, resolve_references,
)

from conftest import make_dataset


def test_defaults_follow_course_parameters():
    cfg = ProjectConfig()
    assert cfg.sprint_count == 4
    assert cfg.sprint_length_days == 14
    assert cfg.budget_hours_per_person_per_sprint == 16.0
    assert (cfg.team_weight, cfg.individual_weight) == (0.8, 0.2)
    assert cfg.release_sprints == (2, 4)


@pytest.mark.parametrize("overrides", [
    {"gini_good": 0.1, "gini_bad": 0.09},
    {"trend_suspect": 0.6},
    {"mraee_excellent": 0.6},
    {"team_weight": 0.7},
    {"release_sprints": (5,)},
    {"sprint_count": 0},
    {"budget_tolerance_hours": -1},
])
def test_config_invariants(overrides):
    with pytest.raises(ValueError):
        ProjectConfig().merged(overrides)


def test_config_from_mapping_rejects_unknown_keys():
    with pytest.raises(KeyError):
        ProjectConfig.from_mapping({"gini": 0.1})
    cfg = ProjectConfig.from_mapping({"sprint_count": 3, "release_sprints": [3], "td_sprints": [2, 3]})
    assert cfg.sprint_count == 3


def test_record_sign_checks():
    with pytest.raises(ValueError):
        EffortEntry("T1", "m1", 1, 0.0)
    with pytest.raises(ValueError):
        Task("T1", "x", "task", 1, -1.0)
    with pytest.raises(ValueError):
        Task("T1", "x", "epic", 1)
    with pytest.raises(ValueError):
        Meeting("M1", "scrum", 1, 1, 10, frozenset())
    with pytest.raises(ValueError):
        ManualScores([1.2], [], {})


def test_zero_estimate_distinct_from_missing():
    assert Task("T1", "x", "task", 1, 0.0).estimate_hours == 0.0
    assert Task("T2", "x", "task", 1).estimate_hours is None


def test_empty_dataset_is_consistent():
    assert resolve_references(make_dataset()) == []


def test_dangling_task_is_named():
    ds = make_dataset(effort=[("T9", "m1", 1, 2.0)])
    issues = resolve_references(ds)
    assert len(issues) == 1
    assert "T9" in str(issues[0])


def test_day_past_sprint_end():
    ds = make_dataset(tasks=[("T1", 1, 2.0)], effort=[("T1", "m1", 15, 2.0)])
    issues = resolve_references(ds)
    assert len(issues) == 1
    assert "day 15" in issues[0].message


def test_meeting_and_duplicate_checks():
    ds = make_dataset(
        members=("m1", "m1"),
        meetings=[("M1", "scrum", 1, 2, 15, {"m1", "ghost"})],
    )
    messages = [i.message for i in resolve_references(ds)]
    assert any("duplicate" in m for m in messages)
    assert any("ghost" in m for m in messages)


def test_dataset_needs_a_member():
    with pytest.raises(ValueError):
        make_dataset(members=())
