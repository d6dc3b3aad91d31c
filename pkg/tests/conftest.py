import pytest

from scrumcard.domain import (
    CohortDataset, DonenessEvidence, EffortEntry, ManualScores, Meeting, Member,
    ProjectConfig, Task,
)

_ACCEPTANCE = {}
_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion reported at the end")


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker:
            _ACCEPTANCE[item.nodeid] = marker.args[0]


def pytest_runtest_logreport(report):
    if report.nodeid in _ACCEPTANCE and (report.when == "call" or report.failed):
        if report.nodeid not in _OUTCOMES or report.failed:
            _OUTCOMES[report.nodeid] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, label in _ACCEPTANCE.items():
        if nodeid in _OUTCOMES:
            terminalreporter.write_line(f"{_OUTCOMES[nodeid]:4}  {label}")


def all_doneness(config=ProjectConfig()):
    return tuple(DonenessEvidence(s, True, True, 0, True, True) for s in config.sprints)


def make_dataset(members=("m1",), tasks=(), effort=(), meetings=(), doneness=None,
                 config=ProjectConfig(), manual=None, team_id="t1"):
    """Small dataset builder; tuples stand in for records.

    tasks: (id, sprint, estimate[, planned[, kind]])
    effort: (task, member, day, hours)
    meetings: (id, kind, sprint, day, minutes, participants)
    """
    def task(rec):
        tid, sprint, est, *rest = rec
        planned = rest[0] if rest else None
        kind = rest[1] if len(rest) > 1 else "task"
        return Task(tid, f"title {tid}", kind, sprint, est, planned)

    return CohortDataset(
        team_id=team_id,
        config=config,
        members=tuple(Member(m, m.upper()) for m in members),
        tasks=tuple(task(t) for t in tasks),
        effort=tuple(EffortEntry(*e) for e in effort),
        meetings=tuple(Meeting(i, k, s, d, mins, frozenset(p)) for i, k, s, d, mins, p in meetings),
        doneness=all_doneness(config) if doneness is None else tuple(doneness),
        manual=manual,
    )


@pytest.fixture
def full_manual():
    return ManualScores([1.0] * 4, [1.0] * 4, {})
