"""Reading and writing team datasets and assessment reports.

The canonical interchange format is one JSON document. A CSV bundle
(``members.csv``, ``tasks.csv``, ``effort.csv``, ``meetings.csv``,
``doneness.csv`` and an optional ``team.json`` for ``team_id``, ``config``
and ``manual``) is accepted as a directory or a zip archive.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Mapping, Optional, Union

from .compliance import (
    DonenessReport, Level, MemberAssessment, MetricPanel, Rating, SprintDoneness,
    TeamAssessment,
)
from .domain import (
    CohortDataset, DonenessEvidence, EffortEntry, ManualScores, Meeting, Member,
    ProjectConfig, Task, resolve_references,
)

FORMATS = ("json", "csv-bundle")
MAX_MEETING_MINUTES = 8 * 60

_TOP_KEYS = ("team_id", "config", "members", "tasks", "effort", "meetings", "doneness", "manual")
_FIELDS = {
    "members": {"id": True, "name": False},
    "tasks": {"id": True, "title": False, "kind": True, "sprint": True,
              "estimate_hours": False, "planned_assignees": False},
    "effort": {"task": True, "member": True, "day": True, "hours": True},
    "meetings": {"id": True, "kind": True, "sprint": True, "day": True,
                 "duration_minutes": True, "participants": True},
    "doneness": {"sprint": True, "unit_test_evidence": True, "e2e_test_evidence": True,
                 "demo_failures": True, "td_tasks_consistent": True,
                 "docker_image_available": True},
}
_MANUAL_KEYS = ("review_quality", "retrospective_quality", "participation")


class ParseError(ValueError):
    def __init__(self, location: str, message: str, line: Optional[int] = None):
        self.location = location
        self.message = message
        self.line = line
        where = f"{location} (line {line})" if line is not None else location
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class Issue:
    severity: str
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.location}: {self.message}"


@dataclass
class ValidationReport:
    errors: List[Issue] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not any(i.severity == "error" for i in self.errors)

    def __len__(self) -> int:
        return len(self.errors)


# -- scalar coercion --------------------------------------------------------

def _int(value, loc):
    if isinstance(value, bool):
        raise ParseError(loc, "expected an integer, got a boolean")
    if isinstance(value, str):
        value = value.strip()
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ParseError(loc, f"expected an integer, got {value!r}") from None
    if number != int(number):
        raise ParseError(loc, f"expected an integer, got {value!r}")
    return int(number)


def _float(value, loc):
    if isinstance(value, bool):
        raise ParseError(loc, "expected a number, got a boolean")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ParseError(loc, f"expected a number, got {value!r}") from None


def _bool(value, loc):
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.strip().lower() in ("true", "1", "yes"):
        return True
    if isinstance(value, str) and value.strip().lower() in ("false", "0", "no"):
        return False
    if value in (0, 1):
        return bool(value)
    raise ParseError(loc, f"expected a boolean, got {value!r}")


def _optional(value):
    return None if value is None or (isinstance(value, str) and value.strip() == "") else value


class _Reader:
    """Turns decoded records into domain objects, collecting warnings."""

    def __init__(self, warnings: Optional[list]):
        self.warnings = warnings if warnings is not None else []
        self.config = ProjectConfig()

    def warn(self, loc, msg):
        self.warnings.append(Issue("warning", loc, msg))

    def fields(self, section, record, loc, line=None):
        if not isinstance(record, Mapping):
            raise ParseError(loc, "expected an object", line)
        spec = _FIELDS[section]
        for key in record:
            if key not in spec:
                self.warn(loc, f"unknown field {key!r} ignored")
        for key, required in spec.items():
            if required and _optional(record.get(key)) is None:
                raise ParseError(f"{loc}.{key}", "missing required field", line)
        return record

    def construct(self, cls, loc, line, **kwargs):
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise ParseError(loc, str(exc), line) from None

    def day(self, value, sprint, loc):
        """Sprint-relative day; ISO dates are mapped via config.start_date."""
        if isinstance(value, str) and "-" in value.strip()[1:]:
            if self.config.start_date is None:
                raise ParseError(loc, "ISO date given but config.start_date is not set")
            try:
                date = _dt.date.fromisoformat(value.strip())
            except ValueError:
                raise ParseError(loc, f"bad date {value!r}") from None
            start = _dt.date.fromisoformat(self.config.start_date)
            offset = (date - start).days - (sprint - 1) * self.config.sprint_length_days
            return offset + 1
        return _int(value, loc)

    def config_from(self, raw, loc="config"):
        if raw is None:
            return ProjectConfig()
        if not isinstance(raw, Mapping):
            raise ParseError(loc, "expected an object")
        known = {k: v for k, v in raw.items() if k in ProjectConfig.__dataclass_fields__}
        for key in sorted(set(raw) - set(known)):
            self.warn(loc, f"unknown field {key!r} ignored")
        try:
            return ProjectConfig.from_mapping(known)
        except (TypeError, ValueError) as exc:
            raise ParseError(loc, str(exc)) from None

    def member(self, rec, loc, line=None):
        self.fields("members", rec, loc, line)
        return Member(str(rec["id"]), str(rec.get("name") or ""))

    def task(self, rec, loc, line=None):
        self.fields("tasks", rec, loc, line)
        est = _optional(rec.get("estimate_hours"))
        planned = _optional(rec.get("planned_assignees"))
        if est is not None and _float(est, f"{loc}.estimate_hours") < 0:
            raise ParseError(f"{loc}.estimate_hours", "must be non-negative", line)
        if planned is not None and _int(planned, f"{loc}.planned_assignees") < 1:
            raise ParseError(f"{loc}.planned_assignees", "must be a positive integer", line)
        return self.construct(
            Task, loc, line,
            task_id=str(rec["id"]), title=str(rec.get("title") or ""), kind=str(rec["kind"]),
            sprint=_int(rec["sprint"], f"{loc}.sprint"),
            estimate_hours=None if est is None else _float(est, f"{loc}.estimate_hours"),
            planned_assignees=None if planned is None else _int(planned, f"{loc}.planned_assignees"),
        )

    def effort(self, rec, loc, tasks, line=None):
        self.fields("effort", rec, loc, line)
        hours = _float(rec["hours"], f"{loc}.hours")
        if not hours > 0:
            raise ParseError(f"{loc}.hours", f"must be positive, got {rec['hours']!r}", line)
        task_id = str(rec["task"])
        sprint = tasks[task_id].sprint if task_id in tasks else 1
        return EffortEntry(task_id, str(rec["member"]),
                           self.day(rec["day"], sprint, f"{loc}.day"), hours)

    def meeting(self, rec, loc, line=None):
        self.fields("meetings", rec, loc, line)
        parts = rec["participants"]
        if isinstance(parts, str):
            parts = [p for p in parts.split("|") if p.strip()]
        if not isinstance(parts, (list, tuple)):
            raise ParseError(f"{loc}.participants", "expected a list of member ids", line)
        sprint = _int(rec["sprint"], f"{loc}.sprint")
        return self.construct(
            Meeting, loc, line,
            meeting_id=str(rec["id"]), kind=str(rec["kind"]), sprint=sprint,
            day=self.day(rec["day"], sprint, f"{loc}.day"),
            duration_minutes=_float(rec["duration_minutes"], f"{loc}.duration_minutes"),
            participants=frozenset(str(p).strip() for p in parts),
        )

    def doneness(self, rec, loc, line=None):
        self.fields("doneness", rec, loc, line)
        return self.construct(
            DonenessEvidence, loc, line,
            sprint=_int(rec["sprint"], f"{loc}.sprint"),
            unit_test_evidence=_bool(rec["unit_test_evidence"], f"{loc}.unit_test_evidence"),
            e2e_test_evidence=_bool(rec["e2e_test_evidence"], f"{loc}.e2e_test_evidence"),
            demo_failures=_int(rec["demo_failures"], f"{loc}.demo_failures"),
            td_tasks_consistent=_bool(rec["td_tasks_consistent"], f"{loc}.td_tasks_consistent"),
            docker_image_available=_bool(rec["docker_image_available"], f"{loc}.docker_image_available"),
        )

    def manual(self, raw, loc="manual"):
        if raw is None:
            return None
        if not isinstance(raw, Mapping):
            raise ParseError(loc, "expected an object")
        for key in raw:
            if key not in _MANUAL_KEYS:
                self.warn(loc, f"unknown field {key!r} ignored")
        part = raw.get("participation") or {}
        if not isinstance(part, Mapping):
            raise ParseError(f"{loc}.participation", "expected an object")
        try:
            return ManualScores(
                review_quality=[_float(v, f"{loc}.review_quality") for v in raw.get("review_quality") or []],
                retrospective_quality=[_float(v, f"{loc}.retrospective_quality")
                                       for v in raw.get("retrospective_quality") or []],
                participation={str(k): _int(v, f"{loc}.participation.{k}") for k, v in part.items()},
            )
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(loc, str(exc)) from None

    def dataset(self, team_id, config, sections, manual):
        """``sections`` maps section name to a list of (record, line) pairs."""
        self.config = config

        def each(section, build, *extra):
            out = []
            for i, (rec, line) in enumerate(sections[section]):
                try:
                    out.append(build(rec, f"{section}[{i}]", *extra, line))
                except ParseError as exc:
                    if exc.line is None and line is not None:
                        raise ParseError(exc.location, exc.message, line) from None
                    raise
            return out

        members = each("members", self.member)
        tasks = each("tasks", self.task)
        effort = each("effort", self.effort, {t.task_id: t for t in tasks})
        meetings = each("meetings", self.meeting)
        doneness = each("doneness", self.doneness)
        if not members:
            raise ParseError("members", "at least one member is required")
        return CohortDataset(team_id, config, tuple(members), tuple(tasks), tuple(effort),
                             tuple(meetings), tuple(doneness), manual)


# -- parsing ----------------------------------------------------------------

def _decode(data: Union[bytes, str], loc: str) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(loc, f"not UTF-8 text ({exc.reason})") from None


def _parse_json(data, reader: _Reader) -> CohortDataset:
    text = _decode(data, "document")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("document", exc.msg, exc.lineno) from None
    if not isinstance(doc, Mapping):
        raise ParseError("document", "top level must be an object")
    for key in doc:
        if key not in _TOP_KEYS:
            reader.warn("document", f"unknown field {key!r} ignored")
    for key in ("team_id", "members"):
        if key not in doc:
            raise ParseError(key, "missing required field")
    sections = {}
    for name in _FIELDS:
        records = doc.get(name) or []
        if not isinstance(records, list):
            raise ParseError(name, "expected a list")
        sections[name] = [(r, None) for r in records]
    config = reader.config_from(doc.get("config"))
    return reader.dataset(str(doc["team_id"]), config, sections, reader.manual(doc.get("manual")))


def _csv_records(text: str, name: str) -> list:
    rows = csv.DictReader(io.StringIO(text))
    if rows.fieldnames is None:
        raise ParseError(name, "header row required", 1)
    out = []
    for row in rows:
        if None in row:
            raise ParseError(name, "more cells than header columns", rows.line_num)
        cleaned = {k.strip(): v for k, v in row.items()}
        if not any((v or "").strip() for v in cleaned.values()):
            continue
        out.append((cleaned, rows.line_num))
    return out


def parse_csv_bundle(files: Mapping[str, Union[bytes, str]], *, team_id: str = "team",
                     warnings: Optional[list] = None) -> CohortDataset:
    """Parse a CSV bundle given as ``{file name: content}``."""
    reader = _Reader(warnings)
    meta = {}
    if "team.json" in files:
        try:
            meta = json.loads(_decode(files["team.json"], "team.json"))
        except json.JSONDecodeError as exc:
            raise ParseError("team.json", exc.msg, exc.lineno) from None
        if not isinstance(meta, Mapping):
            raise ParseError("team.json", "top level must be an object")
        for key in meta:
            if key not in ("team_id", "config", "manual"):
                reader.warn("team.json", f"unknown field {key!r} ignored")
    if "members.csv" not in files:
        raise ParseError("members.csv", "missing from bundle")
    for name in sorted(files):
        if name not in ("team.json",) and name[:-4] not in _FIELDS:
            reader.warn(name, "unknown file ignored")
    sections = {}
    for section in _FIELDS:
        name = f"{section}.csv"
        sections[section] = _csv_records(_decode(files[name], name), name) if name in files else []
    config = reader.config_from(meta.get("config"), "team.json:config")
    return reader.dataset(str(meta.get("team_id", team_id)), config, sections,
                          reader.manual(meta.get("manual"), "team.json:manual"))


def parse_dataset(data: Union[bytes, str], format: str = "json", *,
                  warnings: Optional[list] = None) -> CohortDataset:
    """Parse one team dataset.

    ``csv-bundle`` input is a zip archive holding the bundle's files. Parse
    warnings (unknown fields, unknown files) are appended to ``warnings``
    when a list is given.
    """
    if format == "json":
        return _parse_json(data, _Reader(warnings))
    if format == "csv-bundle":
        if isinstance(data, str):
            raise ParseError("bundle", "a csv-bundle must be given as zip bytes")
        try:
            with zipfile.ZipFile(io.BytesIO(data)) as zf:
                files = {Path(n).name: zf.read(n) for n in zf.namelist() if not n.endswith("/")}
        except zipfile.BadZipFile:
            raise ParseError("bundle", "not a zip archive") from None
        return parse_csv_bundle(files, warnings=warnings)
    raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")


def load_dataset(path: Union[str, Path], format: Optional[str] = None, *,
                 warnings: Optional[list] = None) -> CohortDataset:
    """Load a dataset file, CSV-bundle directory or CSV-bundle zip."""
    path = Path(path)
    if path.is_dir():
        files = {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.is_file()}
        return parse_csv_bundle(files, team_id=path.name, warnings=warnings)
    if format is None:
        format = "csv-bundle" if path.suffix == ".zip" else "json"
    return parse_dataset(path.read_bytes(), format, warnings=warnings)


# -- validation -------------------------------------------------------------

def validate(dataset: CohortDataset) -> ValidationReport:
    report = ValidationReport()
    for issue in resolve_references(dataset):
        report.errors.append(Issue("error", issue.location, issue.message))
    cfg = dataset.config
    counts = {}
    for d in dataset.doneness:
        counts[d.sprint] = counts.get(d.sprint, 0) + 1
    for s in cfg.sprints:
        if counts.get(s, 0) == 0:
            report.errors.append(Issue("error", "doneness", f"no evidence record for sprint {s}"))
        elif counts[s] > 1:
            report.errors.append(Issue("error", "doneness", f"{counts[s]} evidence records for sprint {s}"))
    active = {dataset.sprint_of(e) for e in dataset.effort}
    for s in cfg.sprints:
        if s not in active:
            report.errors.append(Issue("warning", f"sprint {s}", "no effort logged"))
    for mt in dataset.meetings:
        if mt.duration_minutes > MAX_MEETING_MINUTES:
            report.errors.append(Issue(
                "warning", f"meetings[{mt.meeting_id}]",
                f"lasts {mt.duration_minutes:g} minutes (over 8 hours)"))
    if dataset.manual is not None:
        for name in ("review_quality", "retrospective_quality"):
            n = len(getattr(dataset.manual, name))
            if n and n != cfg.sprint_count:
                report.errors.append(Issue(
                    "warning", f"manual.{name}", f"{n} values for {cfg.sprint_count} sprints"))
    return report


# -- serialization ----------------------------------------------------------

def dataset_to_dict(dataset: CohortDataset) -> dict:
    out = {
        "team_id": dataset.team_id,
        "config": dataset.config.to_dict(),
        "members": [{"id": m.member_id, "name": m.display_name} for m in dataset.members],
        "tasks": [],
        "effort": [{"task": e.task_id, "member": e.member_id, "day": e.day, "hours": e.hours}
                   for e in dataset.effort],
        "meetings": [
            {"id": m.meeting_id, "kind": m.kind, "sprint": m.sprint, "day": m.day,
             "duration_minutes": m.duration_minutes, "participants": sorted(m.participants)}
            for m in dataset.meetings
        ],
        "doneness": [
            {"sprint": d.sprint, "unit_test_evidence": d.unit_test_evidence,
             "e2e_test_evidence": d.e2e_test_evidence, "demo_failures": d.demo_failures,
             "td_tasks_consistent": d.td_tasks_consistent,
             "docker_image_available": d.docker_image_available}
            for d in dataset.doneness
        ],
    }
    if out["config"]["start_date"] is None:
        del out["config"]["start_date"]
    for t in dataset.tasks:
        rec = {"id": t.task_id, "title": t.title, "kind": t.kind, "sprint": t.sprint}
        if t.estimate_hours is not None:
            rec["estimate_hours"] = t.estimate_hours
        if t.planned_assignees is not None:
            rec["planned_assignees"] = t.planned_assignees
        out["tasks"].append(rec)
    if dataset.manual is not None:
        out["manual"] = {
            "review_quality": list(dataset.manual.review_quality),
            "retrospective_quality": list(dataset.manual.retrospective_quality),
            "participation": dict(dataset.manual.participation),
        }
    return out


def serialize_dataset(dataset: CohortDataset) -> bytes:
    return (json.dumps(dataset_to_dict(dataset), indent=1, ensure_ascii=False) + "\n").encode()


def assessment_to_dict(a: TeamAssessment) -> dict:
    return {
        "team_id": a.team_id,
        "final_grade": a.final_grade,
        "team_score": a.team_score,
        "individual_score": a.individual_score,
        "sub_scores": dict(a.sub_scores),
        "panels": [
            {
                "metric_id": p.metric_id,
                "per_sprint": list(p.per_sprint),
                "overall": p.overall,
                "rating": p.rating.level.label,
                "rationale": p.rating.rationale,
                "improvement": p.improvement,
                "detail": p.detail,
            }
            for p in a.panels
        ],
        "doneness": {
            "overall_ok": a.doneness.overall_ok,
            "per_sprint": [
                {"sprint": s.sprint, "testing_ok": s.testing_ok, "demo_ok": s.demo_ok,
                 "td_ok": s.td_ok, "release_ok": s.release_ok}
                for s in a.doneness.per_sprint
            ],
        },
        "members": [
            {"member_id": mm.member_id, "flags": list(mm.flags), "score": mm.score,
             "sprint_hours": list(mm.sprint_hours), "max_daily_hours": mm.max_daily_hours}
            for mm in a.member_assessments
        ],
        "warnings": list(a.warnings),
    }


def export_report(assessment: TeamAssessment, format: str = "json") -> bytes:
    """Deterministic JSON report; floats keep full repr precision."""
    if format != "json":
        raise ValueError(f"unsupported report format {format!r}")
    text = json.dumps(assessment_to_dict(assessment), indent=2, ensure_ascii=False,
                      allow_nan=False)
    return (text + "\n").encode("utf-8")


def parse_report(data: Union[bytes, str]) -> TeamAssessment:
    doc = json.loads(_decode(data, "report"))
    panels = tuple(
        MetricPanel(
            metric_id=p["metric_id"], per_sprint=tuple(p["per_sprint"]), overall=p["overall"],
            rating=Rating(Level.parse(p["rating"]), p["rationale"]),
            improvement=p["improvement"], detail=p["detail"],
        )
        for p in doc["panels"]
    )
    done = doc["doneness"]
    doneness = DonenessReport(
        tuple(SprintDoneness(**s) for s in done["per_sprint"]), done["overall_ok"])
    members = tuple(
        MemberAssessment(mm["member_id"], tuple(mm["flags"]), mm["score"],
                         tuple(mm["sprint_hours"]), mm["max_daily_hours"])
        for mm in doc["members"]
    )
    return TeamAssessment(
        team_id=doc["team_id"], panels=panels, doneness=doneness, member_assessments=members,
        sub_scores=doc["sub_scores"], team_score=doc["team_score"],
        individual_score=doc["individual_score"], final_grade=doc["final_grade"],
        warnings=tuple(doc["warnings"]),
    )


def load_config_file(path: Union[str, Path]) -> dict:
    """Read a JSON config override file as a plain mapping."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, Mapping):
        raise ParseError(str(path), "config file must hold a JSON object")
    return dict(doc.get("config", doc))
