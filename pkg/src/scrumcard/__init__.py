"""Scrum process compliance assessment from sprint-tracking exports."""

from .compliance import TeamAssessment, assess
from .domain import CohortDataset, ProjectConfig
from .ingest import export_report, load_dataset, parse_dataset, serialize_dataset, validate
from .render import render_card, render_summary
from .synth import ScenarioSpec, generate

__version__ = "0.1.0"

__all__ = [
    "CohortDataset", "ProjectConfig", "ScenarioSpec", "TeamAssessment", "assess",
    "export_report", "generate", "load_dataset", "parse_dataset", "render_card",
    "render_summary", "serialize_dataset", "validate",
]
