"""Packaged assets: built-in flow documents, golden fixtures, config."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources as importlib_resources
from typing import Dict, List, Tuple

from .answers import AnswerValue, from_payload
from .flows import SurveyFlow, load_flow

_ASSETS = importlib_resources.files("surveyengine") / "assets"


def _read_text(relpath: str) -> str:
    return (_ASSETS / relpath).read_text(encoding="utf-8")


def flow_document(flow_id: str) -> str:
    return _read_text(f"flows/{flow_id}.flow")


def builtin_flows() -> List[SurveyFlow]:
    return [load_flow(flow_document("fluidmonitor")),
            load_flow(flow_document("sleepy"))]


def builtin_flow_map() -> Dict[str, SurveyFlow]:
    return {f.flow_id: f for f in builtin_flows()}


@dataclass(frozen=True)
class ParseFixture:
    question_id: str
    answer_kind: str
    utterance: str
    expected: AnswerValue


def golden_fixtures() -> List[ParseFixture]:
    """The example diary night as (utterance, expected value) pairs."""
    fixtures = []
    for line in _read_text("fixtures/golden_parses.tsv").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        question_id, kind, utterance, expected_json = line.split("\t")
        fixtures.append(ParseFixture(
            question_id=question_id,
            answer_kind=kind,
            utterance=utterance,
            expected=from_payload(json.loads(expected_json)),
        ))
    return fixtures


def session_transcript(flow_id: str) -> List[str]:
    """Scripted user utterances for a complete session of a built-in flow."""
    lines = _read_text(f"fixtures/{flow_id}_session.txt").splitlines()
    return [ln for ln in lines if ln.strip() and not ln.startswith("#")]


def default_config_text() -> str:
    return _read_text("config/default.conf")


def default_config() -> Dict[str, str]:
    config = {}
    for line in default_config_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(":")
        config[key.strip()] = value.strip()
    return config
