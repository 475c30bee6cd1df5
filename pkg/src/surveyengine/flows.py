"""Survey flow model: declarative questionnaire definitions.

Flows are loaded from a line-oriented text format (see ``load_flow``) and
are immutable after load, so one flow object is safe to share across
concurrent sessions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

END = "END"

ANSWER_KINDS = frozenset({
    "USER_ID_CONFIRM",
    "SCALE_1_5",
    "FLUID_VOLUME",
    "CLOCK_TIME",
    "DURATION",
    "COUNT_PLUS_DURATION",
    "COUNT_PLUS_TIME",
    "QUALITY_5",
    "MEDICATION_TEXT",
    "FREE_TEXT",
})

# Kinds that have a canonical "none" value, required for optional questions.
_OPTIONAL_OK_KINDS = frozenset({
    "DURATION", "COUNT_PLUS_DURATION", "COUNT_PLUS_TIME",
    "FLUID_VOLUME", "MEDICATION_TEXT", "FREE_TEXT",
})


class FlowError(ValueError):
    """Malformed or invalid flow definition."""


@dataclass(frozen=True)
class Question:
    question_id: str
    prompt_text: str
    answer_kind: str
    optional_allowed: bool = False
    # predicate -> next question id (or END); empty means fall through
    branch: Tuple[Tuple[str, str], ...] = ()


@dataclass(frozen=True)
class SurveyFlow:
    flow_id: str
    title: str
    invocation_phrases: Tuple[str, ...]
    questions: Tuple[Question, ...]
    readback_enabled: bool = True
    per_day_cadence: int = 1
    _index: Dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        index = {q.question_id: i for i, q in enumerate(self.questions)}
        if len(index) != len(self.questions):
            raise FlowError(f"duplicate question id in flow {self.flow_id}")
        if self.per_day_cadence < 1:
            raise FlowError("per_day_cadence must be >= 1")
        for q in self.questions:
            if q.answer_kind not in ANSWER_KINDS:
                raise FlowError(f"unknown answer kind: {q.answer_kind}")
            if q.optional_allowed and q.answer_kind not in _OPTIONAL_OK_KINDS:
                raise FlowError(
                    f"question {q.question_id}: kind {q.answer_kind} has no "
                    "canonical none value, cannot be optional"
                )
            for _, target in q.branch:
                if target != END and target not in index:
                    raise FlowError(
                        f"question {q.question_id}: branch target {target!r} "
                        "does not exist"
                    )
        object.__setattr__(self, "_index", index)

    def question(self, question_id: str) -> Question:
        return self.questions[self._index[question_id]]

    def first_question_id(self) -> Optional[str]:
        return self.questions[0].question_id if self.questions else None

    def next_question_id(self, question_id: str, canonical_answer: str) -> str:
        """Successor of a question given the committed answer (END when done)."""
        q = self.question(question_id)
        for predicate, target in q.branch:
            if predicate == "default" or predicate == canonical_answer:
                return target
        i = self._index[question_id]
        if i + 1 < len(self.questions):
            return self.questions[i + 1].question_id
        return END


_HEADER_KEYS = {"flow_id", "title", "invocation", "cadence", "readback"}
_QUESTION_KEYS = {"id", "prompt", "kind", "optional", "branch"}
_BRANCH_RE = re.compile(r"^(?P<pred>.+?)\s*->\s*(?P<target>\S+)$")


def load_flow(document: str) -> SurveyFlow:
    """Parse a flow-definition document.

    Format: ``key: value`` header lines (``invocation`` repeatable),
    then ``[question]`` blocks with ``id``/``prompt``/``kind`` and
    optional ``optional``/``branch`` lines. ``#`` starts a comment.
    """
    header: Dict[str, str] = {}
    invocations: List[str] = []
    questions: List[Question] = []
    current: Optional[Dict[str, object]] = None

    def finish_question() -> None:
        nonlocal current
        if current is None:
            return
        for required in ("id", "prompt", "kind"):
            if required not in current:
                raise FlowError(f"question block missing '{required}:' line")
        questions.append(Question(
            question_id=str(current["id"]),
            prompt_text=str(current["prompt"]),
            answer_kind=str(current["kind"]),
            optional_allowed=current.get("optional") in ("yes", "true"),
            branch=tuple(current.get("branch", [])),  # type: ignore[arg-type]
        ))
        current = None

    for lineno, raw in enumerate(document.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "[question]":
            finish_question()
            current = {}
            continue
        if ":" not in line:
            raise FlowError(f"line {lineno}: expected 'key: value', got {line!r}")
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if current is None:
            if key not in _HEADER_KEYS:
                raise FlowError(f"line {lineno}: unknown header key {key!r}")
            if key == "invocation":
                invocations.append(value)
            else:
                header[key] = value
        else:
            if key not in _QUESTION_KEYS:
                raise FlowError(f"line {lineno}: unknown question key {key!r}")
            if key == "branch":
                m = _BRANCH_RE.match(value)
                if not m:
                    raise FlowError(f"line {lineno}: branch must be 'predicate -> target'")
                current.setdefault("branch", []).append(  # type: ignore[union-attr]
                    (m.group("pred"), m.group("target")))
            else:
                current[key] = value
    finish_question()

    if "flow_id" not in header:
        raise FlowError("missing 'flow_id:' header")
    try:
        cadence = int(header.get("cadence", "1"))
    except ValueError:
        raise FlowError("cadence must be an integer") from None
    return SurveyFlow(
        flow_id=header["flow_id"],
        title=header.get("title", header["flow_id"]),
        invocation_phrases=tuple(invocations),
        questions=tuple(questions),
        readback_enabled=header.get("readback", "yes") not in ("no", "false"),
        per_day_cadence=cadence,
    )


def serialize_flow(flow: SurveyFlow) -> str:
    """Render a flow back to the definition format (load_flow round-trips)."""
    lines = [
        f"flow_id: {flow.flow_id}",
        f"title: {flow.title}",
    ]
    lines.extend(f"invocation: {p}" for p in flow.invocation_phrases)
    lines.append(f"cadence: {flow.per_day_cadence}")
    lines.append(f"readback: {'yes' if flow.readback_enabled else 'no'}")
    for q in flow.questions:
        lines.append("")
        lines.append("[question]")
        lines.append(f"id: {q.question_id}")
        lines.append(f"prompt: {q.prompt_text}")
        lines.append(f"kind: {q.answer_kind}")
        if q.optional_allowed:
            lines.append("optional: yes")
        for predicate, target in q.branch:
            lines.append(f"branch: {predicate} -> {target}")
    return "\n".join(lines) + "\n"


_WAKE_WORDS_RE = re.compile(r"^(?:hey|ok|okay)\s+google\b[\s,]*", re.IGNORECASE)


def _normalize_invocation(text: str) -> str:
    text = _WAKE_WORDS_RE.sub("", text.strip().lower())
    text = re.sub(r"[^\w\s]", "", text)
    text = re.sub(r"\s+", " ", text).strip()
    return text


def match_invocation(utterance: str, flows: List[SurveyFlow]) -> Optional[str]:
    """Resolve an utterance to a flow id via its invocation phrases."""
    text = _normalize_invocation(utterance)
    for flow in flows:
        for phrase in flow.invocation_phrases:
            normalized = _normalize_invocation(phrase)
            if text == normalized or text == f"talk to {normalized}":
                return flow.flow_id
    return None
