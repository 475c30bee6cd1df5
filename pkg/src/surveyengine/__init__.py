"""Conversational survey engine: declarative flows, natural-language
answer parsing, a timeout/read-back dialogue state machine, event-sourced
persistence, scheduling, and health self-report analytics."""

from .answers import AnswerValue
from .engine import DialogueEngine, EngineConfig, EngineReply, Phase, SessionState, replay
from .flows import Question, SurveyFlow, load_flow, match_invocation, serialize_flow
from .parsing import ParseFailure, ParseOutcome
from .store import EventRecord, EventStore

__version__ = "0.1.0"

__all__ = [
    "AnswerValue",
    "DialogueEngine",
    "EngineConfig",
    "EngineReply",
    "EventRecord",
    "EventStore",
    "ParseFailure",
    "ParseOutcome",
    "Phase",
    "Question",
    "SessionState",
    "SurveyFlow",
    "load_flow",
    "match_invocation",
    "replay",
    "serialize_flow",
]
