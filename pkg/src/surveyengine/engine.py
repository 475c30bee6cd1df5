"""Dialogue engine: runs one survey session as an event-driven state machine.

The engine holds no timers and no storage. Every transition takes the
caller-supplied time, mutates the session state, and returns the reply
plus the event payloads to append to the log. Feeding the logged input
events back through the same transitions reproduces the state exactly
(``replay``).

Per-question budgets: one re-prompt for a timeout, one for a parse
failure, one for an unrecognized read-back confirmation, and at most two
read-back corrections; exhausting the correction budget commits the last
parse flagged UNCONFIRMED.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from .answers import AnswerValue, NoAnswer, to_payload, value_kind
from .flows import END, SurveyFlow
from .parsing import parse_yes_no, parser_for_kind

DEFAULT_TIMEOUT_MS = 10_000

REPROMPT_PREFIX = "Sorry, I didn't catch that. "
FAREWELL_COMPLETED = "That's everything for this survey. Thanks, and talk to you soon!"
FAREWELL_ABANDONED = "We can pick this up later. Goodbye!"

SKIP_WORDS = {"skip", "pass", "next"}

UNCONFIRMED = "UNCONFIRMED"


class Phase(str, Enum):
    AWAIT_ANSWER = "AWAIT_ANSWER"
    AWAIT_READBACK_CONFIRM = "AWAIT_READBACK_CONFIRM"
    COMPLETED = "COMPLETED"
    ABANDONED = "ABANDONED"


TERMINAL_PHASES = (Phase.COMPLETED, Phase.ABANDONED)


class EngineError(Exception):
    pass


class InvalidPhaseError(EngineError):
    pass


class ReplayError(EngineError):
    pass


@dataclass
class SessionState:
    session_id: str
    user_id: str
    flow_id: str
    phase: Phase = Phase.AWAIT_ANSWER
    current_question: Optional[str] = None
    pending_value: Optional[AnswerValue] = None
    pending_raw: str = ""
    timeout_reprompts_used: int = 0
    parse_reprompts_used: int = 0
    confirm_reprompts_used: int = 0
    corrections_used: int = 0
    answers: Dict[str, AnswerValue] = field(default_factory=dict)
    answer_flags: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    deadline: Optional[int] = None
    started_at: int = 0
    ended_at: Optional[int] = None

    @property
    def terminal(self) -> bool:
        return self.phase in TERMINAL_PHASES


@dataclass(frozen=True)
class EngineReply:
    say: str
    session_status: Phase
    recorded: Optional[Tuple[str, AnswerValue]] = None


# Event payload helper: (kind, payload) tuples; the store assigns seq/at.
Event = Tuple[str, dict]


@dataclass(frozen=True)
class EngineConfig:
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    readback: Optional[bool] = None  # None -> use the flow's setting


class DialogueEngine:
    """Executes one flow for one user. Stateless across sessions."""

    def __init__(self, flow: SurveyFlow, user_id: str, linked: bool = False,
                 config: EngineConfig = EngineConfig()):
        self.flow = flow
        self.user_id = user_id
        self.linked = linked
        self.config = config
        self.readback = flow.readback_enabled if config.readback is None else config.readback

    # -- session lifecycle -------------------------------------------------

    def start(self, session_id: str, now: int) -> Tuple[SessionState, EngineReply, List[Event]]:
        state = SessionState(
            session_id=session_id,
            user_id=self.user_id,
            flow_id=self.flow.flow_id,
            started_at=now,
        )
        events: List[Event] = [("SESSION_STARTED", {
            "session_id": session_id,
            "user_id": self.user_id,
            "flow_id": self.flow.flow_id,
            "linked": self.linked,
            "readback": self.readback,
            "timeout_ms": self.config.timeout_ms,
        })]
        first = self.flow.first_question_id()
        if first is None:
            return state, self._finish(state, events, now, completed=True)[0], events
        if self.linked and self.flow.question(first).answer_kind == "USER_ID_CONFIRM":
            first = self.flow.next_question_id(first, "")
            if first == END:
                return state, self._finish(state, events, now, completed=True)[0], events
        state.current_question = first
        reply = self._prompt(state, events, now, cause="initial")
        return state, reply, events

    def handle_utterance(self, state: SessionState, utterance: str, now: int
                         ) -> Tuple[EngineReply, List[Event]]:
        self._check_live(state, now, expect_overdue=False)
        events: List[Event] = [("UTTERANCE_RECEIVED", {
            "question_id": state.current_question,
            "phase": state.phase.value,
            "text": utterance,
        })]
        if state.phase == Phase.AWAIT_ANSWER:
            return self._on_answer(state, utterance, now, events), events
        return self._on_readback(state, utterance, now, events), events

    def handle_timeout(self, state: SessionState, now: int) -> Tuple[EngineReply, List[Event]]:
        self._check_live(state, now, expect_overdue=True)
        events: List[Event] = [("TIMEOUT", {
            "question_id": state.current_question,
            "phase": state.phase.value,
        })]
        if state.timeout_reprompts_used < 1:
            state.timeout_reprompts_used += 1
            return self._prompt(state, events, now, cause="timeout"), events
        return self._finish(state, events, now, completed=False), events

    # -- transitions -------------------------------------------------------

    def _on_answer(self, state: SessionState, utterance: str, now: int,
                   events: List[Event]) -> EngineReply:
        assert state.current_question is not None
        question = self.flow.question(state.current_question)
        parser = parser_for_kind(question.answer_kind, expected_user_id=self.user_id)
        outcome = parser(utterance)
        if outcome.ok:
            assert outcome.value is not None
            if self.readback:
                state.phase = Phase.AWAIT_READBACK_CONFIRM
                state.pending_value = outcome.value
                state.pending_raw = utterance
                say = self._readback_text(outcome.normalized_echo)
                events.append(("READBACK_ISSUED", {
                    "question_id": question.question_id,
                    "echo": outcome.normalized_echo,
                }))
                state.deadline = now + self.config.timeout_ms
                return EngineReply(say=say, session_status=state.phase)
            return self._commit(state, events, now, outcome.value, utterance)

        if question.optional_allowed and utterance.strip().lower() in SKIP_WORDS:
            return self._commit(state, events, now, NoAnswer(), utterance)
        if state.parse_reprompts_used < 1:
            state.parse_reprompts_used += 1
            return self._prompt(state, events, now, cause="parse_failure")
        # re-prompt budget exhausted
        if question.optional_allowed:
            return self._commit(state, events, now, NoAnswer(), utterance)
        return self._finish(state, events, now, completed=False)

    def _on_readback(self, state: SessionState, utterance: str, now: int,
                     events: List[Event]) -> EngineReply:
        assert state.current_question is not None and state.pending_value is not None
        decision = parse_yes_no(utterance)
        events.append(("READBACK_RESULT", {
            "question_id": state.current_question,
            "result": {True: "yes", False: "no", None: "unrecognized"}[decision],
        }))
        if decision is True:
            return self._commit(state, events, now, state.pending_value, state.pending_raw)
        if decision is False:
            if state.corrections_used < 2:
                state.corrections_used += 1
                state.phase = Phase.AWAIT_ANSWER
                state.pending_value = None
                state.pending_raw = ""
                return self._prompt(state, events, now, cause="correction")
            return self._commit(state, events, now, state.pending_value,
                                state.pending_raw, flags=(UNCONFIRMED,))
        # unrecognized confirmation
        if state.confirm_reprompts_used < 1:
            state.confirm_reprompts_used += 1
            say = "Please answer yes or no. " + self._readback_text(
                state.pending_value.canonical())
            events.append(("PROMPT_ISSUED", {
                "question_id": state.current_question,
                "text": say,
                "reprompt": True,
                "cause": "confirm_failure",
            }))
            state.deadline = now + self.config.timeout_ms
            return EngineReply(say=say, session_status=state.phase)
        return self._commit(state, events, now, state.pending_value,
                            state.pending_raw, flags=(UNCONFIRMED,))

    # -- helpers -----------------------------------------------------------

    def _commit(self, state: SessionState, events: List[Event], now: int,
                value: AnswerValue, raw: str, flags: Tuple[str, ...] = ()) -> EngineReply:
        assert state.current_question is not None
        question_id = state.current_question
        state.answers[question_id] = value
        state.answer_flags[question_id] = flags
        events.append(("ANSWER_COMMITTED", {
            "question_id": question_id,
            "value": to_payload(value),
            "value_kind": value_kind(value),
            "value_canonical": value.canonical(),
            "raw_utterance": raw,
            "flags": list(flags),
        }))
        state.pending_value = None
        state.pending_raw = ""
        state.timeout_reprompts_used = 0
        state.parse_reprompts_used = 0
        state.confirm_reprompts_used = 0
        state.corrections_used = 0
        state.phase = Phase.AWAIT_ANSWER
        next_id = self.flow.next_question_id(question_id, value.canonical())
        if next_id == END:
            reply = self._finish(state, events, now, completed=True)
            return EngineReply(say=reply.say, session_status=reply.session_status,
                               recorded=(question_id, value))
        state.current_question = next_id
        reply = self._prompt(state, events, now, cause="initial")
        return EngineReply(say=reply.say, session_status=reply.session_status,
                           recorded=(question_id, value))

    def _prompt(self, state: SessionState, events: List[Event], now: int,
                cause: str) -> EngineReply:
        assert state.current_question is not None
        text = self.flow.question(state.current_question).prompt_text
        if cause in ("timeout", "parse_failure"):
            text = REPROMPT_PREFIX + text
        events.append(("PROMPT_ISSUED", {
            "question_id": state.current_question,
            "text": text,
            "reprompt": cause in ("timeout", "parse_failure", "correction"),
            "cause": cause,
        }))
        state.deadline = now + self.config.timeout_ms
        return EngineReply(say=text, session_status=state.phase)

    def _finish(self, state: SessionState, events: List[Event], now: int,
                completed: bool) -> EngineReply:
        state.phase = Phase.COMPLETED if completed else Phase.ABANDONED
        state.current_question = None
        state.pending_value = None
        state.pending_raw = ""
        state.deadline = None
        state.ended_at = now
        kind = "SESSION_COMPLETED" if completed else "SESSION_ABANDONED"
        events.append((kind, {"answers": len(state.answers)}))
        say = FAREWELL_COMPLETED if completed else FAREWELL_ABANDONED
        return EngineReply(say=say, session_status=state.phase)

    @staticmethod
    def _readback_text(echo: str) -> str:
        return f"I heard {echo} — is that right?"

    @staticmethod
    def _check_live(state: SessionState, now: int, expect_overdue: bool) -> None:
        if state.terminal:
            raise InvalidPhaseError(f"session {state.session_id} is {state.phase.value}")
        if state.deadline is None:
            raise InvalidPhaseError("session has no active prompt")
        overdue = now > state.deadline
        if expect_overdue and not overdue:
            raise InvalidPhaseError("deadline has not passed")
        if not expect_overdue and overdue:
            raise InvalidPhaseError("deadline passed; timeout must be handled first")


INPUT_EVENT_KINDS = {"SESSION_STARTED", "UTTERANCE_RECEIVED", "TIMEOUT"}


def replay(events, flows: Optional[Dict[str, SurveyFlow]] = None) -> SessionState:
    """Rebuild a session's state by re-running its logged inputs.

    ``events`` is an ordered list of EventRecords from a single session
    stream. Derived events (prompts, commits, ...) are regenerated by the
    transitions and ignored; only inputs drive the machine.
    """
    records = list(events)
    if not records:
        raise ReplayError("empty event list")
    streams = {r.stream_id for r in records}
    if len(streams) != 1:
        raise ReplayError(f"events span multiple streams: {sorted(streams)}")
    seqs = [r.seq for r in records]
    if seqs != list(range(seqs[0], seqs[0] + len(seqs))):
        raise ReplayError("gap in sequence numbers")
    if records[0].kind != "SESSION_STARTED":
        raise ReplayError("log does not begin with SESSION_STARTED")

    head = records[0].payload
    if flows is None:
        from .resources import builtin_flows
        flows = {f.flow_id: f for f in builtin_flows()}
    try:
        flow = flows[head["flow_id"]]
    except KeyError:
        raise ReplayError(f"unknown flow: {head['flow_id']}") from None
    engine = DialogueEngine(
        flow,
        user_id=head["user_id"],
        linked=head["linked"],
        config=EngineConfig(timeout_ms=head["timeout_ms"], readback=head["readback"]),
    )
    state, _, _ = engine.start(head["session_id"], records[0].at)
    for record in records[1:]:
        if record.kind == "UTTERANCE_RECEIVED":
            engine.handle_utterance(state, record.payload["text"], record.at)
        elif record.kind == "TIMEOUT":
            engine.handle_timeout(state, record.at)
        elif record.kind == "SESSION_STARTED":
            raise ReplayError("duplicate SESSION_STARTED")
    return state
