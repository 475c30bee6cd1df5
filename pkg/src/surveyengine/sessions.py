"""Session service: runs live dialogue sessions against the event store.

One stream per session (stream id = session id). Every engine transition
appends its events before the reply is handed back, so the log is always
at least as new as anything a caller has seen.
"""

from __future__ import annotations

import threading
import uuid
from typing import Dict, List, Optional, Tuple

from .accounts import AccountService, LINK_LINKED
from .engine import (
    DialogueEngine,
    EngineConfig,
    EngineReply,
    Event,
    SessionState,
)
from .flows import SurveyFlow
from .resources import builtin_flow_map
from .store import EventStore


class SessionError(Exception):
    pass


class UnknownSessionError(SessionError):
    pass


class UnknownFlowError(SessionError):
    pass


class SessionService:
    def __init__(self, store: EventStore, accounts: AccountService,
                 flows: Optional[Dict[str, SurveyFlow]] = None,
                 config: EngineConfig = EngineConfig()):
        self.store = store
        self.accounts = accounts
        self.flows = flows if flows is not None else builtin_flow_map()
        self.config = config
        self._live: Dict[str, Tuple[DialogueEngine, SessionState]] = {}
        self._lock = threading.Lock()

    # -- session operations ------------------------------------------------

    def start_session(self, user_id: str, flow_id: str, now: int,
                      session_id: Optional[str] = None
                      ) -> Tuple[SessionState, EngineReply]:
        profile = self.accounts.get(user_id)
        try:
            flow = self.flows[flow_id]
        except KeyError:
            raise UnknownFlowError(f"unknown flow: {flow_id}") from None
        engine = DialogueEngine(
            flow, user_id=user_id,
            linked=profile.link_status == LINK_LINKED,
            config=self.config,
        )
        session_id = session_id or f"s-{uuid.uuid4().hex[:12]}"
        state, reply, events = engine.start(session_id, now)
        self._append(session_id, events, now)
        with self._lock:
            self._live[session_id] = (engine, state)
        return state, reply

    def handle_utterance(self, session_id: str, text: str, now: int) -> EngineReply:
        engine, state = self._session(session_id)
        reply, events = engine.handle_utterance(state, text, now)
        self._append(session_id, events, now)
        return reply

    def handle_timeout(self, session_id: str, now: int) -> EngineReply:
        engine, state = self._session(session_id)
        reply, events = engine.handle_timeout(state, now)
        self._append(session_id, events, now)
        return reply

    def state(self, session_id: str) -> SessionState:
        return self._session(session_id)[1]

    def sweep_timeouts(self, now: int) -> List[Tuple[str, EngineReply]]:
        """Inject a timeout into every live session whose deadline passed."""
        with self._lock:
            overdue = [sid for sid, (_, st) in self._live.items()
                       if not st.terminal and st.deadline is not None
                       and now > st.deadline]
        results = []
        for session_id in sorted(overdue):
            results.append((session_id, self.handle_timeout(session_id, now)))
        return results

    # -- helpers -----------------------------------------------------------

    def _session(self, session_id: str) -> Tuple[DialogueEngine, SessionState]:
        with self._lock:
            try:
                return self._live[session_id]
            except KeyError:
                raise UnknownSessionError(f"unknown session: {session_id}") from None

    def _append(self, session_id: str, events: List[Event], at: int) -> None:
        for kind, payload in events:
            self.store.append(session_id, kind, payload, at)
