"""HTTP + websocket gateway over the engine, store, and analytics.

Auth is bearer tokens: one admin token (config) plus per-user API tokens
issued at enrollment. User tokens only reach their own data. Timeouts
are enforced server-side by a sweeper thread; clients never need timers.
"""

from __future__ import annotations

import asyncio
import os
import secrets
import threading
import time
from datetime import date
from pathlib import Path
from typing import Dict, Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Query, WebSocket
from fastapi.responses import Response
from pydantic import BaseModel

from . import analytics
from .accounts import (
    AccountError,
    AccountService,
    BadCredentialsError,
    LinkStateError,
    UnknownUserError,
)
from .engine import EngineConfig, InvalidPhaseError
from .resources import default_config
from .scheduling import FLUIDMONITOR_TIMES, SLEEPY_TIMES, Schedule, next_invocation
from .sessions import SessionService, UnknownFlowError, UnknownSessionError
from .store import EventStore

TIMEOUT_WARNING_MS = 2000


def _now_ms() -> int:
    return int(time.time() * 1000)


def load_config(path: Optional[str] = None) -> Dict[str, str]:
    """Packaged defaults, optional config file, then SURVEYENGINE_* env."""
    config = default_config()
    if path:
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition(":")
            config[key.strip()] = value.strip()
    for key in list(config):
        env = os.environ.get(f"SURVEYENGINE_{key.upper()}")
        if env is not None:
            config[key] = env
    return config


class StartSessionBody(BaseModel):
    user_id: str
    flow_id: str


class UtteranceBody(BaseModel):
    text: str
    request_id: Optional[str] = None
    client_ts: Optional[int] = None


class EnrollBody(BaseModel):
    user_id: str
    display_name: str
    password: str
    timezone: str = "UTC"


class LinkBeginBody(BaseModel):
    user_id: str


class LinkConfirmBody(BaseModel):
    token: str
    password: str


class GoalBody(BaseModel):
    goal_ml: int
    mode: str


class Gateway:
    def __init__(self, store: EventStore, accounts: AccountService,
                 admin_token: str, timeout_ms: int = 10_000):
        self.store = store
        self.accounts = accounts
        self.admin_token = admin_token
        self.service = SessionService(store, accounts,
                                      config=EngineConfig(timeout_ms=timeout_ms))
        self.user_tokens: Dict[str, str] = {}  # token -> user_id
        self._idempotent: Dict[tuple, dict] = {}
        self._sweeper: Optional[threading.Thread] = None
        self._stop = threading.Event()

    def issue_token(self, user_id: str) -> str:
        token = secrets.token_urlsafe(18)
        self.user_tokens[token] = user_id
        return token

    def start_sweeper(self, interval_s: float = 0.5) -> None:
        def loop() -> None:
            while not self._stop.wait(interval_s):
                try:
                    self.service.sweep_timeouts(_now_ms())
                except Exception:
                    pass  # a broken session must not kill the sweeper
        self._sweeper = threading.Thread(target=loop, daemon=True)
        self._sweeper.start()

    def stop(self) -> None:
        self._stop.set()


def _reply_json(state, reply) -> dict:
    body = {
        "session_id": state.session_id,
        "say": reply.say,
        "session_status": reply.session_status.value,
    }
    if reply.recorded is not None:
        question_id, value = reply.recorded
        from .answers import to_payload, value_kind
        body["recorded"] = {
            "question_id": question_id,
            "value_kind": value_kind(value),
            "value_canonical": value.canonical(),
            "value": to_payload(value),
        }
    return body


def create_app(store: EventStore, accounts: AccountService,
               admin_token: str = "change-me", timeout_ms: int = 10_000,
               sweeper: bool = False) -> FastAPI:
    gw = Gateway(store, accounts, admin_token, timeout_ms)
    app = FastAPI(title="survey engine gateway")
    app.state.gateway = gw

    if sweeper:
        @app.on_event("startup")
        def _start_sweeper() -> None:
            gw.start_sweeper()

        @app.on_event("shutdown")
        def _stop_sweeper() -> None:
            gw.stop()

    def auth(authorization: Optional[str] = Header(default=None)) -> dict:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(401, "missing bearer token")
        token = authorization.removeprefix("Bearer ")
        if token == gw.admin_token:
            return {"role": "admin", "user_id": None}
        user_id = gw.user_tokens.get(token)
        if user_id is None:
            raise HTTPException(401, "unknown token")
        return {"role": "user", "user_id": user_id}

    def require_user(principal: dict, user_id: str) -> None:
        if principal["role"] == "admin":
            return
        if principal["user_id"] != user_id:
            raise HTTPException(403, "cross-user access denied")

    def session_user(session_id: str) -> str:
        try:
            return gw.service.state(session_id).user_id
        except UnknownSessionError:
            raise HTTPException(404, "unknown session") from None

    # -- users & linking ---------------------------------------------------

    @app.post("/v1/users", status_code=201)
    def enroll(body: EnrollBody, principal: dict = Depends(auth)):
        if principal["role"] != "admin":
            raise HTTPException(403, "admin only")
        try:
            profile = gw.accounts.enroll(body.user_id, body.display_name,
                                         body.password, at=_now_ms(),
                                         timezone=body.timezone)
        except AccountError as e:
            raise HTTPException(400, str(e)) from None
        return {"user_id": profile.user_id, "api_token": gw.issue_token(profile.user_id)}

    @app.post("/v1/link/begin")
    def link_begin(body: LinkBeginBody, principal: dict = Depends(auth)):
        require_user(principal, body.user_id)
        try:
            token = gw.accounts.begin_link(body.user_id, _now_ms())
        except UnknownUserError:
            raise HTTPException(404, "unknown user") from None
        except LinkStateError as e:
            raise HTTPException(409, str(e)) from None
        return {"token": token.token, "expires_at": token.expires_at}

    @app.post("/v1/link/confirm")
    def link_confirm(body: LinkConfirmBody, principal: dict = Depends(auth)):
        try:
            profile = gw.accounts.confirm_link(body.token, body.password, _now_ms())
        except BadCredentialsError as e:
            raise HTTPException(401, str(e)) from None
        require_user(principal, profile.user_id)
        return {"user_id": profile.user_id, "link_status": profile.link_status}

    @app.put("/v1/users/{user_id}/goal")
    def set_goal(user_id: str, body: GoalBody, principal: dict = Depends(auth)):
        require_user(principal, user_id)
        try:
            profile = gw.accounts.set_goal(user_id, body.goal_ml, body.mode, _now_ms())
        except UnknownUserError:
            raise HTTPException(404, "unknown user") from None
        except AccountError as e:
            raise HTTPException(400, str(e)) from None
        return {"user_id": user_id, "goal_ml": profile.fluid_goal_ml,
                "mode": profile.goal_mode}

    # -- sessions ----------------------------------------------------------

    @app.post("/v1/sessions", status_code=201)
    def start_session(body: StartSessionBody, principal: dict = Depends(auth)):
        require_user(principal, body.user_id)
        try:
            state, reply = gw.service.start_session(body.user_id, body.flow_id,
                                                    _now_ms())
        except UnknownUserError:
            raise HTTPException(404, "unknown user") from None
        except UnknownFlowError:
            raise HTTPException(404, "unknown flow") from None
        return {"session_id": state.session_id, "prompt": reply.say,
                "session_status": reply.session_status.value}

    @app.post("/v1/sessions/{session_id}/utterances")
    def utterance(session_id: str, body: UtteranceBody,
                  principal: dict = Depends(auth)):
        require_user(principal, session_user(session_id))
        if body.request_id is not None:
            cached = gw._idempotent.get((session_id, body.request_id))
            if cached is not None:
                return cached
        state = gw.service.state(session_id)
        if state.terminal:
            raise HTTPException(410, f"session is {state.phase.value}")
        try:
            reply = gw.service.handle_utterance(session_id, body.text, _now_ms())
        except InvalidPhaseError as e:
            raise HTTPException(409, str(e)) from None
        result = _reply_json(state, reply)
        if body.request_id is not None:
            gw._idempotent[(session_id, body.request_id)] = result
        return result

    @app.post("/v1/sessions/{session_id}/timeout")
    def timeout(session_id: str, principal: dict = Depends(auth)):
        require_user(principal, session_user(session_id))
        state = gw.service.state(session_id)
        if state.terminal:
            raise HTTPException(410, f"session is {state.phase.value}")
        deadline = state.deadline if state.deadline is not None else _now_ms()
        try:
            reply = gw.service.handle_timeout(session_id, max(_now_ms(), deadline + 1))
        except InvalidPhaseError as e:
            raise HTTPException(409, str(e)) from None
        return _reply_json(state, reply)

    # -- analytics ---------------------------------------------------------

    def _profile_or_404(user_id: str):
        try:
            return gw.accounts.get(user_id)
        except UnknownUserError:
            raise HTTPException(404, "unknown user") from None

    @app.get("/v1/users/{user_id}/fluid/summary")
    def fluid_summary(user_id: str, principal: dict = Depends(auth),
                      from_: Optional[str] = Query(default=None, alias="from"),
                      to: Optional[str] = None):
        require_user(principal, user_id)
        profile = _profile_or_404(user_id)
        start = date.fromisoformat(from_) if from_ else None
        end = date.fromisoformat(to) if to else None
        days = sorted({d for (u, d) in
                       analytics.fluid_sessions_by_day(
                           gw.store, {user_id: profile.timezone})
                       if u == user_id})
        rows = []
        for day in days:
            if start is not None and day < start:
                continue
            if end is not None and day > end:
                continue
            s = analytics.fluid_day_summary(gw.store, profile, day)
            rows.append({"user_id": s.user_id, "local_date": s.local_date.isoformat(),
                         "total_ml": s.total_ml, "goal_ml": s.goal_ml,
                         "mode": s.mode, "status": s.status})
        return {"summaries": rows}

    @app.get("/v1/users/{user_id}/fluid/remaining")
    def fluid_remaining(user_id: str, principal: dict = Depends(auth)):
        require_user(principal, user_id)
        profile = _profile_or_404(user_id)
        return analytics.remaining_today(gw.store, profile, _now_ms())

    @app.get("/v1/users/{user_id}/sleep/summary")
    def sleep_summary(user_id: str, principal: dict = Depends(auth),
                      from_: Optional[str] = Query(default=None, alias="from"),
                      to: Optional[str] = None):
        require_user(principal, user_id)
        profile = _profile_or_404(user_id)
        rows = []
        for night in analytics.sleep_nights(gw.store, profile):
            day = night.diary_date
            if from_ and day < date.fromisoformat(from_):
                continue
            if to and day > date.fromisoformat(to):
                continue
            rows.append({
                "user_id": night.user_id,
                "diary_date": day.isoformat(),
                "tib_min": night.tib_min,
                "tst_min": night.tst_min,
                "sleep_efficiency": night.sleep_efficiency,
                "quality": night.quality,
                "flags": list(night.flags),
            })
        return {"nights": rows}

    @app.get("/v1/users/{user_id}/schedule")
    def user_schedule(user_id: str, principal: dict = Depends(auth)):
        require_user(principal, user_id)
        profile = _profile_or_404(user_id)
        out = []
        for flow_id, times in (("fluidmonitor", FLUIDMONITOR_TIMES),
                               ("sleepy", SLEEPY_TIMES)):
            sched = Schedule(schedule_id=f"{flow_id}-default", flow_id=flow_id,
                             local_times=times, timezone=profile.timezone)
            out.append({"flow_id": flow_id,
                        "next_invocation_ms": next_invocation(sched, _now_ms())})
        return {"schedules": out}

    @app.get("/v1/aggregates/fluid/mean")
    def aggregate_mean(principal: dict = Depends(auth),
                       from_: Optional[str] = Query(default=None, alias="from"),
                      to: Optional[str] = None):
        if principal["role"] != "admin":
            raise HTTPException(403, "admin only")
        series = analytics.mean_daily_consumption(
            gw.store, list(gw.accounts.users().values()),
            from_date=date.fromisoformat(from_) if from_ else None,
            to_date=date.fromisoformat(to) if to else None)
        return {"series": series}

    @app.get("/v1/export")
    def export(principal: dict = Depends(auth), users: Optional[str] = None,
               format: str = "csv"):
        if principal["role"] != "admin":
            raise HTTPException(403, "admin only")
        if format not in ("csv", "jsonl"):
            raise HTTPException(400, "unknown format")
        data = gw.store.export(users=users.split(",") if users else None,
                               format=format)
        media = "text/csv" if format == "csv" else "application/x-ndjson"
        return Response(content=data, media_type=media)

    # -- push channel ------------------------------------------------------

    @app.websocket("/v1/chat/{session_id}")
    async def chat_channel(ws: WebSocket, session_id: str,
                           token: Optional[str] = None, from_seq: int = 1):
        principal_user = None
        if token == gw.admin_token:
            principal_user = "*"
        else:
            principal_user = gw.user_tokens.get(token or "")
        if principal_user is None:
            await ws.close(code=4401)
            return
        try:
            state = gw.service.state(session_id)
        except UnknownSessionError:
            await ws.close(code=4404)
            return
        if principal_user not in ("*", state.user_id):
            await ws.close(code=4403)
            return
        await ws.accept()
        last_seq = from_seq - 1
        warned_deadline: Optional[int] = None

        async def pump() -> None:
            nonlocal last_seq, warned_deadline
            while True:
                for record in gw.store.read_stream(session_id, last_seq + 1):
                    await ws.send_json({"type": "event", **record.to_json()})
                    last_seq = record.seq
                st = gw.service.state(session_id)
                if st.terminal:
                    await ws.send_json({"type": "end",
                                        "session_status": st.phase.value})
                    return
                if (st.deadline is not None and warned_deadline != st.deadline
                        and _now_ms() >= st.deadline - TIMEOUT_WARNING_MS):
                    warned_deadline = st.deadline
                    await ws.send_json({"type": "timeout_warning",
                                        "deadline": st.deadline})
                await asyncio.sleep(0.1)

        async def receive() -> None:
            while True:
                message = await ws.receive_json()
                text = message.get("text", "")
                try:
                    gw.service.handle_utterance(session_id, text, _now_ms())
                except (InvalidPhaseError, UnknownSessionError):
                    await ws.send_json({"type": "error",
                                        "error": "invalid session phase"})

        pump_task = asyncio.create_task(pump())
        recv_task = asyncio.create_task(receive())
        try:
            done, pending = await asyncio.wait(
                {pump_task, recv_task}, return_when=asyncio.FIRST_COMPLETED)
        finally:
            for task in (pump_task, recv_task):
                task.cancel()
        try:
            await ws.close()
        except Exception:
            pass

    return app


def main() -> None:
    """Run the gateway with uvicorn (config file via SURVEYENGINE_CONFIG)."""
    import uvicorn

    config = load_config(os.environ.get("SURVEYENGINE_CONFIG"))
    store = EventStore(Path(config["store_path"]))
    accounts = AccountService(store)
    app = create_app(store, accounts,
                     admin_token=config.get("admin_token", "change-me"),
                     timeout_ms=int(config.get("timeout_ms", "10000")),
                     sweeper=True)
    uvicorn.run(app, host=config.get("bind_host", "127.0.0.1"),
                port=int(config.get("bind_port", "8080")))


if __name__ == "__main__":
    main()
