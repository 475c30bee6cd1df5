"""Seeded cohort generator: populates a store with realistic survey data.

Per user-day: three fluid check-ins (morning/afternoon/evening) and one
sleep diary, all driven through the live dialogue engine so the log is
indistinguishable from real sessions. The same seed reproduces the store
byte for byte.
"""

from __future__ import annotations

import random
from datetime import date, timedelta
from typing import List
from zoneinfo import ZoneInfo

from .accounts import AccountService
from .answers import QUALITY_LABELS
from .scheduling import FLUIDMONITOR_TIMES, local_instant
from .sessions import SessionService
from .store import EventStore

BASE_DATE = date(2018, 6, 1)
DEFAULT_TZ = "America/New_York"


class SimulationError(Exception):
    pass


def _run_session(service: SessionService, user_id: str, flow_id: str,
                 session_id: str, start_ms: int, utterances: List[str]) -> None:
    _, reply = service.start_session(user_id, flow_id, start_ms,
                                     session_id=session_id)
    at = start_ms
    for text in utterances:
        at += 4000  # a few seconds per turn, well inside the deadline
        reply = service.handle_utterance(session_id, text, at)
    if not service.state(session_id).terminal:
        raise SimulationError(
            f"scripted session {session_id} did not finish (said {reply.say!r})")


def _with_confirms(answers: List[str]) -> List[str]:
    out = []
    for answer in answers:
        out.extend([answer, "yes"])
    return out


def _sleep_answers(rng: random.Random) -> List[str]:
    bed_min = rng.randrange(21 * 60 + 30, 23 * 60 + 30, 5)
    try_min = bed_min + rng.randrange(5, 45, 5)
    wake_min = rng.randrange(5 * 60 + 45, 7 * 60 + 30, 5)
    out_min = wake_min + rng.randrange(5, 35, 5)
    sol = rng.randrange(5, 45, 5)
    wakes = rng.randrange(0, 4)
    waso = 0 if wakes == 0 else wakes * rng.randrange(5, 25, 5)

    def clock(total_min: int) -> str:
        hour24, mm = divmod(total_min % 1440, 60)
        suffix = "am" if hour24 < 12 else "pm"
        return f"{hour24 % 12 or 12}:{mm:02d}{suffix}"

    awakenings = "didn't wake up" if wakes == 0 else f"{wakes} times {waso} min"
    drinks = rng.randrange(0, 3)
    alcohol = "none" if drinks == 0 else f"{drinks} at {clock(rng.randrange(18 * 60, 21 * 60, 15))}"
    return [
        clock(bed_min),
        clock(try_min),
        f"{sol} min",
        awakenings,
        clock(wake_min),
        clock(out_min),
        rng.choice(QUALITY_LABELS),
        rng.choice(["none", "20 min", "30 min", "40 min"]),
        alcohol,
        "none",
        rng.choice(["slept fine", "restless night", "woke up early",
                    "no complaints"]),
    ]


def simulate_cohort(store: EventStore, users: int, days: int, seed: int,
                    timezone: str = DEFAULT_TZ) -> dict:
    """Populate ``store`` with a seeded cohort; returns count summary."""
    if users <= 0 or days <= 0:
        raise SimulationError("users and days must be positive")
    rng = random.Random(seed)
    tz = ZoneInfo(timezone)
    accounts = AccountService(store)
    service = SessionService(store, accounts)

    user_ids = [f"P{i:02d}" for i in range(1, users + 1)]
    enroll_ms = local_instant(BASE_DATE - timedelta(days=1), 12 * 60, tz)
    for user_id in user_ids:
        accounts.enroll(
            user_id, f"Participant {user_id}", f"pw-{user_id}",
            at=int(enroll_ms.timestamp() * 1000),
            timezone=timezone,
            salt=f"{seed:08x}{user_id}",
        )

    fluid_sessions = 0
    sleep_sessions = 0
    for day_index in range(days):
        day = BASE_DATE + timedelta(days=day_index)
        for user_id in user_ids:
            for k, minutes in enumerate(FLUIDMONITOR_TIMES):
                start = local_instant(day, minutes + 3, tz)
                cups = rng.choice([1, 1, 2, 2, 2, 3])
                health = rng.randrange(2, 6)
                _run_session(
                    service, user_id, "fluidmonitor",
                    session_id=f"sim-{seed}-{user_id}-d{day_index:02d}-f{k}",
                    start_ms=int(start.timestamp() * 1000),
                    utterances=_with_confirms(
                        [user_id, str(health), f"{cups} cups"]),
                )
                fluid_sessions += 1
            start = local_instant(day, 7 * 60 + 45, tz)
            _run_session(
                service, user_id, "sleepy",
                session_id=f"sim-{seed}-{user_id}-d{day_index:02d}-sleep",
                start_ms=int(start.timestamp() * 1000),
                utterances=_with_confirms(_sleep_answers(rng)),
            )
            sleep_sessions += 1

    return {
        "users": users,
        "days": days,
        "user_days": users * days,
        "fluid_sessions": fluid_sessions,
        "sleep_sessions": sleep_sessions,
    }
