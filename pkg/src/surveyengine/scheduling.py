"""Survey invocation schedules and nudge (reminder) records.

Times are wall-clock minutes in the user's IANA zone. DST: a skipped
wall time fires at the first valid instant after it; an ambiguous wall
time fires at the earlier offset.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date, datetime, timedelta, timezone
from typing import Dict, List, Sequence, Tuple
from zoneinfo import ZoneInfo

FLUIDMONITOR_TIMES = (9 * 60, 15 * 60, 21 * 60)   # 09:00, 15:00, 21:00
SLEEPY_TIMES = (8 * 60,)                           # 08:00, after waking

NUDGE_PENDING = "PENDING"
NUDGE_FIRED = "FIRED"
NUDGE_COMPLETED = "COMPLETED_SESSION"
NUDGE_MISSED = "MISSED"

# No session started within this window after firing counts as MISSED.
MISS_GRACE_MS = 3 * 60 * 60 * 1000


class ScheduleError(Exception):
    pass


@dataclass(frozen=True)
class Schedule:
    schedule_id: str
    flow_id: str
    local_times: Tuple[int, ...]  # minutes since local midnight, increasing
    timezone: str

    def __post_init__(self) -> None:
        if not self.local_times:
            raise ScheduleError("schedule needs at least one time")
        if list(self.local_times) != sorted(set(self.local_times)):
            raise ScheduleError("local_times must be strictly increasing")
        if any(t < 0 or t > 1439 for t in self.local_times):
            raise ScheduleError("local_times must be within 0..1439")


@dataclass(frozen=True)
class Nudge:
    user_id: str
    flow_id: str
    fire_at: int  # UTC ms
    status: str = NUDGE_PENDING


def _ms(dt: datetime) -> int:
    return int(dt.timestamp() * 1000)


def local_instant(day: date, minutes: int, tz: ZoneInfo) -> datetime:
    """UTC instant for a wall-clock time on a local day (DST rules above)."""
    naive = datetime(day.year, day.month, day.day) + timedelta(minutes=minutes)
    aware = naive.replace(tzinfo=tz, fold=0)
    utc = aware.astimezone(timezone.utc)
    if utc.astimezone(tz).replace(tzinfo=None) == naive:
        return utc
    # skipped wall time: advance minute by minute to the first valid one
    probe = naive
    while True:
        probe += timedelta(minutes=1)
        aware = probe.replace(tzinfo=tz, fold=0)
        utc = aware.astimezone(timezone.utc)
        if utc.astimezone(tz).replace(tzinfo=None) == probe:
            return utc


def next_invocation(schedule: Schedule, now_ms: int) -> int:
    """Earliest scheduled instant strictly after ``now_ms`` (UTC ms)."""
    tz = ZoneInfo(schedule.timezone)
    now = datetime.fromtimestamp(now_ms / 1000, tz=timezone.utc)
    local_day = now.astimezone(tz).date()
    for offset in range(3):  # today, tomorrow, +1 safety margin for DST edges
        day = local_day + timedelta(days=offset)
        for minutes in schedule.local_times:
            instant = local_instant(day, minutes, tz)
            if _ms(instant) > now_ms:
                return _ms(instant)
    raise ScheduleError("no next invocation found")  # unreachable


def invocations_in_window(schedule: Schedule, t0_ms: int, t1_ms: int) -> List[int]:
    """All scheduled instants in [t0, t1), ascending."""
    if t0_ms >= t1_ms:
        return []
    out = []
    t = t0_ms - 1
    while True:
        t = next_invocation(schedule, t)
        if t >= t1_ms:
            break
        out.append(t)
    return out


class NudgeBook:
    """Tracks nudges per user; creation is idempotent over overlapping
    windows. Mutations for one user are expected to be serialized by the
    caller."""

    def __init__(self) -> None:
        self._nudges: Dict[Tuple[str, str, int], Nudge] = {}

    def due_nudges(self, schedules: Dict[str, Sequence[Schedule]],
                   t0_ms: int, t1_ms: int) -> List[Nudge]:
        """One PENDING nudge per (user, scheduled instant) in [t0, t1)."""
        if t0_ms >= t1_ms:
            raise ScheduleError("window start must precede end")
        created: List[Nudge] = []
        for user_id in sorted(schedules):
            for schedule in schedules[user_id]:
                for fire_at in invocations_in_window(schedule, t0_ms, t1_ms):
                    key = (user_id, schedule.flow_id, fire_at)
                    if key not in self._nudges:
                        self._nudges[key] = Nudge(
                            user_id=user_id, flow_id=schedule.flow_id,
                            fire_at=fire_at)
                    created.append(self._nudges[key])
        return created

    def fire(self, nudge: Nudge) -> Nudge:
        return self._transition(nudge, NUDGE_PENDING, NUDGE_FIRED)

    def mark_outcome(self, nudge: Nudge, outcome: str) -> Nudge:
        if outcome not in (NUDGE_COMPLETED, NUDGE_MISSED):
            raise ScheduleError(f"invalid outcome: {outcome}")
        return self._transition(nudge, NUDGE_FIRED, outcome)

    def _transition(self, nudge: Nudge, expected: str, new_status: str) -> Nudge:
        key = (nudge.user_id, nudge.flow_id, nudge.fire_at)
        current = self._nudges.get(key)
        if current is None:
            raise ScheduleError("unknown nudge")
        if current.status != expected:
            raise ScheduleError(
                f"illegal transition {current.status} -> {new_status}")
        updated = replace(current, status=new_status)
        self._nudges[key] = updated
        return updated

    def all_nudges(self) -> List[Nudge]:
        return [self._nudges[k] for k in sorted(self._nudges)]

    def adherence_rate(self) -> float:
        """Completed fraction of all terminally-resolved nudges."""
        completed = sum(1 for n in self._nudges.values() if n.status == NUDGE_COMPLETED)
        missed = sum(1 for n in self._nudges.values() if n.status == NUDGE_MISSED)
        total = completed + missed
        return completed / total if total else 0.0
