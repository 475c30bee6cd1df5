"""Derived metrics: sleep-night arithmetic and fluid-consumption summaries.

All reads go over the event store; nothing here mutates state, so these
run safely alongside live sessions.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from typing import Dict, List, Optional, Sequence, Tuple
from zoneinfo import ZoneInfo

from .answers import (
    CUP_ML,
    AnswerValue,
    ClockTime,
    CountPlusDuration,
    CountPlusTime,
    Duration,
    Quality,
    Text,
    from_payload,
)
from .accounts import GOAL, LIMIT, UserProfile
from .store import EventStore, iter_session_streams

STATUS_UNDER = "UNDER"
STATUS_MET = "MET"
STATUS_EXCEEDED = "EXCEEDED"

INCONSISTENT = "INCONSISTENT"

FLUID_SUMMARY_HEADER = "user_id,local_date,total_ml,goal_ml,mode,status"
SLEEP_SUMMARY_HEADER = "user_id,diary_date,tib_min,tst_min,sleep_efficiency,quality,flags"


class AnalyticsError(Exception):
    pass


class UnanchorableNightError(AnalyticsError):
    pass


@dataclass(frozen=True)
class FluidDaySummary:
    user_id: str
    local_date: date
    total_ml: int
    goal_ml: int
    mode: str
    status: str
    per_session: Tuple[Tuple[str, int], ...] = ()


@dataclass
class SleepNight:
    user_id: str
    diary_date: date  # the morning of waking
    into_bed: datetime
    try_sleep: datetime
    final_awakening: datetime
    out_of_bed: datetime
    sol_min: int
    waso_min: int
    nap_min: int
    awakening_count: int
    quality: Optional[int]
    alcohol: Optional[Tuple[int, Optional[int]]]
    meds: Optional[str]
    notes: Optional[str]
    tib_min: Optional[int] = None
    tst_min: Optional[int] = None
    sleep_efficiency: Optional[float] = None
    flags: Tuple[str, ...] = ()


def _status(total_ml: int, goal_ml: int) -> str:
    # equality counts as MET in both GOAL and LIMIT modes
    if total_ml < goal_ml:
        return STATUS_UNDER
    if total_ml == goal_ml:
        return STATUS_MET
    return STATUS_EXCEEDED


def _anchor_before(successor: datetime, clock_minutes: int, tz: ZoneInfo) -> datetime:
    """Latest instant with the given wall-clock time at or before
    ``successor``, within the preceding 24 hours."""
    local = successor.astimezone(tz)
    candidate = local.replace(hour=clock_minutes // 60, minute=clock_minutes % 60,
                              second=0, microsecond=0)
    if candidate > local:
        candidate -= timedelta(days=1)
    return candidate.astimezone(timezone.utc)


def anchor_night(answers: Dict[str, AnswerValue], diary_date: date,
                 tz_name: str, user_id: str = "") -> SleepNight:
    """Place the four diary clock times on real instants.

    ``out_of_bed`` and ``final_awakening`` land on the diary date (the
    morning of waking); ``try_sleep`` and ``into_bed`` each take the
    latest instant at or before their successor within the preceding
    24 hours. Violated chronology raises UnanchorableNightError.
    """
    tz = ZoneInfo(tz_name)
    clocks = {}
    for key in ("into_bed", "try_sleep", "final_awakening", "out_of_bed"):
        value = answers.get(key)
        if not isinstance(value, ClockTime):
            raise AnalyticsError(f"missing or non-clock answer for {key}")
        clocks[key] = value.minutes

    out_local = datetime(diary_date.year, diary_date.month, diary_date.day,
                         clocks["out_of_bed"] // 60, clocks["out_of_bed"] % 60,
                         tzinfo=tz)
    out_of_bed = out_local.astimezone(timezone.utc)
    final_local = out_local.replace(hour=clocks["final_awakening"] // 60,
                                    minute=clocks["final_awakening"] % 60)
    if final_local > out_local:
        raise UnanchorableNightError(
            "final awakening is after getting out of bed on the waking morning")
    final_awakening = final_local.astimezone(timezone.utc)
    try_sleep = _anchor_before(final_awakening, clocks["try_sleep"], tz)
    into_bed = _anchor_before(try_sleep, clocks["into_bed"], tz)
    if not into_bed <= try_sleep <= final_awakening <= out_of_bed:
        raise UnanchorableNightError("no chronological assignment within 24 h")

    awakenings = answers.get("awakenings")
    if isinstance(awakenings, CountPlusDuration):
        awakening_count, waso_min = awakenings.count, awakenings.minutes
    else:
        awakening_count, waso_min = 0, 0
    sol = answers.get("sleep_onset")
    sol_min = sol.minutes if isinstance(sol, Duration) else 0
    nap = answers.get("nap")
    nap_min = nap.minutes if isinstance(nap, Duration) else 0
    quality = answers.get("quality")
    alcohol = answers.get("alcohol")
    meds = answers.get("medication")
    notes = answers.get("notes")

    return SleepNight(
        user_id=user_id,
        diary_date=diary_date,
        into_bed=into_bed,
        try_sleep=try_sleep,
        final_awakening=final_awakening,
        out_of_bed=out_of_bed,
        sol_min=sol_min,
        waso_min=waso_min,
        nap_min=nap_min,
        awakening_count=awakening_count,
        quality=quality.value if isinstance(quality, Quality) else None,
        alcohol=(alcohol.count, alcohol.time_minutes)
        if isinstance(alcohol, CountPlusTime) else None,
        meds=meds.text if isinstance(meds, Text) else None,
        notes=notes.text if isinstance(notes, Text) else None,
    )


def derive_sleep(night: SleepNight) -> SleepNight:
    """Fill in time-in-bed, total sleep time, and efficiency."""
    flags = list(night.flags)
    tib_min = int((night.out_of_bed - night.into_bed).total_seconds() // 60)
    sleep_period = int((night.final_awakening - night.try_sleep).total_seconds() // 60)
    tst_min = sleep_period - night.sol_min - night.waso_min
    if tst_min < 0:
        tst_min = 0
        if INCONSISTENT not in flags:
            flags.append(INCONSISTENT)
    if night.waso_min > max(sleep_period - night.sol_min, 0) and INCONSISTENT not in flags:
        flags.append(INCONSISTENT)
    night.tib_min = tib_min
    night.tst_min = tst_min
    night.sleep_efficiency = (tst_min / tib_min) if tib_min > 0 else 0.0
    night.flags = tuple(flags)
    return night


# -- event-log scans -------------------------------------------------------

def _local_date(at_ms: int, tz: ZoneInfo) -> date:
    return datetime.fromtimestamp(at_ms / 1000, tz=timezone.utc).astimezone(tz).date()


def fluid_sessions_by_day(store: EventStore, tz_by_user: Dict[str, str]
                          ) -> Dict[Tuple[str, date], List[Tuple[str, int]]]:
    """(user, local date) -> list of (session_id, ml) fluid commits."""
    out: Dict[Tuple[str, date], List[Tuple[str, int]]] = {}
    for records in iter_session_streams(store):
        head = records[0].payload
        if head["flow_id"] != "fluidmonitor":
            continue
        user_id = head["user_id"]
        tz = ZoneInfo(tz_by_user.get(user_id, "UTC"))
        for record in records:
            if record.kind != "ANSWER_COMMITTED":
                continue
            if record.payload.get("value_kind") != "VOLUME":
                continue
            ml = record.payload["value"]["ml"]
            key = (user_id, _local_date(record.at, tz))
            out.setdefault(key, []).append((head["session_id"], ml))
    return out


def fluid_day_summary(store: EventStore, profile: UserProfile,
                      local_date: date) -> FluidDaySummary:
    """Sum of the user's committed fluid volumes on one local day."""
    sessions = fluid_sessions_by_day(store, {profile.user_id: profile.timezone}
                                     ).get((profile.user_id, local_date), [])
    total = sum(ml for _, ml in sessions)
    return FluidDaySummary(
        user_id=profile.user_id,
        local_date=local_date,
        total_ml=total,
        goal_ml=profile.fluid_goal_ml,
        mode=profile.goal_mode,
        status=_status(total, profile.fluid_goal_ml),
        per_session=tuple(sessions),
    )


def remaining_today(store: EventStore, profile: UserProfile, now_ms: int) -> dict:
    """How much more to drink today (GOAL) or headroom left (LIMIT)."""
    tz = ZoneInfo(profile.timezone)
    today = _local_date(now_ms, tz)
    summary = fluid_day_summary(store, profile, today)
    remaining_ml = max(profile.fluid_goal_ml - summary.total_ml, 0)
    return {
        "user_id": profile.user_id,
        "local_date": today.isoformat(),
        "mode": profile.goal_mode,
        "total_ml": summary.total_ml,
        "goal_ml": profile.fluid_goal_ml,
        "remaining_ml": remaining_ml,
        "remaining_cups": round(remaining_ml / CUP_ML, 1),
        "met": remaining_ml == 0,
    }


def mean_daily_consumption(store: EventStore, profiles: Sequence[UserProfile],
                           from_date: Optional[date] = None,
                           to_date: Optional[date] = None
                           ) -> List[dict]:
    """Per-date mean/min/max of user daily totals over users with data."""
    tz_by_user = {p.user_id: p.timezone for p in profiles}
    user_ids = set(tz_by_user)
    by_day = fluid_sessions_by_day(store, tz_by_user)
    totals: Dict[date, List[int]] = {}
    for (user_id, day), sessions in by_day.items():
        if user_id not in user_ids:
            continue
        if from_date is not None and day < from_date:
            continue
        if to_date is not None and day > to_date:
            continue
        totals.setdefault(day, []).append(sum(ml for _, ml in sessions))
    series = []
    for day in sorted(totals):
        values = totals[day]
        series.append({
            "local_date": day.isoformat(),
            "mean_ml": sum(values) / len(values),
            "min_ml": min(values),
            "max_ml": max(values),
            "n": len(values),
        })
    return series


def sleep_nights(store: EventStore, profile: UserProfile) -> List[SleepNight]:
    """All derivable sleep nights for a user, keyed by waking morning."""
    nights = []
    for records in iter_session_streams(store):
        head = records[0].payload
        if head["flow_id"] != "sleepy" or head["user_id"] != profile.user_id:
            continue
        completed = any(r.kind == "SESSION_COMPLETED" for r in records)
        if not completed:
            continue
        answers: Dict[str, AnswerValue] = {}
        last_at = records[-1].at
        for record in records:
            if record.kind == "ANSWER_COMMITTED":
                answers[record.payload["question_id"]] = from_payload(
                    record.payload["value"])
        tz = ZoneInfo(profile.timezone)
        diary_date = _local_date(last_at, tz)
        try:
            night = anchor_night(answers, diary_date, profile.timezone,
                                 user_id=profile.user_id)
        except AnalyticsError:
            continue
        nights.append(derive_sleep(night))
    nights.sort(key=lambda n: n.diary_date)
    return nights


# -- CSV exports -----------------------------------------------------------

def fluid_summary_csv(summaries: Sequence[FluidDaySummary]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FLUID_SUMMARY_HEADER.split(","))
    for s in summaries:
        writer.writerow([s.user_id, s.local_date.isoformat(), s.total_ml,
                         s.goal_ml, s.mode, s.status])
    return buf.getvalue().encode("utf-8")


def sleep_summary_csv(nights: Sequence[SleepNight]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SLEEP_SUMMARY_HEADER.split(","))
    for n in nights:
        writer.writerow([
            n.user_id, n.diary_date.isoformat(), n.tib_min, n.tst_min,
            f"{n.sleep_efficiency:.3f}" if n.sleep_efficiency is not None else "",
            n.quality if n.quality is not None else "",
            "|".join(n.flags),
        ])
    return buf.getvalue().encode("utf-8")
