"""Typed answer values collected by survey questions.

Every value knows how to render itself back to the user (``canonical()``)
and how to serialize to/from a JSON-friendly payload for the event log.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

# Conversion constants. Storage is integer milliliters; cups are the
# user-facing unit.
CUP_ML = 236.588
FLOZ_ML = 29.5735


def minutes_to_clock(minutes: int) -> str:
    """Render minutes-since-midnight as a 12-hour clock string."""
    if not 0 <= minutes <= 1439:
        raise ValueError(f"clock minutes out of range: {minutes}")
    hour24, mm = divmod(minutes, 60)
    suffix = "am" if hour24 < 12 else "pm"
    hour12 = hour24 % 12 or 12
    return f"{hour12}:{mm:02d}{suffix}"


def minutes_to_duration_text(minutes: int) -> str:
    hours, mins = divmod(minutes, 60)
    if hours and mins:
        return f"{hours} hr {mins} min"
    if hours:
        return f"{hours} hr"
    return f"{mins} min"


@dataclass(frozen=True)
class ClockTime:
    minutes: int  # since midnight, 0..1439

    def __post_init__(self) -> None:
        if not 0 <= self.minutes <= 1439:
            raise ValueError(f"clock time out of range: {self.minutes}")

    def canonical(self) -> str:
        return minutes_to_clock(self.minutes)


@dataclass(frozen=True)
class Duration:
    minutes: int

    def __post_init__(self) -> None:
        if self.minutes < 0:
            raise ValueError(f"negative duration: {self.minutes}")

    def canonical(self) -> str:
        return minutes_to_duration_text(self.minutes)


@dataclass(frozen=True)
class Count:
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"negative count: {self.n}")

    def canonical(self) -> str:
        return str(self.n)


@dataclass(frozen=True)
class Volume:
    ml: int

    def __post_init__(self) -> None:
        if self.ml < 0:
            raise ValueError(f"negative volume: {self.ml}")

    def canonical(self) -> str:
        return f"{self.ml} ml"


@dataclass(frozen=True)
class Scale:
    value: int  # 1..5

    def __post_init__(self) -> None:
        if not 1 <= self.value <= 5:
            raise ValueError(f"scale out of range: {self.value}")

    def canonical(self) -> str:
        return str(self.value)


QUALITY_LABELS = ("Very poor", "Poor", "Fair", "Good", "Very good")


@dataclass(frozen=True)
class Quality:
    value: int  # 1 = Very poor .. 5 = Very good

    def __post_init__(self) -> None:
        if not 1 <= self.value <= 5:
            raise ValueError(f"quality out of range: {self.value}")

    def canonical(self) -> str:
        return QUALITY_LABELS[self.value - 1]


@dataclass(frozen=True)
class CountPlusDuration:
    count: int
    minutes: int

    def __post_init__(self) -> None:
        if self.count < 0 or self.minutes < 0:
            raise ValueError("negative count or duration")

    def canonical(self) -> str:
        if self.count == 0:
            return "0 times"
        return f"{self.count} times {minutes_to_duration_text(self.minutes)}"


@dataclass(frozen=True)
class CountPlusTime:
    count: int
    time_minutes: Optional[int]  # clock minutes, or None when no time given

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("negative count")
        if self.time_minutes is not None and not 0 <= self.time_minutes <= 1439:
            raise ValueError(f"clock time out of range: {self.time_minutes}")

    def canonical(self) -> str:
        if self.count == 0 and self.time_minutes is None:
            return "none"
        if self.time_minutes is None:
            return str(self.count)
        return f"{self.count} at {minutes_to_clock(self.time_minutes)}"


@dataclass(frozen=True)
class Text:
    text: str

    def canonical(self) -> str:
        return self.text


@dataclass(frozen=True)
class NoAnswer:
    """Explicit empty answer ('none'/'skip' on an optional question)."""

    def canonical(self) -> str:
        return "none"


AnswerValue = Union[
    ClockTime,
    Duration,
    Count,
    Volume,
    Scale,
    Quality,
    CountPlusDuration,
    CountPlusTime,
    Text,
    NoAnswer,
]

_KIND_BY_TYPE = {
    ClockTime: "CLOCK_TIME",
    Duration: "DURATION",
    Count: "COUNT",
    Volume: "VOLUME",
    Scale: "SCALE",
    Quality: "QUALITY",
    CountPlusDuration: "COUNT_PLUS_DURATION",
    CountPlusTime: "COUNT_PLUS_TIME",
    Text: "TEXT",
    NoAnswer: "NONE",
}


def value_kind(value: AnswerValue) -> str:
    return _KIND_BY_TYPE[type(value)]


def to_payload(value: AnswerValue) -> dict:
    """JSON-friendly representation for the event log."""
    kind = value_kind(value)
    payload: dict = {"kind": kind}
    if isinstance(value, ClockTime):
        payload["minutes"] = value.minutes
    elif isinstance(value, Duration):
        payload["minutes"] = value.minutes
    elif isinstance(value, Count):
        payload["n"] = value.n
    elif isinstance(value, Volume):
        payload["ml"] = value.ml
    elif isinstance(value, (Scale, Quality)):
        payload["value"] = value.value
    elif isinstance(value, CountPlusDuration):
        payload["count"] = value.count
        payload["minutes"] = value.minutes
    elif isinstance(value, CountPlusTime):
        payload["count"] = value.count
        payload["time_minutes"] = value.time_minutes
    elif isinstance(value, Text):
        payload["text"] = value.text
    return payload


def from_payload(payload: dict) -> AnswerValue:
    kind = payload["kind"]
    if kind == "CLOCK_TIME":
        return ClockTime(payload["minutes"])
    if kind == "DURATION":
        return Duration(payload["minutes"])
    if kind == "COUNT":
        return Count(payload["n"])
    if kind == "VOLUME":
        return Volume(payload["ml"])
    if kind == "SCALE":
        return Scale(payload["value"])
    if kind == "QUALITY":
        return Quality(payload["value"])
    if kind == "COUNT_PLUS_DURATION":
        return CountPlusDuration(payload["count"], payload["minutes"])
    if kind == "COUNT_PLUS_TIME":
        return CountPlusTime(payload["count"], payload.get("time_minutes"))
    if kind == "TEXT":
        return Text(payload["text"])
    if kind == "NONE":
        return NoAnswer()
    raise ValueError(f"unknown answer kind: {kind}")
