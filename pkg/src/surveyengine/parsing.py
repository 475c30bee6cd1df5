"""Deterministic grammar parsers: free-text utterance -> typed AnswerValue.

All parsers are total: any input maps to a success or a typed failure,
never an exception. Successful outcomes carry a ``normalized_echo`` that
reparses to an equal value (used for read-back confirmation).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .answers import (
    CUP_ML,
    FLOZ_ML,
    AnswerValue,
    ClockTime,
    CountPlusDuration,
    CountPlusTime,
    Duration,
    NoAnswer,
    Quality,
    Scale,
    Text,
    Volume,
)

MAX_DURATION_MIN = 24 * 60
MAX_VOLUME_ML = 10_000


class ParseFailure(Enum):
    NO_MATCH = "NO_MATCH"
    OUT_OF_RANGE = "OUT_OF_RANGE"
    AMBIGUOUS = "AMBIGUOUS"


@dataclass(frozen=True)
class ParseOutcome:
    value: Optional[AnswerValue] = None
    failure: Optional[ParseFailure] = None
    normalized_echo: str = ""

    @property
    def ok(self) -> bool:
        return self.value is not None


def _success(value: AnswerValue) -> ParseOutcome:
    return ParseOutcome(value=value, normalized_echo=value.canonical())


def _fail(reason: ParseFailure) -> ParseOutcome:
    return ParseOutcome(failure=reason)


WORD_NUMBERS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
    "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14,
    "fifteen": 15, "sixteen": 16, "seventeen": 17, "eighteen": 18,
    "nineteen": 19, "twenty": 20,
    "once": 1, "twice": 2, "thrice": 3,
    "a": 1, "an": 1, "no": 0,
}

ZERO_SYNONYMS = {"none", "zero", "no", "nothing", "nope"}

_WORD_NUM_RE = "|".join(w for w in WORD_NUMBERS if w not in ("a", "an", "no"))


def _normalize(utterance: str) -> str:
    text = utterance.strip().lower()
    text = re.sub(r"[,!?]", " ", text)
    text = re.sub(r"\s+", " ", text)
    return text.strip()


def _number_token(token: str) -> Optional[int]:
    if re.fullmatch(r"[0-9]+", token):
        return int(token)
    return WORD_NUMBERS.get(token)


_CLOCK_RE = re.compile(
    r"^(?:at )?(?P<hour>\d{1,2})(?:[:.](?P<minute>\d{2}))?"
    r"\s*(?P<mer>a\.?m\.?|p\.?m\.?)?$"
)


def parse_clock_time(utterance: str, require_meridiem: bool = False) -> ParseOutcome:
    """Clock time -> minutes since midnight.

    Accepts ``H:MMam/pm``, ``H am/pm``, 24-hour ``HH:MM``, "noon",
    "midnight". With ``require_meridiem``, a 12-hour-ambiguous time with
    no am/pm is reported AMBIGUOUS instead of assumed.
    """
    text = _normalize(utterance)
    if text in ("noon", "12 noon"):
        return _success(ClockTime(720))
    if text in ("midnight", "12 midnight"):
        return _success(ClockTime(0))
    m = _CLOCK_RE.match(text)
    if not m:
        return _fail(ParseFailure.NO_MATCH)
    hour = int(m.group("hour"))
    minute = int(m.group("minute") or 0)
    mer = m.group("mer")
    if minute > 59:
        return _fail(ParseFailure.OUT_OF_RANGE)
    if mer:
        mer = mer.replace(".", "")
        if not 1 <= hour <= 12:
            return _fail(ParseFailure.OUT_OF_RANGE)
        hour24 = hour % 12
        if mer == "pm":
            hour24 += 12
        return _success(ClockTime(hour24 * 60 + minute))
    # no meridiem: 24-hour form requires explicit minutes
    if m.group("minute") is None:
        return _fail(ParseFailure.NO_MATCH)
    if hour > 23:
        return _fail(ParseFailure.OUT_OF_RANGE)
    if require_meridiem and 1 <= hour <= 12:
        return _fail(ParseFailure.AMBIGUOUS)
    return _success(ClockTime(hour * 60 + minute))


_HOUR_UNIT = r"(?:hours?|hrs?|h)"
_MIN_UNIT = r"(?:minutes?|mins?|m)"
_DUR_NUM = rf"(?:\d+|{_WORD_NUM_RE})"
_DURATION_RE = re.compile(
    rf"^(?:(?P<hours>{_DUR_NUM})\s*{_HOUR_UNIT})?"
    rf"\s*(?:and\s+)?"
    rf"(?:(?P<mins>{_DUR_NUM})\s*{_MIN_UNIT})?$"
)


def parse_duration(utterance: str) -> ParseOutcome:
    """Duration -> minutes. Accepts 'X hr Y min', 'X hours', 'Y minutes',
    bare integers (minutes), and zero synonyms."""
    text = _normalize(utterance)
    if text in ZERO_SYNONYMS or text in ("didn't nap", "did not nap"):
        return _success(Duration(0))
    if re.fullmatch(r"[0-9]+", text):
        minutes = int(text)
        if minutes > MAX_DURATION_MIN:
            return _fail(ParseFailure.OUT_OF_RANGE)
        return _success(Duration(minutes))
    m = _DURATION_RE.match(text)
    if not m or (m.group("hours") is None and m.group("mins") is None):
        return _fail(ParseFailure.NO_MATCH)
    hours = _number_token(m.group("hours")) if m.group("hours") else 0
    mins = _number_token(m.group("mins")) if m.group("mins") else 0
    if hours is None or mins is None:
        return _fail(ParseFailure.NO_MATCH)
    total = hours * 60 + mins
    if total > MAX_DURATION_MIN:
        return _fail(ParseFailure.OUT_OF_RANGE)
    return _success(Duration(total))


_COUNT_TIMES_RE = re.compile(
    rf"^(?:(?P<n>\d+|{_WORD_NUM_RE})\s*(?:times?)?|(?P<word>once|twice|thrice))\b[\s,]*(?P<rest>.*)$"
)

_NO_WAKE = {
    "didn't wake up", "did not wake up", "never woke up", "0 times",
    "zero times", "none", "no",
}


def parse_count_plus_duration(utterance: str) -> ParseOutcome:
    """Awakening count plus total awake duration, e.g. '3 times 1 hr 10 min'."""
    text = _normalize(utterance)
    if text in _NO_WAKE:
        return _success(CountPlusDuration(0, 0))
    m = _COUNT_TIMES_RE.match(text)
    if not m:
        return _fail(ParseFailure.NO_MATCH)
    token = m.group("n") or m.group("word")
    count = _number_token(token)
    if count is None:
        return _fail(ParseFailure.NO_MATCH)
    rest = m.group("rest").strip()
    if not rest:
        if count == 0:
            return _success(CountPlusDuration(0, 0))
        return _fail(ParseFailure.NO_MATCH)
    rest = re.sub(r"^(?:for|lasting)\s+", "", rest)
    dur = parse_duration(rest)
    if not dur.ok:
        return ParseOutcome(failure=dur.failure)
    assert isinstance(dur.value, Duration)
    return _success(CountPlusDuration(count, dur.value.minutes))


_TRAILING_TIME_RE = re.compile(
    r"(?:\bat\s+)?(?P<time>\d{1,2}(?:[:.]\d{2})?\s*(?:a\.?m\.?|p\.?m\.?)|\d{1,2}[:.]\d{2}|noon|midnight)\s*$"
)

_NO_DRINKS = {"none", "no", "zero", "nothing", "no drinks", "didn't drink", "did not drink", "0"}


def parse_count_plus_time(utterance: str) -> ParseOutcome:
    """Drink count plus optional last-drink time, e.g. '2 at 8:00 pm'."""
    text = _normalize(utterance)
    if text in _NO_DRINKS:
        return _success(CountPlusTime(0, None))
    time_minutes: Optional[int] = None
    m = _TRAILING_TIME_RE.search(text)
    head = text
    if m and m.start() > 0:
        outcome = parse_clock_time(m.group("time"))
        if outcome.ok:
            assert isinstance(outcome.value, ClockTime)
            time_minutes = outcome.value.minutes
            head = text[: m.start()].strip()
    head = re.sub(r"\s+at$", "", head).strip()
    tokens = head.split()
    if not tokens:
        return _fail(ParseFailure.NO_MATCH)
    count = _number_token(tokens[0])
    if count is None:
        return _fail(ParseFailure.NO_MATCH)
    # anything after the count ('beers', 'glasses of wine') is descriptive
    return _success(CountPlusTime(count, time_minutes))


_VOLUME_UNITS = (
    (r"cups?|glass(?:es)?", CUP_ML),
    (r"(?:fluid\s+|fl\.?\s*)?(?:ounces?|oz)", FLOZ_ML),
    (r"milliliters?|millilitres?|mls?", 1.0),
    (r"liters?|litres?|l", 1000.0),
)

_VOL_NUM = rf"(?:\d+(?:\.\d+)?|\d+/\d+|half an?|an? half|a half of|{_WORD_NUM_RE}|an?)"
_VOLUME_RES = [
    (re.compile(rf"^(?:about |around |roughly )?(?P<n>{_VOL_NUM})\s*(?:{unit})(?: of water| of \w+)?$"), ml)
    for unit, ml in _VOLUME_UNITS
]


def _volume_quantity(token: str) -> Optional[float]:
    token = token.strip()
    if re.fullmatch(r"\d+(\.\d+)?", token):
        return float(token)
    if re.fullmatch(r"\d+/\d+", token):
        num, den = token.split("/")
        return int(num) / int(den) if int(den) else None
    if token in ("half a", "half an", "a half", "a half of"):
        return 0.5
    n = _number_token(token)
    return float(n) if n is not None else None


def parse_volume(utterance: str) -> ParseOutcome:
    """Fluid volume -> integer milliliters.

    Accepts cups/glasses, fluid ounces, milliliters, liters;
    1 cup = 1 glass = 236.588 ml, 1 fl oz = 29.5735 ml.
    """
    text = _normalize(utterance)
    if text in ZERO_SYNONYMS:
        return _success(Volume(0))
    for pattern, unit_ml in _VOLUME_RES:
        m = pattern.match(text)
        if not m:
            continue
        qty = _volume_quantity(m.group("n"))
        if qty is None:
            return _fail(ParseFailure.NO_MATCH)
        ml = round(qty * unit_ml)
        if ml > MAX_VOLUME_ML:
            return _fail(ParseFailure.OUT_OF_RANGE)
        return _success(Volume(ml))
    return _fail(ParseFailure.NO_MATCH)


def parse_scale_1_5(utterance: str) -> ParseOutcome:
    """Digit or word-number on the 1..5 health-status scale."""
    text = _normalize(utterance).rstrip(".")
    n = _number_token(text) if text != "no" else None
    if n is None:
        return _fail(ParseFailure.NO_MATCH)
    if not 1 <= n <= 5:
        return _fail(ParseFailure.OUT_OF_RANGE)
    return _success(Scale(n))


_QUALITY_MAP = {
    "very poor": 1,
    "poor": 2,
    "fair": 3,
    "good": 4,
    "very good": 5,
}


def parse_quality(utterance: str) -> ParseOutcome:
    """One of the five sleep-quality labels, Very poor=1 .. Very good=5."""
    text = _normalize(utterance).rstrip(".")
    value = _QUALITY_MAP.get(text)
    if value is None:
        return _fail(ParseFailure.NO_MATCH)
    return _success(Quality(value))


_NO_MEDS = {"no", "none", "nope", "no medication", "no medications", "none taken"}


def parse_medication(utterance: str) -> ParseOutcome:
    """Verbatim medication text; 'no'/'none' canonicalized to no-answer."""
    raw = utterance.strip()
    if _normalize(raw) in _NO_MEDS:
        return _success(NoAnswer())
    if not raw:
        return _fail(ParseFailure.NO_MATCH)
    return _success(Text(raw))


def parse_free_text(utterance: str) -> ParseOutcome:
    raw = utterance.strip()
    if not raw:
        return _fail(ParseFailure.NO_MATCH)
    return _success(Text(raw))


_YES = {"yes", "yeah", "yep", "correct", "right", "that's right", "thats right"}
_NO = {"no", "nope", "wrong", "that's wrong", "thats wrong"}


def parse_yes_no(utterance: str) -> Optional[bool]:
    """Read-back confirmation grammar. None means unrecognized."""
    text = _normalize(utterance).rstrip(".")
    if text in _YES:
        return True
    if text in _NO:
        return False
    return None


def parse_user_id_confirm(utterance: str, expected_id: str) -> ParseOutcome:
    """Participant-ID confirmation: the utterance must mention the ID or
    be a plain affirmation."""
    text = _normalize(utterance).rstrip(".")
    if not text:
        return _fail(ParseFailure.NO_MATCH)
    tokens = set(text.split())
    if expected_id.lower() in tokens or text == expected_id.lower():
        return _success(Text(expected_id))
    if parse_yes_no(text):
        return _success(Text(expected_id))
    return _fail(ParseFailure.NO_MATCH)


def parser_for_kind(kind: str, expected_user_id: str = ""):
    """Return the parser callable for a question's answer kind."""
    table = {
        "SCALE_1_5": parse_scale_1_5,
        "FLUID_VOLUME": parse_volume,
        "CLOCK_TIME": parse_clock_time,
        "DURATION": parse_duration,
        "COUNT_PLUS_DURATION": parse_count_plus_duration,
        "COUNT_PLUS_TIME": parse_count_plus_time,
        "QUALITY_5": parse_quality,
        "MEDICATION_TEXT": parse_medication,
        "FREE_TEXT": parse_free_text,
    }
    if kind == "USER_ID_CONFIRM":
        return lambda utterance: parse_user_id_confirm(utterance, expected_user_id)
    try:
        return table[kind]
    except KeyError:
        raise ValueError(f"unknown answer kind: {kind}") from None
