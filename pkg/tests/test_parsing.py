import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surveyengine.answers import CUP_ML, ClockTime, CountPlusDuration, CountPlusTime, Duration, NoAnswer, Quality, Scale, Text, Volume
from surveyengine.parsing import (
    ParseFailure,
    parse_clock_time,
    parse_count_plus_duration,
    parse_count_plus_time,
    parse_duration,
    parse_free_text,
    parse_medication,
    parse_quality,
    parse_scale_1_5,
    parse_user_id_confirm,
    parse_volume,
    parse_yes_no,
    parser_for_kind,
)

ALL_PARSERS = [
    parse_clock_time,
    parse_duration,
    parse_count_plus_duration,
    parse_count_plus_time,
    parse_volume,
    parse_scale_1_5,
    parse_quality,
    parse_medication,
    parse_free_text,
]


class TestClockTime:
    @pytest.mark.parametrize("utterance,minutes", [
        ("10:15pm", 1335),
        ("6:00am", 360),
        ("midnight", 0),
        ("noon", 720),
        ("11:30pm", 1410),
        ("8:00 pm", 1200),
        ("22:15", 1335),
        ("7 am", 420),
        ("12:00am", 0),
        ("12:30pm", 750),
    ])
    def test_accepts(self, utterance, minutes):
        out = parse_clock_time(utterance)
        assert out.ok and out.value == ClockTime(minutes)

    def test_no_match(self):
        assert parse_clock_time("banana").failure is ParseFailure.NO_MATCH

    def test_minute_out_of_range(self):
        assert parse_clock_time("10:75pm").failure is ParseFailure.OUT_OF_RANGE

    def test_ambiguous_without_meridiem(self):
        out = parse_clock_time("10:15", require_meridiem=True)
        assert out.failure is ParseFailure.AMBIGUOUS

    def test_24h_not_ambiguous(self):
        out = parse_clock_time("22:15", require_meridiem=True)
        assert out.ok and out.value == ClockTime(1335)


class TestDuration:
    @pytest.mark.parametrize("utterance,minutes", [
        ("1 hr 15 min", 75),
        ("40 min", 40),
        ("none", 0),
        ("2 hours", 120),
        ("90", 90),
        ("ten minutes", 10),
        ("1 hour and 5 minutes", 65),
        ("zero", 0),
    ])
    def test_accepts(self, utterance, minutes):
        out = parse_duration(utterance)
        assert out.ok and out.value == Duration(minutes)

    def test_out_of_range(self):
        assert parse_duration("25 hours").failure is ParseFailure.OUT_OF_RANGE

    def test_no_match(self):
        assert parse_duration("a while").failure is ParseFailure.NO_MATCH


class TestCountPlusDuration:
    @pytest.mark.parametrize("utterance,count,minutes", [
        ("3 times 1 hr 10 min", 3, 70),
        ("didn't wake up", 0, 0),
        ("twice, 20 minutes", 2, 20),
        ("0 times", 0, 0),
        ("once for 5 minutes", 1, 5),
    ])
    def test_accepts(self, utterance, count, minutes):
        out = parse_count_plus_duration(utterance)
        assert out.ok and out.value == CountPlusDuration(count, minutes)

    def test_count_without_duration(self):
        assert parse_count_plus_duration("3 times").failure is ParseFailure.NO_MATCH


class TestCountPlusTime:
    @pytest.mark.parametrize("utterance,count,minutes", [
        ("2 at 8:00 pm", 2, 1200),
        ("2 8:00 pm", 2, 1200),
        ("none", 0, None),
        ("one beer at noon", 1, 720),
        ("3 glasses of wine at 9:30pm", 3, 1290),
    ])
    def test_accepts(self, utterance, count, minutes):
        out = parse_count_plus_time(utterance)
        assert out.ok and out.value == CountPlusTime(count, minutes)

    def test_no_match(self):
        assert parse_count_plus_time("at some point").failure is ParseFailure.NO_MATCH


class TestVolume:
    @pytest.mark.parametrize("utterance,ml", [
        ("2 cups", 473),
        ("8 ounces", 237),
        ("half a liter", 500),
        ("500 ml", 500),
        ("1 cup", 237),
        ("a glass of water", 237),
        ("1.5 liters", 1500),
        ("none", 0),
    ])
    def test_accepts(self, utterance, ml):
        out = parse_volume(utterance)
        assert out.ok and out.value == Volume(ml)

    def test_out_of_range(self):
        assert parse_volume("11 liters").failure is ParseFailure.OUT_OF_RANGE

    def test_unit_required(self):
        assert parse_volume("42").failure is ParseFailure.NO_MATCH

    @pytest.mark.parametrize("n", range(1, 20))
    def test_monotone_units(self, n):
        # N cups equals N x one cup exactly before rounding, within 1 ml after
        many = parse_volume(f"{n} cups").value.ml
        one = parse_volume("1 cup").value.ml
        assert many == round(n * CUP_ML)
        assert abs(many - n * one) <= max(1, math.ceil(n / 2))


class TestScaleAndQuality:
    @pytest.mark.parametrize("utterance,value", [("3", 3), ("five", 5), ("1", 1)])
    def test_scale(self, utterance, value):
        out = parse_scale_1_5(utterance)
        assert out.ok and out.value == Scale(value)

    @pytest.mark.parametrize("utterance", ["7", "0", "six"])
    def test_scale_out_of_range(self, utterance):
        assert parse_scale_1_5(utterance).failure is ParseFailure.OUT_OF_RANGE

    @pytest.mark.parametrize("utterance,value", [
        ("Poor", 2), ("very good", 5), ("VERY POOR", 1), ("Fair", 3), ("good", 4),
    ])
    def test_quality(self, utterance, value):
        out = parse_quality(utterance)
        assert out.ok and out.value == Quality(value)

    def test_quality_no_match(self):
        assert parse_quality("ok").failure is ParseFailure.NO_MATCH


class TestTextual:
    def test_medication_verbatim(self):
        raw = "Melatonin, 1mg @ 9:00pm Ambien, 5mg @ 10:00pm"
        out = parse_medication(raw)
        assert out.value == Text(raw)

    @pytest.mark.parametrize("utterance", ["no", "None", "nope"])
    def test_medication_none(self, utterance):
        assert parse_medication(utterance).value == NoAnswer()

    def test_free_text(self):
        out = parse_free_text("Poor sleep due to a cold")
        assert out.value == Text("Poor sleep due to a cold")
        assert parse_free_text("   ").failure is ParseFailure.NO_MATCH


class TestUserIdConfirm:
    @pytest.mark.parametrize("utterance", ["P01", "p01", "yes", "it's P01", "P01 yes"])
    def test_accepts(self, utterance):
        out = parse_user_id_confirm(utterance, "P01")
        assert out.ok and out.value == Text("P01")

    def test_rejects(self):
        assert not parse_user_id_confirm("P02", "P01").ok


def test_yes_no_grammar():
    for word in ("yes", "yeah", "yep", "correct", "right"):
        assert parse_yes_no(word) is True
    for word in ("no", "nope", "wrong"):
        assert parse_yes_no(word) is False
    assert parse_yes_no("maybe") is None


def test_parser_for_kind_unknown():
    with pytest.raises(ValueError):
        parser_for_kind("SOMETHING_ELSE")


@pytest.mark.parametrize("parser", ALL_PARSERS)
@given(text=st.text(max_size=40))
@settings(max_examples=200, deadline=None)
def test_totality_and_roundtrip(parser, text):
    out = parser(text)
    assert out.ok == (out.failure is None)
    if out.ok:
        again = parser(out.normalized_echo)
        assert again.ok and again.value == out.value
