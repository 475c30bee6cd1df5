import random

import pytest

from surveyengine.answers import NoAnswer, Scale, Text, Volume
from surveyengine.engine import (
    UNCONFIRMED,
    DialogueEngine,
    EngineConfig,
    InvalidPhaseError,
    Phase,
    ReplayError,
    replay,
)
from surveyengine.resources import builtin_flow_map
from surveyengine.store import EventStore

FLOWS = builtin_flow_map()
T0 = 1_000_000


def run_logged(engine, session_id, inputs):
    """Drive the engine while appending events to a store; returns
    (final state, records)."""
    store = EventStore()
    state, _, events = engine.start(session_id, T0)
    t = T0
    for kind, payload in events:
        store.append(session_id, kind, payload, t)
    for action, arg in inputs:
        if state.terminal:
            break
        if action == "say":
            t += 2000
            _, events = engine.handle_utterance(state, arg, t)
        else:  # silence
            t = state.deadline + 1
            _, events = engine.handle_timeout(state, t)
        for kind, payload in events:
            store.append(session_id, kind, payload, t)
    return state, store.read_stream(session_id)


class TestStart:
    def test_unlinked_first_prompt_confirms_id(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=False)
        _, reply, _ = engine.start("s1", T0)
        assert "User ID" in reply.say

    def test_linked_skips_id_question(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=True)
        state, reply, _ = engine.start("s1", T0)
        assert state.current_question == "health_status"
        assert "scale of 1 to 5" in reply.say

    def test_sleepy_starts_with_bedtime(self):
        engine = DialogueEngine(FLOWS["sleepy"], "P01")
        _, reply, _ = engine.start("s1", T0)
        assert reply.say == "What time did you get into bed?"


class TestReadback:
    def engine(self):
        return DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=True)

    def test_echo_then_commit_on_yes(self):
        engine = self.engine()
        state, _, _ = engine.start("s1", T0)
        reply, _ = engine.handle_utterance(state, "3", T0 + 1000)
        assert reply.say == "I heard 3 — is that right?"
        assert state.phase is Phase.AWAIT_READBACK_CONFIRM
        reply, _ = engine.handle_utterance(state, "yes", T0 + 2000)
        assert reply.recorded == ("health_status", Scale(3))
        assert "fluid" in reply.say

    def test_no_reasks_question(self):
        engine = self.engine()
        state, _, _ = engine.start("s1", T0)
        engine.handle_utterance(state, "3", T0 + 1000)
        reply, _ = engine.handle_utterance(state, "no", T0 + 2000)
        assert state.phase is Phase.AWAIT_ANSWER
        assert state.corrections_used == 1
        assert "scale of 1 to 5" in reply.say

    def test_corrections_capped_then_unconfirmed_commit(self):
        engine = self.engine()
        state, _, _ = engine.start("s1", T0)
        t = T0
        for _ in range(2):
            t += 1000
            engine.handle_utterance(state, "3", t)
            t += 1000
            engine.handle_utterance(state, "no", t)
        engine.handle_utterance(state, "4", t + 1000)
        reply, _ = engine.handle_utterance(state, "no", t + 2000)
        assert reply.recorded == ("health_status", Scale(4))
        assert state.answer_flags["health_status"] == (UNCONFIRMED,)

    def test_unrecognized_confirmation_reprompts_once(self):
        engine = self.engine()
        state, _, _ = engine.start("s1", T0)
        engine.handle_utterance(state, "3", T0 + 1000)
        reply, _ = engine.handle_utterance(state, "banana", T0 + 2000)
        assert "yes or no" in reply.say
        reply, _ = engine.handle_utterance(state, "banana", T0 + 3000)
        assert state.answer_flags["health_status"] == (UNCONFIRMED,)


class TestParseFailure:
    def test_single_reprompt_then_abandon_required(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=True,
                                config=EngineConfig(readback=False))
        state, _, _ = engine.start("s1", T0)
        reply, _ = engine.handle_utterance(state, "banana", T0 + 1000)
        assert reply.say.startswith("Sorry, I didn't catch that.")
        reply, _ = engine.handle_utterance(state, "banana", T0 + 2000)
        assert state.phase is Phase.ABANDONED

    def test_optional_question_commits_none_after_failures(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=True,
                                config=EngineConfig(readback=False))
        state, _, _ = engine.start("s1", T0)
        engine.handle_utterance(state, "4", T0 + 1000)
        engine.handle_utterance(state, "banana", T0 + 2000)
        reply, _ = engine.handle_utterance(state, "banana", T0 + 3000)
        assert state.phase is Phase.COMPLETED
        assert state.answers["fluid_intake"] == NoAnswer()

    def test_optional_skip_word(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=True,
                                config=EngineConfig(readback=False))
        state, _, _ = engine.start("s1", T0)
        engine.handle_utterance(state, "4", T0 + 1000)
        engine.handle_utterance(state, "skip", T0 + 2000)
        assert state.answers["fluid_intake"] == NoAnswer()


class TestTimeout:
    def test_first_timeout_reprompts(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01")
        state, _, _ = engine.start("s1", T0)
        reply, _ = engine.handle_timeout(state, state.deadline + 1)
        assert state.phase is Phase.AWAIT_ANSWER
        assert reply.say.startswith("Sorry, I didn't catch that.")

    def test_second_timeout_abandons_preserving_answers(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=True)
        state, _, _ = engine.start("s1", T0)
        engine.handle_utterance(state, "3", T0 + 1000)
        engine.handle_utterance(state, "yes", T0 + 2000)
        engine.handle_timeout(state, state.deadline + 1)
        engine.handle_timeout(state, state.deadline + 1)
        assert state.phase is Phase.ABANDONED
        assert state.answers == {"health_status": Scale(3)}

    def test_timeout_in_terminal_state_rejected(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01")
        state, _, _ = engine.start("s1", T0)
        engine.handle_timeout(state, state.deadline + 1)
        engine.handle_timeout(state, state.deadline + 1)
        assert state.phase is Phase.ABANDONED
        with pytest.raises(InvalidPhaseError):
            engine.handle_timeout(state, state.deadline or 10**12)

    def test_premature_timeout_rejected(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01")
        state, _, _ = engine.start("s1", T0)
        with pytest.raises(InvalidPhaseError):
            engine.handle_timeout(state, state.deadline)

    def test_overdue_utterance_rejected(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01")
        state, _, _ = engine.start("s1", T0)
        with pytest.raises(InvalidPhaseError):
            engine.handle_utterance(state, "P01", state.deadline + 1)


class TestAnswerCounts:
    def test_unlinked_fluidmonitor_records_three(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=False)
        state, _ = run_logged(engine, "s1", [
            ("say", "P01"), ("say", "yes"),
            ("say", "4"), ("say", "yes"),
            ("say", "2 cups"), ("say", "yes")])
        assert state.phase is Phase.COMPLETED
        assert len(state.answers) == 3

    def test_linked_fluidmonitor_records_two(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=True)
        state, _ = run_logged(engine, "s1", [
            ("say", "4"), ("say", "yes"), ("say", "2 cups"), ("say", "yes")])
        assert state.phase is Phase.COMPLETED
        assert len(state.answers) == 2


class TestReplay:
    def test_empty_log_rejected(self):
        with pytest.raises(ReplayError):
            replay([])

    def test_full_session_replays_to_completed(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=False)
        state, records = run_logged(engine, "s1", [
            ("say", "P01"), ("say", "yes"),
            ("say", "4"), ("say", "yes"),
            ("say", "2 cups"), ("say", "yes")])
        replayed = replay(records)
        assert replayed == state
        assert replayed.phase is Phase.COMPLETED
        assert replayed.answers["fluid_intake"] == Volume(473)

    def test_truncated_log_replays_to_midpoint(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=False)
        _, records = run_logged(engine, "s1", [
            ("say", "P01"), ("say", "yes"),
            ("say", "4"), ("say", "yes"),
            ("say", "2 cups"), ("say", "yes")])
        first_commit = next(i for i, r in enumerate(records)
                            if r.kind == "ANSWER_COMMITTED")
        prefix = records[:first_commit + 2]  # commit + next prompt
        state = replay(prefix)
        assert state.phase is Phase.AWAIT_ANSWER
        assert state.current_question == "health_status"
        assert state.answers == {"confirm_user_id": Text("P01")}

    def test_gap_in_sequence_rejected(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=True)
        _, records = run_logged(engine, "s1", [("say", "4"), ("say", "yes")])
        with pytest.raises(ReplayError, match="gap"):
            replay([records[0]] + records[2:])

    def test_multi_stream_rejected(self):
        engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=True)
        _, a = run_logged(engine, "s1", [("say", "4")])
        engine2 = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=True)
        _, b = run_logged(engine2, "s2", [("say", "4")])
        with pytest.raises(ReplayError, match="streams"):
            replay(a + b)

    @pytest.mark.parametrize("seed", range(20))
    def test_randomized_sequences_replay_exactly(self, seed):
        rng = random.Random(seed)
        flow_id = rng.choice(["fluidmonitor", "sleepy"])
        engine = DialogueEngine(FLOWS[flow_id], "P01",
                                linked=rng.random() < 0.5)
        vocab = ["yes", "no", "3", "2 cups", "10:15pm", "40 min", "banana",
                 "didn't wake up", "Poor", "none", "skip", "2 at 8:00 pm"]
        inputs = [("silence", None) if rng.random() < 0.2
                  else ("say", rng.choice(vocab))
                  for _ in range(rng.randrange(1, 40))]
        state, records = run_logged(engine, f"s{seed}", inputs)
        assert replay(records) == state


def test_terminal_states_absorbing():
    engine = DialogueEngine(FLOWS["fluidmonitor"], "P01", linked=True)
    state, _, _ = engine.start("s1", T0)
    engine.handle_utterance(state, "3", T0 + 1000)
    engine.handle_utterance(state, "yes", T0 + 2000)
    engine.handle_utterance(state, "2 cups", T0 + 3000)
    engine.handle_utterance(state, "yes", T0 + 4000)
    assert state.phase is Phase.COMPLETED
    with pytest.raises(InvalidPhaseError):
        engine.handle_utterance(state, "more", T0 + 5000)
