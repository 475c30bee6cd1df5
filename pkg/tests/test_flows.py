import pytest

from surveyengine.flows import (
    END,
    FlowError,
    Question,
    SurveyFlow,
    load_flow,
    match_invocation,
    serialize_flow,
)
from surveyengine.resources import builtin_flow_map, builtin_flows, flow_document


@pytest.fixture(scope="module")
def flows():
    return builtin_flow_map()


class TestBuiltins:
    def test_fluidmonitor_shape(self, flows):
        fm = flows["fluidmonitor"]
        assert len(fm.questions) == 3
        assert fm.per_day_cadence == 3
        assert [q.answer_kind for q in fm.questions] == [
            "USER_ID_CONFIRM", "SCALE_1_5", "FLUID_VOLUME"]

    def test_sleepy_shape(self, flows):
        sleepy = flows["sleepy"]
        assert len(sleepy.questions) == 11
        assert sleepy.per_day_cadence == 1
        assert [q.question_id for q in sleepy.questions] == [
            "into_bed", "try_sleep", "sleep_onset", "awakenings",
            "final_awakening", "out_of_bed", "quality", "nap",
            "alcohol", "medication", "notes"]

    def test_roundtrip_identity(self, flows):
        for flow in flows.values():
            assert load_flow(serialize_flow(flow)) == flow

    def test_documents_load(self):
        for flow_id in ("fluidmonitor", "sleepy"):
            assert load_flow(flow_document(flow_id)).flow_id == flow_id


class TestValidation:
    def test_duplicate_question_id(self):
        doc = flow_document("fluidmonitor").replace("id: health_status",
                                                    "id: confirm_user_id")
        with pytest.raises(FlowError, match="duplicate"):
            load_flow(doc)

    def test_dangling_branch_target(self):
        doc = flow_document("fluidmonitor") + "branch: 5 -> nowhere\n"
        with pytest.raises(FlowError, match="does not exist"):
            load_flow(doc)

    def test_unknown_answer_kind(self):
        doc = flow_document("fluidmonitor").replace("kind: SCALE_1_5",
                                                    "kind: SCALE_1_99")
        with pytest.raises(FlowError, match="unknown answer kind"):
            load_flow(doc)

    def test_malformed_line(self):
        with pytest.raises(FlowError):
            load_flow("flow_id: x\nnot a key value line\n")

    def test_cadence_bound(self):
        with pytest.raises(FlowError):
            load_flow("flow_id: x\ncadence: 0\n")

    def test_branch_targets_honored(self):
        flow = SurveyFlow(
            flow_id="branching", title="b", invocation_phrases=("b",),
            questions=(
                Question("q1", "pick", "SCALE_1_5",
                         branch=(("5", END), ("default", "q2"))),
                Question("q2", "more", "FREE_TEXT"),
            ))
        assert flow.next_question_id("q1", "5") == END
        assert flow.next_question_id("q1", "2") == "q2"


class TestInvocation:
    def test_wake_word_stripped(self):
        assert match_invocation("Hey Google, talk to Fluid Monitor",
                                builtin_flows()) == "fluidmonitor"

    def test_plain_phrase(self):
        assert match_invocation("talk to sleepy", builtin_flows()) == "sleepy"

    def test_no_match(self):
        assert match_invocation("what's the weather", builtin_flows()) is None
