import pytest

from guimigrate.analyzer import build_skeleton
from guimigrate.feedback import (
    REASON_NOT_EXECUTABLE, REASON_UNAVAILABLE, FeedbackVerdict, Reflection, apply_truncation, assess_action,
    reflect_test
)
from guimigrate.gateway import TranscriptEntry, VlmGateway, VlmGatewayError
from guimigrate.interfaces import VlmBackend
from guimigrate.model import Action, ActionKind, Selector
from guimigrate.planner import CandidateAction, CandidateSource, ExplorationState, StepStatus
from guimigrate.util import MigrationError

from testing import fixtures
from testing.fixtures import accept, reject, reply, scripted


class UnreachableBackend(VlmBackend):
    def complete(self, bundle):
        raise VlmGatewayError('chat completion endpoint unreachable: connection refused', 3)


def skeleton():
    return build_skeleton(fixtures.test_case('tip_a'), fixtures.source_log(),
                          VlmGateway(scripted(*fixtures.analysis_entries())))


def set_bill():
    return Action(ActionKind.SET_TEXT, Selector(resource_id='bill_input'), '56.60')


def tap(resource_id):
    return Action(ActionKind.TAP, Selector(resource_id=resource_id))


def explored(device, *actions):
    """A state whose history holds ``actions`` as executed on ``device``."""
    state = ExplorationState(skeleton())
    for action in actions:
        outcome = device.execute_action(action)
        state.accept(CandidateAction(action, 'try it', CandidateSource.VLM), outcome.before, outcome.after)
    return state


def test_non_executed_action_is_rejected_without_asking():
    device = fixtures.device('tip_b')
    state = explored(device)
    gateway = VlmGateway(scripted())
    verdict = assess_action(state.skeleton, state, tap('missing'), device.execute_action(tap('missing')), gateway)
    assert verdict == FeedbackVerdict(False, REASON_NOT_EXECUTABLE, [])
    assert gateway.call_count == 0


def test_accepted_action():
    device = fixtures.device('tip_b')
    state = explored(device)
    outcome = device.execute_action(set_bill())
    gateway = VlmGateway(scripted(accept('the bill is entered')))
    assert assess_action(state.skeleton, state, set_bill(), outcome, gateway) == \
        FeedbackVerdict(True, 'the bill is entered', [])


def test_rejection_carries_suggestions():
    device = fixtures.device('tip_b')
    state = explored(device)
    outcome = device.execute_action(tap('title'))
    gateway = VlmGateway(scripted(reject('nothing changed', ['type the bill amount'])))
    verdict = assess_action(state.skeleton, state, tap('title'), outcome, gateway)
    assert not verdict.accepted
    assert verdict.suggestions == ['type the bill amount']


def test_feedback_prompt_shows_both_pages():
    device = fixtures.device('tip_b')
    state = explored(device)
    outcome = device.execute_action(set_bill())
    gateway = VlmGateway(scripted(reply('feedback_action', {'accept': True}, contains='Page after the action:')))
    assert assess_action(state.skeleton, state, set_bill(), outcome, gateway).accepted


def test_unusable_replies_reject_the_action():
    device = fixtures.device('tip_b')
    state = explored(device)
    outcome = device.execute_action(set_bill())
    gateway = VlmGateway(scripted(*[TranscriptEntry('feedback_action', None, 'looks fine to me')] * 3))
    verdict = assess_action(state.skeleton, state, set_bill(), outcome, gateway)
    assert verdict == FeedbackVerdict(False, REASON_UNAVAILABLE, [])
    assert gateway.call_count == 3


def test_unreachable_endpoint_rejects_the_action():
    device = fixtures.device('tip_b')
    state = explored(device)
    outcome = device.execute_action(set_bill())
    verdict = assess_action(state.skeleton, state, set_bill(), outcome, VlmGateway(UnreachableBackend()))
    assert verdict.reason == REASON_UNAVAILABLE


def test_reflection_on_empty_history_needs_no_call():
    state = explored(fixtures.device('tip_b'))
    gateway = VlmGateway(scripted())
    assert reflect_test(state.skeleton, state, gateway).misleading_index is None
    assert gateway.call_count == 0


def test_reflection_index_is_bounded_by_history():
    state = explored(fixtures.device('tip_b'), tap('title'), set_bill())
    gateway = VlmGateway(scripted(reply('feedback_reflect', {'misleading_index': 3}),
                                  reply('feedback_reflect', {'misleading_index': 1, 'reason': 'the title misled'},
                                        contains='misleading_index 3 is beyond the 2 accepted actions')))
    assert reflect_test(state.skeleton, state, gateway) == Reflection(1, 'the title misled')
    assert gateway.calls_for('feedback_reflect') == 2


def test_truncation_replays_the_kept_prefix():
    device = fixtures.device('tip_b')
    state = explored(device, set_bill())
    state.update_steps({'s1': StepStatus.DONE})
    outcome = device.execute_action(tap('title'))
    state.accept(CandidateAction(tap('title'), 'try it', CandidateSource.VLM), outcome.before, outcome.after)

    apply_truncation(state, Reflection(2, 'the title did nothing'), device)

    assert state.accepted_actions == [set_bill()]
    assert state.current is None
    assert state.step_status == {'s1': StepStatus.DONE}
    page = device.capture_page()
    assert Selector(resource_id='bill_input').resolve(page.root).text == '56.60'


def test_truncation_reverts_later_steps():
    device = fixtures.device('tip_b')
    state = explored(device, tap('title'), set_bill())
    state.update_steps({'s1': StepStatus.DONE})

    apply_truncation(state, Reflection(1, 'the title misled'), device)

    assert state.accepted_actions == []
    assert state.step_status == {'s1': StepStatus.PENDING}
    assert state.last_reverted == ['s1']


def test_truncation_needs_a_misleading_action():
    device = fixtures.device('tip_b')
    with pytest.raises(MigrationError, match='needs a misleading action'):
        apply_truncation(explored(device, set_bill()), Reflection(None, ''), device)


def test_truncation_fails_when_prefix_no_longer_replays():
    device = fixtures.device('tip_b')
    state = explored(device, tap('missing'), set_bill())
    with pytest.raises(MigrationError, match='no longer replays: selector unresolved'):
        apply_truncation(state, Reflection(2, 'second action misled'), device)
