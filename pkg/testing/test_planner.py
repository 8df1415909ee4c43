import pytest

from guimigrate.analyzer import build_skeleton
from guimigrate.device import replay_test
from guimigrate.gateway import ReplyValidationError, VlmGateway
from guimigrate.model import Action, ActionKind, OracleEvent, OracleKind, Selector
from guimigrate.pages import prepare_page
from guimigrate.planner import (
    CandidateAction, CandidateSource, ExplorationState, PlannerStuck, RejectionNote, StepStatus, check_completeness,
    describe_history, describe_target, generate_action, generate_oracle, rule_path_oracle, selector_for_widget
)
from guimigrate.util import MigrationError

from testing import fixtures
from testing.fixtures import BILL_LABEL, CALC_LABEL, act, reply, scripted


def skeleton():
    gateway = VlmGateway(scripted(*fixtures.analysis_entries()))
    return build_skeleton(fixtures.test_case('tip_a'), fixtures.source_log(), gateway)


def state_on(app_id='tip_b', page=None):
    state = ExplorationState(skeleton(), fixtures.CATEGORY)
    state.current = prepare_page(page or fixtures.device(app_id).capture_page())
    return state


def final_page(app_id):
    return replay_test(fixtures.device(app_id), fixtures.test_case(app_id)).final_page


def step(status, double_checked=False, justification=''):
    return {'step_id': 's1', 'status': status, 'necessity_double_checked': double_checked,
            'justification': justification}


def completeness(steps, complete=False, stop_met=False):
    return reply('completeness_checker', {'steps': steps, 'stop_condition_met': stop_met, 'complete': complete})


def test_waiver_needs_double_check():
    state = state_on()
    verdict = check_completeness(state.skeleton, state, VlmGateway(scripted(completeness([step('waived')]))))
    assert not verdict.complete
    assert state.step_status == {'s1': StepStatus.PENDING}


def test_justified_waiver_is_honored():
    state = state_on()
    gateway = VlmGateway(scripted(completeness([step('waived', True, 'the bill is typed into a field')],
                                               complete=True, stop_met=True)))
    verdict = check_completeness(state.skeleton, state, gateway)
    assert verdict.complete
    assert state.step_status == {'s1': StepStatus.WAIVED}
    assert state.pending_steps() == []


def test_premature_completion_is_reasked():
    state = state_on()
    gateway = VlmGateway(scripted(completeness([step('pending')], complete=True, stop_met=True),
                                  completeness([step('in_progress')])))
    verdict = check_completeness(state.skeleton, state, gateway)
    assert not verdict.complete
    assert state.step_status == {'s1': StepStatus.IN_PROGRESS}
    assert gateway.calls_for('completeness_checker') == 2


def test_completion_needs_stop_condition():
    state = state_on()
    gateway = VlmGateway(scripted(completeness([step('done')], complete=True)), requery_budget=0)
    with pytest.raises(ReplyValidationError, match='stop condition is not met'):
        check_completeness(state.skeleton, state, gateway)
    assert state.step_status == {'s1': StepStatus.PENDING}


def test_finished_steps_stay_finished():
    state = state_on()
    state.update_steps({'s1': StepStatus.DONE})
    check_completeness(state.skeleton, state, VlmGateway(scripted(completeness([step('pending')]))))
    assert state.step_status == {'s1': StepStatus.DONE}


def test_unknown_step_ids_are_ignored():
    state = state_on()
    entries = [dict(step('done'), step_id='s9')]
    verdict = check_completeness(state.skeleton, state, VlmGateway(scripted(completeness(entries))))
    assert verdict.step_status == {'s1': StepStatus.PENDING}


def test_completeness_needs_a_page():
    state = ExplorationState(skeleton())
    with pytest.raises(MigrationError, match='needs a current page'):
        check_completeness(state.skeleton, state, VlmGateway(scripted()))


def test_action_label_resolves_to_widget():
    state = state_on()
    candidate = generate_action(state.skeleton, state, VlmGateway(scripted(act('set_text', BILL_LABEL, '56.60'))))
    widget = state.current.widget_for_label(BILL_LABEL)

    assert candidate.source == CandidateSource.VLM
    assert candidate.widget_label == BILL_LABEL
    assert candidate.action == Action(ActionKind.SET_TEXT, selector_for_widget(widget), '56.60')
    assert candidate.action.selector.resource_id == 'bill_input'
    assert candidate.action.selector.text is None
    assert candidate.action.selector.content_desc == 'bill amount'


def test_unknown_label_is_reasked():
    state = state_on()
    gateway = VlmGateway(scripted(act('tap', 9),
                                  reply('action_generator', {'action': 'tap', 'widget_label': CALC_LABEL},
                                        contains='widget label 9 is not on the page (labels 1..3)')))
    candidate = generate_action(state.skeleton, state, gateway)
    assert candidate.action.selector.resource_id == 'calc_btn'
    assert gateway.calls_for('action_generator') == 2


def test_invalid_swipe_direction_is_reasked():
    state = state_on()
    gateway = VlmGateway(scripted(act('swipe', CALC_LABEL, 'sideways'), act('wait', payload='500')))
    candidate = generate_action(state.skeleton, state, gateway)
    assert candidate.action == Action(ActionKind.WAIT, None, '500')
    assert candidate.widget_label is None


def test_suggestions_mark_the_candidate_source():
    state = state_on()
    notes = [RejectionNote("tap on resource_id='title'", 'the title does nothing', ['type the bill amount'])]
    gateway = VlmGateway(scripted(reply('action_generator', {'action': 'set_text', 'widget_label': BILL_LABEL,
                                                            'payload': '56.60'},
                                        contains='  suggestion: type the bill amount')))
    candidate = generate_action(state.skeleton, state, gateway, notes)
    assert candidate.source == CandidateSource.FEEDBACK_SUGGESTION


def test_navigation_hint_is_sent():
    state = state_on()
    gateway = VlmGateway(scripted(reply('action_generator', {'action': 'tap', 'widget_label': CALC_LABEL},
                                        contains='Choose an action that navigates toward it.')))
    assert generate_action(state.skeleton, state, gateway, navigation_hint=True).widget_label == CALC_LABEL


def test_no_action_means_stuck():
    state = state_on()
    gateway = VlmGateway(scripted(reply('action_generator', {'no_action': True, 'reason': 'nothing left'})))
    with pytest.raises(PlannerStuck, match='nothing left'):
        generate_action(state.skeleton, state, gateway)
    assert gateway.call_count == 1


def test_rule_oracle_on_identical_text():
    oracle = rule_path_oracle(fixtures.test_case('tip_a').terminal_oracle, final_page('tip_b'))
    assert oracle == OracleEvent(OracleKind.TEXT_EQUALS, Selector(resource_id='total_amount'), '65.09')


def test_rule_oracle_needs_identical_text():
    assert rule_path_oracle(fixtures.test_case('tip_a').terminal_oracle, final_page('tip_c')) is None


def test_rule_oracle_for_existence():
    source = OracleEvent(OracleKind.EXISTS, Selector(resource_id='calc_btn'))
    assert rule_path_oracle(source, final_page('tip_b')) == OracleEvent(OracleKind.EXISTS,
                                                                      Selector(resource_id='calc_btn'))
    assert rule_path_oracle(OracleEvent(OracleKind.EXISTS, Selector(text='Total')), final_page('tip_b')) is None


def test_vlm_oracle_must_hold_on_final_page():
    page = final_page('tip_c')
    state = state_on(page=page)
    wrong = reply('oracle_generator', {'kind': 'text_equals', 'selector_attrs': {'resource_id': 'total_amount'},
                                       'expected': '65.09'})
    right = reply('oracle_generator', {'kind': 'text_equals', 'selector_attrs': {'resource_id': 'total_amount'},
                                       'expected': '$ 65.09'}, contains='does not hold on the final page')
    gateway = VlmGateway(scripted(wrong, right))

    oracle = generate_oracle(state.skeleton, fixtures.test_case('tip_a').terminal_oracle, [page], state, gateway)

    assert oracle == OracleEvent(OracleKind.TEXT_EQUALS, Selector(resource_id='total_amount'), '$ 65.09')
    assert gateway.calls_for('oracle_generator') == 2


def test_vlm_oracle_selector_must_resolve():
    page = final_page('tip_c')
    state = state_on(page=page)
    missing = reply('oracle_generator', {'kind': 'exists', 'selector_attrs': {'resource_id': 'grand_total'}})
    gateway = VlmGateway(scripted(missing), requery_budget=0)
    with pytest.raises(ReplyValidationError, match='does not resolve on the final page'):
        generate_oracle(state.skeleton, fixtures.test_case('tip_a').terminal_oracle, [page], state, gateway)


def test_rule_oracle_makes_no_call():
    page = final_page('tip_b')
    state = state_on(page=page)
    gateway = VlmGateway(scripted())
    generate_oracle(state.skeleton, fixtures.test_case('tip_a').terminal_oracle, [page], state, gateway)
    assert gateway.call_count == 0


def test_truncate_reverts_steps_finished_later():
    state = ExplorationState(skeleton())
    page = fixtures.device('tip_b').capture_page()
    candidate = CandidateAction(Action(ActionKind.WAIT, None, '10'), 'wait', CandidateSource.VLM)
    state.accept(candidate, page, page)
    state.accept(candidate, page, page)
    state.update_steps({'s1': StepStatus.DONE})
    assert state.finished_at == {'s1': 2}

    assert state.truncate(2) == []
    assert state.truncate(1) == ['s1']
    assert state.step_status == {'s1': StepStatus.PENDING}
    assert len(state.history) == 1
    assert state.last_reverted == ['s1']


def test_history_description():
    state = ExplorationState(skeleton())
    assert describe_history(state) == 'No actions taken yet.'
    page = fixtures.device('tip_b').capture_page()
    state.accept(CandidateAction(Action(ActionKind.WAIT, None, '10'), 'let the page settle', CandidateSource.VLM),
                 page, page)
    assert describe_history(state) == "1. wait '10' (let the page settle)"


def test_target_description_without_any_page():
    state = ExplorationState(skeleton(), fixtures.CATEGORY)
    assert describe_target(state) == 'App category: %s\nNo page has been captured yet.' % fixtures.CATEGORY


def test_target_description_falls_back_to_last_accepted_page():
    device = fixtures.device('tip_b')
    look = Action(ActionKind.TAP, Selector(resource_id='title'))
    outcome = device.execute_action(look)
    state = ExplorationState(skeleton(), fixtures.CATEGORY)
    state.accept(CandidateAction(look, 'look', CandidateSource.VLM), outcome.before, outcome.after)
    described = describe_target(state)
    assert state.current is None
    assert described == describe_target(state_on(page=outcome.after))
