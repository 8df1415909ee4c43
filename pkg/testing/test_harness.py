import json
import os
import shutil

import pytest

from guimigrate.config import MigrationConfig
from guimigrate.harness import (
    ALL_CATEGORIES, Label, MigrationTask, TaskOutcome, build_report, load_dataset, render_report_table,
    report_bytes, run_benchmark, save_report, verify_result
)
from guimigrate.model import (
    Action, ActionKind, MigrationResult, MigrationStatus, OracleEvent, OracleKind, Selector, TestCase
)
from guimigrate.util import MigrationError

from testing import fixtures


def target_task(app_id='tip_b'):
    return MigrationTask('calc_tip_a_to_b', 'finance', None, None, fixtures.model(app_id),
                         fixtures.test_case(app_id))


def result_with(events, status=MigrationStatus.COMPLETED, recorded_pages=()):
    generated = TestCase('tip_b', 'finance', 'calc_tip', tuple(events))
    return MigrationResult(generated, status, (), tuple(recorded_pages), 0.0)


SET_BILL = Action(ActionKind.SET_TEXT, Selector(resource_id='bill_input'), '56.60')
TAP_CALC = Action(ActionKind.TAP, Selector(resource_id='calc_btn'))
TOTAL_OK = OracleEvent(OracleKind.TEXT_EQUALS, Selector(resource_id='total_amount'), '65.09')


def outcome(approach='full', run=1, task_id='t', category='finance', label=Label.SUCCESS_EXACT_MATCH,
            wall_time=1.0):
    return TaskOutcome(approach, run, task_id, category, MigrationStatus.COMPLETED, label, 2, '', wall_time, 4, '')


def test_load_dataset_sorts_tasks_and_resolves_transcripts():
    tasks = load_dataset(fixtures.DATASET)
    assert [t.task_id for t in tasks] == ['calc_tip_a_to_b', 'calc_tip_a_to_c', 'count_twice_a_to_b']
    task = tasks[0]
    assert task.category == 'finance'
    assert task.source_model.app_id == 'tip_a'
    assert task.target_model.app_id == 'tip_b'
    assert task.transcript_for('no-vision') == os.path.join(fixtures.DATASET, 'transcripts', 'tip_a_to_b.json')


def test_load_dataset_rejects_mismatched_functionality(tmp_path):
    shutil.copytree(os.path.join(fixtures.DATASET, 'finance'), str(tmp_path / 'finance'))
    (tmp_path / 'tasks.json').write_text(json.dumps({'tasks': [{
        'task_id': 'x', 'category': 'finance',
        'source': {'app_id': 'tip_t', 'test': 'raise_tip'},
        'target': {'app_id': 'tip_b', 'ground_truth': 'calc_tip'}
    }]}))
    with pytest.raises(MigrationError, match='pairs functionality'):
        load_dataset(str(tmp_path))


def test_load_dataset_without_tasks_file(tmp_path):
    with pytest.raises(MigrationError, match='tasks.json'):
        load_dataset(str(tmp_path))


def test_unfinished_migration_fails_at_first_step():
    label = verify_result(result_with([SET_BILL], MigrationStatus.BUDGET_EXHAUSTED), target_task())
    assert label.label == Label.FAILED
    assert label.step_reached == 1
    assert not label.is_success


def test_non_executable_test_fails_at_first_step():
    missing = Action(ActionKind.TAP, Selector(resource_id='no_such_button'))
    label = verify_result(result_with([missing, TOTAL_OK]), target_task())
    assert label.label == Label.FAILED_NOT_EXECUTABLE
    assert label.step_reached == 1
    assert 'selector unresolved' in label.detail


def test_failing_oracle_fails_at_first_step():
    label = verify_result(result_with([SET_BILL, OracleEvent(OracleKind.TEXT_EQUALS,
                                                             Selector(resource_id='total_amount'), '65.09')]),
                          target_task())
    assert label.label == Label.FAILED_NOT_EXECUTABLE


def test_identical_test_is_exact_match():
    label = verify_result(result_with([SET_BILL, TAP_CALC, TOTAL_OK]), target_task())
    assert label == (Label.SUCCESS_EXACT_MATCH, 2, 'identical to the ground truth')
    assert label.is_success


def test_exact_match_ignores_selector_spelling():
    by_desc = SET_BILL._replace(selector=Selector(content_desc='bill amount'))
    by_path = TAP_CALC._replace(selector=Selector(node_path=(5,)))
    label = verify_result(result_with([by_desc, by_path, TOTAL_OK]), target_task())
    assert label.label == Label.SUCCESS_EXACT_MATCH


def test_detour_reaching_the_anchor_is_anchor_found():
    set_tip = Action(ActionKind.SET_TEXT, Selector(resource_id='tip_input'), '15')
    label = verify_result(result_with([set_tip, SET_BILL, TAP_CALC, TOTAL_OK]), target_task())
    assert label.label == Label.SUCCESS_ANCHOR_FOUND
    assert label.step_reached == 3


def test_anchor_on_last_recorded_page_counts():
    shown = fixtures.device('tip_b')
    shown.execute_action(SET_BILL)
    page = shown.execute_action(TAP_CALC).after
    total_label = OracleEvent(OracleKind.EXISTS, Selector(resource_id='total_label'))
    label = verify_result(result_with([SET_BILL, total_label], recorded_pages=[page]), target_task())
    assert label.label == Label.SUCCESS_ANCHOR_FOUND
    assert 'last recorded page' in label.detail


def test_other_passing_test_needs_manual_review():
    other_bill = Action(ActionKind.SET_TEXT, Selector(resource_id='bill_input'), '10')
    other_total = OracleEvent(OracleKind.TEXT_EQUALS, Selector(resource_id='total_amount'), '11.50')
    label = verify_result(result_with([other_bill, TAP_CALC, other_total]), target_task())
    assert label.label == Label.NEEDS_MANUAL_REVIEW
    assert label.step_reached == 4
    assert not label.is_success


def test_success_rate_arithmetic():
    rows = [outcome(task_id='t%d' % i) for i in range(9)]
    rows.append(outcome(task_id='t9', label=Label.NEEDS_MANUAL_REVIEW))
    report = build_report(MigrationConfig(), ['full'], rows)

    summary = report['approaches'][0]
    assert summary['runs'] == 10
    assert summary['success_rate'] == {'finance': 90.0, ALL_CATEGORIES: 90.0}
    assert summary['labels'][Label.SUCCESS_EXACT_MATCH] == 9
    assert summary['needs_manual_review'] == ['t9#1']
    assert summary['mean_wall_time'] == 1.0


def test_success_rate_per_category():
    rows = [outcome(task_id='a', category='finance'),
            outcome(task_id='b', category='finance', label=Label.FAILED),
            outcome(task_id='c', category='shopping', label=Label.SUCCESS_ANCHOR_FOUND)]
    report = build_report(MigrationConfig(), ['full'], rows)
    assert report['categories'] == ['finance', 'shopping']
    assert report['approaches'][0]['success_rate'] == {'finance': 50.0, 'shopping': 100.0, ALL_CATEGORIES: 66.7}


def test_report_does_not_depend_on_row_order():
    rows = [outcome(task_id='a'), outcome(task_id='b', label=Label.FAILED), outcome('no-vision', task_id='a')]
    cfg = MigrationConfig(seed=1)
    forward = build_report(cfg, ['full', 'no-vision'], rows)
    backward = build_report(cfg, ['full', 'no-vision'], list(reversed(rows)))
    assert report_bytes(forward) == report_bytes(backward)


def test_report_table_lists_every_approach():
    rows = [outcome(), outcome('no-feedback', label=Label.FAILED)]
    table = render_report_table(build_report(MigrationConfig(), ['full', 'no-feedback'], rows))
    lines = table.splitlines()
    assert lines[0].split() == ['Approach', 'finance', 'All', 'Categories', 'Manual', 'review', 'Mean', 'time',
                                '(s)']
    assert lines[2].startswith('full')
    assert '100.0%' in lines[2]
    assert lines[3].startswith('no-feedback')
    assert '0.0%' in lines[3]


def test_benchmark_on_fixture_dataset(tmp_path):
    out = str(tmp_path / 'out')
    report = run_benchmark(fixtures.DATASET, MigrationConfig(seed=1), out_dir=out)

    assert [a['approach'] for a in report['approaches']] == ['full']
    assert report['approaches'][0]['success_rate'] == {'finance': 100.0, 'productivity': 100.0, ALL_CATEGORIES: 100.0}
    labels = {t['task_id']: t['label'] for t in report['tasks']}
    assert labels == {'calc_tip_a_to_b': Label.SUCCESS_EXACT_MATCH, 'calc_tip_a_to_c': Label.SUCCESS_EXACT_MATCH,
                      'count_twice_a_to_b': Label.SUCCESS_EXACT_MATCH}
    for task_id in labels:
        assert os.path.isfile(os.path.join(out, 'full', 'run1', task_id + '.result.json'))
        with open(os.path.join(out, 'full', 'run1', task_id + '.trace.jsonl'), 'r') as f:
            records = [json.loads(line) for line in f]
        assert records[-1]['kind'] == 'status'
        with open(os.path.join(out, 'full', 'run1', task_id + '.skeleton.json'), 'r') as f:
            assert json.load(f) == next(r['payload'] for r in records if r['kind'] == 'skeleton')


def test_ablation_runs_every_variant(tmp_path):
    out = str(tmp_path / 'out')
    report = run_benchmark(fixtures.DATASET, MigrationConfig(seed=1, jobs=2), ablation=True, out_dir=out)

    assert [a['approach'] for a in report['approaches']] == ['full', 'no-vision', 'no-analyzer', 'no-feedback']
    assert all(a['success_rate'][ALL_CATEGORIES] == 100.0 for a in report['approaches'])
    with open(os.path.join(out, 'no-vision', 'run1', 'calc_tip_a_to_b.trace.jsonl'), 'r') as f:
        calls = [r for r in (json.loads(line) for line in f) if r['kind'] == 'vlm_call']
    assert calls and all(c['payload']['image_count'] == 0 for c in calls)


def test_seeded_benchmark_reports_are_identical(tmp_path):
    cfg = MigrationConfig(seed=5, jobs=2, repeat=2)
    first = run_benchmark(fixtures.DATASET, cfg)
    second = run_benchmark(fixtures.DATASET, cfg)
    assert report_bytes(first) == report_bytes(second)
    assert first['approaches'][0]['runs'] == 6


def test_failing_backend_is_recorded_not_raised():
    def broken(task, approach):
        raise MigrationError('no backend for %s' % task.task_id)

    report = run_benchmark(fixtures.DATASET, MigrationConfig(seed=1), backend_factory=broken)
    assert report['approaches'][0]['success_rate'][ALL_CATEGORIES] == 0.0
    assert all(t['label'] == Label.FAILED and 'no backend' in t['error'] for t in report['tasks'])


def test_unknown_gateway_is_rejected():
    with pytest.raises(ValueError):
        run_benchmark(fixtures.DATASET, MigrationConfig(), gateway_spec='carrier-pigeon')


def test_save_report_writes_json_and_table(tmp_path):
    report = build_report(MigrationConfig(), ['full'], [outcome()])
    save_report(report, str(tmp_path))
    with open(str(tmp_path / 'report.json'), 'rb') as f:
        assert f.read() == report_bytes(report)
    assert (tmp_path / 'report.txt').read_text(encoding='utf-8') == render_report_table(report)
