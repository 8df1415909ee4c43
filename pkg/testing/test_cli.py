import json
import os

import pytest

from guimigrate.cli import EXIT_OK, EXIT_TASK_FAILED, EXIT_USAGE, main

from testing import fixtures


def app_path(app_id, *parts):
    return os.path.join(fixtures.DATASET, fixtures.CATEGORY, app_id, *parts)


def model_path(app_id):
    return app_path(app_id, 'model.json')


def case_file(app_id):
    return app_path(app_id, 'tests', 'calc_tip.json')


def migrate_into(out):
    return main(['migrate', case_file('tip_a'), '--source-model', model_path('tip_a'),
                 '--device', 'sim:' + model_path('tip_b'),
                 '--gateway', 'scripted:' + fixtures.transcript_path('tip_a_to_b'),
                 '--seed', '3', '--out', out])


def test_replay_passes(capsys):
    assert main(['replay', case_file('tip_b'), '--device', 'sim:' + model_path('tip_b')]) == EXIT_OK
    assert capsys.readouterr().out.strip() == 'passed: 3 events'


def test_replay_on_wrong_app_fails(capsys):
    assert main(['replay', case_file('tip_b'), '--device', 'sim:' + model_path('tip_a')]) == EXIT_TASK_FAILED
    assert capsys.readouterr().out.startswith('failed at event 0: ')


def test_migrate_writes_outputs(tmp_path, capsys):
    out = str(tmp_path / 'run')
    assert migrate_into(out) == EXIT_OK
    for name in ('result.json', 'generated_test.json', 'trace.jsonl', 'skeleton.json'):
        assert os.path.isfile(os.path.join(out, name))
    assert os.path.isfile(os.path.join(out, 'source_log', 'log.json'))
    assert capsys.readouterr().out.startswith('completed: ')
    with open(os.path.join(out, 'generated_test.json'), 'r') as f:
        generated = json.load(f)
    assert generated['events'][-1]['kind'] == 'text_equals'
    with open(os.path.join(out, 'skeleton.json'), 'r') as f:
        skeleton = json.load(f)
    assert {'functionality', 'key_steps', 'stop_condition', 'source_final_page_ref'} <= set(skeleton)


def test_seeded_migrations_are_identical(tmp_path):
    first, second = str(tmp_path / 'a'), str(tmp_path / 'b')
    assert migrate_into(first) == EXIT_OK
    assert migrate_into(second) == EXIT_OK
    for name in ('result.json', 'generated_test.json', 'trace.jsonl'):
        with open(os.path.join(first, name), 'rb') as f1, open(os.path.join(second, name), 'rb') as f2:
            assert f1.read() == f2.read()


def test_verify_labels_result(tmp_path, capsys):
    out = str(tmp_path / 'run')
    migrate_into(out)
    capsys.readouterr()
    code = main(['verify', os.path.join(out, 'result.json'), '--ground-truth', case_file('tip_b'),
                 '--device', 'sim:' + model_path('tip_b')])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)['label'] == 'success_exact_match'


def test_analyze_prints_skeleton(capsys):
    code = main(['analyze', case_file('tip_a'), '--source-model', model_path('tip_a'),
                 '--gateway', 'scripted:' + fixtures.transcript_path('tip_a_to_b')])
    assert code == EXIT_OK
    skeleton = json.loads(capsys.readouterr().out)
    assert [s['step_id'] for s in skeleton['key_steps']] == ['s1']


def test_bench_writes_report(tmp_path, capsys):
    out = str(tmp_path / 'bench')
    assert main(['bench', fixtures.DATASET, '--seed', '1', '--out', out]) == EXIT_OK
    with open(os.path.join(out, 'report.json'), 'r') as f:
        report = json.load(f)
    assert len(report['tasks']) == 3
    assert report['categories'] == ['finance', 'productivity']
    assert 'full' in capsys.readouterr().out


@pytest.mark.parametrize('argv', [
    ['migrate'],
    ['replay', case_file('tip_b'), '--device', 'emulator'],
    ['frobnicate'],
    []
])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_migrate_needs_a_source_log():
    code = main(['migrate', case_file('tip_a'), '--device', 'sim:' + model_path('tip_b'),
                 '--gateway', 'scripted:' + fixtures.transcript_path('tip_a_to_b')])
    assert code == EXIT_USAGE


def test_replay_needs_a_device():
    assert main(['replay', case_file('tip_b')]) == EXIT_USAGE


def test_remote_gateway_needs_endpoint(monkeypatch):
    monkeypatch.delenv('VLM_ENDPOINT', raising=False)
    code = main(['analyze', case_file('tip_a'), '--source-model', model_path('tip_a'), '--gateway', 'remote'])
    assert code == EXIT_USAGE


def test_missing_test_file_fails_the_task(tmp_path):
    assert main(['replay', str(tmp_path / 'nope.json'), '--device', 'sim:' + model_path('tip_b')]) == \
        EXIT_TASK_FAILED


def test_version(capsys):
    assert main(['--version']) == EXIT_OK
    assert capsys.readouterr().out.startswith('gui-migrate ')
