"""
Helpers for loading the authored fixture apps and building scripted transcripts in tests.
"""

import json
import os

from guimigrate.device import SimulatedDevice, record_visual_log
from guimigrate.gateway import ScriptedBackend, TranscriptEntry
from guimigrate.harness import load_model, load_test

DATASET = os.path.join(os.path.dirname(__file__), 'data', 'dataset')
CATEGORY = 'finance'


def model(app_id):
    return load_model(DATASET, CATEGORY, app_id)


def test_case(app_id, functionality_id='calc_tip'):
    return load_test(DATASET, CATEGORY, app_id, functionality_id)

test_case.__test__ = False


def device(app_id):
    return SimulatedDevice(model(app_id))


def source_log(app_id='tip_a', functionality_id='calc_tip'):
    return record_visual_log(device(app_id), test_case(app_id, functionality_id))


def transcript_path(name):
    return os.path.join(DATASET, 'transcripts', name + '.json')


def reply(agent_kind, document, prose='', contains=None):
    """A transcript entry answering ``agent_kind`` with ``document`` in a fenced JSON block."""
    return TranscriptEntry(agent_kind, contains, '%s```json\n%s\n```' % (prose + '\n' if prose else '',
                                                                        json.dumps(document)))


def scripted(*entries):
    return ScriptedBackend(list(entries))


AUGMENT_TIP = {
    'functionality': 'compute the total of a bill including a 15 percent tip',
    'stop_condition': 'the total amount 65.09 is shown',
    'actions': [
        {'index': 0, 'description': 'tap the 5 button to enter the first digit of the bill'},
        {'index': 1, 'description': 'tap the 6 button to enter the second digit of the bill'},
        {'index': 2, 'description': 'tap the 6 button to enter the third digit of the bill'},
        {'index': 3, 'description': 'tap the 0 button to complete the bill amount 56.60'}
    ]
}

GROUP_TIP = [{'step_id': 's1', 'description': 'enter the bill amount 56.60', 'action_range': [0, 3]}]

CLASSIFY_TIP = [{'step_id': 's1', 'category': 'key'}]


def analysis_entries():
    """Replies for the offline analysis of the tip_a source test: augment, group, two classifications."""
    return [
        reply('analyzer_augment', AUGMENT_TIP),
        reply('analyzer_group', GROUP_TIP),
        reply('analyzer_classify', CLASSIFY_TIP),
        reply('analyzer_classify', CLASSIFY_TIP)
    ]


def not_complete(*done):
    return reply('completeness_checker', {
        'steps': [{'step_id': s, 'status': 'done'} for s in done],
        'stop_condition_met': False,
        'complete': False
    })


def complete(*done):
    return reply('completeness_checker', {
        'steps': [{'step_id': s, 'status': 'done'} for s in done],
        'stop_condition_met': True,
        'complete': True
    })


def act(action, label=None, payload=None, rationale='next step'):
    doc = {'action': action, 'rationale': rationale}
    if label is not None:
        doc['widget_label'] = label
    if payload is not None:
        doc['payload'] = payload
    return reply('action_generator', doc)


def accept(reason='the action helps'):
    return reply('feedback_action', {'accept': True, 'reason': reason})


def reject(reason='the action does not help', suggestions=()):
    return reply('feedback_action', {'accept': False, 'reason': reason, 'suggestions': list(suggestions)})


# target labels on tip_b and tip_c
BILL_LABEL = 1
TIP_LABEL = 2
CALC_LABEL = 3
