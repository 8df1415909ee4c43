"""
This submodule turns a source test and its visual execution log into a test skeleton: the
functionality under test, the key logic steps and the stop condition.

The pipeline is fixed: describe each action, group the actions into logic steps, then classify the
steps twice and drop those both classifications call supporting.
"""

import json
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

from guimigrate.config import Toggles
from guimigrate.gateway import PromptImage, ReplyValidationError, VlmGateway
from guimigrate.model import Action, GuiPage, OracleEvent, OracleKind, TestCase, VisualExecutionLog
from guimigrate.pages import describe_widget
from guimigrate.prompts import IMAGE_SOURCE, SOURCE_CONTEXT
from guimigrate.schemas import AgentKind
from guimigrate.util import MigrationError, log


class StepCategory:
    KEY = 'key'
    SUPPORTING = 'supporting'
    UNCLASSIFIED = 'unclassified'


class DescribedAction(NamedTuple):
    """The intention of one source action, as '<action> the <widget> to <effect>'."""
    action_index: int
    event_index: int
    description: str


class LogicStep(NamedTuple):
    step_id: str
    description: str
    action_range: Tuple[int, int]
    category: str
    before_page: int
    after_page: int

    def to_json(self) -> Dict[str, Any]:
        return {'step_id': self.step_id, 'description': self.description, 'action_range': list(self.action_range)}


class Augmentation(NamedTuple):
    described: List[DescribedAction]
    functionality: str
    stop_condition_draft: str


class TestSkeleton(NamedTuple):
    __test__ = False  # keeps pytest from collecting this class

    target_functionality: str
    key_steps: Tuple[LogicStep, ...]
    stop_condition: str
    stop_condition_draft: str
    source_final_page: GuiPage
    source_oracle: OracleEvent

    @property
    def step_ids(self) -> List[str]:
        return [s.step_id for s in self.key_steps]

    def describe(self, step_status: Optional[Dict[str, str]] = None) -> str:
        lines = ['Target functionality: %s' % self.target_functionality, 'Key steps:']
        for step in self.key_steps:
            status = (' [%s]' % step_status[step.step_id]) if step_status and step.step_id in step_status else ''
            lines.append('%s: %s%s' % (step.step_id, step.description, status))
        if not self.key_steps:
            lines.append('(none)')
        lines.append('Stop condition: %s' % self.stop_condition)
        return '\n'.join(lines)

    def to_json(self) -> Dict[str, Any]:
        return {
            'functionality': self.target_functionality,
            'key_steps': [s.to_json() for s in self.key_steps],
            'stop_condition': self.stop_condition,
            'stop_condition_draft': self.stop_condition_draft,
            'source_final_page_ref': self.source_final_page.sequence_no
        }


def save_skeleton(skeleton: TestSkeleton) -> bytes:
    return skeleton_document(skeleton.to_json())


def skeleton_document(data: Dict[str, Any]) -> bytes:
    """Serializes the JSON form of a skeleton, as returned by :meth:`TestSkeleton.to_json`."""
    return (json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + '\n').encode('utf-8')


def synthesize_stop_condition(oracle: OracleEvent) -> str:
    """A checkable condition derived from the terminal oracle."""
    target = oracle.selector.describe()
    if oracle.kind == OracleKind.TEXT_EQUALS:
        return "the page shows '%s' on the widget %s" % (oracle.expected, target)
    if oracle.kind == OracleKind.TEXT_CONTAINS:
        return "the page shows text containing '%s' on the widget %s" % (oracle.expected, target)
    return 'the page shows the widget %s' % target


def _action_line(index: int, action: Action, before: GuiPage) -> str:
    widget = action.selector.resolve(before.root) if action.selector is not None else None
    target = (' on %s (%s)' % (describe_widget(widget), action.selector.describe())) if widget is not None else ''
    payload = (' with %r' % action.payload) if action.payload is not None else ''
    return 'action %d: %s%s%s' % (index, action.kind, payload, target)


def _check_log(tc: TestCase, vlog: VisualExecutionLog):
    if len(vlog.entries) != len(tc.actions):
        raise MigrationError('visual execution log has %d entries for %d source actions'
                             % (len(vlog.entries), len(tc.actions)))
    if tc.terminal_oracle is None:
        raise MigrationError('source test has no terminal oracle')
    if not tc.actions:
        raise MigrationError('source test has no actions to migrate')


def augment_actions(tc: TestCase, vlog: VisualExecutionLog, gateway: VlmGateway) -> Augmentation:
    """Describes each source action by its intention, in one call."""
    _check_log(tc, vlog)
    action_events = [(i, e) for i, e in enumerate(tc.events) if isinstance(e, Action)]
    lines = ['Source test of a %s app, functionality %s:' % (tc.category, tc.functionality_id)]
    images = []
    for n, ((event_index, action), entry) in enumerate(zip(action_events, vlog.entries)):
        lines.append(_action_line(n, action, entry.before))
        images.append(PromptImage(IMAGE_SOURCE, 'before action %d' % n, entry.before.screenshot))
        images.append(PromptImage(IMAGE_SOURCE, 'after action %d' % n, entry.after.screenshot))
    lines.append('final oracle: %s' % tc.terminal_oracle.describe())
    count = len(action_events)

    def check(reply):
        indices = [a.index for a in reply.actions]
        if indices != list(range(count)):
            raise ReplyValidationError('expected one description for each action 0..%d in order, got indices %s'
                                       % (count - 1, indices))
        return reply

    reply = gateway.ask(AgentKind.ANALYZER_AUGMENT, {SOURCE_CONTEXT: '\n'.join(lines), 'images': images}, check)
    described = [DescribedAction(n, event_index, a.description)
                 for n, ((event_index, _), a) in enumerate(zip(action_events, reply.actions))]
    return Augmentation(described, reply.functionality, reply.stop_condition)


def group_logic_steps(described: List[DescribedAction], gateway: VlmGateway,
                      vlog: VisualExecutionLog) -> List[LogicStep]:
    """Groups the described actions into logic steps whose ranges partition the actions."""
    if not described:
        raise MigrationError('cannot group an empty action list')
    count = len(described)
    text = 'Described source actions:\n' + '\n'.join('%d: %s' % (d.action_index, d.description) for d in described)

    def check(reply):
        expected_first = 0
        seen = set()
        for step in reply:
            first, last = step.action_range
            if first != expected_first or last < first or last >= count:
                raise ReplyValidationError('step ranges must partition actions 0..%d in order; step %s has range '
                                           '[%d, %d]' % (count - 1, step.step_id, first, last))
            if step.step_id in seen:
                raise ReplyValidationError('duplicate step id %s' % step.step_id)
            seen.add(step.step_id)
            expected_first = last + 1
        if expected_first != count:
            raise ReplyValidationError('step ranges cover actions 0..%d but there are %d actions'
                                       % (expected_first - 1, count))
        return reply

    reply = gateway.ask(AgentKind.ANALYZER_GROUP, {SOURCE_CONTEXT: text}, check)
    return [LogicStep(s.step_id, s.description, (s.action_range[0], s.action_range[1]), StepCategory.UNCLASSIFIED,
                      vlog.entries[s.action_range[0]].before.sequence_no,
                      vlog.entries[s.action_range[1]].after.sequence_no)
            for s in reply]


def classify_steps(steps: List[LogicStep], gateway: VlmGateway, vlog: VisualExecutionLog) -> List[LogicStep]:
    """Asks twice for key/supporting labels; a step is removed only if both answers say supporting."""
    lines = ['Logic steps of the source test:']
    images = []
    for step in steps:
        lines.append('%s (actions %d-%d): %s' % (step.step_id, step.action_range[0], step.action_range[1],
                                                 step.description))
        images.append(PromptImage(IMAGE_SOURCE, 'before step %s' % step.step_id,
                                  vlog.entries[step.action_range[0]].before.screenshot))
        images.append(PromptImage(IMAGE_SOURCE, 'after step %s' % step.step_id,
                                  vlog.entries[step.action_range[1]].after.screenshot))
    context = {SOURCE_CONTEXT: '\n'.join(lines), 'images': images}
    wanted = [s.step_id for s in steps]

    def check(reply):
        labels = {}
        for entry in reply:
            if entry.step_id not in wanted:
                raise ReplyValidationError('unknown step id %s' % entry.step_id)
            labels[entry.step_id] = entry.category
        missing = [s for s in wanted if s not in labels]
        if missing:
            raise ReplyValidationError('no category for steps %s' % ', '.join(missing))
        return labels

    first = gateway.ask(AgentKind.ANALYZER_CLASSIFY, context, check)
    second = gateway.ask(AgentKind.ANALYZER_CLASSIFY, context, check)
    kept = []
    for step in steps:
        if first[step.step_id] == StepCategory.SUPPORTING and second[step.step_id] == StepCategory.SUPPORTING:
            log.info("Dropping supporting step %s: %s", step.step_id, step.description)
            continue
        kept.append(step._replace(category=StepCategory.KEY))
    return kept


def build_skeleton(tc: TestCase, vlog: VisualExecutionLog, gateway: VlmGateway,
                   toggles: Optional[Toggles] = None) -> TestSkeleton:
    """Runs the analysis pipeline. With ``no_analyzer`` set, every described action becomes a key step."""
    toggles = toggles or Toggles()
    augmentation = augment_actions(tc, vlog, gateway)
    if toggles.no_analyzer:
        steps = [LogicStep('s%d' % (d.action_index + 1), d.description, (d.action_index, d.action_index),
                           StepCategory.KEY, vlog.entries[d.action_index].before.sequence_no,
                           vlog.entries[d.action_index].after.sequence_no)
                 for d in augmentation.described]
    else:
        steps = classify_steps(group_logic_steps(augmentation.described, gateway, vlog), gateway, vlog)
    oracle = tc.terminal_oracle
    skeleton = TestSkeleton(
        target_functionality=augmentation.functionality,
        key_steps=tuple(steps),
        stop_condition=synthesize_stop_condition(oracle),
        stop_condition_draft=augmentation.stop_condition_draft,
        source_final_page=vlog.final_page,
        source_oracle=oracle
    )
    log.info("Built skeleton for %s with %d key steps", tc.functionality_id, len(steps))
    return skeleton
