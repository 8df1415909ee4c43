"""
This submodule contains the online decisions of a migration: whether the interaction phase is
complete, which action to try next, and which oracle closes the generated test.
"""

from typing import Any, Dict, List, NamedTuple, Optional, Sequence

from guimigrate.analyzer import TestSkeleton
from guimigrate.codec import action_violations
from guimigrate.gateway import PromptImage, ReplyValidationError, VlmGateway
from guimigrate.model import (
    Action, ActionKind, GuiPage, OracleEvent, OracleKind, Selector, Widget, check_oracle
)
from guimigrate.pages import AnnotatedPage, describe_page, prepare_page, prune_dom, serialize_dom
from guimigrate.prompts import EVENT_HISTORY, IMAGE_SOURCE, IMAGE_TARGET, SOURCE_CONTEXT, TARGET_CONTEXT, TEST_SKELETON
from guimigrate.schemas import AgentKind
from guimigrate.util import MigrationError, log


class StepStatus:
    PENDING = 'pending'
    IN_PROGRESS = 'in_progress'
    DONE = 'done'
    WAIVED = 'waived'

    FINISHED = (DONE, WAIVED)


class CandidateSource:
    VLM = 'vlm'
    FEEDBACK_SUGGESTION = 'feedback_suggestion'


class PlannerStuck(MigrationError):
    """The action generator found nothing to do on the current page."""


class HistoryEntry(NamedTuple):
    action: Action
    description: str
    outcome: str
    before: GuiPage
    after: GuiPage


class RejectionNote(NamedTuple):
    action: str
    reason: str
    suggestions: List[str]


class CompletenessVerdict(NamedTuple):
    complete: bool
    step_status: Dict[str, str]
    stop_condition_met: bool
    extra_navigation_needed: bool
    note: str

    def to_json(self) -> Dict[str, Any]:
        return dict(self._asdict())


class CandidateAction(NamedTuple):
    action: Action
    rationale: str
    source: str
    widget_label: Optional[int] = None

    def to_json(self) -> Dict[str, Any]:
        return {'action': self.action.describe(), 'rationale': self.rationale, 'source': self.source,
                'widget_label': self.widget_label}


class ExplorationState:
    """
    Bookkeeping for one migration: the current page, the accepted history and the status of each
    key step. Finished steps (done or waived) never return to pending except through truncation.
    """
    def __init__(self, skeleton: TestSkeleton, category: str = ''):
        self.skeleton = skeleton
        self.category = category
        self.current = None  # type: Optional[AnnotatedPage]
        self.history = []  # type: List[HistoryEntry]
        self.step_status = {s: StepStatus.PENDING for s in skeleton.step_ids}  # type: Dict[str, str]
        self.finished_at = {}  # type: Dict[str, int]
        self.iteration = 0
        self.consecutive_rejections = 0
        self.last_reverted = []  # type: List[str]

    @property
    def accepted_actions(self) -> List[Action]:
        return [h.action for h in self.history]

    def accept(self, candidate: CandidateAction, before: GuiPage, after: GuiPage):
        self.history.append(HistoryEntry(candidate.action, candidate.rationale, 'accepted', before, after))
        self.consecutive_rejections = 0

    def update_steps(self, statuses: Dict[str, str]):
        for step_id, status in statuses.items():
            current = self.step_status.get(step_id)
            if current is None or current in StepStatus.FINISHED:
                continue
            if status in StepStatus.FINISHED:
                self.finished_at[step_id] = len(self.history)
            self.step_status[step_id] = status

    def truncate(self, keep: int) -> List[str]:
        """Keeps the first ``keep`` history entries; returns the steps reverted to pending."""
        del self.history[keep:]
        reverted = []
        for step_id, at in sorted(self.finished_at.items()):
            if at > keep:
                self.step_status[step_id] = StepStatus.PENDING
                reverted.append(step_id)
        for step_id in reverted:
            del self.finished_at[step_id]
        self.consecutive_rejections = 0
        self.last_reverted = reverted
        return reverted

    def pending_steps(self) -> List[str]:
        return [s for s in self.skeleton.step_ids if self.step_status[s] not in StepStatus.FINISHED]


def describe_history(state: ExplorationState) -> str:
    if not state.history:
        return 'No actions taken yet.'
    return '\n'.join('%d. %s (%s)' % (i + 1, h.action.describe(), h.description or h.outcome)
                     for i, h in enumerate(state.history))


def describe_target(state: ExplorationState, with_dom: bool = False) -> str:
    """Describes the current page, or the page after the last accepted action when none was captured."""
    page = state.current
    if page is None and state.history:
        page = prepare_page(state.history[-1].after)
    lines = []
    if state.category:
        lines.append('App category: %s' % state.category)
    if page is None:
        lines.append('No page has been captured yet.')
        return '\n'.join(lines)
    lines.append('Current page%s:' % ((' (%s)' % page.base.activity) if page.base.activity else ''))
    lines.append(describe_page(page.pruned) or 'no interactive widgets')
    if with_dom:
        lines.append('')
        lines.append('Pruned DOM tree:')
        lines.append(serialize_dom(page.pruned, page.index_map))
    return '\n'.join(lines)


def describe_source_final(skeleton: TestSkeleton) -> str:
    page = skeleton.source_final_page
    return ("Final GUI page of the source test:\n%s\nThe source test's final oracle: %s"
            % (describe_page(prune_dom(page)) or 'no interactive widgets', skeleton.source_oracle.describe()))


def check_completeness(skeleton: TestSkeleton, state: ExplorationState, gateway: VlmGateway) -> CompletenessVerdict:
    """Asks whether the interaction phase is complete and applies the step updates to ``state``.

    A waiver is honored only when the reply says the step's necessity was double-checked and
    justifies it. A reply claiming completion while a step is unfinished, or while the stop
    condition is unmet, is rejected and re-asked.
    """
    if state.current is None:
        raise MigrationError('completeness check needs a current page')
    context = {
        TEST_SKELETON: skeleton.describe(state.step_status),
        SOURCE_CONTEXT: describe_source_final(skeleton),
        TARGET_CONTEXT: describe_target(state),
        EVENT_HISTORY: describe_history(state),
        'images': [PromptImage(IMAGE_SOURCE, 'final page of the source test', skeleton.source_final_page.screenshot),
                   PromptImage(IMAGE_TARGET, 'current page of the target app', state.current.base.screenshot)]
    }

    def check(reply):
        statuses = dict(state.step_status)
        for entry in reply.steps:
            current = statuses.get(entry.step_id)
            if current is None:
                log.warning("Ignoring status for unknown step %s", entry.step_id)
                continue
            if current in StepStatus.FINISHED:
                continue
            if entry.status == StepStatus.WAIVED and not (entry.necessity_double_checked and entry.justification):
                log.warning("Not waiving step %s without a necessity double-check", entry.step_id)
                continue
            statuses[entry.step_id] = entry.status
        unfinished = [s for s in skeleton.step_ids if statuses[s] not in StepStatus.FINISHED]
        if reply.complete and unfinished:
            raise ReplyValidationError('reply claims completion while steps %s are neither done nor waived'
                                       % ', '.join(unfinished))
        if reply.complete and not reply.stop_condition_met:
            raise ReplyValidationError('reply claims completion while the stop condition is not met')
        return CompletenessVerdict(reply.complete, statuses, reply.stop_condition_met,
                                   reply.extra_navigation_needed, reply.note)

    verdict = gateway.ask(AgentKind.COMPLETENESS_CHECKER, context, check)
    state.update_steps(verdict.step_status)
    log.debug("Completeness: complete=%s steps=%s", verdict.complete, verdict.step_status)
    return verdict


def selector_for_widget(widget: Widget) -> Selector:
    """A node-path selector that also records the widget's identifying attributes."""
    return Selector(
        node_path=widget.node_path,
        resource_id=widget.resource_id or None,
        text=(widget.text or None) if not widget.flags.editable else None,
        content_desc=widget.content_desc or None
    )


def _rejection_text(notes: Sequence[RejectionNote]) -> str:
    lines = ['Rejected candidates in this iteration (do not repeat them):']
    for note in notes:
        lines.append('- %s: %s' % (note.action, note.reason))
        lines.extend('  suggestion: %s' % s for s in note.suggestions)
    return '\n'.join(lines)


NAVIGATION_HINT = ('The key steps look done but the page where the stop condition can be checked is not shown. '
                   'Choose an action that navigates toward it.')


def generate_action(skeleton: TestSkeleton, state: ExplorationState, gateway: VlmGateway,
                    rejection_notes: Sequence[RejectionNote] = (), navigation_hint: bool = False) -> CandidateAction:
    """Asks for the next action and resolves its widget label through the annotation map.

    :raises PlannerStuck: when the reply says there is no action to take
    """
    page = state.current
    if page is None:
        raise MigrationError('action generation needs a current page')
    extra = []
    if rejection_notes:
        extra.append(_rejection_text(rejection_notes))
    if navigation_hint:
        extra.append(NAVIGATION_HINT)
    context = {
        TEST_SKELETON: skeleton.describe(state.step_status),
        TARGET_CONTEXT: describe_target(state, with_dom=True),
        EVENT_HISTORY: describe_history(state),
        'images': [PromptImage(IMAGE_TARGET, 'current page with numbered widgets', page.overlay)],
        'instruction_extra': '\n\n'.join(extra) or None
    }
    source = CandidateSource.FEEDBACK_SUGGESTION if any(n.suggestions for n in rejection_notes) \
        else CandidateSource.VLM

    def check(reply):
        if reply.no_action:
            raise PlannerStuck(reply.reason or 'no action to take')
        selector = None
        if reply.action in ActionKind.WIDGET_TARGETING:
            widget = page.widget_for_label(reply.widget_label)
            if widget is None:
                raise ReplyValidationError('widget label %d is not on the page (labels 1..%d)'
                                           % (reply.widget_label, len(page.index_map)))
            selector = selector_for_widget(widget)
        action = Action(reply.action, selector, reply.payload)
        problems = action_violations(action)
        if problems:
            raise ReplyValidationError('; '.join(problems))
        return CandidateAction(action, reply.rationale, source,
                               reply.widget_label if selector is not None else None)

    return gateway.ask(AgentKind.ACTION_GENERATOR, context, check)


def _matches_subject(widget: Widget, oracle: OracleEvent) -> bool:
    if oracle.kind in OracleKind.TEXTUAL:
        return bool(widget.text) and widget.text.strip() == oracle.expected.strip()
    source = oracle.selector
    return bool((source.resource_id and widget.resource_id == source.resource_id)
                or (source.content_desc and widget.content_desc == source.content_desc))


def find_subject_widget(page: GuiPage, oracle: OracleEvent) -> Optional[Widget]:
    """The first visible widget, in pre-order, identical to the subject of ``oracle``."""
    for widget in page.root.iter_tree():
        if widget.node_path and widget.flags.visible and _matches_subject(widget, oracle):
            return widget
    return None


def _anchor_selector(page: GuiPage, widget: Widget) -> Selector:
    for selector in (Selector(resource_id=widget.resource_id or None),
                     Selector(content_desc=widget.content_desc or None)):
        if not selector.is_empty():
            resolved = selector.resolve(page.root)
            if resolved is not None and resolved.node_path == widget.node_path:
                return selector
    return Selector(node_path=widget.node_path)


def rule_path_oracle(source_oracle: OracleEvent, final_page: GuiPage) -> Optional[OracleEvent]:
    widget = find_subject_widget(final_page, source_oracle)
    if widget is None:
        return None
    selector = _anchor_selector(final_page, widget)
    if source_oracle.kind in OracleKind.TEXTUAL:
        return OracleEvent(OracleKind.TEXT_EQUALS, selector, widget.text)
    return OracleEvent(OracleKind.EXISTS, selector, '')


def generate_oracle(skeleton: TestSkeleton, source_oracle: OracleEvent, recorded_pages: Sequence[GuiPage],
                    state: ExplorationState, gateway: VlmGateway) -> OracleEvent:
    """Emits the closing oracle: by exact match on the final page when possible, else by asking the VLM."""
    page = state.current
    if page is None:
        raise MigrationError('oracle generation needs a current page')
    oracle = rule_path_oracle(source_oracle, page.base)
    if oracle is not None:
        log.info("Oracle by rule: %s", oracle.describe())
        return oracle
    earlier = [p.sequence_no for p in recorded_pages if find_subject_widget(p, source_oracle) is not None]
    if earlier:
        log.debug("Oracle subject seen on earlier pages %s but not on the final page", earlier)
    context = {
        TEST_SKELETON: skeleton.describe(state.step_status),
        SOURCE_CONTEXT: describe_source_final(skeleton),
        TARGET_CONTEXT: describe_target(state, with_dom=True),
        EVENT_HISTORY: describe_history(state),
        'images': [PromptImage(IMAGE_SOURCE, 'final page of the source test', skeleton.source_final_page.screenshot),
                   PromptImage(IMAGE_TARGET, 'final page of the target app', page.base.screenshot)]
    }

    def check(reply):
        attrs = reply.selector_attrs
        selector = Selector(resource_id=attrs.resource_id or None, text=attrs.text or None,
                            content_desc=attrs.content_desc or None)
        candidate = OracleEvent(reply.kind, selector, reply.expected)
        if selector.resolve(page.base.root) is None:
            raise ReplyValidationError('oracle selector %s does not resolve on the final page' % selector.describe())
        if not check_oracle(page.base, candidate):
            raise ReplyValidationError('oracle %s does not hold on the final page' % candidate.describe())
        return candidate

    oracle = gateway.ask(AgentKind.ORACLE_GENERATOR, context, check)
    log.info("Oracle by VLM: %s", oracle.describe())
    return oracle
