"""
This submodule contains active feedback: per-action acceptance and test-level reflection that
truncates the accepted history at a misleading action.
"""

from typing import Any, Dict, List, NamedTuple, Optional

from guimigrate.analyzer import TestSkeleton
from guimigrate.device import ExecutionOutcome, replay_prefix
from guimigrate.gateway import PromptImage, ReplyParseError, ReplyValidationError, VlmGateway, VlmGatewayError
from guimigrate.interfaces import Device
from guimigrate.model import Action
from guimigrate.pages import describe_page, prune_dom
from guimigrate.planner import ExplorationState, describe_history, describe_target
from guimigrate.prompts import EVENT_HISTORY, IMAGE_TARGET, TARGET_CONTEXT, TEST_SKELETON
from guimigrate.schemas import AgentKind
from guimigrate.util import MigrationError, log

REASON_NOT_EXECUTABLE = 'not executable'
REASON_UNAVAILABLE = 'feedback unavailable'


class FeedbackVerdict(NamedTuple):
    accepted: bool
    reason: str
    suggestions: List[str]

    def to_json(self) -> Dict[str, Any]:
        return dict(self._asdict())


class Reflection(NamedTuple):
    """``misleading_index`` is the 1-based history position of the earliest misleading action."""
    misleading_index: Optional[int]
    reason: str

    def to_json(self) -> Dict[str, Any]:
        return dict(self._asdict())


def _page_text(page) -> str:
    return describe_page(prune_dom(page)) or 'no interactive widgets'


def assess_action(skeleton: TestSkeleton, state: ExplorationState, action: Action,
                  outcome: ExecutionOutcome, gateway: VlmGateway) -> FeedbackVerdict:
    """Judges one executed action from the pages before and after it.

    Non-executed actions are rejected without asking. When no usable reply arrives within the
    re-query budget, the action is rejected as well.
    """
    if not outcome.executed:
        return FeedbackVerdict(False, REASON_NOT_EXECUTABLE, [])
    target = ('Current action: %s\n\nPage before the action:\n%s\n\nPage after the action:\n%s'
              % (action.describe(), _page_text(outcome.before), _page_text(outcome.after)))
    context = {
        TEST_SKELETON: skeleton.describe(state.step_status),
        TARGET_CONTEXT: target,
        EVENT_HISTORY: describe_history(state),
        'images': [PromptImage(IMAGE_TARGET, 'page before the action', outcome.before.screenshot),
                   PromptImage(IMAGE_TARGET, 'page after the action', outcome.after.screenshot)]
    }
    try:
        reply = gateway.ask(AgentKind.FEEDBACK_ACTION, context)
    except (ReplyParseError, ReplyValidationError, VlmGatewayError) as e:
        log.warning("No usable feedback for %s, rejecting it: %s", action.describe(), e)
        return FeedbackVerdict(False, REASON_UNAVAILABLE, [])
    return FeedbackVerdict(reply.accept, reply.reason, list(reply.suggestions))


def reflect_test(skeleton: TestSkeleton, state: ExplorationState, gateway: VlmGateway) -> Reflection:
    """Looks over the whole accepted history for the earliest action that misled the exploration."""
    if not state.history:
        return Reflection(None, 'no accepted actions to reflect on')
    lines = []
    images = []
    for i, entry in enumerate(state.history):
        lines.append('%d. %s\n   before:\n%s\n   after:\n%s'
                     % (i + 1, entry.action.describe(), _indent(_page_text(entry.before)),
                        _indent(_page_text(entry.after))))
        images.append(PromptImage(IMAGE_TARGET, 'before action %d' % (i + 1), entry.before.screenshot))
        images.append(PromptImage(IMAGE_TARGET, 'after action %d' % (i + 1), entry.after.screenshot))
    context = {
        TEST_SKELETON: skeleton.describe(state.step_status),
        TARGET_CONTEXT: describe_target(state),
        EVENT_HISTORY: 'Execution dialogs of the accepted actions:\n' + '\n'.join(lines),
        'images': images
    }
    size = len(state.history)

    def check(reply):
        if reply.misleading_index is not None and reply.misleading_index > size:
            raise ReplyValidationError('misleading_index %d is beyond the %d accepted actions'
                                       % (reply.misleading_index, size))
        return Reflection(reply.misleading_index, reply.reason)

    return gateway.ask(AgentKind.FEEDBACK_REFLECT, context, check)


def _indent(text: str) -> str:
    return '\n'.join('     ' + line for line in text.splitlines())


def apply_truncation(state: ExplorationState, reflection: Reflection, session: Device) -> ExplorationState:
    """Cuts the history before the misleading action and replays what is left from reset.

    Steps finished after the kept prefix revert to pending.

    :raises MigrationError: if the kept prefix no longer replays
    """
    if reflection.misleading_index is None:
        raise MigrationError('truncation needs a misleading action')
    keep = reflection.misleading_index - 1
    actions = state.accepted_actions[:keep]
    outcomes = replay_prefix(session, actions)
    if len(outcomes) != len(actions) or (outcomes and not outcomes[-1].executed):
        failed = outcomes[-1] if outcomes else None
        raise MigrationError('accepted prefix no longer replays: %s'
                             % (failed.failure_reason if failed is not None else 'no outcome'))
    reverted = state.truncate(keep)
    state.current = None
    log.info("Truncated history to %d actions (reverted steps: %s)", keep, ', '.join(reverted) or 'none')
    return state
