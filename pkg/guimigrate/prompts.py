"""
The prompt component table: which context sections, images, reasoning steps and instructions each
agent kind receives, and the reply block it must end with.
"""

from typing import Dict, NamedTuple, Optional, Tuple

from guimigrate.schemas import AgentKind

TEST_SKELETON = 'test_skeleton'
SOURCE_CONTEXT = 'source_context'
TARGET_CONTEXT = 'target_context'
EVENT_HISTORY = 'event_history'
CHAIN_OF_THOUGHT = 'chain_of_thought'
INSTRUCTION = 'instruction'

SECTION_ORDER = (TEST_SKELETON, SOURCE_CONTEXT, TARGET_CONTEXT, EVENT_HISTORY, CHAIN_OF_THOUGHT, INSTRUCTION)
CONTEXT_SECTIONS = SECTION_ORDER[:4]

SECTION_TITLES = {
    TEST_SKELETON: 'Test skeleton',
    SOURCE_CONTEXT: 'Source app context',
    TARGET_CONTEXT: 'Target app context',
    EVENT_HISTORY: 'Event history',
    CHAIN_OF_THOUGHT: 'Think step by step',
    INSTRUCTION: 'Instruction',
}

IMAGE_SOURCE = 'source'
IMAGE_TARGET = 'target'


class PromptTemplate(NamedTuple):
    """One row of the component table.

    ``context_sections`` are the sections the caller must supply. ``images`` fixes the labels of
    the attached images in order; None means the count varies with the input (one pair per action).
    """
    agent_kind: str
    context_sections: Tuple[str, ...]
    images: Optional[Tuple[str, ...]]
    chain_of_thought: Tuple[str, ...]
    instruction: Tuple[str, ...]
    reply_format: str


TEMPLATES = {t.agent_kind: t for t in (
    PromptTemplate(
        AgentKind.ANALYZER_AUGMENT,
        (SOURCE_CONTEXT,),
        None,
        ('Read the textual attributes of the widget each source action operates on.',
         'Compare the screenshots taken before and after the action to see its effect.',
         "Infer the intention of each action as '<action> the <widget> to <effect>'."),
        ('Describe every source action, in order, by its intention.',
         'State the functionality the test exercises and draft the condition its final oracle checks.'),
        '{"functionality": "...", "stop_condition": "...", "actions": [{"index": 0, "description": "..."}]}'),
    PromptTemplate(
        AgentKind.ANALYZER_GROUP,
        (SOURCE_CONTEXT,),
        (),
        ('Read the described actions in order.',
         'Merge consecutive actions that together complete a single intention.'),
        ('Group the actions into logic steps. The ranges [first, last] must cover every action exactly once, '
         'in order.',),
        '[{"step_id": "s1", "description": "...", "action_range": [0, 3]}]'),
    PromptTemplate(
        AgentKind.ANALYZER_CLASSIFY,
        (SOURCE_CONTEXT,),
        None,
        ('Relate each logic step to the functionality under test.',
         'Decide whether the step realizes the functionality or only handles app-specific behavior such as '
         'tutorials, permission dialogs or confirmations.'),
        ('Label every step "key" or "supporting" and give a short reason.',),
        '[{"step_id": "s1", "category": "key", "reason": "..."}]'),
    PromptTemplate(
        AgentKind.COMPLETENESS_CHECKER,
        (TEST_SKELETON, SOURCE_CONTEXT, TARGET_CONTEXT, EVENT_HISTORY),
        (IMAGE_SOURCE, IMAGE_TARGET),
        ('Check step completeness: decide for every key step whether the event history and the target page '
         'show it done. If a step was not executed, double-check its necessity on the target app by comparing '
         "the source app's final page with the target page; a step may be waived only after that check.",
         "Check the stop condition: compare the source app's final page with the target page. The same value "
         'shown in a different format counts as met.',
         'Infer navigation to the anchor page: decide whether extra actions are needed to reach the page where '
         'the stop condition can be checked.'),
        ('Is it time to generate the oracle? Answer complete=true only when every key step is done or waived and '
         'the stop condition is met.',
         'Are extra actions needed to reach the anchor page?'),
        '{"steps": [{"step_id": "s1", "status": "done", "necessity_double_checked": false, "justification": ""}], '
        '"stop_condition_met": false, "complete": false, "extra_navigation_needed": false, "note": "..."}'),
    PromptTemplate(
        AgentKind.ACTION_GENERATOR,
        (TEST_SKELETON, TARGET_CONTEXT, EVENT_HISTORY),
        (IMAGE_TARGET,),
        ('Check step completeness against the event history.',
         'Infer the step currently under way.',
         'Infer the step to start next.',
         'Infer the connection action that leads from the current page to that step.'),
        ('Select a widget to interact with by its label number.',
         'Select an action to perform on it: tap, long_tap, swipe (payload up/down/left/right), '
         'set_text (payload is the text), key_event (payload is the key name) or wait (payload is milliseconds).'),
        '{"widget_label": 1, "action": "tap", "payload": null, "rationale": "..."} '
        'or {"no_action": true, "reason": "..."}'),
    PromptTemplate(
        AgentKind.FEEDBACK_ACTION,
        (TEST_SKELETON, TARGET_CONTEXT, EVENT_HISTORY),
        (IMAGE_TARGET, IMAGE_TARGET),
        ('Describe the consequences of the current action by comparing the page before and after it.',
         'Check whether the action relates to the functionality and advances the key steps.'),
        ('Accept the action or not?',
         'Suggest alternative actions.'),
        '{"accept": true, "reason": "...", "suggestions": []}'),
    PromptTemplate(
        AgentKind.FEEDBACK_REFLECT,
        (TEST_SKELETON, TARGET_CONTEXT, EVENT_HISTORY),
        None,
        ('Go through the execution dialogs of the accepted actions in order and describe what each changed.',
         'Find the earliest accepted action that led the exploration away from the key steps.'),
        ('Give the 1-based position of the earliest misleading action, or null when none misled the exploration.',),
        '{"misleading_index": 2, "reason": "..."}'),
    PromptTemplate(
        AgentKind.ORACLE_GENERATOR,
        (TEST_SKELETON, SOURCE_CONTEXT, TARGET_CONTEXT, EVENT_HISTORY),
        (IMAGE_SOURCE, IMAGE_TARGET),
        ("Identify the widget the source test's final oracle inspects and what it asserts.",
         'Find the widget on the current target page that shows the equivalent information.'),
        ('Write an oracle over attributes of a widget on the current target page.',),
        '{"kind": "text_equals", "selector_attrs": {"resource_id": "..."}, "expected": "..."}'),
)}  # type: Dict[str, PromptTemplate]


def numbered(lines: Tuple[str, ...]) -> str:
    return '\n'.join('%d. %s' % (i + 1, line) for i, line in enumerate(lines))


def chain_of_thought_text(template: PromptTemplate) -> str:
    return numbered(template.chain_of_thought)


def instruction_text(template: PromptTemplate, extra: Optional[str] = None, requery_note: Optional[str] = None) -> str:
    parts = [numbered(template.instruction)]
    if extra:
        parts.append(extra)
    parts.append('Reason first, then end your reply with exactly one fenced JSON block of the form:\n'
                 '```json\n%s\n```' % template.reply_format)
    if requery_note:
        parts.append('Your previous reply was rejected: %s. Answer again.' % requery_note)
    return '\n\n'.join(parts)
