"""
Reply schemas for each agent kind.

Every VLM reply ends with a fenced JSON block that must validate against the schema of the agent
that was asked. Prose before the block is kept in the trace but never interpreted.
"""

from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, TypeAdapter, model_validator

from guimigrate.model import ActionKind, OracleKind


class AgentKind:
    ANALYZER_AUGMENT = 'analyzer_augment'
    ANALYZER_GROUP = 'analyzer_group'
    ANALYZER_CLASSIFY = 'analyzer_classify'
    COMPLETENESS_CHECKER = 'completeness_checker'
    ACTION_GENERATOR = 'action_generator'
    FEEDBACK_ACTION = 'feedback_action'
    FEEDBACK_REFLECT = 'feedback_reflect'
    ORACLE_GENERATOR = 'oracle_generator'

    ALL = (ANALYZER_AUGMENT, ANALYZER_GROUP, ANALYZER_CLASSIFY, COMPLETENESS_CHECKER, ACTION_GENERATOR,
           FEEDBACK_ACTION, FEEDBACK_REFLECT, ORACLE_GENERATOR)


class AugmentedAction(BaseModel):
    index: int = Field(ge=0)
    description: str = Field(min_length=1)


class AugmentReply(BaseModel):
    functionality: str = Field(min_length=1, description="The functionality the source test exercises")
    stop_condition: str = Field(min_length=1, description="Draft of the condition that ends the test")
    actions: List[AugmentedAction]


class GroupedStep(BaseModel):
    step_id: str = Field(min_length=1)
    description: str = Field(min_length=1)
    action_range: Tuple[int, int]


class ClassifiedStep(BaseModel):
    step_id: str = Field(min_length=1)
    category: Literal['key', 'supporting']
    reason: str = ''


class StepStatusEntry(BaseModel):
    step_id: str
    status: Literal['pending', 'in_progress', 'done', 'waived']
    necessity_double_checked: bool = False
    justification: str = ''


class CompletenessReply(BaseModel):
    steps: List[StepStatusEntry] = []
    stop_condition_met: bool
    complete: bool
    extra_navigation_needed: bool = False
    note: str = ''


class ActionReply(BaseModel):
    widget_label: Optional[int] = None
    action: Optional[str] = None
    payload: Optional[str] = None
    rationale: str = ''
    no_action: bool = False
    reason: str = ''

    @model_validator(mode='after')
    def _check_action(self) -> 'ActionReply':
        if self.no_action:
            return self
        if self.action not in ActionKind.ALL:
            raise ValueError('action must be one of %s' % ', '.join(ActionKind.ALL))
        if self.action in ActionKind.WIDGET_TARGETING and self.widget_label is None:
            raise ValueError('%s requires widget_label' % self.action)
        if self.action == ActionKind.SET_TEXT and self.payload is None:
            raise ValueError('set_text requires payload')
        return self


class FeedbackReply(BaseModel):
    accept: bool
    reason: str = ''
    suggestions: List[str] = []

    @model_validator(mode='after')
    def _check_reason(self) -> 'FeedbackReply':
        if not self.accept and not self.reason.strip():
            raise ValueError('a rejection must give a reason')
        return self


class ReflectReply(BaseModel):
    misleading_index: Optional[int] = Field(default=None, ge=1)
    reason: str = ''


class SelectorAttrs(BaseModel):
    resource_id: Optional[str] = None
    text: Optional[str] = None
    content_desc: Optional[str] = None


class OracleReply(BaseModel):
    kind: Literal['exists', 'text_equals', 'text_contains']
    selector_attrs: SelectorAttrs
    expected: str = ''

    @model_validator(mode='after')
    def _check_expected(self) -> 'OracleReply':
        if self.kind in OracleKind.TEXTUAL and not self.expected:
            raise ValueError('%s requires non-empty expected' % self.kind)
        if not (self.selector_attrs.resource_id or self.selector_attrs.text or self.selector_attrs.content_desc):
            raise ValueError('selector_attrs must name at least one attribute')
        return self


REPLY_SCHEMAS = {
    AgentKind.ANALYZER_AUGMENT: TypeAdapter(AugmentReply),
    AgentKind.ANALYZER_GROUP: TypeAdapter(List[GroupedStep]),
    AgentKind.ANALYZER_CLASSIFY: TypeAdapter(List[ClassifiedStep]),
    AgentKind.COMPLETENESS_CHECKER: TypeAdapter(CompletenessReply),
    AgentKind.ACTION_GENERATOR: TypeAdapter(ActionReply),
    AgentKind.FEEDBACK_ACTION: TypeAdapter(FeedbackReply),
    AgentKind.FEEDBACK_REFLECT: TypeAdapter(ReflectReply),
    AgentKind.ORACLE_GENERATOR: TypeAdapter(OracleReply),
}  # type: Dict[str, TypeAdapter]


def validate_reply(agent_kind: str, document: Any) -> Any:
    """Validates a decoded JSON document; raises ``pydantic.ValidationError`` on a schema violation."""
    return REPLY_SCHEMAS[agent_kind].validate_python(document)
