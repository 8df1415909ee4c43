"""
Deterministic execution of an app model.

Equal (model, state, action) always produce equal effects, page trees and screenshot bytes.
"""

from decimal import Decimal, DivisionByZero, InvalidOperation
import re
from typing import Any, Dict, NamedTuple, Optional, Tuple

from guimigrate.impl.app_model import (
    VAR_DECIMAL, AppModel, PageSpec, Transition, WidgetTemplate, coerce_value, format_value
)
from guimigrate.model import Action, Bounds, Widget
from guimigrate.util import log

ROOT_CLASS = 'android.widget.FrameLayout'


class SimState(NamedTuple):
    page_id: str
    bindings: Tuple[Tuple[str, Any], ...]

    def as_dict(self) -> Dict[str, Any]:
        return dict(self.bindings)


class EffectError(Exception):
    pass


def initial_state(model: AppModel) -> SimState:
    return SimState(model.initial_page, tuple(sorted(model.initial_bindings().items())))


def render_tree(model: AppModel, page: PageSpec, bindings: Dict[str, Any]) -> Widget:
    w, h = model.screen
    children = tuple(_render_widget(t, (i,), bindings, True) for i, t in enumerate(page.widgets))
    return Widget(node_path=(), class_name=ROOT_CLASS, bounds=Bounds(0, 0, w, h), children=children)


def _render_widget(t: WidgetTemplate, path: Tuple[int, ...], bindings: Dict[str, Any], parent_visible: bool) -> Widget:
    text = t.text
    if t.var_ref is not None:
        text = t.template.replace('{value}', format_value(bindings[t.var_ref]))
    visible = t.flags.visible and parent_visible
    if t.visible_if is not None:
        visible = visible and bool(bindings[t.visible_if])
    return Widget(
        node_path=path,
        resource_id=t.resource_id,
        text=text,
        content_desc=t.content_desc,
        class_name=t.class_name,
        bounds=t.bounds,
        flags=t.flags._replace(visible=visible),
        children=tuple(_render_widget(c, path + (i,), bindings, visible) for i, c in enumerate(t.children))
    )


class SimulatedApp:
    """
    Holds the current state of one simulated app. Owned by a single device session.
    """
    def __init__(self, model: AppModel):
        self._model = model
        self._state = initial_state(model)

    @property
    def model(self) -> AppModel:
        return self._model

    @property
    def state(self) -> SimState:
        return self._state

    def reset(self):
        self._state = initial_state(self._model)

    def render(self) -> Tuple[str, Widget]:
        page = self._model.pages[self._state.page_id]
        return page.activity, render_tree(self._model, page, self._state.as_dict())

    def apply(self, action: Action, widget: Optional[Widget]) -> Optional[str]:
        """Applies the first matching transition's effects.

        :return: None on success, or the reason the action could not take effect
        """
        transition = self._match(action, widget)
        if transition is None:
            log.debug("No transition for %s on page %s; no effect", action.describe(), self._state.page_id)
            return None
        try:
            self._state = apply_effects(self._model, self._state, transition, action)
        except EffectError as e:
            return 'effect failed: %s' % e
        return None

    def _match(self, action: Action, widget: Optional[Widget]) -> Optional[Transition]:
        _, root = self.render()
        for t in self._model.transitions:
            if t.page != self._state.page_id or t.action != action.kind:
                continue
            if t.selector is not None:
                target = t.selector.resolve(root)
                if widget is None or target is None or target.node_path != widget.node_path:
                    continue
            if t.payload is not None and action.payload != t.payload:
                continue
            if t.payload_pattern is not None and not re.fullmatch(t.payload_pattern, action.payload or ''):
                continue
            return t
        return None


def apply_effects(model: AppModel, state: SimState, transition: Transition, action: Action) -> SimState:
    bindings = state.as_dict()
    page_id = state.page_id
    for effect in transition.effects:
        if 'goto' in effect:
            page_id = effect['goto']
        elif 'toggle' in effect:
            bindings[effect['toggle']] = not bindings[effect['toggle']]
        elif 'append_digit' in effect:
            name = effect['append_digit']
            bindings[name] = _append_digit(model.variables[name].type, bindings[name], effect['digit'])
        elif 'set' in effect:
            name = effect['set']
            value = _evaluate(effect['value'], bindings, action)
            try:
                bindings[name] = coerce_value(model.variables[name].type, value)
            except InvalidOperation:
                raise EffectError('%r is not a decimal value for %s' % (value, name))
    return SimState(page_id, tuple(sorted(bindings.items())))


def _append_digit(var_type: str, current: Any, digit: str) -> Any:
    if var_type == VAR_DECIMAL:
        # calculator-style entry: digits shift in from the right of the cents
        return coerce_value(VAR_DECIMAL, current * 10 + Decimal(digit) / 100)
    return str(current) + digit


def _evaluate(expr: Any, bindings: Dict[str, Any], action: Action) -> Any:
    if isinstance(expr, bool):
        return expr
    if isinstance(expr, (str, int, float)):
        return str(expr)
    if 'var' in expr:
        return bindings[expr['var']]
    if expr.get('payload') is True:
        return action.payload or ''
    args = [_evaluate(a, bindings, action) for a in expr['args']]
    op = expr['op']
    if op == 'concat':
        return ''.join(format_value(a) for a in args)
    try:
        nums = [a if isinstance(a, Decimal) else Decimal(format_value(a)) for a in args]
    except InvalidOperation:
        raise EffectError('non-numeric operand in %s: %r' % (op, args))
    result = nums[0]
    for n in nums[1:]:
        if op == 'add':
            result = result + n
        elif op == 'sub':
            result = result - n
        elif op == 'mul':
            result = result * n
        else:
            try:
                result = result / n
            except (DivisionByZero, InvalidOperation):
                raise EffectError('division by zero')
    return result
