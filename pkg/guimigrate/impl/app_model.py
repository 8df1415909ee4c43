"""
Loading and validating app-model documents for the simulator.

An app model is a small state machine: typed variables, pages laid out from widget templates whose
text may be bound to a variable, and transitions keyed on (page, selector, action kind, payload)
that apply an ordered list of effects.
"""

from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

from guimigrate.codec import decode_selector, TestCaseParseError
from guimigrate.model import ActionKind, Bounds, Selector, WidgetFlags
from guimigrate.util import MigrationError, parse_document

CENTS = Decimal('0.01')

VAR_STRING = 'string'
VAR_DECIMAL = 'decimal'
VAR_BOOLEAN = 'boolean'
VAR_TYPES = (VAR_STRING, VAR_DECIMAL, VAR_BOOLEAN)

EFFECT_KINDS = ('set', 'append_digit', 'goto', 'toggle')
OPERATORS = ('add', 'sub', 'mul', 'div', 'concat')

_FLAG_NAMES = WidgetFlags._fields


class AppModelError(MigrationError):
    """The app-model document is malformed or references undeclared pages, variables or widgets."""
    def __init__(self, problems: List[str]):
        super().__init__('invalid app model: ' + '; '.join(problems))
        self.problems = problems


class VariableSpec(NamedTuple):
    name: str
    type: str
    initial: Any


class WidgetTemplate(NamedTuple):
    resource_id: str
    text: str
    var_ref: Optional[str]
    template: str
    content_desc: str
    class_name: str
    bounds: Bounds
    flags: WidgetFlags
    visible_if: Optional[str]
    children: Tuple['WidgetTemplate', ...]


class PageSpec(NamedTuple):
    page_id: str
    activity: str
    widgets: Tuple[WidgetTemplate, ...]


class Transition(NamedTuple):
    page: str
    selector: Optional[Selector]
    action: str
    payload: Optional[str]
    payload_pattern: Optional[str]
    effects: Tuple[dict, ...]


class AppModel(NamedTuple):
    app_id: str
    screen: Tuple[int, int]
    variables: Dict[str, VariableSpec]
    pages: Dict[str, PageSpec]
    transitions: Tuple[Transition, ...]
    initial_page: str

    def initial_bindings(self) -> Dict[str, Any]:
        return {name: spec.initial for name, spec in self.variables.items()}


def to_decimal(value: Any) -> Decimal:
    """Fixed-point with two fraction digits, rounding half up."""
    return Decimal(str(value)).quantize(CENTS, rounding=ROUND_HALF_UP)


def coerce_value(var_type: str, value: Any) -> Any:
    if var_type == VAR_DECIMAL:
        return to_decimal(value)
    if var_type == VAR_BOOLEAN:
        if isinstance(value, bool):
            return value
        return str(value).lower() == 'true'
    return '' if value is None else str(value)


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    return str(value)


def load_app_model(document: bytes, app_id: str = '') -> AppModel:
    """Parses and validates an app-model document (JSON, or YAML when pyyaml is installed).

    :raises AppModelError: listing every malformed field and dangling reference
    """
    try:
        text = document.decode('utf-8') if isinstance(document, (bytes, bytearray)) else document
        data = parse_document(text)
    except Exception as e:
        raise AppModelError(['document is not parseable: %s' % e])
    if not isinstance(data, dict):
        raise AppModelError(['app model must be a mapping'])
    problems = []  # type: List[str]
    model = _decode(data, app_id or str(data.get('app_id', '')), problems)
    if model is not None:
        problems.extend(validate_app_model(model))
    if problems:
        raise AppModelError(problems)
    return model


def validate_app_model(model: AppModel) -> List[str]:
    # imported here because the simulator depends on this module
    from guimigrate.impl.simulator import render_tree

    problems = []
    bindings = model.initial_bindings()
    rendered = {}
    for page in model.pages.values():
        for template in _iter_templates(page.widgets):
            if template.var_ref is not None and template.var_ref not in model.variables:
                problems.append('page %r widget references undeclared variable %r' % (page.page_id, template.var_ref))
            if template.visible_if is not None:
                spec = model.variables.get(template.visible_if)
                if spec is None or spec.type != VAR_BOOLEAN:
                    problems.append('page %r visible_if must name a boolean variable, got %r'
                                    % (page.page_id, template.visible_if))
        if not problems:
            rendered[page.page_id] = render_tree(model, page, bindings)
    for index, transition in enumerate(model.transitions):
        where = 'transition %d' % index
        if transition.page not in model.pages:
            problems.append('%s references undefined page %r' % (where, transition.page))
        elif transition.selector is not None and transition.page in rendered:
            if transition.selector.resolve(rendered[transition.page]) is None:
                problems.append('%s selector %s does not resolve on page %r'
                                % (where, transition.selector.describe(), transition.page))
        if transition.action not in ActionKind.ALL:
            problems.append('%s has unknown action %r' % (where, transition.action))
        elif transition.action in ActionKind.WIDGET_TARGETING and transition.selector is None:
            problems.append('%s action %s requires a selector' % (where, transition.action))
        for effect in transition.effects:
            problems.extend('%s %s' % (where, p) for p in _effect_problems(model, effect))
    return problems


def _effect_problems(model: AppModel, effect: dict) -> List[str]:
    kinds = [k for k in EFFECT_KINDS if k in effect]
    if len(kinds) != 1:
        return ['effect must have exactly one of %s' % ', '.join(EFFECT_KINDS)]
    kind = kinds[0]
    target = effect[kind]
    if kind == 'goto':
        return [] if target in model.pages else ['goto references undefined page %r' % target]
    if target not in model.variables:
        return ['%s references undeclared variable %r' % (kind, target)]
    var_type = model.variables[target].type
    if kind == 'toggle' and var_type != VAR_BOOLEAN:
        return ['toggle requires a boolean variable, %r is %s' % (target, var_type)]
    if kind == 'append_digit':
        digit = effect.get('digit')
        if var_type == VAR_BOOLEAN:
            return ['append_digit cannot target boolean variable %r' % target]
        if not (isinstance(digit, str) and len(digit) == 1 and digit.isdigit()):
            return ['append_digit requires a single digit, got %r' % (digit,)]
    if kind == 'set':
        if 'value' not in effect:
            return ['set requires a value']
        return _expr_problems(model, effect['value'])
    return []


def _expr_problems(model: AppModel, expr: Any) -> List[str]:
    if isinstance(expr, (str, int, float, bool)):
        return []
    if isinstance(expr, dict):
        if 'var' in expr:
            return [] if expr['var'] in model.variables else ['expression references undeclared variable %r' % expr['var']]
        if expr.get('payload') is True:
            return []
        if expr.get('op') in OPERATORS and isinstance(expr.get('args'), list) and expr['args']:
            out = []
            for arg in expr['args']:
                out.extend(_expr_problems(model, arg))
            return out
    return ['malformed expression %r' % (expr,)]


def _iter_templates(templates):
    for t in templates:
        yield t
        yield from _iter_templates(t.children)


def _decode(data: dict, app_id: str, problems: List[str]) -> Optional[AppModel]:
    screen = data.get('screen') or {}
    try:
        width, height = int(screen['w']), int(screen['h'])
    except (KeyError, TypeError, ValueError):
        problems.append('screen must be {"w": int, "h": int}')
        return None

    variables = {}
    for name, spec in (data.get('variables') or {}).items():
        var_type = (spec or {}).get('type')
        if var_type not in VAR_TYPES:
            problems.append('variable %r has unknown type %r' % (name, var_type))
            continue
        try:
            variables[name] = VariableSpec(name, var_type, coerce_value(var_type, spec.get('initial', _zero(var_type))))
        except InvalidOperation:
            problems.append('variable %r has a non-numeric initial value' % name)

    pages = {}
    flagged_initial = []
    for page_id, page in (data.get('pages') or {}).items():
        page = page or {}
        if page.get('initial') is True:
            flagged_initial.append(page_id)
        widgets = tuple(_decode_widget(w, 'pages.%s.widgets[%d]' % (page_id, i), problems)
                        for i, w in enumerate(page.get('widgets') or []))
        pages[page_id] = PageSpec(page_id, str(page.get('activity', page_id)), widgets)

    transitions = []
    for i, t in enumerate(data.get('transitions') or []):
        selector = None
        if t.get('selector') is not None:
            try:
                selector = decode_selector(t['selector'], 'transitions[%d].selector' % i)
            except TestCaseParseError as e:
                problems.append(str(e))
        effects = t.get('effects') or []
        if not isinstance(effects, list):
            problems.append('transitions[%d].effects must be a list' % i)
            effects = []
        transitions.append(Transition(
            page=str(t.get('page')), selector=selector, action=str(t.get('action')),
            payload=t.get('payload'), payload_pattern=t.get('payload_pattern'), effects=tuple(effects)))

    initial = list(flagged_initial)
    if data.get('initial_page') is not None and data['initial_page'] not in initial:
        initial.insert(0, data['initial_page'])
    if len(initial) != 1:
        problems.append('model must declare exactly one initial page, found %d%s'
                        % (len(initial), (': ' + ', '.join(sorted(initial))) if initial else ''))
    elif initial[0] not in pages:
        problems.append('initial page %r is undefined' % initial[0])
    if problems:
        return None
    return AppModel(app_id, (width, height), variables, pages, tuple(transitions), initial[0])


def _decode_widget(data: dict, path: str, problems: List[str]) -> WidgetTemplate:
    bounds = data.get('bounds') or [0, 0, 0, 0]
    try:
        b = Bounds(*[int(v) for v in bounds])
        if not b.is_valid():
            raise ValueError()
    except (TypeError, ValueError):
        problems.append('%s.bounds must be [x1, y1, x2, y2] with x1<=x2, y1<=y2, all >= 0' % path)
        b = Bounds(0, 0, 0, 0)
    flags = data.get('flags') or {}
    unknown = sorted(set(flags) - set(_FLAG_NAMES))
    if unknown:
        problems.append('%s.flags has unknown names %s' % (path, ', '.join(unknown)))
    return WidgetTemplate(
        resource_id=str(data.get('resource_id', '')),
        text=str(data.get('text', '')),
        var_ref=data.get('var_ref'),
        template=str(data.get('template', '{value}')),
        content_desc=str(data.get('content_desc', '')),
        class_name=str(data.get('class_name', 'android.view.View')),
        bounds=b,
        flags=WidgetFlags(**{k: bool(v) for k, v in flags.items() if k in _FLAG_NAMES}),
        visible_if=data.get('visible_if'),
        children=tuple(_decode_widget(c, '%s.children[%d]' % (path, i), problems)
                       for i, c in enumerate(data.get('children') or []))
    )


def _zero(var_type: str) -> Any:
    return {VAR_DECIMAL: '0', VAR_BOOLEAN: False}.get(var_type, '')
