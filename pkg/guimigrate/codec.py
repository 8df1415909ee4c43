"""
Reading, writing and validating test-case documents.

A test-case document is a UTF-8 JSON object::

    {"app_id": "...", "category": "...", "functionality_id": "...",
     "events": [{"type": "action", "kind": "tap", "selector": {"text": "5"}},
                {"type": "oracle", "kind": "text_equals", "selector": {"resource_id": "total"},
                 "expected": "65.09"}]}

Payloads and expected values are opaque strings; they are never coerced to numbers.
"""

import json
from typing import Any, List, NamedTuple, Optional

from guimigrate.model import (
    SWIPE_DIRECTIONS, Action, ActionKind, Event, OracleEvent, OracleKind, Selector, TestCase
)
from guimigrate.util import MigrationError

_SELECTOR_ATTRS = ('resource_id', 'text', 'content_desc')


class Violation(NamedTuple):
    """One broken test-case rule. ``index`` is the offending event index, if any."""
    index: Optional[int]
    message: str

    def __str__(self):
        if self.index is None:
            return self.message
        return 'event %d: %s' % (self.index, self.message)


class TestCaseParseError(MigrationError):
    """The document is not well-formed JSON or does not have the test-case shape."""
    __test__ = False

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None,
                 field: Optional[str] = None):
        where = []
        if line is not None:
            where.append('line %d, column %d' % (line, column or 0))
        if field is not None:
            where.append('field %s' % field)
        super().__init__('%s%s' % (message, (' (%s)' % '; '.join(where)) if where else ''))
        self.line = line
        self.column = column
        self.field = field


class TestCaseValidationError(MigrationError):
    """The document parsed but the test case breaks one or more invariants."""
    __test__ = False

    def __init__(self, violations: List[Violation]):
        super().__init__('; '.join(str(v) for v in violations))
        self.violations = violations


def load_test_case(document: bytes) -> TestCase:
    """Parses and validates a test-case document.

    :raises TestCaseParseError: if the document is malformed
    :raises TestCaseValidationError: if the test case breaks an invariant
    """
    tc = decode_test_case(_parse_json(document))
    violations = validate_test_case(tc)
    if violations:
        raise TestCaseValidationError(violations)
    return tc


def save_test_case(tc: TestCase) -> bytes:
    return (json.dumps(encode_test_case(tc), indent=2, ensure_ascii=False) + '\n').encode('utf-8')


def validate_test_case(tc: TestCase) -> List[Violation]:
    """Returns every broken test-case rule; an empty list means the test case is valid."""
    violations = []  # type: List[Violation]
    if not tc.events:
        return [Violation(None, 'test case has no events')]
    for index, event in enumerate(tc.events):
        if isinstance(event, Action):
            violations.extend(Violation(index, m) for m in action_violations(event))
        elif isinstance(event, OracleEvent):
            violations.extend(Violation(index, m) for m in _oracle_violations(event))
        else:
            violations.append(Violation(index, 'unknown event type'))
    if not isinstance(tc.events[-1], OracleEvent):
        violations.append(Violation(None, 'terminal event must be oracle'))
    return violations


def action_violations(action: Action) -> List[str]:
    if action.kind not in ActionKind.ALL:
        return ['unknown action kind %r' % action.kind]
    found = []
    if action.kind in ActionKind.WIDGET_TARGETING and (action.selector is None or action.selector.is_empty()):
        found.append('%s requires selector' % action.kind)
    if action.kind == ActionKind.SET_TEXT and action.payload is None:
        found.append('set_text requires payload')
    if action.kind == ActionKind.SWIPE and action.payload not in SWIPE_DIRECTIONS:
        found.append('swipe requires a direction payload (up, down, left or right)')
    if action.kind == ActionKind.KEY_EVENT and not action.payload:
        found.append('key_event requires a key name payload')
    if action.kind == ActionKind.WAIT and action.payload is not None and not action.payload.isdigit():
        found.append('wait payload must be a whole number of milliseconds')
    return found


def _oracle_violations(oracle: OracleEvent) -> List[str]:
    if oracle.kind not in OracleKind.ALL:
        return ['unknown oracle kind %r' % oracle.kind]
    found = []
    if oracle.selector.is_empty():
        found.append('%s requires selector' % oracle.kind)
    if oracle.kind in OracleKind.TEXTUAL and not oracle.expected:
        found.append('%s requires non-empty expected' % oracle.kind)
    return found


def encode_test_case(tc: TestCase) -> dict:
    """Encodes without validating; used for partial tests in migration results as well."""
    return {
        'app_id': tc.app_id,
        'category': tc.category,
        'functionality_id': tc.functionality_id,
        'events': [encode_event(e) for e in tc.events]
    }


def encode_event(event: Event) -> dict:
    if isinstance(event, OracleEvent):
        return {'type': 'oracle', 'kind': event.kind, 'selector': encode_selector(event.selector),
                'expected': event.expected}
    out = {'type': 'action', 'kind': event.kind}  # type: dict
    if event.selector is not None:
        out['selector'] = encode_selector(event.selector)
    if event.payload is not None:
        out['payload'] = event.payload
    return out


def encode_selector(selector: Selector) -> dict:
    out = {}  # type: dict
    if selector.node_path is not None:
        out['node_path'] = list(selector.node_path)
    for name in _SELECTOR_ATTRS:
        value = getattr(selector, name)
        if value is not None:
            out[name] = value
    return out


def decode_test_case(data: Any) -> TestCase:
    if not isinstance(data, dict):
        raise TestCaseParseError('test case must be a JSON object', field='$')
    events = data.get('events')
    if not isinstance(events, list):
        raise TestCaseParseError('events must be a list', field='events')
    return TestCase(
        app_id=_require_str(data, 'app_id', 'app_id'),
        category=_require_str(data, 'category', 'category'),
        functionality_id=_require_str(data, 'functionality_id', 'functionality_id'),
        events=tuple(decode_event(e, 'events[%d]' % i) for i, e in enumerate(events))
    )


def decode_event(data: Any, path: str = 'event') -> Event:
    if not isinstance(data, dict):
        raise TestCaseParseError('event must be a JSON object', field=path)
    event_type = data.get('type')
    kind = _require_str(data, 'kind', path + '.kind')
    if event_type == 'oracle':
        if 'selector' not in data:
            raise TestCaseParseError('oracle event requires a selector', field=path + '.selector')
        return OracleEvent(kind=kind, selector=decode_selector(data['selector'], path + '.selector'),
                           expected=_optional_str(data, 'expected', path + '.expected') or '')
    if event_type == 'action':
        selector = None
        if data.get('selector') is not None:
            selector = decode_selector(data['selector'], path + '.selector')
        return Action(kind=kind, selector=selector, payload=_optional_str(data, 'payload', path + '.payload'))
    raise TestCaseParseError('type must be "action" or "oracle"', field=path + '.type')


def decode_selector(data: Any, path: str = 'selector') -> Selector:
    if not isinstance(data, dict):
        raise TestCaseParseError('selector must be a JSON object', field=path)
    node_path = data.get('node_path')
    if node_path is not None:
        if not isinstance(node_path, list) or not all(
                isinstance(i, int) and not isinstance(i, bool) and i >= 0 for i in node_path):
            raise TestCaseParseError('node_path must be a list of child indices', field=path + '.node_path')
        node_path = tuple(node_path)
    attrs = {name: _optional_str(data, name, '%s.%s' % (path, name)) for name in _SELECTOR_ATTRS}
    return Selector(node_path=node_path, **attrs)


def _parse_json(document: bytes) -> Any:
    try:
        text = document.decode('utf-8') if isinstance(document, (bytes, bytearray)) else document
    except UnicodeDecodeError as e:
        raise TestCaseParseError('document is not valid UTF-8: %s' % e.reason)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise TestCaseParseError(e.msg, line=e.lineno, column=e.colno)


def _require_str(data: dict, key: str, path: str) -> str:
    value = data.get(key)
    if not isinstance(value, str):
        raise TestCaseParseError('%s must be a string' % key, field=path)
    return value


def _optional_str(data: dict, key: str, path: str) -> Optional[str]:
    value = data.get(key)
    if value is not None and not isinstance(value, str):
        raise TestCaseParseError('%s must be a string' % key, field=path)
    return value
