"""
This submodule contains the shared domain types of the migration engine: widgets and pages captured
from a device, the actions and oracle events that make up a test case, and the result of a migration.

All types are immutable values; they can be shared between threads freely.
"""

from typing import Iterator, List, NamedTuple, Optional, Tuple, Union


class ActionKind:
    """The kinds of atomic action a test can perform."""
    TAP = 'tap'
    LONG_TAP = 'long_tap'
    SWIPE = 'swipe'
    SET_TEXT = 'set_text'
    KEY_EVENT = 'key_event'
    WAIT = 'wait'

    ALL = (TAP, LONG_TAP, SWIPE, SET_TEXT, KEY_EVENT, WAIT)
    WIDGET_TARGETING = (TAP, LONG_TAP, SWIPE, SET_TEXT)


class OracleKind:
    """The kinds of assertion an oracle event can make about a page."""
    EXISTS = 'exists'
    TEXT_EQUALS = 'text_equals'
    TEXT_CONTAINS = 'text_contains'

    ALL = (EXISTS, TEXT_EQUALS, TEXT_CONTAINS)
    TEXTUAL = (TEXT_EQUALS, TEXT_CONTAINS)


SWIPE_DIRECTIONS = ('up', 'down', 'left', 'right')


class Bounds(NamedTuple):
    x1: int
    y1: int
    x2: int
    y2: int

    @property
    def width(self) -> int:
        return self.x2 - self.x1

    @property
    def height(self) -> int:
        return self.y2 - self.y1

    @property
    def center(self) -> Tuple[int, int]:
        return ((self.x1 + self.x2) // 2, (self.y1 + self.y2) // 2)

    def is_valid(self) -> bool:
        return 0 <= self.x1 <= self.x2 and 0 <= self.y1 <= self.y2


class WidgetFlags(NamedTuple):
    clickable: bool = False
    long_clickable: bool = False
    editable: bool = False
    scrollable: bool = False
    checkable: bool = False
    enabled: bool = True
    visible: bool = True

    @property
    def interactive(self) -> bool:
        return self.clickable or self.long_clickable or self.editable or self.scrollable or self.checkable


class Widget(NamedTuple):
    """One node of a captured UI hierarchy.

    ``node_path`` is the sequence of child indices leading from the root to this node; the root's
    path is empty. A child's bounds need not be contained in its parent's.
    """
    node_path: Tuple[int, ...]
    resource_id: str = ''
    text: str = ''
    content_desc: str = ''
    class_name: str = ''
    bounds: Bounds = Bounds(0, 0, 0, 0)
    flags: WidgetFlags = WidgetFlags()
    children: Tuple['Widget', ...] = ()

    @property
    def is_interactive(self) -> bool:
        return self.flags.interactive

    def iter_tree(self) -> Iterator['Widget']:
        """Yields this widget and all of its descendants in pre-order."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def find(self, node_path: Tuple[int, ...]) -> Optional['Widget']:
        node_path = tuple(node_path)
        if node_path[:len(self.node_path)] != self.node_path:
            return None
        node = self
        for depth in range(len(self.node_path) + 1, len(node_path) + 1):
            prefix = node_path[:depth]
            index = prefix[-1]
            if 0 <= index < len(node.children) and node.children[index].node_path == prefix:
                node = node.children[index]
                continue
            # pruned trees keep original paths but drop siblings
            node = next((c for c in node.children if c.node_path == prefix), None)
            if node is None:
                return None
        return node

    def label(self) -> str:
        return self.text or self.content_desc or self.resource_id


class Selector(NamedTuple):
    """Identifies a widget on a page.

    A selector with a ``node_path`` resolves to the node at that path. Otherwise the non-empty
    attributes (compared in the order resource_id, text, content_desc) must all equal the widget's,
    by exact string equality, and the first match in pre-order wins.
    """
    node_path: Optional[Tuple[int, ...]] = None
    resource_id: Optional[str] = None
    text: Optional[str] = None
    content_desc: Optional[str] = None

    def attribute_query(self) -> List[Tuple[str, str]]:
        return [(name, value) for name, value in
                (('resource_id', self.resource_id), ('text', self.text), ('content_desc', self.content_desc))
                if value]

    def is_empty(self) -> bool:
        return self.node_path is None and not self.attribute_query()

    def resolve(self, root: Widget) -> Optional[Widget]:
        if self.node_path is not None:
            return root.find(self.node_path)
        query = self.attribute_query()
        if not query:
            return None
        for node in root.iter_tree():
            if all(getattr(node, name) == value for name, value in query):
                return node
        return None

    def describe(self) -> str:
        parts = ['%s=%r' % (name, value) for name, value in self.attribute_query()]
        if self.node_path is not None:
            parts.insert(0, 'node_path=%s' % '/'.join(str(i) for i in self.node_path))
        return ', '.join(parts) or '<empty selector>'


class Action(NamedTuple):
    kind: str
    selector: Optional[Selector] = None
    payload: Optional[str] = None

    def describe(self) -> str:
        target = (' on ' + self.selector.describe()) if self.selector is not None else ''
        payload = (' %r' % self.payload) if self.payload is not None else ''
        return '%s%s%s' % (self.kind, payload, target)


class OracleEvent(NamedTuple):
    kind: str
    selector: Selector
    expected: str = ''

    def describe(self) -> str:
        if self.kind == OracleKind.EXISTS:
            return 'exists %s' % self.selector.describe()
        return '%s %r on %s' % (self.kind, self.expected, self.selector.describe())


Event = Union[Action, OracleEvent]


class TestCase(NamedTuple):
    """A recorded interaction script. A valid test ends with its terminal oracle event."""
    app_id: str
    category: str
    functionality_id: str
    events: Tuple[Event, ...]

    __test__ = False  # keeps pytest from collecting this class

    @property
    def actions(self) -> List[Action]:
        return [e for e in self.events if isinstance(e, Action)]

    @property
    def terminal_oracle(self) -> Optional[OracleEvent]:
        if self.events and isinstance(self.events[-1], OracleEvent):
            return self.events[-1]
        return None


class Screenshot(NamedTuple):
    data: bytes
    width: int
    height: int
    format: str


class GuiPage(NamedTuple):
    sequence_no: int
    activity: str
    root: Widget
    screenshot: Screenshot

    def same_content(self, other: 'GuiPage') -> bool:
        """Compares hierarchy and screenshot bytes, ignoring the capture counter."""
        return (self.activity == other.activity and self.root == other.root
                and self.screenshot == other.screenshot)


class LogEntry(NamedTuple):
    before: GuiPage
    after: GuiPage


class VisualExecutionLog(NamedTuple):
    """Before/after pages captured around each source action, in order."""
    entries: Tuple[LogEntry, ...]

    @property
    def final_page(self) -> Optional[GuiPage]:
        return self.entries[-1].after if self.entries else None


class MigrationStatus:
    COMPLETED = 'completed'
    BUDGET_EXHAUSTED = 'budget_exhausted'
    ERROR = 'error'


class IterationRecord(NamedTuple):
    index: int
    candidates: Tuple[dict, ...]
    verdicts: Tuple[dict, ...]
    reflections: Tuple[dict, ...]
    vlm_calls: int
    completeness: Optional[dict] = None


class MigrationResult(NamedTuple):
    generated: TestCase
    status: str
    trace: Tuple[IterationRecord, ...]
    recorded_pages: Tuple[GuiPage, ...]
    wall_time: float
    error: str = ''


def check_oracle(page: GuiPage, oracle: OracleEvent) -> bool:
    """Evaluates an oracle event against a page."""
    widget = oracle.selector.resolve(page.root)
    if widget is None:
        return False
    if oracle.kind == OracleKind.TEXT_EQUALS:
        return widget.text == oracle.expected
    if oracle.kind == OracleKind.TEXT_CONTAINS:
        return oracle.expected in widget.text
    return True


def node_paths_unique(root: Widget) -> bool:
    seen = set()
    for node in root.iter_tree():
        if node.node_path in seen:
            return False
        seen.add(node.node_path)
    return True
