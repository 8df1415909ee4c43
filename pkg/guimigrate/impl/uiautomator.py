"""
Parser for UIAutomator-compatible hierarchy dumps.

The dump is XML whose ``node`` elements carry ``resource-id``, ``text``, ``content-desc``,
``class``, ``bounds="[x1,y1][x2,y2]"`` and boolean attributes such as ``clickable`` and
``long-clickable``. A synthetic root widget (empty node path) spans the screen and holds the
dump's top-level nodes.
"""

import re
from typing import Tuple
import xml.etree.ElementTree as ET

from guimigrate.model import Bounds, Widget, WidgetFlags
from guimigrate.util import MigrationError

_BOUNDS_RE = re.compile(r'\[(-?\d+),(-?\d+)\]\[(-?\d+),(-?\d+)\]')

ROOT_CLASS = 'hierarchy'


class HierarchyParseError(MigrationError):
    pass


def parse_hierarchy(xml: bytes, screen: Tuple[int, int]) -> Tuple[str, Widget]:
    """Parses a hierarchy dump into (activity, root widget)."""
    try:
        top = ET.fromstring(xml)
    except ET.ParseError as e:
        raise HierarchyParseError('malformed hierarchy dump: %s' % e)
    activity = top.get('activity', '')
    nodes = [n for n in top if n.tag == 'node']
    children = tuple(_parse_node(n, (i,)) for i, n in enumerate(nodes))
    return activity, Widget(node_path=(), class_name=ROOT_CLASS, bounds=Bounds(0, 0, screen[0], screen[1]),
                            children=children)


def parse_bounds(value: str) -> Bounds:
    m = _BOUNDS_RE.fullmatch(value.strip()) if value else None
    if m is None:
        return Bounds(0, 0, 0, 0)
    x1, y1, x2, y2 = (max(0, int(v)) for v in m.groups())
    # clamp inverted rectangles, which some dumps report for off-screen nodes
    return Bounds(x1, y1, max(x1, x2), max(y1, y2))


def _parse_node(element: ET.Element, path: Tuple[int, ...]) -> Widget:
    def flag(name, default='false'):
        return element.get(name, default) == 'true'

    class_name = element.get('class', '')
    flags = WidgetFlags(
        clickable=flag('clickable'),
        long_clickable=flag('long-clickable'),
        editable=flag('editable') or class_name.endswith('EditText'),
        scrollable=flag('scrollable'),
        checkable=flag('checkable'),
        enabled=flag('enabled', 'true'),
        visible=flag('visible-to-user', 'true'),
    )
    children = tuple(_parse_node(c, path + (i,)) for i, c in enumerate(n for n in element if n.tag == 'node'))
    return Widget(
        node_path=path,
        resource_id=element.get('resource-id', ''),
        text=element.get('text', ''),
        content_desc=element.get('content-desc', ''),
        class_name=class_name,
        bounds=parse_bounds(element.get('bounds', '')),
        flags=flags,
        children=children
    )
