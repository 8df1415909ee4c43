"""
This submodule turns captured pages into what prompts show: a pruned hierarchy, a screenshot with
numbered boxes over the interactive widgets, and a one-line-per-widget description.

All functions here are pure and may be called from any thread.
"""

import heapq
from typing import Dict, List, NamedTuple, Optional, Set, Tuple, Union

from guimigrate.impl.raster import draw_labels
from guimigrate.model import Bounds, GuiPage, Screenshot, Widget

DEFAULT_PRUNE_BUDGET = 60

NodePath = Tuple[int, ...]


class AnnotatedPage(NamedTuple):
    """A page prepared for prompting.

    ``index_map`` maps labels 1..N to the node paths of the interactive visible widgets of
    ``pruned``, numbered in pre-order.
    """
    base: GuiPage
    pruned: Widget
    overlay: Screenshot
    index_map: Dict[int, NodePath]

    def widget_for_label(self, label: int) -> Optional[Widget]:
        path = self.index_map.get(label)
        return None if path is None else self.pruned.find(path)

    def label_for(self, node_path: NodePath) -> Optional[int]:
        for label, path in self.index_map.items():
            if path == tuple(node_path):
                return label
        return None


def interactive_widgets(root: Widget) -> List[Widget]:
    """The visible interactive widgets below the root, in pre-order."""
    out = []
    for node in _visible_pre_order(root):
        if node is not root and node.is_interactive:
            out.append(node)
    return out


def prune_dom(page: Union[GuiPage, Widget], budget: int = DEFAULT_PRUNE_BUDGET) -> Widget:
    """Selects a subtree-preserving part of the page's hierarchy of at most ``budget`` nodes.

    Invisible subtrees are dropped, then decorative nodes (no text, no content description, not
    interactive, no retained child). If the tree is still too large, leaves are removed one at a time,
    non-interactive before interactive and deepest first, latest in pre-order breaking ties. The root
    is never removed. Retained nodes keep their original node paths.

    The removal order depends only on the tree, so a larger budget never removes a node kept under a
    smaller one, and every interactive node survives when the budget covers the interactive nodes
    together with their ancestors.
    """
    if budget < 1:
        raise ValueError('prune budget must be >= 1, got %r' % budget)
    root = page.root if isinstance(page, GuiPage) else page
    kept = _content_nodes(root)
    if len(kept) > budget:
        _remove_leaves(root, kept, len(kept) - budget)
    return _rebuild(root, kept)


def _visible_pre_order(root: Widget):
    stack = [root]
    while stack:
        node = stack.pop()
        if node is not root and not node.flags.visible:
            continue
        yield node
        stack.extend(reversed(node.children))


def _content_nodes(root: Widget) -> Set[NodePath]:
    kept = set()  # type: Set[NodePath]

    def visit(node: Widget) -> bool:
        keep_child = False
        for child in node.children:
            if child.flags.visible and visit(child):
                keep_child = True
        if node is root or keep_child or node.text or node.content_desc or node.is_interactive:
            kept.add(node.node_path)
            return True
        return False

    visit(root)
    return kept


def _remove_leaves(root: Widget, kept: Set[NodePath], count: int):
    order = {}  # type: Dict[NodePath, int]
    nodes = {}  # type: Dict[NodePath, Widget]
    for index, node in enumerate(root.iter_tree()):
        if node.node_path in kept:
            order[node.node_path] = index
            nodes[node.node_path] = node
    child_count = {path: 0 for path in kept}
    for path in kept:
        if path:
            child_count[path[:-1]] += 1

    def key(path: NodePath):
        return (nodes[path].is_interactive, -len(path), -order[path], path)

    heap = [key(path) for path in kept if path and child_count[path] == 0]
    heapq.heapify(heap)
    while count > 0 and heap:
        path = heapq.heappop(heap)[3]
        kept.discard(path)
        count -= 1
        parent = path[:-1]
        child_count[parent] -= 1
        if parent and child_count[parent] == 0:
            heapq.heappush(heap, key(parent))


def _rebuild(node: Widget, kept: Set[NodePath]) -> Widget:
    return node._replace(children=tuple(_rebuild(c, kept) for c in node.children if c.node_path in kept))


def label_map(pruned: Widget) -> Dict[int, NodePath]:
    return {i + 1: w.node_path for i, w in enumerate(interactive_widgets(pruned))}


def annotate_screenshot(page: GuiPage, pruned: Widget) -> AnnotatedPage:
    """Numbers the interactive visible widgets of the pruned tree and draws their boxes.

    With nothing to number, the overlay is the page's own screenshot.
    """
    index_map = label_map(pruned)
    if not index_map:
        return AnnotatedPage(page, pruned, page.screenshot, index_map)
    boxes = [(label, pruned.find(path).bounds) for label, path in index_map.items()]
    return AnnotatedPage(page, pruned, draw_labels(page.screenshot, boxes), index_map)


def prepare_page(page: GuiPage, budget: int = DEFAULT_PRUNE_BUDGET) -> AnnotatedPage:
    return annotate_screenshot(page, prune_dom(page, budget))


def widget_role(widget: Widget) -> str:
    simple = widget.class_name.rsplit('.', 1)[-1]
    if widget.flags.editable:
        return 'text field'
    if 'Switch' in simple or 'Toggle' in simple:
        return 'switch'
    if widget.flags.checkable or 'CheckBox' in simple or 'RadioButton' in simple:
        return 'checkbox'
    if 'SeekBar' in simple or 'Slider' in simple:
        return 'slider'
    if simple in ('ListView', 'RecyclerView', 'ScrollView', 'GridView') or widget.flags.scrollable:
        return 'list'
    if 'Button' in simple or widget.flags.clickable or widget.flags.long_clickable:
        return 'button'
    if 'Image' in simple:
        return 'image'
    if simple == 'TextView':
        return 'text'
    return simple.lower() or 'view'


def region(bounds: Bounds, screen: Bounds) -> str:
    """Names the screen third holding the center of ``bounds``, e.g. ``middle-center``."""
    cx, cy = bounds.center

    def third(value, start, size, names):
        if size <= 0:
            return names[1]
        offset = (value - start) * 3
        if offset < size:
            return names[0]
        if offset < 2 * size:
            return names[1]
        return names[2]

    vertical = third(cy, screen.y1, screen.height, ('top', 'middle', 'bottom'))
    horizontal = third(cx, screen.x1, screen.width, ('left', 'center', 'right'))
    return '%s-%s' % (vertical, horizontal)


def describe_widget(widget: Widget) -> str:
    return "%s '%s'" % (widget_role(widget), widget.text or widget.content_desc or widget.resource_id)


def describe_page(pruned: Widget) -> str:
    lines = []
    for label, widget in enumerate(interactive_widgets(pruned), start=1):
        lines.append('label %d: %s at %s' % (label, describe_widget(widget), region(widget.bounds, pruned.bounds)))
    return '\n'.join(lines)


def serialize_dom(pruned: Widget, index_map: Optional[Dict[int, NodePath]] = None) -> str:
    """Renders the pruned tree as indented lines; numbered widgets carry their ``[label]``."""
    labels = {path: label for label, path in (index_map or label_map(pruned)).items()}
    lines = []

    def visit(node: Widget, depth: int):
        parts = ['  ' * depth]
        if node.node_path in labels:
            parts.append('[%d] ' % labels[node.node_path])
        parts.append(node.class_name.rsplit('.', 1)[-1] or 'View')
        if node.resource_id:
            parts.append(' id=%s' % node.resource_id)
        if node.text:
            parts.append(" text='%s'" % node.text)
        if node.content_desc:
            parts.append(" desc='%s'" % node.content_desc)
        flags = [name for name in ('clickable', 'long_clickable', 'editable', 'scrollable', 'checkable')
                 if getattr(node.flags, name)]
        if not node.flags.enabled:
            flags.append('disabled')
        if flags:
            parts.append(' (%s)' % ', '.join(flags))
        lines.append(''.join(parts))
        for child in node.children:
            visit(child, depth + 1)

    visit(pruned, 0)
    return '\n'.join(lines)
