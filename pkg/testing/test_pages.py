from random import Random

import pytest

from guimigrate.model import Bounds, GuiPage, Screenshot, Widget, WidgetFlags
from guimigrate.pages import (
    describe_page, interactive_widgets, label_map, prepare_page, prune_dom, region, serialize_dom
)

from testing import fixtures


def widget(path, children=(), text='', interactive=False, visible=True, **attrs):
    return Widget(node_path=path, text=text, bounds=Bounds(0, 0, 10, 10), children=tuple(children),
                  flags=WidgetFlags(clickable=interactive, visible=visible), **attrs)


def paths(root):
    return {w.node_path for w in root.iter_tree()}


def test_prepared_target_page_numbers_the_three_inputs():
    page = fixtures.device('tip_b').capture_page()
    prepared = prepare_page(page)

    assert prepared.base is page
    assert [prepared.widget_for_label(n).resource_id for n in (1, 2, 3)] == ['bill_input', 'tip_input', 'calc_btn']
    assert prepared.widget_for_label(4) is None
    assert prepared.label_for((5,)) == 3
    assert prepared.overlay.format == page.screenshot.format
    assert prepared.overlay.data != page.screenshot.data


def test_keypad_buttons_are_labelled_in_pre_order():
    prepared = prepare_page(fixtures.device('tip_a').capture_page())
    labels = [prepared.widget_for_label(n).resource_id for n in sorted(prepared.index_map)]
    assert labels == ['btn_%d' % d for d in (1, 2, 3, 4, 5, 6, 7, 8, 9, 0)] + ['tip_slider']


def test_page_without_interactive_widgets_keeps_its_screenshot():
    root = widget((), [widget((0,), text='hello')])
    page = GuiPage(1, '', root, Screenshot(b'not an image', 10, 10, 'png'))
    prepared = prepare_page(page)
    assert prepared.index_map == {}
    assert prepared.overlay == page.screenshot


def test_decorative_and_invisible_nodes_are_dropped():
    root = widget((), [
        widget((0,), [widget((0, 0))]),
        widget((1,), [widget((1, 0), interactive=True)], visible=False),
        widget((2,), [widget((2, 0), text='kept')])
    ])
    pruned = prune_dom(root)
    assert paths(pruned) == {(), (2,), (2, 0)}


def test_tight_budget_removes_text_before_interactive_nodes():
    root = widget((), [widget((0,), text='caption'), widget((1,), interactive=True)])
    assert paths(prune_dom(root, 2)) == {(), (1,)}
    assert paths(prune_dom(root, 1)) == {()}


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        prune_dom(widget(()), 0)


def test_describe_and_serialize_agree_on_labels():
    pruned = prune_dom(fixtures.device('tip_b').capture_page())
    described = describe_page(pruned).splitlines()
    assert described[0].startswith("label 1: text field 'bill amount'")
    assert described[2].startswith("label 3: button 'CALCULATE'")
    dom = serialize_dom(pruned)
    assert "[3] Button id=calc_btn text='CALCULATE' (clickable)" in dom
    assert "[1] EditText id=bill_input desc='bill amount' (clickable, editable)" in dom


def test_region_names_screen_thirds():
    screen = Bounds(0, 0, 300, 600)
    assert region(Bounds(0, 0, 10, 10), screen) == 'top-left'
    assert region(Bounds(140, 290, 160, 310), screen) == 'middle-center'
    assert region(Bounds(290, 590, 300, 600), screen) == 'bottom-right'


def _random_tree(rand, path=(), depth=0):
    children = []
    if depth < 4:
        for i in range(rand.randint(0, 4)):
            children.append(_random_tree(rand, path + (i,), depth + 1))
    roll = rand.random()
    return Widget(
        node_path=path,
        text='t' if roll < 0.3 else '',
        content_desc='d' if 0.3 <= roll < 0.4 else '',
        bounds=Bounds(0, 0, 5, 5),
        flags=WidgetFlags(clickable=rand.random() < 0.3, visible=path == () or rand.random() < 0.9),
        children=tuple(children))


def _visible_nodes(root):
    out = []
    stack = [root]
    while stack:
        node = stack.pop()
        if node is not root and not node.flags.visible:
            continue
        out.append(node)
        stack.extend(node.children)
    return out


def test_pruning_random_trees():
    rand = Random(4242)
    for _ in range(200):
        root = _random_tree(rand)
        visible = _visible_nodes(root)
        interactive = {w.node_path for w in visible if w is not root and w.flags.clickable}
        needed = {()}
        for p in interactive:
            needed.update(p[:i] for i in range(len(p) + 1))

        budget = rand.randint(1, 30)
        pruned = prune_dom(root, budget)
        kept = paths(pruned)
        assert len(kept) <= budget
        assert () in kept
        assert all(p[:-1] in kept for p in kept if p)
        assert kept <= {w.node_path for w in visible}
        for p in kept:
            assert pruned.find(p) is not None
        if budget >= len(needed):
            assert interactive <= kept
        assert paths(prune_dom(root, budget + 5)) >= kept

        labels = label_map(pruned)
        assert sorted(labels) == list(range(1, len(labels) + 1))
        assert set(labels.values()) == {w.node_path for w in interactive_widgets(pruned)}
