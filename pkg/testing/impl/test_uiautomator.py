import pytest

from guimigrate.impl.uiautomator import HierarchyParseError, parse_bounds, parse_hierarchy
from guimigrate.model import Bounds, Selector

DUMP = b'''<?xml version="1.0" encoding="UTF-8"?>
<hierarchy rotation="0" activity=".CalculatorActivity">
  <node index="0" text="" resource-id="root_frame" class="android.widget.FrameLayout" bounds="[0,0][360,640]">
    <node index="0" text="" resource-id="bill_input" class="android.widget.EditText" content-desc="bill amount"
          clickable="true" bounds="[128,64][344,104]" />
    <node index="1" text="CALCULATE" resource-id="calc_btn" class="android.widget.Button" clickable="true"
          enabled="false" bounds="[16,184][344,240]" />
    <node index="2" text="hidden" class="android.widget.TextView" visible-to-user="false" bounds="[0,700][10,690]" />
  </node>
</hierarchy>'''


def test_parses_nodes_and_flags():
    activity, root = parse_hierarchy(DUMP, (360, 640))
    assert activity == '.CalculatorActivity'
    assert root.node_path == ()
    assert root.bounds == Bounds(0, 0, 360, 640)
    frame = root.children[0]
    assert frame.node_path == (0,)
    bill = Selector(resource_id='bill_input').resolve(root)
    assert bill.node_path == (0, 0)
    assert bill.flags.editable and bill.flags.clickable
    assert bill.content_desc == 'bill amount'
    calc = Selector(text='CALCULATE').resolve(root)
    assert not calc.flags.enabled
    hidden = root.find((0, 2))
    assert not hidden.flags.visible
    assert hidden.bounds == Bounds(0, 700, 10, 700)


def test_bounds_forms():
    assert parse_bounds('[1,2][3,4]') == Bounds(1, 2, 3, 4)
    assert parse_bounds('[-5,2][3,4]') == Bounds(0, 2, 3, 4)
    assert parse_bounds('garbage') == Bounds(0, 0, 0, 0)
    assert parse_bounds('') == Bounds(0, 0, 0, 0)


def test_malformed_dump():
    with pytest.raises(HierarchyParseError):
        parse_hierarchy(b'<hierarchy><node>', (360, 640))
