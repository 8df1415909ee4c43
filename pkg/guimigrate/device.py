"""
This submodule contains the device sessions a test is executed on: a deterministic simulator over an
app model, and a thin client for a live automation bridge. It also provides replay of action
prefixes and whole test cases, and persistence of visual execution logs.
"""

import hashlib
from io import BytesIO
import json
import os
from threading import Lock
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

from PIL import Image
import urllib3

from guimigrate.impl.app_model import AppModel
from guimigrate.impl.bridge import BridgeClient
from guimigrate.impl.raster import render_screenshot
from guimigrate.impl.simulator import SimulatedApp
from guimigrate.impl.uiautomator import HierarchyParseError, parse_hierarchy
from guimigrate.interfaces import Device
from guimigrate.model import (
    Action, ActionKind, Bounds, GuiPage, LogEntry, OracleEvent, Screenshot, TestCase, VisualExecutionLog,
    Widget, WidgetFlags, check_oracle
)
from guimigrate.util import MigrationError, UnsuccessfulResponseException, log

BACKEND_SIMULATED = 'simulated'
BACKEND_LIVE = 'live'

REASON_UNRESOLVED = 'selector unresolved'
REASON_NOT_VISIBLE = 'widget not visible'
REASON_DISABLED = 'widget disabled'
REASON_NOT_EDITABLE = 'widget not editable'

LOG_FILE = 'log.json'


class DeviceTransportError(MigrationError):
    """The live bridge could not be reached or answered with an error. Distinct from ``executed=false``."""


class ExecutionOutcome(NamedTuple):
    executed: bool
    failure_reason: str
    before: GuiPage
    after: GuiPage


class DeviceSession(Device):
    """
    Common behavior of both backends: the capture counter, selector resolution and the target
    checks made before an action is injected.

    A session is owned by one logical thread of control at a time.
    """
    def __init__(self, app_id: str):
        self._app_id = app_id
        self._capture_lock = Lock()
        self._capture_count = 0

    @property
    def app_id(self) -> str:
        return self._app_id

    @property
    def capture_count(self) -> int:
        return self._capture_count

    def capture_page(self) -> GuiPage:
        activity, root, screenshot = self._snapshot()
        with self._capture_lock:
            self._capture_count += 1
            sequence_no = self._capture_count
        return GuiPage(sequence_no, activity, root, screenshot)

    def execute_action(self, action: Action) -> ExecutionOutcome:
        before = self.capture_page()
        widget = None
        if action.kind in ActionKind.WIDGET_TARGETING:
            widget = action.selector.resolve(before.root) if action.selector is not None else None
            reason = _target_problem(action, widget)
            if reason is not None:
                log.debug("Not executing %s: %s", action.describe(), reason)
                return ExecutionOutcome(False, reason, before, before)
        reason = self._inject(action, widget)
        if reason is not None:
            log.debug("Action %s had no effect: %s", action.describe(), reason)
            return ExecutionOutcome(False, reason, before, before)
        return ExecutionOutcome(True, '', before, self.capture_page())

    def _snapshot(self) -> Tuple[str, Widget, Screenshot]:
        raise NotImplementedError

    def _inject(self, action: Action, widget: Optional[Widget]) -> Optional[str]:
        raise NotImplementedError


def _target_problem(action: Action, widget: Optional[Widget]) -> Optional[str]:
    if widget is None:
        return REASON_UNRESOLVED
    if not widget.flags.visible:
        return REASON_NOT_VISIBLE
    if not widget.flags.enabled:
        return REASON_DISABLED
    if action.kind == ActionKind.SET_TEXT and not widget.flags.editable:
        return REASON_NOT_EDITABLE
    return None


class SimulatedDevice(DeviceSession):
    """Runs an :class:`guimigrate.impl.app_model.AppModel` in process. Captures never fail."""
    def __init__(self, model: AppModel):
        super().__init__(model.app_id)
        self._app = SimulatedApp(model)

    @property
    def backend(self) -> str:
        return BACKEND_SIMULATED

    @property
    def model(self) -> AppModel:
        return self._app.model

    @property
    def state(self):
        return self._app.state

    def reset(self):
        self._app.reset()

    def _snapshot(self):
        activity, root = self._app.render()
        width, height = self._app.model.screen
        return activity, root, render_screenshot(root, width, height)

    def _inject(self, action, widget):
        return self._app.apply(action, widget)


class LiveDevice(DeviceSession):
    """Drives a real device through an automation bridge."""
    def __init__(self, client: BridgeClient, app_id: str):
        super().__init__(app_id)
        self._client = client

    @property
    def backend(self) -> str:
        return BACKEND_LIVE

    def reset(self):
        self._call(self._client.reset, self._app_id)

    def close(self):
        self._client.close()

    def _snapshot(self):
        png = self._call(self._client.screenshot)
        try:
            width, height = Image.open(BytesIO(png)).size
        except Exception as e:
            raise DeviceTransportError('bridge returned an unreadable screenshot: %s' % e)
        xml = self._call(self._client.hierarchy)
        try:
            activity, root = parse_hierarchy(xml, (width, height))
        except HierarchyParseError as e:
            raise DeviceTransportError(str(e))
        return activity, root, Screenshot(png, width, height, 'png')

    def _inject(self, action, widget):
        gesture = {'kind': action.kind}  # type: Dict[str, Any]
        if widget is not None:
            gesture['x'], gesture['y'] = widget.bounds.center
        if action.kind == ActionKind.SWIPE:
            gesture['direction'] = action.payload
        elif action.kind == ActionKind.SET_TEXT:
            gesture['text'] = action.payload
        elif action.kind == ActionKind.KEY_EVENT:
            gesture['key'] = action.payload
        elif action.kind == ActionKind.WAIT:
            gesture['ms'] = int(action.payload or 0)
        self._call(self._client.inject, gesture)
        return None

    def _call(self, fn, *args):
        try:
            return fn(*args)
        except UnsuccessfulResponseException as e:
            raise DeviceTransportError('bridge at %s answered HTTP %d' % (self._client.base_uri, e.status))
        except urllib3.exceptions.HTTPError as e:
            raise DeviceTransportError('bridge at %s unreachable: %s' % (self._client.base_uri, e))


def capture_page(session: Device) -> GuiPage:
    return session.capture_page()


def execute_action(session: Device, action: Action) -> ExecutionOutcome:
    return session.execute_action(action)


def replay_prefix(session: Device, actions: List[Action]) -> List[ExecutionOutcome]:
    """Resets the app, then executes the actions in order, stopping at the first one not executed."""
    session.reset()
    outcomes = []
    for action in actions:
        outcome = session.execute_action(action)
        outcomes.append(outcome)
        if not outcome.executed:
            log.debug("Replay stopped at action %d (%s): %s", len(outcomes) - 1, action.describe(),
                      outcome.failure_reason)
            break
    return outcomes


class ReplayOutcome(NamedTuple):
    """The result of running a whole test case, oracle checks included."""
    passed: bool
    executable: bool
    failed_event: Optional[int]
    failure_reason: str
    final_page: GuiPage


def replay_test(session: Device, tc: TestCase) -> ReplayOutcome:
    """Resets the app and runs every event, stopping at the first failed action or oracle."""
    session.reset()
    page = session.capture_page()
    for index, event in enumerate(tc.events):
        if isinstance(event, Action):
            outcome = session.execute_action(event)
            if not outcome.executed:
                return ReplayOutcome(False, False, index, outcome.failure_reason, outcome.after)
            page = outcome.after
        elif not check_oracle(page, event):
            return ReplayOutcome(False, True, index, 'oracle failed: %s' % event.describe(), page)
    return ReplayOutcome(True, True, None, '', page)


def record_visual_log(session: Device, tc: TestCase) -> VisualExecutionLog:
    """Replays a source test from reset, capturing the pages around each action.

    :raises MigrationError: if a source action cannot be executed
    """
    session.reset()
    entries = []
    page = session.capture_page()
    for index, event in enumerate(tc.events):
        if isinstance(event, OracleEvent):
            if not check_oracle(page, event):
                log.warning("Source oracle at event %d does not hold: %s", index, event.describe())
            continue
        outcome = session.execute_action(event)
        if not outcome.executed:
            raise MigrationError('source action %d (%s) is not executable: %s'
                                 % (index, event.describe(), outcome.failure_reason))
        entries.append(LogEntry(outcome.before, outcome.after))
        page = outcome.after
    return VisualExecutionLog(tuple(entries))


def encode_widget(widget: Widget) -> dict:
    return {
        'node_path': list(widget.node_path),
        'resource_id': widget.resource_id,
        'text': widget.text,
        'content_desc': widget.content_desc,
        'class_name': widget.class_name,
        'bounds': list(widget.bounds),
        'flags': widget.flags._asdict(),
        'children': [encode_widget(c) for c in widget.children]
    }


def decode_widget(data: dict) -> Widget:
    return Widget(
        node_path=tuple(data['node_path']),
        resource_id=data.get('resource_id', ''),
        text=data.get('text', ''),
        content_desc=data.get('content_desc', ''),
        class_name=data.get('class_name', ''),
        bounds=Bounds(*data['bounds']),
        flags=WidgetFlags(**data.get('flags', {})),
        children=tuple(decode_widget(c) for c in data.get('children', []))
    )


def encode_page(page: GuiPage, screenshot_file: Optional[str] = None) -> dict:
    """Encodes a page; the screenshot is referenced by file name and digest, never inlined."""
    shot = page.screenshot
    return {
        'sequence_no': page.sequence_no,
        'activity': page.activity,
        'root': encode_widget(page.root),
        'screenshot': {'file': screenshot_file, 'sha256': hashlib.sha256(shot.data).hexdigest(),
                       'width': shot.width, 'height': shot.height, 'format': shot.format}
    }


def decode_page(data: dict, directory: Optional[str] = None) -> GuiPage:
    shot = data['screenshot']
    content = b''
    if shot.get('file') and directory is not None:
        with open(os.path.join(directory, shot['file']), 'rb') as f:
            content = f.read()
    return GuiPage(data['sequence_no'], data.get('activity', ''), decode_widget(data['root']),
                   Screenshot(content, shot['width'], shot['height'], shot['format']))


def save_visual_log(vlog: VisualExecutionLog, directory: str):
    """Writes ``log.json`` plus one screenshot file per distinct captured page."""
    os.makedirs(directory, exist_ok=True)
    written = {}  # type: Dict[int, str]

    def page_doc(page: GuiPage) -> dict:
        name = written.get(page.sequence_no)
        if name is None:
            name = 'page_%04d.%s' % (page.sequence_no, page.screenshot.format)
            with open(os.path.join(directory, name), 'wb') as f:
                f.write(page.screenshot.data)
            written[page.sequence_no] = name
        return encode_page(page, name)

    doc = {'entries': [{'before': page_doc(e.before), 'after': page_doc(e.after)} for e in vlog.entries]}
    with open(os.path.join(directory, LOG_FILE), 'w', encoding='utf-8') as f:
        json.dump(doc, f, indent=2, sort_keys=True)


def load_visual_log(directory: str) -> VisualExecutionLog:
    with open(os.path.join(directory, LOG_FILE), 'r', encoding='utf-8') as f:
        doc = json.load(f)
    return VisualExecutionLog(tuple(
        LogEntry(decode_page(e['before'], directory), decode_page(e['after'], directory))
        for e in doc.get('entries', [])))
