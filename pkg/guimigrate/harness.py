"""
This submodule contains the benchmark harness: dataset loading, the four-step verification of a
migration result and the success-rate report.

A dataset directory is laid out as::

    tasks.json
    <category>/<app_id>/model.json
    <category>/<app_id>/tests/<functionality_id>.json

where ``tasks.json`` is ``{"tasks": [{"task_id", "category", "source": {"app_id", "test"},
"target": {"app_id", "ground_truth"}, "transcript"}]}``. ``test`` and ``ground_truth`` name
functionality ids; ``transcript`` is a path relative to the dataset directory, or a mapping from
approach label (``full``, ``no-vision``, ...) to such a path with ``default`` as the fallback.
"""

import json
import os
from threading import Lock
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Tuple

from guimigrate.codec import load_test_case
from guimigrate.config import MigrationConfig, Toggles
from guimigrate.device import SimulatedDevice, record_visual_log, replay_test
from guimigrate.diagnostics import describe_configuration
from guimigrate.impl.app_model import AppModel, load_app_model
from guimigrate.impl.task_pool import TaskPool
from guimigrate.interfaces import Device, VlmBackend
from guimigrate.migrator import migrate, save_result, traced_skeleton
from guimigrate.model import Action, MigrationResult, MigrationStatus, TestCase, check_oracle
from guimigrate.trace import TraceKind, TraceRecorder, clock_for_seed
from guimigrate.util import MigrationError, log

TASKS_FILE = 'tasks.json'
MODEL_FILE = 'model.json'
TESTS_DIR = 'tests'
ALL_CATEGORIES = 'All Categories'
DEFAULT_TRANSCRIPT = 'default'


class Label:
    FAILED_NOT_EXECUTABLE = 'failed_not_executable'
    SUCCESS_EXACT_MATCH = 'success_exact_match'
    SUCCESS_ANCHOR_FOUND = 'success_anchor_found'
    NEEDS_MANUAL_REVIEW = 'needs_manual_review'
    FAILED = 'failed'

    ALL = (FAILED_NOT_EXECUTABLE, SUCCESS_EXACT_MATCH, SUCCESS_ANCHOR_FOUND, NEEDS_MANUAL_REVIEW, FAILED)
    SUCCESS = (SUCCESS_EXACT_MATCH, SUCCESS_ANCHOR_FOUND)


class VerificationLabel(NamedTuple):
    label: str
    step_reached: int
    detail: str = ''

    @property
    def is_success(self) -> bool:
        return self.label in Label.SUCCESS


class MigrationTask(NamedTuple):
    task_id: str
    category: str
    source_model: Optional[AppModel]
    source_test: Optional[TestCase]
    target_model: AppModel
    ground_truth: TestCase
    transcripts: Dict[str, str] = {}

    def transcript_for(self, approach: str) -> Optional[str]:
        return self.transcripts.get(approach) or self.transcripts.get(DEFAULT_TRANSCRIPT)


def _read(path: str) -> bytes:
    with open(path, 'rb') as f:
        return f.read()


def _app_dir(dataset_dir: str, category: str, app_id: str) -> str:
    return os.path.join(dataset_dir, category, app_id)


def load_model(dataset_dir: str, category: str, app_id: str) -> AppModel:
    return load_app_model(_read(os.path.join(_app_dir(dataset_dir, category, app_id), MODEL_FILE)), app_id)


def load_test(dataset_dir: str, category: str, app_id: str, functionality_id: str) -> TestCase:
    return load_test_case(_read(os.path.join(_app_dir(dataset_dir, category, app_id), TESTS_DIR,
                                             functionality_id + '.json')))


def load_dataset(dataset_dir: str) -> List[MigrationTask]:
    """Loads every task listed in ``tasks.json``, sorted by task id.

    :raises MigrationError: if a task is malformed or its tests do not share a functionality id
    """
    try:
        doc = json.loads(_read(os.path.join(dataset_dir, TASKS_FILE)).decode('utf-8'))
    except (OSError, ValueError) as e:
        raise MigrationError('cannot read %s in %s: %s' % (TASKS_FILE, dataset_dir, e))
    tasks = []
    for index, item in enumerate(doc.get('tasks', [])):
        try:
            task_id = item['task_id']
            category = item['category']
            source = item['source']
            target = item['target']
        except (KeyError, TypeError):
            raise MigrationError('task %d needs task_id, category, source and target' % index)
        source_test = load_test(dataset_dir, category, source['app_id'], source['test'])
        ground_truth = load_test(dataset_dir, category, target['app_id'], target['ground_truth'])
        if source_test.functionality_id != ground_truth.functionality_id:
            raise MigrationError('task %s pairs functionality %s with %s' % (
                task_id, source_test.functionality_id, ground_truth.functionality_id))
        transcript = item.get('transcript')
        if isinstance(transcript, str):
            transcript = {DEFAULT_TRANSCRIPT: transcript}
        transcripts = {k: os.path.join(dataset_dir, v) for k, v in (transcript or {}).items()}
        tasks.append(MigrationTask(
            task_id=task_id,
            category=category,
            source_model=load_model(dataset_dir, category, source['app_id']),
            source_test=source_test,
            target_model=load_model(dataset_dir, category, target['app_id']),
            ground_truth=ground_truth,
            transcripts=transcripts
        ))
    tasks.sort(key=lambda t: t.task_id)
    log.info("Loaded %d tasks from %s", len(tasks), dataset_dir)
    return tasks


def _semantic_trace(session: Device, tc: TestCase) -> Optional[List[Tuple]]:
    """The test as (kind, resolved node path, payload) tuples, or None if it does not replay."""
    session.reset()
    page = session.capture_page()
    resolved = []
    for event in tc.events:
        if isinstance(event, Action):
            widget = event.selector.resolve(page.root) if event.selector is not None else None
            outcome = session.execute_action(event)
            if not outcome.executed:
                return None
            resolved.append((event.kind, widget.node_path if widget is not None else None, event.payload))
            page = outcome.after
        else:
            widget = event.selector.resolve(page.root)
            resolved.append((event.kind, widget.node_path if widget is not None else None, event.expected))
    return resolved


def verify_result(result: MigrationResult, task: MigrationTask) -> VerificationLabel:
    """Labels a migration result, stopping at the first verification step that decides it.

    1. The generated test must replay, oracle included, on a fresh target session.
    2. A generated test semantically equal to the ground truth is an exact match.
    3. A final page satisfying the ground truth's oracle means the anchor widget was found.
    4. Anything else is queued for manual review and never counts as a success.
    """
    if result.status != MigrationStatus.COMPLETED:
        return VerificationLabel(Label.FAILED, 1, 'migration ended with status %s%s' % (
            result.status, (': ' + result.error) if result.error else ''))
    replay = replay_test(SimulatedDevice(task.target_model), result.generated)
    if not replay.passed:
        return VerificationLabel(Label.FAILED_NOT_EXECUTABLE, 1, 'event %s: %s' % (
            replay.failed_event, replay.failure_reason))
    generated = _semantic_trace(SimulatedDevice(task.target_model), result.generated)
    expected = _semantic_trace(SimulatedDevice(task.target_model), task.ground_truth)
    if expected is None:
        log.warning("Ground truth of task %s does not replay on its target", task.task_id)
    elif generated == expected:
        return VerificationLabel(Label.SUCCESS_EXACT_MATCH, 2, 'identical to the ground truth')
    oracle = task.ground_truth.terminal_oracle
    if oracle is not None:
        if check_oracle(replay.final_page, oracle):
            return VerificationLabel(Label.SUCCESS_ANCHOR_FOUND, 3, 'anchor of %s on the replayed final page'
                                     % oracle.describe())
        if result.recorded_pages and check_oracle(result.recorded_pages[-1], oracle):
            return VerificationLabel(Label.SUCCESS_ANCHOR_FOUND, 3, 'anchor of %s on the last recorded page'
                                     % oracle.describe())
    return VerificationLabel(Label.NEEDS_MANUAL_REVIEW, 4, 'replays, but neither matches nor reaches the anchor')


class TaskOutcome(NamedTuple):
    approach: str
    run: int
    task_id: str
    category: str
    status: str
    label: str
    step_reached: int
    detail: str
    wall_time: float
    vlm_calls: int
    error: str

    def to_json(self) -> Dict[str, Any]:
        return dict(self._asdict())


BackendFactory = Callable[[MigrationTask, str], VlmBackend]


def backend_factory_for(gateway_spec: Optional[str], cfg: MigrationConfig) -> BackendFactory:
    """Picks the backend of each run from a ``--gateway`` value.

    ``scripted`` (or nothing) uses the transcript named by the task; ``scripted:<dir>`` uses
    ``<dir>/<task_id>.json`` and ``scripted:<file>`` the same transcript for every task.
    """
    # imported here because integrations pulls in the live device stack
    from guimigrate.integrations import Gateways

    if gateway_spec == 'remote':
        return lambda task, approach: Gateways.remote(cfg)
    path = None
    if gateway_spec and gateway_spec.startswith('scripted:'):
        path = gateway_spec[len('scripted:'):]
    elif gateway_spec not in (None, 'scripted'):
        raise ValueError('unknown gateway %r' % gateway_spec)

    def scripted(task: MigrationTask, approach: str) -> VlmBackend:
        if path is None:
            transcript = task.transcript_for(approach)
            if transcript is None:
                raise MigrationError('task %s names no transcript' % task.task_id)
        elif os.path.isdir(path):
            transcript = os.path.join(path, task.task_id + '.json')
        else:
            transcript = path
        return Gateways.scripted(transcript)

    return scripted


def run_task(task: MigrationTask, cfg: MigrationConfig, backend: VlmBackend,
             trace: Optional[TraceRecorder] = None) -> MigrationResult:
    """Replays the source test on its model for the visual log, then migrates it to the target model."""
    if task.source_model is None or task.source_test is None:
        raise MigrationError('task %s has no source app' % task.task_id)
    vlog = record_visual_log(SimulatedDevice(task.source_model), task.source_test)
    return migrate(task.source_test, vlog, SimulatedDevice(task.target_model), cfg, backend, trace)


def run_benchmark(dataset_dir: str, cfg: MigrationConfig, gateway_spec: Optional[str] = None,
                  ablation: bool = False, out_dir: Optional[str] = None,
                  backend_factory: Optional[BackendFactory] = None) -> Dict[str, Any]:
    """Migrates and verifies every task of a dataset, ``cfg.repeat`` times per approach.

    With ``ablation`` the full engine and each single-toggle variant run in one report. Per-task
    errors are recorded as ``failed`` outcomes and never abort the batch. When ``out_dir`` is set,
    each run's result, trace and skeleton are written under ``<out_dir>/<approach>/run<n>/``.
    """
    tasks = load_dataset(dataset_dir)
    variants = Toggles.ablation_variants() if ablation else [cfg.toggles]
    factory = backend_factory or backend_factory_for(gateway_spec, cfg)
    outcomes = {}  # type: Dict[Tuple[int, int, str], TaskOutcome]
    lock = Lock()

    def job(order: int, toggles: Toggles, run: int, task: MigrationTask):
        outcome = _run_one(task, cfg.copy_with(toggles=toggles), toggles.label, run, factory, out_dir)
        with lock:
            outcomes[(order, run, task.task_id)] = outcome

    with TaskPool(cfg.jobs, 'guimigrate.bench') as pool:
        for order, toggles in enumerate(variants):
            for run in range(1, cfg.repeat + 1):
                for task in tasks:
                    pool.submit(lambda o=order, t=toggles, r=run, k=task: job(o, t, r, k))
    rows = [outcomes[key] for key in sorted(outcomes)]
    return build_report(cfg, [v.label for v in variants], rows)


def _run_one(task: MigrationTask, cfg: MigrationConfig, approach: str, run: int, factory: BackendFactory,
             out_dir: Optional[str]) -> TaskOutcome:
    trace = TraceRecorder(clock_for_seed(cfg.seed))
    try:
        result = run_task(task, cfg, factory(task, approach), trace)
        label = verify_result(result, task)
    except Exception as e:
        log.error("Task %s (%s, run %d) failed: %s", task.task_id, approach, run, e)
        return TaskOutcome(approach, run, task.task_id, task.category, MigrationStatus.ERROR, Label.FAILED, 1,
                           'task raised %s' % type(e).__name__, 0.0, len(trace.of_kind(TraceKind.VLM_CALL)), str(e))
    if out_dir is not None:
        run_dir = os.path.join(out_dir, approach, 'run%d' % run)
        os.makedirs(run_dir, exist_ok=True)
        with open(os.path.join(run_dir, task.task_id + '.result.json'), 'wb') as f:
            f.write(save_result(result))
        trace.write(os.path.join(run_dir, task.task_id + '.trace.jsonl'))
        skeleton = traced_skeleton(trace)
        if skeleton is not None:
            with open(os.path.join(run_dir, task.task_id + '.skeleton.json'), 'wb') as f:
                f.write(skeleton)
    log.info("Task %s (%s, run %d): %s at step %d", task.task_id, approach, run, label.label, label.step_reached)
    return TaskOutcome(approach, run, task.task_id, task.category, result.status, label.label, label.step_reached,
                       label.detail, round(result.wall_time, 3), len(trace.of_kind(TraceKind.VLM_CALL)), result.error)


def _rate(rows: List[TaskOutcome]) -> float:
    if not rows:
        return 0.0
    return round(100.0 * sum(1 for r in rows if r.label in Label.SUCCESS) / len(rows), 1)


def build_report(cfg: MigrationConfig, approaches: List[str], rows: List[TaskOutcome]) -> Dict[str, Any]:
    """Reduces task outcomes to per-approach success rates; independent of the order of ``rows``."""
    rows = sorted(rows, key=lambda r: (approaches.index(r.approach) if r.approach in approaches else len(approaches),
                                       r.approach, r.run, r.task_id))
    categories = sorted({r.category for r in rows})
    summary = []
    for approach in approaches:
        mine = [r for r in rows if r.approach == approach]
        rates = {c: _rate([r for r in mine if r.category == c]) for c in categories}
        rates[ALL_CATEGORIES] = _rate(mine)
        summary.append({
            'approach': approach,
            'runs': len(mine),
            'success_rate': rates,
            'labels': {label: sum(1 for r in mine if r.label == label) for label in Label.ALL},
            'needs_manual_review': ['%s#%d' % (r.task_id, r.run) for r in mine
                                    if r.label == Label.NEEDS_MANUAL_REVIEW],
            'mean_wall_time': round(sum(r.wall_time for r in mine) / len(mine), 3) if mine else 0.0
        })
    return {
        'configuration': describe_configuration(cfg),
        'categories': categories,
        'approaches': summary,
        'tasks': [r.to_json() for r in rows]
    }


def render_report_table(report: Dict[str, Any]) -> str:
    """Success rates as a text table: one row per approach, one column per category."""
    columns = list(report.get('categories', [])) + [ALL_CATEGORIES]
    header = ['Approach'] + columns + ['Manual review', 'Mean time (s)']
    lines = [header]
    for row in report.get('approaches', []):
        lines.append([row['approach']] + ['%.1f%%' % row['success_rate'].get(c, 0.0) for c in columns]
                     + [str(len(row['needs_manual_review'])), '%.3f' % row['mean_wall_time']])
    widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
    text = []
    for n, line in enumerate(lines):
        text.append('  '.join(cell.ljust(widths[i]) for i, cell in enumerate(line)).rstrip())
        if n == 0:
            text.append('  '.join('-' * w for w in widths))
    return '\n'.join(text) + '\n'


def save_report(report: Dict[str, Any], out_dir: str):
    """Writes ``report.json`` and ``report.txt``."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, 'report.json'), 'wb') as f:
        f.write(report_bytes(report))
    with open(os.path.join(out_dir, 'report.txt'), 'w', encoding='utf-8') as f:
        f.write(render_report_table(report))


def report_bytes(report: Dict[str, Any]) -> bytes:
    return (json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + '\n').encode('utf-8')
