"""
This submodule runs one migration task end to end: analysis of the source test, the exploration
loop on the target app, and emission of the closing oracle.
"""

import json
from typing import Any, Dict, List, Optional

from guimigrate.analyzer import build_skeleton, skeleton_document
from guimigrate.codec import decode_test_case, encode_test_case
from guimigrate.config import MigrationConfig
from guimigrate.device import decode_page, encode_page, replay_prefix
from guimigrate.feedback import FeedbackVerdict, REASON_NOT_EXECUTABLE, apply_truncation, assess_action, reflect_test
from guimigrate.gateway import VlmGateway
from guimigrate.interfaces import Device, VlmBackend
from guimigrate.model import (
    IterationRecord, MigrationResult, MigrationStatus, OracleEvent, TestCase, VisualExecutionLog
)
from guimigrate.pages import prepare_page
from guimigrate.planner import (
    ExplorationState, PlannerStuck, RejectionNote, check_completeness, generate_action, generate_oracle
)
from guimigrate.trace import TraceKind, TraceRecorder, clock_for_seed
from guimigrate.util import MigrationError, log


class _Iteration:
    def __init__(self, index: int, calls_before: int):
        self.index = index
        self.calls_before = calls_before
        self.candidates = []  # type: List[dict]
        self.verdicts = []  # type: List[dict]
        self.reflections = []  # type: List[dict]
        self.completeness = None  # type: Optional[dict]

    def record(self, calls_now: int) -> IterationRecord:
        return IterationRecord(self.index, tuple(self.candidates), tuple(self.verdicts), tuple(self.reflections),
                               calls_now - self.calls_before, self.completeness)


class _Aborted(Exception):
    pass


def migrate(source: TestCase, vlog: VisualExecutionLog, target: Device, cfg: MigrationConfig,
            backend: VlmBackend, trace: Optional[TraceRecorder] = None) -> MigrationResult:
    """Migrates ``source`` to the app behind ``target``.

    Budget exhaustion yields a ``budget_exhausted`` result carrying the accepted actions so far;
    gateway and device failures yield an ``error`` result. Neither raises.

    :param trace: records every call, verdict and outcome; a fresh recorder is used when omitted
    """
    trace = trace or TraceRecorder(clock_for_seed(cfg.seed))
    clock = trace.clock
    started = clock.now()
    gateway = VlmGateway(backend, cfg.requery_budget, cfg.toggles.no_vision, trace)
    iterations = []  # type: List[IterationRecord]
    recorded_pages = []
    state = None  # type: Optional[ExplorationState]
    oracle = None  # type: Optional[OracleEvent]
    status = MigrationStatus.BUDGET_EXHAUSTED
    error = ''
    current = None  # type: Optional[_Iteration]
    try:
        skeleton = build_skeleton(source, vlog, gateway, cfg.toggles)
        trace.record(TraceKind.SKELETON, skeleton.to_json())
        replay_prefix(target, [])
        state = ExplorationState(skeleton, source.category)
        while state.iteration < cfg.max_iterations:
            state.iteration += 1
            current = _Iteration(state.iteration, gateway.call_count)
            trace.record(TraceKind.ITERATION_START, {'index': state.iteration, 'history': len(state.history)})
            log.info("Iteration %d with %d accepted actions", state.iteration, len(state.history))
            _observe(target, state, cfg, trace, recorded_pages)
            verdict = check_completeness(skeleton, state, gateway)
            current.completeness = verdict.to_json()
            trace.record(TraceKind.COMPLETENESS, verdict.to_json())
            if verdict.complete:
                oracle = generate_oracle(skeleton, skeleton.source_oracle, recorded_pages, state, gateway)
                trace.record(TraceKind.ORACLE, {'oracle': oracle.describe(), 'vlm_calls': gateway.calls_for(
                    'oracle_generator')})
                status = MigrationStatus.COMPLETED
                iterations.append(current.record(gateway.call_count))
                current = None
                break
            _explore(skeleton, state, verdict.extra_navigation_needed, target, gateway, cfg, trace,
                     recorded_pages, current)
            iterations.append(current.record(gateway.call_count))
            current = None
    except _Aborted as e:
        log.info("Migration aborted: %s", e)
        error = str(e)
    except MigrationError as e:
        log.error("Migration of %s failed: %s", source.functionality_id, e)
        status = MigrationStatus.ERROR
        error = str(e)
    if current is not None:
        iterations.append(current.record(gateway.call_count))
    actions = tuple(state.accepted_actions) if state is not None else ()
    events = actions + ((oracle,) if oracle is not None else ())
    generated = TestCase(target.app_id, source.category, source.functionality_id, events)
    trace.record(TraceKind.STATUS, {'status': status, 'error': error, 'accepted_actions': len(actions),
                                    'vlm_calls': gateway.call_count})
    return MigrationResult(generated, status, tuple(iterations), tuple(recorded_pages), clock.now() - started, error)


def _observe(target: Device, state: ExplorationState, cfg: MigrationConfig, trace: TraceRecorder,
             recorded_pages: list):
    page = target.capture_page()
    recorded_pages.append(page)
    state.current = prepare_page(page, cfg.prune_budget)
    trace.record(TraceKind.PAGE, {'sequence_no': page.sequence_no, 'activity': page.activity,
                                  'labels': len(state.current.index_map)})


def _explore(skeleton, state: ExplorationState, navigation_hint: bool, target: Device, gateway: VlmGateway,
             cfg: MigrationConfig, trace: TraceRecorder, recorded_pages: list, it: _Iteration):
    """Tries candidates until one is accepted, reflection truncates, or the rejection budget runs out."""
    notes = []  # type: List[RejectionNote]
    rejections = 0
    null_reflections = 0
    state.consecutive_rejections = 0
    while rejections < cfg.max_rejections_per_iteration:
        stuck = None
        candidate = None
        if state.consecutive_rejections < cfg.reflection_threshold:
            try:
                candidate = generate_action(skeleton, state, gateway, notes, navigation_hint)
            except PlannerStuck as e:
                stuck = e
        if candidate is None:
            reflection = reflect_test(skeleton, state, gateway)
            payload = dict(reflection.to_json(), trigger='stuck' if stuck is not None else 'rejections')
            it.reflections.append(payload)
            trace.record(TraceKind.REFLECTION, payload)
            if reflection.misleading_index is None:
                null_reflections += 1
                if null_reflections >= 2:
                    raise _Aborted('reflection found no misleading action twice in iteration %d' % it.index)
                state.consecutive_rejections = 0
                continue
            apply_truncation(state, reflection, target)
            trace.record(TraceKind.TRUNCATION, {'kept': len(state.history), 'reverted_steps': state.last_reverted})
            return
        it.candidates.append(candidate.to_json())
        trace.record(TraceKind.CANDIDATE, candidate.to_json())
        outcome = target.execute_action(candidate.action)
        trace.record(TraceKind.EXECUTION, {'action': candidate.action.describe(), 'executed': outcome.executed,
                                           'failure_reason': outcome.failure_reason,
                                           'before': outcome.before.sequence_no, 'after': outcome.after.sequence_no})
        if outcome.executed:
            recorded_pages.append(outcome.after)
        if cfg.toggles.no_feedback:
            verdict = FeedbackVerdict(True, '', []) if outcome.executed \
                else FeedbackVerdict(False, REASON_NOT_EXECUTABLE, [])
        else:
            verdict = assess_action(skeleton, state, candidate.action, outcome, gateway)
        it.verdicts.append(verdict.to_json())
        trace.record(TraceKind.FEEDBACK, verdict.to_json())
        if verdict.accepted:
            state.accept(candidate, outcome.before, outcome.after)
            return
        rejections += 1
        state.consecutive_rejections += 1
        reason = verdict.reason
        if not outcome.executed and outcome.failure_reason:
            reason = '%s (%s)' % (reason, outcome.failure_reason)
        notes.append(RejectionNote(candidate.action.describe(), reason, verdict.suggestions))
        if outcome.executed:
            _undo(target, state, cfg)


def _undo(target: Device, state: ExplorationState, cfg: MigrationConfig):
    outcomes = replay_prefix(target, state.accepted_actions)
    if outcomes and not outcomes[-1].executed:
        raise MigrationError('accepted prefix no longer replays: %s' % outcomes[-1].failure_reason)
    state.current = prepare_page(target.capture_page(), cfg.prune_budget)


def encode_result(result: MigrationResult) -> Dict[str, Any]:
    return {
        'status': result.status,
        'error': result.error,
        'wall_time': result.wall_time,
        'generated': encode_test_case(result.generated),
        'trace': [dict(r._asdict()) for r in result.trace],
        'recorded_pages': [encode_page(p) for p in result.recorded_pages]
    }


def save_result(result: MigrationResult) -> bytes:
    return (json.dumps(encode_result(result), indent=2, sort_keys=True, ensure_ascii=False) + '\n').encode('utf-8')


def traced_skeleton(trace: TraceRecorder) -> Optional[bytes]:
    """The skeleton document of the run recorded in ``trace``, or None if analysis never finished."""
    records = trace.of_kind(TraceKind.SKELETON)
    if not records:
        return None
    return skeleton_document(records[-1]['payload'])


def load_result(document: bytes) -> MigrationResult:
    """Reads a result file. Recorded pages come back without screenshot bytes."""
    data = json.loads(document.decode('utf-8'))
    return MigrationResult(
        generated=decode_test_case(data['generated']),
        status=data['status'],
        trace=tuple(IterationRecord(r['index'], tuple(r['candidates']), tuple(r['verdicts']),
                                    tuple(r['reflections']), r['vlm_calls'], r.get('completeness'))
                    for r in data.get('trace', [])),
        recorded_pages=tuple(decode_page(p) for p in data.get('recorded_pages', [])),
        wall_time=data.get('wall_time', 0.0),
        error=data.get('error', '')
    )
