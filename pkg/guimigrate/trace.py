"""
Run traces: an ordered record of everything a migration did, written as JSON lines.
"""

from datetime import datetime, timezone
from threading import Lock
import time
from typing import Any, Dict, List, Optional

import pyrfc3339

from guimigrate.interfaces import Clock
from guimigrate.util import json_dumps_stable


class TraceKind:
    SKELETON = 'skeleton'
    ITERATION_START = 'iteration_start'
    PAGE = 'page'
    VLM_CALL = 'vlm_call'
    VLM_REPLY = 'vlm_reply'
    REQUERY = 'requery'
    COMPLETENESS = 'completeness'
    CANDIDATE = 'candidate'
    EXECUTION = 'execution'
    FEEDBACK = 'feedback'
    REFLECTION = 'reflection'
    TRUNCATION = 'truncation'
    ORACLE = 'oracle'
    STATUS = 'status'


class SystemClock(Clock):
    def now(self) -> float:
        return time.time()


class LogicalClock(Clock):
    """
    A clock that advances by one millisecond per reading, starting from an epoch derived from the
    seed. Used for seeded runs so timestamps and wall times are reproducible.
    """
    BASE_EPOCH = 1700000000

    def __init__(self, seed: int = 0):
        self._lock = Lock()
        self._ticks = 0
        self._epoch = self.BASE_EPOCH + int(seed) * 1000

    def now(self) -> float:
        with self._lock:
            value = self._epoch + self._ticks / 1000.0
            self._ticks += 1
            return value


def clock_for_seed(seed: Optional[int]) -> Clock:
    return SystemClock() if seed is None else LogicalClock(seed)


def format_timestamp(seconds: float) -> str:
    return pyrfc3339.generate(datetime.fromtimestamp(seconds, tz=timezone.utc), utc=True, microseconds=True)


class TraceRecorder:
    """Collects trace records in causal order. Safe to share between the threads of one task."""
    def __init__(self, clock: Optional[Clock] = None):
        self._clock = clock or SystemClock()
        self._lock = Lock()
        self._records = []  # type: List[Dict[str, Any]]

    @property
    def clock(self) -> Clock:
        return self._clock

    def record(self, kind: str, payload: Optional[Dict[str, Any]] = None):
        entry = {'ts': format_timestamp(self._clock.now()), 'kind': kind, 'payload': payload or {}}
        with self._lock:
            self._records.append(entry)

    @property
    def records(self) -> List[Dict[str, Any]]:
        with self._lock:
            return list(self._records)

    def of_kind(self, kind: str) -> List[Dict[str, Any]]:
        return [r for r in self.records if r['kind'] == kind]

    def to_jsonl(self) -> bytes:
        return ''.join(json_dumps_stable(r) + '\n' for r in self.records).encode('utf-8')

    def write(self, path: str):
        with open(path, 'wb') as f:
            f.write(self.to_jsonl())
