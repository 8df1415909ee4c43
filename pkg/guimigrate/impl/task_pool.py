"""
Internal helper class for running benchmark tasks on a bounded number of threads.
"""
# currently excluded from documentation - see docs/README.md

from threading import Condition, Thread
import queue
from typing import Callable, List

from guimigrate.util import log


class TaskPool:
    """
    A fixed-size thread pool whose ``submit`` blocks while every worker is busy, so at most
    ``size`` tasks run at once. Exceptions escaping a task are logged and swallowed; tasks are
    expected to record their own failures.
    """
    def __init__(self, size: int, name: str):
        self._size = max(1, size)
        self._cond = Condition()
        self._busy_count = 0
        self._job_queue = queue.Queue()  # type: queue.Queue
        self._threads = []  # type: List[Thread]
        for i in range(0, self._size):
            thread = Thread(target=self._run_worker)
            thread.name = "%s.%d" % (name, i + 1)
            thread.daemon = True
            thread.start()
            self._threads.append(thread)

    @property
    def size(self) -> int:
        return self._size

    def submit(self, job_fn: Callable[[], None]):
        """Schedules a job, waiting for a free worker first."""
        with self._cond:
            while self._busy_count >= self._size:
                self._cond.wait()
            self._busy_count += 1
        self._job_queue.put(job_fn)

    def wait(self):
        """Waits until every submitted job has completed."""
        with self._cond:
            while self._busy_count > 0:
                self._cond.wait()

    def stop(self):
        """Tells the worker threads to terminate once all active jobs have completed."""
        for _ in self._threads:
            self._job_queue.put(None)
        for thread in self._threads:
            thread.join()

    def __enter__(self):
        return self

    def __exit__(self, type, value, traceback):
        self.wait()
        self.stop()

    def _run_worker(self):
        while True:
            item = self._job_queue.get(block=True)
            if item is None:
                return
            try:
                item()
            except Exception:
                log.warning('Unhandled exception in task pool worker', exc_info=True)
            with self._cond:
                self._busy_count -= 1
                self._cond.notify_all()
