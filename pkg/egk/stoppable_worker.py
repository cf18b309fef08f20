import logging
import os
from queue import Empty, Queue
from threading import Event, Lock, Thread
from typing import Any, Callable, Dict, List, Sequence

logger = logging.getLogger(__name__)


class StoppableWorker(Thread):
    """
    A threading.Thread with a dedicated method, called _running(), for checking
    if the thread should continue running. Invoking its stop() method changes
    the return value of _running().
    """

    def __init__(self):
        super(StoppableWorker, self).__init__(daemon=True)
        self._stop_event = Event()

    def stop(self):
        """Stops the current worker Thread"""
        self._stop_event.set()

    def _running(self):
        """Private predicate to test if this worker should keep on running"""
        return not self._stop_event.is_set()


class GridWorker(StoppableWorker):
    """
    Pulls (index, item) tasks from a shared queue and stores fn(item), or the
    exception it raised, under the task index. Exits when the queue is
    drained or the worker is stopped.
    """

    def __init__(
        self,
        fn: Callable[[Any], Any],
        tasks: Queue,
        results: Dict[int, Any],
        lock: Lock,
    ):
        super(GridWorker, self).__init__()
        self.fn = fn
        self.tasks = tasks
        self.results = results
        self.lock = lock

    def run(self):
        while self._running():
            try:
                index, item = self.tasks.get_nowait()
            except Empty:
                return
            try:
                value = self.fn(item)
            except Exception as e:
                logger.debug(f"Task {index} failed: {e}")
                value = e
            with self.lock:
                self.results[index] = value
            self.tasks.task_done()


def resolve_threads(threads: int) -> int:
    """0 selects one worker per CPU"""
    if threads is None or int(threads) <= 0:
        return os.cpu_count() or 1
    return int(threads)


def run_concurrently(
    fn: Callable[[Any], Any], items: Sequence[Any], threads: int = 0
) -> List[Any]:
    """
    Evaluates fn on every item with up to `threads` GridWorkers.
    @return One entry per item in item order, either the value or the
        exception raised for that item
    """
    items = list(items)
    count = min(resolve_threads(threads), len(items))
    if count <= 1:
        results = []
        for item in items:
            try:
                results.append(fn(item))
            except Exception as e:
                results.append(e)
        return results

    tasks = Queue()
    for index, item in enumerate(items):
        tasks.put((index, item))
    results, lock = {}, Lock()
    workers = [GridWorker(fn, tasks, results, lock) for _ in range(count)]
    for worker in workers:
        worker.start()
    for worker in workers:
        worker.join()
    return [results[index] for index in range(len(items))]
