"""Process-pool work queue with index-keyed results."""

import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor, as_completed

import numpy as np


class Runner:
    """Dynamic work queue over a process pool (or inline when ``workers == 1``).

    Tasks are submitted all at once and collected as they finish; callers
    receive ``(index, result)`` and write into preallocated slots, so the
    completion order never leaks into any reduction.
    """

    def __init__(self, workers=1):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.workers = int(workers)
        self._pool = None

    def _executor(self):
        if self._pool is None:
            methods = mp.get_all_start_methods()
            ctx = mp.get_context("fork" if "fork" in methods else "spawn")
            self._pool = ProcessPoolExecutor(max_workers=self.workers, mp_context=ctx)
        return self._pool

    def run(self, fn, tasks, on_result):
        """Call ``on_result(index, fn(tasks[index]))`` for every task."""
        if self.workers == 1:
            for i, t in enumerate(tasks):
                on_result(i, fn(t))
            return
        pool = self._executor()
        futures = {pool.submit(fn, t): i for i, t in enumerate(tasks)}
        for fut in as_completed(futures):
            on_result(futures[fut], fut.result())

    def map(self, fn, tasks):
        out = [None] * len(tasks)

        def put(i, value):
            out[i] = value

        self.run(fn, tasks, put)
        return out

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def batch_evaluator(objective, runner):
    """``evaluate_batch`` callback fanning a candidate batch out over ``runner``.

    ``objective`` must be picklable (a module-level function) when the
    runner has more than one worker.
    """
    def evaluate(X):
        return np.array(runner.map(objective, list(np.asarray(X))), dtype=float)
    return evaluate
