"""IO and CPU worker pools with bounded admission.

A failed task never takes down a pool; overload is shed back to the caller
as a LoadShed error, which the wire layer maps to a 503.
"""
from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor

from ..errors import LoadShed


class _BoundedPool:
    def __init__(self, size: int, max_pending: int, name: str):
        if size < 1:
            raise ValueError("pool size must be >= 1")
        self._executor = ThreadPoolExecutor(
            max_workers=size, thread_name_prefix=name
        )
        self._slots = threading.Semaphore(max_pending)
        self.size = size

    def submit(self, fn, *args, **kwargs):
        if not self._slots.acquire(blocking=False):
            raise LoadShed("worker queue full")

        def wrapped():
            try:
                return fn(*args, **kwargs)
            finally:
                self._slots.release()

        try:
            return self._executor.submit(wrapped)
        except BaseException:
            self._slots.release()
            raise

    def run(self, fn, *args, **kwargs):
        return self.submit(fn, *args, **kwargs).result()

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True)


class WorkerPools:
    """One pool for datasource IO, one for extraction/prediction work."""

    def __init__(
        self,
        io_size: int = 4,
        cpu_size: int = 4,
        max_pending: int = 10_000,
    ):
        self.io = _BoundedPool(io_size, max_pending, "io")
        self.cpu = _BoundedPool(cpu_size, max_pending, "cpu")

    def run_io(self, fn, *args, **kwargs):
        return self.io.run(fn, *args, **kwargs)

    def run_cpu(self, fn, *args, **kwargs):
        return self.cpu.run(fn, *args, **kwargs)

    def submit_cpu(self, fn, *args, **kwargs):
        return self.cpu.submit(fn, *args, **kwargs)

    def map_cpu(self, fn, items) -> list:
        """Run fn over items on the CPU pool, preserving order.

        Raises the first task exception after all tasks settle, so sibling
        jobs always run to completion.
        """
        futures = [self.cpu.submit(fn, item) for item in items]
        results = []
        first_error = None
        for future in futures:
            try:
                results.append(future.result())
            except BaseException as exc:
                results.append(None)
                if first_error is None:
                    first_error = exc
        if first_error is not None:
            raise first_error
        return results

    def shutdown(self) -> None:
        self.io.shutdown()
        self.cpu.shutdown()
