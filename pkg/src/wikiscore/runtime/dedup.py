"""In-flight de-duplication of identical scoring jobs (singleflight)."""
from __future__ import annotations

import threading


class _Flight:
    __slots__ = ("done", "result", "error")

    def __init__(self):
        self.done = threading.Event()
        self.result = None
        self.error = None


class SingleFlight:
    """At most one in-flight computation per key.

    Concurrent callers for the same key wait for the leader and receive its
    result; a leader failure propagates to every waiter.  The registry entry
    is removed when the flight finishes, so later calls start a new epoch.
    """

    def __init__(self, metrics=None):
        self._flights: dict[object, _Flight] = {}
        self._lock = threading.Lock()
        self._metrics = metrics
        self.merges = 0

    def run(self, key, compute):
        with self._lock:
            flight = self._flights.get(key)
            if flight is None:
                flight = _Flight()
                self._flights[key] = flight
                leader = True
            else:
                leader = False
                self.merges += 1
        if not leader:
            if self._metrics is not None:
                self._metrics.inc("dedup_merges")
            flight.done.wait()
            if flight.error is not None:
                raise flight.error
            return flight.result
        try:
            flight.result = compute()
            return flight.result
        except BaseException as exc:
            flight.error = exc
            raise
        finally:
            with self._lock:
                self._flights.pop(key, None)
            flight.done.set()

    def in_flight(self) -> int:
        with self._lock:
            return len(self._flights)
