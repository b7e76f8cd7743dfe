"""Event-stream precaching: score fresh activity before anyone asks.

The reader thread never blocks on a full queue — events are dropped and
counted instead, because precaching is an optimization and the on-demand
request path remains the source of truth.
"""
from __future__ import annotations

import json
import queue
import socket
import sys
import threading
from dataclasses import dataclass, field

_STOP = object()


@dataclass
class PrecacheConfig:
    """Per (context, model): which event types warrant precaching."""

    rules: dict = field(default_factory=dict)  # context -> model -> set(events)

    @classmethod
    def from_doc(cls, doc: dict) -> "PrecacheConfig":
        rules = {
            context: {model: set(events) for model, events in models.items()}
            for context, models in doc.items()
        }
        return cls(rules)

    def models_for(self, context: str, event_type: str) -> list[str]:
        models = self.rules.get(context, {})
        return sorted(
            model for model, events in models.items() if event_type in events
        )

    def validate(self, registry) -> None:
        for context, models in self.rules.items():
            for model in models:
                registry.get(context, model)


def open_event_source(spec: str):
    """Yield event lines from a file path, '-' (stdin), or tcp://host:port."""
    if spec == "-":
        return sys.stdin
    if spec.startswith("tcp://"):
        host, _, port = spec[len("tcp://"):].partition(":")
        connection = socket.create_connection((host, int(port)))
        return connection.makefile("r", encoding="utf-8")
    return open(spec, encoding="utf-8")


class Precacher:
    """Consumes {"context", "event", "rev_id"} records and enqueues scoring."""

    def __init__(
        self,
        config: PrecacheConfig,
        submit,
        metrics=None,
        queue_capacity: int = 1000,
        workers: int = 1,
    ):
        self.config = config
        self.submit = submit
        self.metrics = metrics
        self.queue: queue.Queue = queue.Queue(maxsize=queue_capacity)
        self.workers = workers
        self._threads: list[threading.Thread] = []
        self._reader: threading.Thread | None = None
        self.malformed_events = 0
        self.dropped_events = 0
        self._pending = 0
        self._pending_lock = threading.Lock()
        self._idle = threading.Event()
        self._idle.set()

    def _count(self, name: str) -> None:
        if self.metrics is not None:
            self.metrics.inc(name)

    def handle_event(self, line: str) -> None:
        line = line.strip()
        if not line:
            return
        try:
            event = json.loads(line)
            context = event["context"]
            event_type = event["event"]
            revision_id = int(event["rev_id"])
        except (ValueError, KeyError, TypeError):
            self.malformed_events += 1
            self._count("malformed_events")
            return
        for model in self.config.models_for(context, event_type):
            job = (context, model, revision_id)
            try:
                with self._pending_lock:
                    self._pending += 1
                    self._idle.clear()
                self.queue.put_nowait(job)
            except queue.Full:
                self._job_done()
                self.dropped_events += 1
                self._count("dropped_events")

    def _job_done(self) -> None:
        with self._pending_lock:
            self._pending -= 1
            if self._pending == 0:
                self._idle.set()

    def _work(self) -> None:
        while True:
            job = self.queue.get()
            if job is _STOP:
                return
            context, model, revision_id = job
            self._count("precache_requests")
            try:
                self.submit(context, model, revision_id)
            except Exception:
                self._count("precache_errors")
            finally:
                self._job_done()

    def start(self, event_source) -> "Precacher":
        for _ in range(self.workers):
            thread = threading.Thread(target=self._work, daemon=True)
            thread.start()
            self._threads.append(thread)

        def read():
            for line in event_source:
                self.handle_event(line)

        self._reader = threading.Thread(target=read, daemon=True)
        self._reader.start()
        return self

    def wait_idle(self, timeout: float | None = None) -> bool:
        """Block until every enqueued job has been processed."""
        if self._reader is not None:
            self._reader.join(timeout)
        return self._idle.wait(timeout)

    def stop(self) -> None:
        for _ in self._threads:
            self.queue.put(_STOP)
        for thread in self._threads:
            thread.join(timeout=10)
