"""Counters and latency percentiles, exposed as plain text."""
from __future__ import annotations

import threading


def _percentile(sorted_values: list[float], fraction: float) -> float:
    if not sorted_values:
        return 0.0
    index = max(0, int(round(fraction * (len(sorted_values) - 1))))
    return sorted_values[index]


class MetricsRegistry:
    """Monotone counters plus a score-duration histogram.

    Durations are kept in a bounded ring so long-lived services do not grow
    without limit; percentiles are computed over the retained window.
    """

    def __init__(self, duration_window: int = 100_000):
        self._lock = threading.Lock()
        self._counters: dict[str, int] = {}
        self._durations: list[float] = []
        self._duration_window = duration_window
        self._duration_count = 0

    def inc(self, name: str, amount: int = 1) -> None:
        with self._lock:
            self._counters[name] = self._counters.get(name, 0) + amount

    def count_error(self, error_type: str) -> None:
        self.inc(f"errors_{error_type}")

    def observe_score_duration(self, seconds: float) -> None:
        with self._lock:
            self._duration_count += 1
            self._durations.append(seconds)
            if len(self._durations) > self._duration_window:
                del self._durations[: -self._duration_window]

    def counter(self, name: str) -> int:
        with self._lock:
            return self._counters.get(name, 0)

    def snapshot(self) -> dict:
        with self._lock:
            counters = dict(self._counters)
            durations = sorted(self._durations)
            count = self._duration_count
        snapshot = dict(counters)
        snapshot["score_duration_count"] = count
        if durations:
            snapshot["score_duration_min"] = durations[0]
            snapshot["score_duration_max"] = durations[-1]
            snapshot["score_duration_p50"] = _percentile(durations, 0.50)
            snapshot["score_duration_p75"] = _percentile(durations, 0.75)
            snapshot["score_duration_p95"] = _percentile(durations, 0.95)
        return snapshot

    def snapshot_text(self) -> str:
        lines = [
            f"{name} {value}" for name, value in sorted(self.snapshot().items())
        ]
        return "\n".join(lines) + "\n"
