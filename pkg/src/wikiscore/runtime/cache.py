"""Deterministic score naming and the LRU score cache.

A job key exists only for natural (injection-free) scores; anything with an
overlay bypasses caching and de-duplication entirely, so exploratory
counterfactuals can never pollute the cache or leak to other clients.
"""
from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass


@dataclass(frozen=True)
class ScoreJobKey:
    context_id: str
    model_name: str
    model_version: str
    revision_id: int

    def canonical(self) -> str:
        return (
            f"{self.context_id}:{self.model_name}:"
            f"{self.model_version}:{self.revision_id}"
        )


class LruScoreCache:
    """Thread-safe LRU map from job key to score document.

    Only successful score documents are stored; errors are never cached.
    """

    def __init__(self, capacity: int = 10_000, metrics=None):
        if capacity < 1:
            raise ValueError("cache capacity must be >= 1")
        self.capacity = capacity
        self._items: OrderedDict[ScoreJobKey, object] = OrderedDict()
        self._lock = threading.Lock()
        self._metrics = metrics
        self.lookups = 0
        self.hits = 0
        self.misses = 0

    def get(self, key: ScoreJobKey):
        with self._lock:
            self.lookups += 1
            document = self._items.get(key)
            if document is None:
                self.misses += 1
                hit = False
            else:
                self._items.move_to_end(key)
                self.hits += 1
                hit = True
        if self._metrics is not None:
            self._metrics.inc("cache_lookups")
            self._metrics.inc("cache_hits" if hit else "cache_misses")
        return document

    def put(self, key: ScoreJobKey, document) -> None:
        with self._lock:
            self._items[key] = document
            self._items.move_to_end(key)
            while len(self._items) > self.capacity:
                self._items.popitem(last=False)

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)
