"""Clients for fetching root revision data.

The shipped client reads newline-delimited JSON fixtures from a directory
(one record per revision) instead of talking to a live wiki API.  A
configurable artificial latency is charged per physical fetch so that
caching and batch amortization are measurable at desk scale.
"""
from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import RevisionNotFound, UpstreamError

FIXTURES_ENV_VAR = "WIKISCORE_FIXTURES"

RECORD_FIELDS = (
    "revision_id",
    "context_id",
    "text",
    "parent_text",
    "user_is_anon",
    "user_account_age_seconds",
    "timestamp",
)


@dataclass(frozen=True)
class RevisionRecord:
    revision_id: int
    context_id: str
    text: str
    parent_text: str
    user_is_anon: bool
    user_account_age_seconds: int
    timestamp: int

    def to_doc(self) -> dict:
        return {name: getattr(self, name) for name in RECORD_FIELDS}

    @classmethod
    def from_doc(cls, doc: dict) -> "RevisionRecord":
        return cls(**{name: doc[name] for name in RECORD_FIELDS})


class FixtureClient:
    """In-memory revision index loaded from ``*.revisions.ndjson`` files.

    The index is read-only after load; fetches are thread-safe.  The fetch
    counter counts physical fetches (a batch call counts once), which tests
    use to verify memoization and batch amortization.
    """

    def __init__(self, fixture_dir, simulated_latency: float = 0.0):
        self.fixture_dir = Path(fixture_dir)
        self.simulated_latency = simulated_latency
        self._index: dict[tuple[str, int], RevisionRecord] = {}
        self._fetch_count = 0
        self._lock = threading.Lock()
        self._load()

    @classmethod
    def from_env(cls, fixture_dir=None, simulated_latency: float = 0.0):
        root = fixture_dir or os.environ.get(FIXTURES_ENV_VAR)
        if not root:
            raise UpstreamError(
                f"no fixture directory given and {FIXTURES_ENV_VAR} is unset"
            )
        return cls(root, simulated_latency=simulated_latency)

    def _load(self) -> None:
        if not self.fixture_dir.is_dir():
            raise UpstreamError(f"fixture directory not found: {self.fixture_dir}")
        for path in sorted(self.fixture_dir.glob("*.revisions.ndjson")):
            with open(path, encoding="utf-8") as handle:
                for line_number, line in enumerate(handle, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        doc = json.loads(line)
                        record = RevisionRecord.from_doc(doc)
                    except (ValueError, KeyError, TypeError) as exc:
                        raise UpstreamError(
                            f"{path.name}:{line_number}: bad revision record ({exc})"
                        ) from exc
                    self._index[(record.context_id, record.revision_id)] = record

    @property
    def fetch_count(self) -> int:
        return self._fetch_count

    def _charge_fetch(self) -> None:
        with self._lock:
            self._fetch_count += 1
        if self.simulated_latency > 0:
            time.sleep(self.simulated_latency)

    def get_revision(self, context_id: str, revision_id: int) -> RevisionRecord:
        self._charge_fetch()
        try:
            return self._index[(context_id, int(revision_id))]
        except KeyError:
            raise RevisionNotFound(context_id, revision_id) from None

    def get_revisions_batch(self, context_id: str, revision_ids) -> list:
        """One result per input id, in order; one physical fetch total.

        Missing revisions come back as :class:`RevisionNotFound` instances
        embedded in the list, not raised.
        """
        if not revision_ids:
            raise UpstreamError("empty revision id list")
        self._charge_fetch()
        results = []
        for revision_id in revision_ids:
            record = self._index.get((context_id, int(revision_id)))
            if record is None:
                results.append(RevisionNotFound(context_id, revision_id))
            else:
                results.append(record)
        return results

    def revision_ids(self, context_id: str) -> list[int]:
        return sorted(
            rev for (ctx, rev) in self._index if ctx == context_id
        )
