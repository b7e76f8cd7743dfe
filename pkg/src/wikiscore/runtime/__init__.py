from .cache import LruScoreCache, ScoreJobKey
from .dedup import SingleFlight
from .metrics import MetricsRegistry
from .pools import WorkerPools
from .precache import PrecacheConfig, Precacher, open_event_source

__all__ = [
    "LruScoreCache",
    "MetricsRegistry",
    "PrecacheConfig",
    "Precacher",
    "ScoreJobKey",
    "SingleFlight",
    "WorkerPools",
    "open_event_source",
]
