"""wikiscore: train, version, host, and serve revision-quality classifiers."""

from .datasources import FixtureClient, RevisionRecord
from .engine import AuditSummary, ErrorDocument, ScoreDocument, ScoreRequest, ScoringEngine
from .estimators import (
    Estimator,
    EstimatorParams,
    LabeledDataset,
    Scaler,
    cross_validate,
    recalibrate,
    train,
)
from .features import (
    DependencyGraph,
    Dependent,
    ExtractionContext,
    InjectionOverlay,
    extract_many,
    informal_word_count,
    solve,
)
from .modelstore import ModelRegistry, ScoringModel, bump_version, load, model_info, save
from .service import ScoreService
from .stats import Statistics, ThresholdTable, compute_statistics
from .thresholds import ThresholdQuery, optimize, parse

__version__ = "0.1.0"
