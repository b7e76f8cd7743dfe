from .graph import (
    Dependent,
    DependencyGraph,
    ExtractionContext,
    InjectionOverlay,
    coerce_value,
    extract_many,
    normalize_name,
    solve,
)
from .catalog import FeatureSet, build_reference_graph, load_feature_set, parse_feature_set
from .text import informal_word_count, tokenize

__all__ = [
    "Dependent",
    "DependencyGraph",
    "ExtractionContext",
    "InjectionOverlay",
    "FeatureSet",
    "build_reference_graph",
    "coerce_value",
    "extract_many",
    "informal_word_count",
    "load_feature_set",
    "normalize_name",
    "parse_feature_set",
    "solve",
    "tokenize",
]
