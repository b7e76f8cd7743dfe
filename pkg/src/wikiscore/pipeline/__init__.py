from .labels import LabelHeader, fetch_labels, labels_from_traces, read_label_file
from .extract import extract_features, read_dataset
from .build import BuildTarget, build_manifest, cv_train, load_manifest

__all__ = [
    "BuildTarget",
    "LabelHeader",
    "build_manifest",
    "cv_train",
    "extract_features",
    "fetch_labels",
    "labels_from_traces",
    "load_manifest",
    "read_dataset",
    "read_label_file",
]
