"""Reference feature catalog and the feature-set definition file format.

A feature-set file is a declarative JSON document, one per (context, model),
selecting catalog features and binding per-context lexicons:

    {
      "format_version": 1,
      "context": "testwiki",
      "name": "damaging",
      "lexicons": {"informal": ["haha+", "lol"], "badwords": ["vandalpow"]},
      "features": [
        {"name": "words_count", "type": "integer", "depends_on": ["revision.text"]},
        ...
      ]
    }

Declared types and dependencies are validated against the catalog so the
file stays an honest description of what the model consumes.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

from ..errors import PipelineError, UnknownDependent
from .graph import Dependent, DependencyGraph
from .text import count_markup_chars, lexicon_match_count, tokenize

_HEADER_RE = re.compile(r"(?m)^==.*==\s*$")
_IMAGE_RE = re.compile(r"\[\[(?:File|Image):")

FEATURE_SET_FORMAT_VERSION = 1


def build_reference_graph(informal_lexicon=(), badwords_lexicon=()) -> DependencyGraph:
    """Build the full reference graph with lexicons bound in."""
    informal = tuple(informal_lexicon)
    badwords = tuple(badwords_lexicon)
    graph = DependencyGraph()

    def ds(name, value_type, project):
        graph.register(Dependent(name, "datasource", value_type, (), project))

    ds("revision.text", "text", lambda r: r.text)
    ds("revision.parent_text", "text", lambda r: r.parent_text)
    ds("revision.user.is_anon", "boolean", lambda r: r.user_is_anon)
    ds(
        "revision.user.account_age_seconds",
        "integer",
        lambda r: r.user_account_age_seconds,
    )
    ds("revision.timestamp", "integer", lambda r: r.timestamp)

    def feat(name, value_type, deps, fn):
        graph.register(Dependent(name, "feature", value_type, tuple(deps), fn))

    feat("words_count", "integer", ["revision.text"], lambda t: len(tokenize(t)))
    feat("chars_count", "integer", ["revision.text"], len)
    feat(
        "informal_word_count",
        "integer",
        ["revision.text"],
        lambda t: lexicon_match_count(t, informal),
    )
    feat(
        "badwords_count",
        "integer",
        ["revision.text"],
        lambda t: lexicon_match_count(t, badwords),
    )
    feat("refs_count", "integer", ["revision.text"], lambda t: t.count("<ref"))
    feat(
        "headers_count",
        "integer",
        ["revision.text"],
        lambda t: len(_HEADER_RE.findall(t)),
    )
    feat(
        "images_count",
        "integer",
        ["revision.text"],
        lambda t: len(_IMAGE_RE.findall(t)),
    )
    feat(
        "categories_count",
        "integer",
        ["revision.text"],
        lambda t: t.count("[[Category:"),
    )
    feat("markup_chars", "integer", ["revision.text"], count_markup_chars)
    feat(
        "bytes_changed",
        "integer",
        ["revision.text", "revision.parent_text"],
        lambda t, p: len(t.encode("utf-8")) - len(p.encode("utf-8")),
    )
    graph.validate()
    return graph


@dataclass(frozen=True)
class FeatureSet:
    """Parsed feature-set definition: the model-facing extraction contract."""

    context: str
    name: str
    lexicons: dict
    features: tuple[str, ...]
    document: dict

    def build_graph(self) -> DependencyGraph:
        graph = build_reference_graph(
            self.lexicons.get("informal", ()), self.lexicons.get("badwords", ())
        )
        for feature in self.features:
            if feature not in graph:
                raise UnknownDependent(feature)
        return graph


def parse_feature_set(document: dict) -> FeatureSet:
    version = document.get("format_version")
    if version != FEATURE_SET_FORMAT_VERSION:
        raise PipelineError(f"unsupported feature-set format_version: {version!r}")
    for key in ("context", "name", "features"):
        if key not in document:
            raise PipelineError(f"feature-set document missing {key!r}")
    lexicons = {k: tuple(v) for k, v in document.get("lexicons", {}).items()}
    reference = build_reference_graph(
        lexicons.get("informal", ()), lexicons.get("badwords", ())
    )
    names = []
    for entry in document["features"]:
        if isinstance(entry, str):
            entry = {"name": entry}
        name = entry["name"]
        node = reference.get(name)
        declared_type = entry.get("type")
        if declared_type is not None and declared_type != node.value_type:
            raise PipelineError(
                f"feature {name!r} declared as {declared_type}, catalog says {node.value_type}"
            )
        declared_deps = entry.get("depends_on")
        if declared_deps is not None and tuple(declared_deps) != node.dependencies:
            raise PipelineError(f"feature {name!r} declares wrong dependencies")
        names.append(node.name)
    return FeatureSet(
        context=document["context"],
        name=document["name"],
        lexicons=lexicons,
        features=tuple(names),
        document=document,
    )


def load_feature_set(path) -> FeatureSet:
    with open(path, encoding="utf-8") as handle:
        return parse_feature_set(json.load(handle))


def feature_set_document(context, name, features, lexicons) -> dict:
    """Render a feature-set document with catalog types/deps filled in."""
    reference = build_reference_graph(
        lexicons.get("informal", ()), lexicons.get("badwords", ())
    )
    entries = []
    for feature in features:
        node = reference.get(feature)
        entries.append(
            {
                "name": node.name,
                "type": node.value_type,
                "depends_on": list(node.dependencies),
            }
        )
    return {
        "format_version": FEATURE_SET_FORMAT_VERSION,
        "context": context,
        "name": name,
        "lexicons": {k: list(v) for k, v in lexicons.items()},
        "features": entries,
    }
