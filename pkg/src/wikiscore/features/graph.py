"""Dependency graph of datasources and features, solved per request.

Datasource nodes project fields out of the fetched revision record; feature
nodes are pure functions of their dependencies.  A request-local
:class:`ExtractionContext` memoizes solved values and applies an
:class:`InjectionOverlay`, which lets callers override any node's value to
ask counterfactual questions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from ..errors import (
    CycleDetected,
    DatasourceError,
    DuplicateName,
    FeatureExtractionError,
    TypeMismatch,
    UnknownDependent,
    WikiscoreError,
)

VALUE_TYPES = ("boolean", "integer", "real", "text")

_PREFIXES = ("feature.", "datasource.")


def normalize_name(name: str) -> str:
    """Strip an optional ``feature.``/``datasource.`` prefix.

    URL-style injection parameters carry the prefix; graph names do not.
    """
    for prefix in _PREFIXES:
        if name.startswith(prefix):
            return name[len(prefix):]
    return name


def coerce_value(name: str, value_type: str, value: Any) -> Any:
    """Strictly coerce an injected value to a node's declared type.

    Booleans must be true/false, integers must parse exactly; nothing is
    silently truncated.
    """
    if value_type == "boolean":
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false"):
            return value.lower() == "true"
        raise TypeMismatch(name, value_type, value)
    if value_type == "integer":
        if isinstance(value, bool):
            raise TypeMismatch(name, value_type, value)
        if isinstance(value, int):
            return value
        if isinstance(value, float):
            if value.is_integer():
                return int(value)
            raise TypeMismatch(name, value_type, value)
        if isinstance(value, str):
            try:
                return int(value.strip())
            except ValueError:
                raise TypeMismatch(name, value_type, value) from None
        raise TypeMismatch(name, value_type, value)
    if value_type == "real":
        if isinstance(value, bool):
            raise TypeMismatch(name, value_type, value)
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value.strip())
            except ValueError:
                raise TypeMismatch(name, value_type, value) from None
        raise TypeMismatch(name, value_type, value)
    if value_type == "text":
        if isinstance(value, str):
            return value
        raise TypeMismatch(name, value_type, value)
    raise ValueError(f"unknown value type {value_type!r}")


@dataclass(frozen=True)
class Dependent:
    """One named node: a root datasource or a computed feature.

    For ``kind="datasource"`` the compute function receives the fetched
    revision record; for ``kind="feature"`` it receives the solved values of
    ``dependencies`` in order.
    """

    name: str
    kind: str  # "datasource" | "feature"
    value_type: str
    dependencies: tuple[str, ...] = ()
    compute: Callable[..., Any] | None = None

    def __post_init__(self):
        if self.kind not in ("datasource", "feature"):
            raise ValueError(f"bad kind {self.kind!r}")
        if self.value_type not in VALUE_TYPES:
            raise ValueError(f"bad value type {self.value_type!r}")


class DependencyGraph:
    """Registry of dependents; immutable by convention once built."""

    def __init__(self):
        self._nodes: dict[str, Dependent] = {}

    def register(self, node: Dependent) -> "DependencyGraph":
        if node.name in self._nodes:
            raise DuplicateName(f"name already registered: {node.name!r}")
        self._nodes[node.name] = node
        self._check_cycles()
        return self

    def get(self, name: str) -> Dependent:
        canonical = normalize_name(name)
        try:
            return self._nodes[canonical]
        except KeyError:
            raise UnknownDependent(name) from None

    def __contains__(self, name: str) -> bool:
        return normalize_name(name) in self._nodes

    def names(self) -> tuple[str, ...]:
        return tuple(self._nodes)

    def validate(self) -> None:
        """Check that every declared dependency resolves."""
        for node in self._nodes.values():
            for dep in node.dependencies:
                if dep not in self._nodes:
                    raise UnknownDependent(dep)

    def dependency_cone(self, names) -> set[str]:
        """All nodes reachable from ``names`` through dependency edges."""
        seen: set[str] = set()
        stack = [normalize_name(n) for n in names]
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            node = self._nodes.get(current)
            if node is not None:
                stack.extend(node.dependencies)
        return seen

    def _check_cycles(self) -> None:
        # Unregistered dependencies are treated as leaves here; validate()
        # reports them separately so forward references stay legal.
        WHITE, GREY, BLACK = 0, 1, 2
        color = {name: WHITE for name in self._nodes}
        path: list[str] = []

        def visit(name: str) -> None:
            color[name] = GREY
            path.append(name)
            for dep in self._nodes[name].dependencies:
                if dep not in self._nodes:
                    continue
                if color[dep] == GREY:
                    cycle = path[path.index(dep):] + [dep]
                    raise CycleDetected(cycle)
                if color[dep] == WHITE:
                    visit(dep)
            path.pop()
            color[name] = BLACK

        for name in self._nodes:
            if color[name] == WHITE:
                visit(name)


@dataclass(frozen=True)
class InjectionOverlay:
    """Typed value overrides keyed by canonical node name."""

    values: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def build(cls, graph: DependencyGraph, raw: Mapping[str, Any]) -> "InjectionOverlay":
        """Validate names and types of a raw key/value mapping."""
        values = {}
        for raw_name, raw_value in raw.items():
            node = graph.get(raw_name)
            values[node.name] = coerce_value(raw_name, node.value_type, raw_value)
        return cls(values)

    def __bool__(self) -> bool:
        return bool(self.values)

    def get(self, name: str):
        return self.values.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self.values


EMPTY_OVERLAY = InjectionOverlay({})


class ExtractionContext:
    """Request-local solving state: one memo, one overlay, one revision."""

    def __init__(
        self,
        graph: DependencyGraph,
        context_id: str,
        revision_id: int,
        datasource_client=None,
        overlay: InjectionOverlay = EMPTY_OVERLAY,
        record=None,
    ):
        self.graph = graph
        self.context_id = context_id
        self.revision_id = revision_id
        self.datasource_client = datasource_client
        self.overlay = overlay
        self.memo: dict[str, Any] = {}
        self._record = record

    def record(self):
        """Fetch (once) or return the prefetched revision record."""
        if self._record is None:
            if self.datasource_client is None:
                raise DatasourceError("no datasource client configured")
            self._record = self.datasource_client.get_revision(
                self.context_id, self.revision_id
            )
        return self._record


def solve(ctx: ExtractionContext, name: str) -> Any:
    """Resolve one node: overlay wins, then memo, then computation."""
    node = ctx.graph.get(name)
    if node.name in ctx.overlay:
        return ctx.overlay.get(node.name)
    if node.name in ctx.memo:
        return ctx.memo[node.name]
    if node.kind == "datasource":
        try:
            value = node.compute(ctx.record())
        except DatasourceError as exc:
            if exc.name is None:
                exc.name = node.name
            raise
    else:
        values = [solve(ctx, dep) for dep in node.dependencies]
        value = node.compute(*values)
    ctx.memo[node.name] = value
    return value


def extract_many(ctx: ExtractionContext, names) -> list:
    """Solve several names sharing one memo; errors name the failing node."""
    out = []
    for name in names:
        try:
            out.append(solve(ctx, name))
        except WikiscoreError:
            raise
        except Exception as exc:
            raise FeatureExtractionError(normalize_name(name), exc) from exc
    return out
