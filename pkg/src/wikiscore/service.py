"""HTTP front end: the v3 scoring and model-info surface.

Transport errors are HTTP statuses (400/404/503); scoring failures are
always embedded as per-item error documents inside a 200 response, so a
batch with one poisoned revision still returns every other cell.
Responses are serialized deterministically (sorted keys, full-precision
floats) so fixed fixtures and fixed model files yield byte-identical
output across runs.
"""
from __future__ import annotations

import json
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qsl, urlsplit

from .engine import ErrorDocument, ScoreDocument, ScoreRequest, ScoringEngine
from .errors import (
    LoadShed,
    MalformedRequest,
    ModelNotFound,
    TypeMismatch,
    UnknownDependent,
    WikiscoreError,
)
from .features.graph import EMPTY_OVERLAY, InjectionOverlay
from .modelstore import ModelRegistry, model_info
from .runtime import (
    LruScoreCache,
    MetricsRegistry,
    Precacher,
    ScoreJobKey,
    SingleFlight,
    WorkerPools,
)

_INJECTION_PREFIXES = ("feature.", "datasource.")


class ScoreService:
    """Everything behind the wire: cache, dedup, pools, engine, metrics."""

    def __init__(
        self,
        registry: ModelRegistry,
        client,
        cache_capacity: int = 10_000,
        io_workers: int = 4,
        cpu_workers: int = 4,
        max_pending: int = 10_000,
        timeout: float = 10.0,
        metrics: MetricsRegistry | None = None,
    ):
        self.registry = registry
        self.client = client
        self.metrics = metrics or MetricsRegistry()
        self.cache = LruScoreCache(cache_capacity, metrics=self.metrics)
        self.dedup = SingleFlight(metrics=self.metrics)
        self.pools = WorkerPools(io_workers, cpu_workers, max_pending)
        self.engine = ScoringEngine(registry, client, pools=self.pools, timeout=timeout)

    def close(self) -> None:
        self.pools.shutdown()

    # -- scoring paths ---------------------------------------------------

    def _compute(self, context_id, model_name, revision_id, overlay, include_features):
        return self.pools.run_cpu(
            self.engine.score_one,
            context_id,
            model_name,
            revision_id,
            overlay,
            include_features,
        )

    def score_single(
        self,
        context_id: str,
        model_name: str,
        revision_id: int,
        overlay: InjectionOverlay = EMPTY_OVERLAY,
        include_features: bool = False,
    ):
        """Cached, de-duplicated single score.

        Requests with an overlay (or a features block) bypass the cache and
        de-duplication entirely.
        """
        started = time.perf_counter()
        self.metrics.inc("scores_requested")
        try:
            try:
                model = self.registry.get(context_id, model_name)
            except ModelNotFound as exc:
                return ErrorDocument.from_exception(exc)
            if overlay or include_features:
                return self._compute(
                    context_id, model_name, revision_id, overlay, include_features
                )
            key = ScoreJobKey(context_id, model_name, model.version, revision_id)

            def cached_compute():
                hit = self.cache.get(key)
                if hit is not None:
                    return hit
                document = self._compute(
                    context_id, model_name, revision_id, EMPTY_OVERLAY, False
                )
                if isinstance(document, ScoreDocument):
                    self.cache.put(key, document)
                return document

            return self.dedup.run(key, cached_compute)
        finally:
            self.metrics.observe_score_duration(time.perf_counter() - started)

    def score_batch(self, context_id: str, model_names, revision_ids):
        """Batch path: cache lookups first, one bulk fetch for the rest."""
        results: dict = {rev: {} for rev in revision_ids}
        missing_revs: set[int] = set()
        missing_models: set[str] = set()
        for revision_id in revision_ids:
            for model_name in model_names:
                self.metrics.inc("scores_requested")
                try:
                    model = self.registry.get(context_id, model_name)
                except ModelNotFound as exc:
                    results[revision_id][model_name] = ErrorDocument.from_exception(exc)
                    continue
                key = ScoreJobKey(context_id, model_name, model.version, revision_id)
                hit = self.cache.get(key)
                if hit is not None:
                    results[revision_id][model_name] = hit
                else:
                    missing_revs.add(revision_id)
                    missing_models.add(model_name)
        if missing_revs:
            request = ScoreRequest(
                context_id=context_id,
                model_names=sorted(missing_models),
                revision_ids=sorted(missing_revs),
            )
            computed = self.engine.score_batch(request)
            for revision_id in revision_ids:
                for model_name in model_names:
                    if model_name in results[revision_id]:
                        continue
                    document = computed[revision_id][model_name]
                    results[revision_id][model_name] = document
                    if isinstance(document, ScoreDocument):
                        model = self.registry.get(context_id, model_name)
                        self.cache.put(
                            ScoreJobKey(
                                context_id, model_name, model.version, revision_id
                            ),
                            document,
                        )
        for row in results.values():
            for document in row.values():
                if isinstance(document, ErrorDocument):
                    self.metrics.count_error(document.type)
        return results

    # -- response documents ----------------------------------------------

    def _models_block(self, context_id: str, model_names) -> dict:
        block = {}
        for name in model_names:
            try:
                model = self.registry.get(context_id, name)
            except ModelNotFound:
                continue
            block[name] = {"version": model.version}
        return block

    @staticmethod
    def _cell(document) -> dict:
        if isinstance(document, ScoreDocument):
            return {"score": document.to_doc()}
        return {"error": document.to_doc()}

    def scores_response(self, context_id: str, model_names, revision_ids, cells) -> dict:
        return {
            context_id: {
                "models": self._models_block(context_id, model_names),
                "scores": {
                    str(revision_id): {
                        model_name: self._cell(cells[revision_id][model_name])
                        for model_name in model_names
                    }
                    for revision_id in revision_ids
                },
            }
        }

    def model_info_response(self, context_id: str, model_names, field_path) -> dict:
        block = {}
        for name in model_names:
            model = self.registry.get(context_id, name)
            block[name] = model_info(model, field_path)
        return {context_id: {"models": block}}

    # -- wiring ------------------------------------------------------------

    def start_precacher(
        self, event_source, config, queue_capacity: int = 1000, workers: int = 2
    ) -> Precacher:
        def submit(context_id, model_name, revision_id):
            self.score_single(context_id, model_name, revision_id)

        precacher = Precacher(
            config,
            submit,
            metrics=self.metrics,
            queue_capacity=queue_capacity,
            workers=workers,
        )
        return precacher.start(event_source)

    def make_http_server(self, port: int = 0, host: str = "127.0.0.1"):
        handler = _make_handler(self)
        server = ThreadingHTTPServer((host, port), handler)
        server.daemon_threads = False  # drain in-flight scores on shutdown
        return server


class _HttpError(Exception):
    def __init__(self, status: int, error_type: str, message: str):
        self.status = status
        self.error_type = error_type
        self.message = message
        super().__init__(message)


def _parse_overlay_params(query_pairs) -> dict:
    return {
        key: value
        for key, value in query_pairs
        if key.startswith(_INJECTION_PREFIXES)
    }


def _make_handler(service: ScoreService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):  # keep test output quiet
            pass

        def do_GET(self):
            try:
                self._route()
            except _HttpError as exc:
                self._send_json(
                    exc.status,
                    {"error": {"type": exc.error_type, "message": exc.message}},
                )
            except LoadShed as exc:
                self._send_json(
                    503, {"error": {"type": "LoadShed", "message": str(exc)}}
                )
            except Exception as exc:  # pragma: no cover - last resort
                self._send_json(
                    500, {"error": {"type": "InternalError", "message": str(exc)}}
                )

        def _route(self):
            url = urlsplit(self.path)
            if url.path == "/metrics":
                body = service.metrics.snapshot_text().encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "text/plain; charset=utf-8")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
                return
            segments = [s for s in url.path.split("/") if s]
            if len(segments) < 3 or segments[0] != "v3" or segments[1] != "scores":
                raise _HttpError(400, "MalformedRequest", f"no route for {url.path}")
            context_id = segments[2]
            if not service.registry.has_context(context_id):
                raise _HttpError(
                    404, "MalformedRequest", f"unknown context {context_id!r}"
                )
            query_pairs = parse_qsl(url.query, keep_blank_values=True)
            query_keys = {key for key, _ in query_pairs}
            if len(segments) == 5:
                self._single(context_id, segments[3], segments[4], query_pairs, query_keys)
            elif len(segments) == 3:
                # Path style wins over query style; only context-level URLs
                # consult the query for models/revids.
                if "model_info" in query_keys:
                    self._model_info(context_id, query_pairs)
                else:
                    self._batch(context_id, query_pairs)
            else:
                raise _HttpError(400, "MalformedRequest", f"no route for {url.path}")

        def _single(self, context_id, rev_segment, model_name, query_pairs, query_keys):
            try:
                revision_id = int(rev_segment)
            except ValueError:
                raise _HttpError(
                    400, "MalformedRequest", f"bad revision id {rev_segment!r}"
                ) from None
            include_features = "features" in query_keys
            overlay = EMPTY_OVERLAY
            raw_overlay = _parse_overlay_params(query_pairs)
            if raw_overlay:
                try:
                    model = service.registry.get(context_id, model_name)
                    graph = service.engine._graph_for(model)
                    overlay = InjectionOverlay.build(graph, raw_overlay)
                except ModelNotFound:
                    pass  # scored below; yields an embedded ModelNotFound
                except UnknownDependent as exc:
                    raise _HttpError(400, exc.code, str(exc)) from exc
                except TypeMismatch as exc:
                    raise _HttpError(400, exc.code, str(exc)) from exc
            document = service.score_single(
                context_id, model_name, revision_id, overlay, include_features
            )
            if isinstance(document, ErrorDocument):
                service.metrics.count_error(document.type)
            body = service.scores_response(
                context_id, [model_name], [revision_id], {revision_id: {model_name: document}}
            )
            self._send_json(200, body)

        def _batch(self, context_id, query_pairs):
            params = dict(query_pairs)
            models_param = params.get("models", "")
            revids_param = params.get("revids", "")
            model_names = [m for m in models_param.split("|") if m]
            if not model_names:
                raise _HttpError(400, "MalformedRequest", "no models given")
            try:
                revision_ids = [int(r) for r in revids_param.split("|") if r]
            except ValueError:
                raise _HttpError(
                    400, "MalformedRequest", f"bad revids {revids_param!r}"
                ) from None
            if not revision_ids:
                raise _HttpError(400, "MalformedRequest", "no revids given")
            cells = service.score_batch(context_id, model_names, revision_ids)
            body = service.scores_response(context_id, model_names, revision_ids, cells)
            self._send_json(200, body)

        def _model_info(self, context_id, query_pairs):
            params = dict(query_pairs)
            model_names = [m for m in params.get("models", "").split("|") if m]
            if not model_names:
                raise _HttpError(400, "MalformedRequest", "no models given")
            field_path = params.get("model_info", "")
            try:
                body = service.model_info_response(
                    context_id, model_names, field_path or None
                )
            except ModelNotFound as exc:
                raise _HttpError(404, exc.code, str(exc)) from exc
            except WikiscoreError as exc:
                raise _HttpError(400, exc.code, str(exc)) from exc
            self._send_json(200, body)

        def _send_json(self, status: int, body: dict):
            data = json.dumps(body, sort_keys=True, separators=(",", ": ")).encode(
                "utf-8"
            )
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

    return Handler
