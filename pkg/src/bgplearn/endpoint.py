"""Uniform query interface over a local store or a remote SPARQL endpoint.

Adds VALUES batching, bounded in-flight requests, retry with backoff, and an
LRU cache keyed by the pattern's canonical form so renamed-variable twins hit.
"""

from __future__ import annotations

import threading
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import engine
from .canon import canonicalize
from .engine import COMPLETE, HARD_TIMEOUT, SOFT_TIMEOUT, EvalResult
from .patterns import (GraphPattern, SOURCE_VAR, TARGET_VAR, Variable,
                       to_select_sparql)
from .rdf import Term, TripleStore, iri, literal, bnode

LOCAL = "local"
REMOTE = "remote"

_STATUS_RANK = {COMPLETE: 0, SOFT_TIMEOUT: 1, HARD_TIMEOUT: 2}


@dataclass
class EndpointConfig:
    backend: str = LOCAL
    store_path: Optional[str] = None
    url: Optional[str] = None
    max_inflight: int = 1
    soft_timeout: float = engine.DEFAULT_SOFT_TIMEOUT
    hard_timeout: float = engine.DEFAULT_HARD_TIMEOUT
    cache_capacity: int = 100_000
    cache_ttl: Optional[float] = None  # seconds; None = no expiry (Local default)
    batch_size: int = 384
    retries: int = 3
    backoff: float = 0.5
    default_limit: int = engine.DEFAULT_LIMIT

    def __post_init__(self):
        if self.max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


class EndpointUnreachable(RuntimeError):
    """Raised after exhausting retries against a remote endpoint."""


class _LRUCache:
    def __init__(self, capacity: int, ttl: Optional[float] = None):
        self.capacity = capacity
        self.ttl = ttl
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            entry = self._data.get(key)
            if entry is None:
                return None
            value, inserted_at = entry
            if self.ttl is not None and time.time() - inserted_at > self.ttl:
                del self._data[key]
                return None
            self._data.move_to_end(key)
            return value

    def put(self, key, value) -> None:
        with self._lock:
            self._data[key] = (value, time.time())
            self._data.move_to_end(key)
            while len(self._data) > self.capacity:
                self._data.popitem(last=False)

    def __len__(self):
        return len(self._data)


def _term_token(term: Term) -> str:
    return term.n3()


def _cache_key(gp: GraphPattern, projection, values, limit) -> str:
    form = canonicalize(gp)
    mapping = form.variable_mapping

    def canon_var(v: Variable) -> str:
        return mapping.get(v, v).n3()

    parts = [form.key, "P:" + ",".join(canon_var(v) for v in projection)]
    if values is not None:
        vvars, rows = values
        parts.append("V:" + ",".join(canon_var(v) for v in vvars))
        parts.extend("R:" + "|".join(_term_token(t) for t in row) for row in rows)
    parts.append("L:%s" % (limit,))
    return "\x1e".join(parts)


class Endpoint:
    """Facade sharing a cache and an in-flight limit across all callers."""

    def __init__(self, config: EndpointConfig, store: Optional[TripleStore] = None,
                 http_post: Optional[Callable] = None):
        self.config = config
        self.store = store
        if config.backend == LOCAL and store is None:
            if config.store_path is None:
                raise ValueError("local backend requires a store or store_path")
            from .rdf import load_file
            self.store = load_file(config.store_path)
        if config.backend == REMOTE and not config.url and http_post is None:
            raise ValueError("remote backend requires a url")
        self._http_post = http_post
        ttl = config.cache_ttl
        if ttl is None and config.backend == REMOTE:
            ttl = 3600.0
        self._cache = _LRUCache(config.cache_capacity, ttl)
        self._inflight = threading.Semaphore(config.max_inflight)
        self.backend_calls = 0

    # -- public API ---------------------------------------------------------

    def run_select(self, gp: GraphPattern, projection: list[Variable],
                   values: Optional[tuple[list[Variable], list[tuple]]] = None,
                   limit: Optional[int] = None) -> EvalResult:
        key = _cache_key(gp, projection, values, limit)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if values is not None and len(values[1]) > self.config.batch_size:
            result = self._batched_select(gp, projection, values, limit)
        else:
            result = self._backend_select(gp, projection, values, limit)
        self._cache.put(key, result)
        return result

    def run_ask_coverage(self, gp: GraphPattern,
                         pairs: list[tuple[Term, Term]]) -> tuple[list[bool], str]:
        """Batched coverage check; semantically equal to per-pair ASK queries."""
        if not gp.is_complete:
            raise ValueError("coverage requires a complete pattern")
        if not pairs:
            return [], COMPLETE
        res = self.run_select(gp, [SOURCE_VAR, TARGET_VAR],
                              values=([SOURCE_VAR, TARGET_VAR], list(pairs)),
                              limit=None)
        if res.status == HARD_TIMEOUT:
            return [False] * len(pairs), HARD_TIMEOUT
        found = res.row_set()
        return [(s, t) in found for s, t in pairs], res.status

    # -- batching -----------------------------------------------------------

    def _batched_select(self, gp, projection, values, limit) -> EvalResult:
        vvars, rows = values
        merged: list[tuple] = []
        seen: set = set()
        elapsed = 0.0
        worst = COMPLETE
        bs = self.config.batch_size
        for i in range(0, len(rows), bs):
            chunk = rows[i:i + bs]
            res = self._backend_select(gp, projection, (vvars, chunk), limit)
            elapsed += res.elapsed
            if _STATUS_RANK[res.status] > _STATUS_RANK[worst]:
                worst = res.status
            for row in res.rows:
                if row not in seen:
                    seen.add(row)
                    merged.append(row)
        if worst == HARD_TIMEOUT:
            return EvalResult(tuple(projection), [], elapsed, HARD_TIMEOUT)
        if limit is not None:
            merged = merged[:limit]
        return EvalResult(tuple(projection), merged, elapsed, worst)

    # -- backends -----------------------------------------------------------

    def _backend_select(self, gp, projection, values, limit) -> EvalResult:
        with self._inflight:
            self.backend_calls += 1
            if self.config.backend == LOCAL:
                return engine.select(self.store, gp, projection, values, limit,
                                     self.config.soft_timeout,
                                     self.config.hard_timeout)
            return self._remote_select(gp, projection, values, limit)

    def _remote_select(self, gp, projection, values, limit) -> EvalResult:
        query = to_select_sparql(gp, projection, values, limit)
        post = self._http_post or _requests_post
        started = time.time()
        delay = self.config.backoff
        last_error = None
        for attempt in range(self.config.retries + 1):
            try:
                status_code, payload = post(
                    self.config.url, data={"query": query},
                    headers={"Accept": "application/sparql-results+json"},
                    timeout=self.config.hard_timeout)
            except Exception as exc:  # network failure: retry with backoff
                last_error = exc
                if attempt < self.config.retries:
                    time.sleep(delay)
                    delay *= 2
                continue
            if status_code >= 500:
                # endpoint overload/timeout: fitness punishment, not a crash
                return EvalResult(tuple(projection), [],
                                  time.time() - started, HARD_TIMEOUT)
            if status_code >= 400:
                raise RuntimeError("SPARQL endpoint rejected query: HTTP %d"
                                   % status_code)
            rows = _parse_sparql_json(payload, projection)
            return EvalResult(tuple(projection), rows, time.time() - started,
                              COMPLETE)
        raise EndpointUnreachable("endpoint unreachable after %d retries: %s"
                                  % (self.config.retries, last_error))


def _requests_post(url, data, headers, timeout):
    import requests
    resp = requests.post(url, data=data, headers=headers, timeout=timeout)
    return resp.status_code, (resp.json() if resp.status_code < 400 else None)


def _json_term(obj: dict) -> Term:
    typ = obj.get("type")
    if typ == "uri":
        return iri(obj["value"])
    if typ == "bnode":
        return bnode(obj["value"])
    if typ in ("literal", "typed-literal"):
        return literal(obj["value"], datatype=obj.get("datatype"),
                       lang=obj.get("xml:lang"))
    raise ValueError("unknown SPARQL JSON term type: %r" % typ)


def _parse_sparql_json(payload: dict, projection: list[Variable]) -> list[tuple]:
    rows = []
    seen = set()
    for binding in payload.get("results", {}).get("bindings", []):
        row = tuple(_json_term(binding[v.name]) if v.name in binding else None
                    for v in projection)
        if row not in seen:
            seen.add(row)
            rows.append(row)
    return rows


def local_endpoint(store: TripleStore, **overrides) -> Endpoint:
    cfg = EndpointConfig(backend=LOCAL, **overrides)
    return Endpoint(cfg, store=store)
