"""Train/test splitting, ranking metrics, and graph baselines (PageRank, HITS, degree)."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .fitness import GroundTruthPair
from .rdf import BIDI, IN, OUT, Term, TripleStore

PAGERANK = "pagerank"
HITS_AUTH = "hits_auth"
HITS_HUB = "hits_hub"
INDEG = "indeg"
OUTDEG = "outdeg"


@dataclass
class Split:
    train: list[GroundTruthPair]
    test: list[GroundTruthPair]
    seed: int


def split_pairs(pairs: list[GroundTruthPair], ratio: float = 0.1,
                seed: int = 0) -> Split:
    """Random disjoint split; |test| = floor(ratio * |pairs|)."""
    rng = random.Random(seed)
    indices = list(range(len(pairs)))
    rng.shuffle(indices)
    n_test = int(len(pairs) * ratio)
    test_idx = set(indices[:n_test])
    train = [p for i, p in enumerate(pairs) if i not in test_idx]
    test = [p for i, p in enumerate(pairs) if i in test_idx]
    return Split(train=train, test=test, seed=seed)


def rank_of_truth(ranked, truth: Term) -> float:
    """1-based rank of the true target, or infinity when absent."""
    for i, item in enumerate(ranked):
        target = item[0] if isinstance(item, tuple) else item
        if target == truth:
            return i + 1
    return math.inf


@dataclass
class MetricReport:
    recall_at_k: dict[int, float] = field(default_factory=dict)
    map: float = 0.0
    ndcg: float = 0.0

    def as_dict(self) -> dict:
        return {"recall_at_k": {str(k): v for k, v in sorted(self.recall_at_k.items())},
                "map": self.map, "ndcg": self.ndcg}


def metrics(ranks: list[float], ks: range = range(1, 11)) -> MetricReport:
    """With one relevant target per pair: AP = 1/r, NDCG = 1/log2(r+1)."""
    n = len(ranks)
    report = MetricReport()
    if n == 0:
        report.recall_at_k = {k: 0.0 for k in ks}
        return report
    for k in ks:
        report.recall_at_k[k] = sum(1 for r in ranks if r <= k) / n
    report.map = sum((1.0 / r) if math.isfinite(r) else 0.0 for r in ranks) / n
    report.ndcg = sum((1.0 / math.log2(r + 1)) if math.isfinite(r) else 0.0
                      for r in ranks) / n
    return report


# ---------------------------------------------------------------------------
# Graph scores over the distinct (subject, object) edges of the store


def _node_graph(store: TripleStore):
    edges = sorted(store.edges())
    nodes = sorted({n for e in edges for n in e})
    index = {n: i for i, n in enumerate(nodes)}
    return nodes, index, edges


def pagerank(store: TripleStore, damping: float = 0.85, eps: float = 1e-10,
             max_iter: int = 200) -> dict[Term, float]:
    """Power iteration with dangling-mass redistribution; scores sum to 1."""
    nodes, index, edges = _node_graph(store)
    n = len(nodes)
    if n == 0:
        return {}
    src = np.array([index[s] for s, _ in edges], dtype=np.int64)
    dst = np.array([index[o] for _, o in edges], dtype=np.int64)
    out_deg = np.bincount(src, minlength=n).astype(float)
    dangling = out_deg == 0
    rank = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        contrib = np.where(dangling, 0.0, rank / np.maximum(out_deg, 1.0))
        new = np.zeros(n)
        np.add.at(new, dst, contrib[src])
        new = damping * (new + rank[dangling].sum() / n) + (1.0 - damping) / n
        if np.abs(new - rank).sum() < eps:
            rank = new
            break
        rank = new
    return {store.term(tid): float(r) for tid, r in zip(nodes, rank)}


def hits(store: TripleStore, eps: float = 1e-10, max_iter: int = 200
         ) -> tuple[dict[Term, float], dict[Term, float]]:
    """HITS with L2 normalization each step; returns (authority, hub) scores."""
    nodes, index, edges = _node_graph(store)
    n = len(nodes)
    if n == 0:
        return {}, {}
    src = np.array([index[s] for s, _ in edges], dtype=np.int64)
    dst = np.array([index[o] for _, o in edges], dtype=np.int64)
    auth = np.full(n, 1.0 / math.sqrt(n))
    hub = np.full(n, 1.0 / math.sqrt(n))
    for _ in range(max_iter):
        new_auth = np.zeros(n)
        np.add.at(new_auth, dst, hub[src])
        norm = np.linalg.norm(new_auth)
        if norm > 0:
            new_auth /= norm
        new_hub = np.zeros(n)
        np.add.at(new_hub, src, new_auth[dst])
        norm = np.linalg.norm(new_hub)
        if norm > 0:
            new_hub /= norm
        if (np.abs(new_auth - auth).sum() + np.abs(new_hub - hub).sum()) < eps:
            auth, hub = new_auth, new_hub
            break
        auth, hub = new_auth, new_hub
    terms = [store.term(tid) for tid in nodes]
    return ({t: float(a) for t, a in zip(terms, auth)},
            {t: float(h) for t, h in zip(terms, hub)})


def neighbourhood(store: TripleStore, node: Term, direction: str) -> set[Term]:
    nid = store.term_id(node)
    if nid is None:
        return set()
    out = set()
    if direction in (OUT, BIDI):
        for _, _, o in store.match_ids(nid, None, None):
            out.add(store.term(o))
    if direction in (IN, BIDI):
        for s, _, _ in store.match_ids(None, None, nid):
            out.add(store.term(s))
    out.discard(node)
    return out


def baseline_predict(store: TripleStore, source: Term, direction: str,
                     scorer: str, k: int,
                     scores: dict[Term, float] | None = None
                     ) -> list[tuple[Term, float]]:
    """Rank 1-hop neighbours by a global score; lexicographic IRI tie-break."""
    candidates = neighbourhood(store, source, direction)
    if not candidates:
        return []
    if scores is None:
        if scorer == PAGERANK:
            scores = pagerank(store)
        elif scorer == HITS_AUTH:
            scores = hits(store)[0]
        elif scorer == HITS_HUB:
            scores = hits(store)[1]
        elif scorer == INDEG:
            scores = {c: float(store.degree(c, IN)) for c in candidates}
        elif scorer == OUTDEG:
            scores = {c: float(store.degree(c, OUT)) for c in candidates}
        else:
            raise ValueError("unknown scorer: %r" % scorer)
    ranked = sorted(((c, scores.get(c, 0.0)) for c in candidates),
                    key=lambda cv: (-cv[1], cv[0].sort_key()))
    return ranked[:k]
