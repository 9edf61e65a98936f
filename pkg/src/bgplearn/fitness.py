"""Fitness dimensions, the lexicographic fitness tuple, and the coverage ledger."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

from .engine import COMPLETE, HARD_TIMEOUT, SOFT_TIMEOUT
from .patterns import SOURCE_VAR, TARGET_VAR, GraphPattern
from .rdf import Term


class GroundTruthPair(NamedTuple):
    source: Term
    target: Term


class CoverageLedger:
    """Per ground-truth-pair best precision achieved by any accepted pattern so far."""

    def __init__(self, values: Iterable[float]):
        self.values = [float(v) for v in values]
        if any(v < 0 or v > 1 for v in self.values):
            raise ValueError("ledger entries must lie in [0, 1]")

    @classmethod
    def zeros(cls, n: int) -> "CoverageLedger":
        return cls([0.0] * n)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def remains(self) -> float:
        return sum(1.0 - v for v in self.values)

    def updated(self, pv_vectors: Iterable[list[float]]) -> "CoverageLedger":
        new = list(self.values)
        for pv in pv_vectors:
            if len(pv) != len(new):
                raise ValueError("precision vector length mismatch")
            for i, p in enumerate(pv):
                if p > new[i]:
                    new[i] = p
        return CoverageLedger(new)

    def to_json(self) -> str:
        return json.dumps(self.values)

    @classmethod
    def from_json(cls, text: str) -> "CoverageLedger":
        return cls(json.loads(text))

    def __eq__(self, other):
        return isinstance(other, CoverageLedger) and self.values == other.values

    def __repr__(self):
        return "CoverageLedger(remains=%g, n=%d)" % (self.remains(), len(self.values))


@dataclass(frozen=True)
class FitnessTuple:
    """Lexicographically compared; min-direction fields compare inverted."""

    remains: float
    score: float
    gain: float
    f1: float
    avg_result_len: float   # min
    gt_matches: int
    pattern_length: int     # min
    pattern_vars: int       # min
    timeout_penalty: float  # min, in {0, 0.5, 1.0}
    query_time_s: float     # min

    def key(self) -> tuple:
        return (self.remains, self.score, self.gain, self.f1, -self.avg_result_len,
                self.gt_matches, -self.pattern_length, -self.pattern_vars,
                -self.timeout_penalty, -self.query_time_s)

    def __lt__(self, other):
        return self.key() < other.key()

    def __le__(self, other):
        return self.key() <= other.key()

    def __gt__(self, other):
        return self.key() > other.key()

    def __ge__(self, other):
        return self.key() >= other.key()

    def as_list(self) -> list:
        return [self.remains, self.score, self.gain, self.f1, self.avg_result_len,
                self.gt_matches, self.pattern_length, self.pattern_vars,
                self.timeout_penalty, self.query_time_s]


@dataclass
class PatternEvaluation:
    """Per-pair precision vector, coverage flags, and per-source result lengths."""

    pv: list[float]
    covered: list[bool]
    result_lengths: dict[Term, int] = field(default_factory=dict)

    @property
    def gt_matches(self) -> int:
        return sum(self.covered)


@dataclass
class ScoreConfig:
    overfit_factor: float = 0.1
    min_distinct_sources: int = 2
    min_distinct_targets: int = 2


def score(gain: float, evaluation: PatternEvaluation, gt: list[GroundTruthPair],
          config: Optional[ScoreConfig] = None) -> float:
    """Gain with a multiplicative punishment for patterns fitting a single source/target."""
    if gain < 0:
        raise ValueError("gain must be non-negative")
    cfg = config or ScoreConfig()
    matched = [pair for pair, hit in zip(gt, evaluation.covered) if hit]
    sources = {p.source for p in matched}
    targets = {p.target for p in matched}
    penalty = 1.0
    if (len(sources) < cfg.min_distinct_sources
            or len(targets) < cfg.min_distinct_targets):
        penalty = cfg.overfit_factor
    return gain * penalty


_STATUS_PENALTY = {COMPLETE: 0.0, SOFT_TIMEOUT: 0.5, HARD_TIMEOUT: 1.0}


def evaluate(endpoint, gp: GraphPattern, gt: list[GroundTruthPair],
             ledger: CoverageLedger, score_config: Optional[ScoreConfig] = None
             ) -> tuple[PatternEvaluation, FitnessTuple]:
    """Fitness of one pattern via a single batched prediction query over GT sources."""
    n = len(gt)
    remains = ledger.remains()
    base = dict(remains=remains, pattern_length=gp.length, pattern_vars=gp.variable_count)

    if not gp.triples or not gp.is_complete:
        ev = PatternEvaluation(pv=[0.0] * n, covered=[False] * n)
        ft = FitnessTuple(score=0.0, gain=0.0, f1=0.0, avg_result_len=0.0,
                          gt_matches=0, timeout_penalty=0.0, query_time_s=0.0, **base)
        return ev, ft

    sources: list[Term] = []
    for pair in gt:
        if pair.source not in sources:
            sources.append(pair.source)
    res = endpoint.run_select(gp, [SOURCE_VAR, TARGET_VAR],
                              values=([SOURCE_VAR], [(s,) for s in sources]),
                              limit=None)
    penalty = _STATUS_PENALTY[res.status]

    targets_by_source: dict[Term, set[Term]] = {}
    for s, t in res.rows:
        targets_by_source.setdefault(s, set()).add(t)
    lengths = {s: len(targets_by_source.get(s, ())) for s in sources}

    pv = []
    covered = []
    for s, t in gt:
        tset = targets_by_source.get(s)
        hit = bool(tset) and t in tset
        covered.append(hit)
        pv.append(1.0 / len(tset) if hit else 0.0)

    gt_matches = sum(covered)
    recall = gt_matches / n if n else 0.0
    avg_result_len = (sum(len(targets_by_source.get(p.source, ())) for p in gt) / n
                      if n else 0.0)
    precision = 1.0 / avg_result_len if avg_result_len > 0 else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision > 0 and recall > 0 else 0.0)

    if penalty > 0:
        gain = 0.0
    else:
        gain = sum(max(0.0, p - ledger[i]) for i, p in enumerate(pv))

    ev = PatternEvaluation(pv=pv, covered=covered, result_lengths=lengths)
    sc = score(gain, ev, gt, score_config)
    ft = FitnessTuple(score=sc, gain=gain, f1=f1, avg_result_len=avg_result_len,
                      gt_matches=gt_matches, timeout_penalty=penalty,
                      query_time_s=res.elapsed, **base)
    return ev, ft


def update_ledger(ledger: CoverageLedger,
                  evaluations: Iterable[PatternEvaluation]) -> CoverageLedger:
    """Elementwise max of the ledger with the accepted patterns' precision vectors."""
    return ledger.updated(ev.pv for ev in evaluations)
