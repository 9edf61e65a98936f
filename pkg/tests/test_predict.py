import itertools
import random

import pytest

from bgplearn.endpoint import local_endpoint
from bgplearn.fitness import FitnessTuple
from bgplearn.patterns import (GraphPattern, SOURCE_VAR, TARGET_VAR,
                               TriplePattern, Variable)
from bgplearn.predict import (FUSION_STRATEGIES, PatternPortfolio,
                              PortfolioEntry, fuse, precision_loss, predict,
                              predict_targets, reduce_queries)

from conftest import ex

V = Variable


def _fit(score=1.0, f1=0.5, avg=2.0):
    return FitnessTuple(remains=0.0, score=score, gain=score, f1=f1,
                        avg_result_len=avg, gt_matches=1, pattern_length=1,
                        pattern_vars=2, timeout_penalty=0.0, query_time_s=0.0)


def _entry(pv, score=1.0, f1=0.5, avg=2.0, pred="p"):
    gp = GraphPattern([TriplePattern(SOURCE_VAR, ex(pred), TARGET_VAR)])
    return PortfolioEntry(pattern=gp, pv=list(pv), fitness=_fit(score, f1, avg))


class TestReduceQueries:
    def test_k_at_least_n_keeps_all(self):
        entries = [_entry([1, 0, 0]), _entry([0, 1, 0]), _entry([0, 0, 1])]
        out = reduce_queries(PatternPortfolio(entries), 3)
        assert out.representatives == [0, 1, 2]
        assert out.precision_loss == 0.0

    def test_duplicate_pvs_collapse_without_loss(self):
        entries = [_entry([1.0, 0.5, 0.0], score=2.0),
                   _entry([1.0, 0.5, 0.0], score=1.0)]
        out = reduce_queries(PatternPortfolio(entries), 1)
        assert out.precision_loss == 0.0
        assert out.representatives == [0]  # higher score wins the cluster

    def test_block_structure_matches_exhaustive_oracle(self):
        rng = random.Random(13)
        # ten patterns in three pv blocks plus noise
        blocks = [[1, 1, 0, 0, 0, 0], [0, 0, 1, 1, 0, 0], [0, 0, 0, 0, 1, 1]]
        entries = []
        for i in range(10):
            base = blocks[i % 3]
            pv = [max(0.0, v + rng.uniform(-0.05, 0.05)) for v in base]
            entries.append(_entry(pv, score=rng.uniform(0.5, 3.0)))
        portfolio = PatternPortfolio(entries)
        for k in (1, 2, 3, 5):
            out = reduce_queries(portfolio, k)
            assert len(out.representatives) <= k
            best_oracle = min(
                precision_loss(entries, list(sel))
                for r in range(1, k + 1)
                for sel in itertools.combinations(range(len(entries)), r))
            # clustering is a heuristic; it must at least report its own loss
            # correctly and stay within a reasonable factor of optimal
            assert out.precision_loss == pytest.approx(
                precision_loss(entries, out.representatives))
            assert out.precision_loss <= best_oracle + 2.5

    def test_loss_monotone_in_k(self):
        rng = random.Random(4)
        entries = [_entry([rng.random() for _ in range(8)]) for _ in range(12)]
        portfolio = PatternPortfolio(entries)
        losses = [reduce_queries(portfolio, k).precision_loss
                  for k in (1, 2, 4, 8, 12)]
        for a, b in zip(losses, losses[1:]):
            assert b <= a + 1e-12

    def test_k_three_on_exact_blocks_is_lossless(self):
        entries = [_entry([1, 1, 0, 0]), _entry([1, 1, 0, 0]),
                   _entry([0, 0, 1, 0]), _entry([0, 0, 0, 1])]
        out = reduce_queries(PatternPortfolio(entries), 3)
        assert out.precision_loss == 0.0

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            reduce_queries(PatternPortfolio([]), 2)
        with pytest.raises(ValueError):
            reduce_queries(PatternPortfolio([_entry([1.0])]), 0)


class TestPredictTargets:
    def test_fixture_targets(self, capitals_store):
        ep = local_endpoint(capitals_store)
        entry = _entry([1.0], pred="capitalOf")
        portfolio = PatternPortfolio([entry], representatives=[0])
        sets = predict_targets(ep, portfolio, ex("Berlin"))
        assert sets == [{ex("Germany")}]

    def test_unknown_source_gives_empty(self, capitals_store):
        ep = local_endpoint(capitals_store)
        portfolio = PatternPortfolio([_entry([1.0], pred="capitalOf")],
                                     representatives=[0])
        assert predict_targets(ep, portfolio, ex("Nowhere")) == [set()]

    def test_timeout_gives_empty_set(self, capitals_store):
        ep = local_endpoint(capitals_store, hard_timeout=0.0)
        portfolio = PatternPortfolio([_entry([1.0], pred="capitalOf")],
                                     representatives=[0])
        assert predict_targets(ep, portfolio, ex("Berlin")) == [set()]


class TestFuse:
    def test_single_pattern_two_targets(self):
        entry = _entry([1.0], score=2.0, f1=0.8, avg=2.0)
        portfolio = PatternPortfolio([entry], representatives=[0])
        pred = fuse([{ex("A"), ex("B")}], portfolio, ex("s"))
        for strategy in FUSION_STRATEGIES:
            assert len(pred.rankings[strategy]) == 2
        assert dict(pred.rankings["target_occs"])[ex("A")] == 1.0
        assert dict(pred.rankings["scores"])[ex("A")] == 2.0
        assert dict(pred.rankings["f_measures"])[ex("A")] == 0.8
        assert dict(pred.rankings["gp_precisions"])[ex("A")] == pytest.approx(0.5)
        assert dict(pred.rankings["precisions"])[ex("A")] == pytest.approx(0.5)

    def test_occurrence_counting(self):
        e1, e2, e3 = (_entry([1.0], score=s) for s in (1.0, 2.0, 4.0))
        portfolio = PatternPortfolio([e1, e2, e3], representatives=[0, 1, 2])
        pred = fuse([{ex("A")}, {ex("A"), ex("B")}, {ex("B")}],
                    portfolio, ex("s"))
        occs = dict(pred.rankings["target_occs"])
        assert occs == {ex("A"): 2.0, ex("B"): 2.0}
        scores = dict(pred.rankings["scores"])
        assert scores[ex("A")] == 3.0 and scores[ex("B")] == 6.0
        assert pred.rankings["scores"][0][0] == ex("B")

    def test_naive_oracle_random(self):
        rng = random.Random(21)
        terms = [ex("t%d" % i) for i in range(6)]
        for _ in range(100):
            n = rng.randint(1, 5)
            entries = [_entry([rng.random()], score=rng.uniform(0, 3),
                              f1=rng.random(), avg=rng.uniform(0.5, 4))
                       for _ in range(n)]
            tsets = [set(rng.sample(terms, rng.randint(0, 4)))
                     for _ in range(n)]
            portfolio = PatternPortfolio(entries, representatives=list(range(n)))
            pred = fuse(tsets, portfolio, ex("s"))
            # independent recomputation of each aggregate
            for strategy in FUSION_STRATEGIES:
                expected = {}
                for e, ts in zip(entries, tsets):
                    w = {"target_occs": 1.0, "scores": e.score,
                         "f_measures": e.f1,
                         "gp_precisions": 1.0 / e.fitness.avg_result_len,
                         "precisions": 1.0 / len(ts) if ts else 0.0}[strategy]
                    for t in ts:
                        expected[t] = expected.get(t, 0.0) + w
                got = dict(pred.rankings[strategy])
                assert got == pytest.approx(expected)
                vals = [v for _, v in pred.rankings[strategy]]
                assert vals == sorted(vals, reverse=True)

    def test_tie_break_lexicographic(self):
        portfolio = PatternPortfolio([_entry([1.0])], representatives=[0])
        pred = fuse([{ex("zeta"), ex("alpha")}], portfolio, ex("s"))
        assert [t for t, _ in pred.rankings["target_occs"]] == \
               [ex("alpha"), ex("zeta")]

    def test_set_count_mismatch(self):
        portfolio = PatternPortfolio([_entry([1.0])], representatives=[0])
        with pytest.raises(ValueError):
            fuse([], portfolio, ex("s"))


class TestEndToEnd:
    def test_predict_ranks_truth_first(self, capitals_store):
        ep = local_endpoint(capitals_store)
        exact = _entry([1.0, 1.0, 1.0], score=3.0, f1=1.0, avg=1.0,
                       pred="capitalOf")
        noisy = PortfolioEntry(
            pattern=GraphPattern([TriplePattern(SOURCE_VAR, V("p"), TARGET_VAR)]),
            pv=[0.3, 0.5, 1.0], fitness=_fit(score=0.4, f1=0.5, avg=2.0))
        portfolio = PatternPortfolio([exact, noisy], representatives=[0, 1])
        pred = predict(ep, portfolio, ex("Berlin"))
        for strategy in FUSION_STRATEGIES:
            assert pred.rankings[strategy][0][0] == ex("Germany")
