import itertools
import random

import pytest

from bgplearn.fitness import GroundTruthPair
from bgplearn.patterns import (GraphPattern, SOURCE_VAR, TARGET_VAR,
                               TriplePattern, Variable, is_var)
from bgplearn.rdf import LITERAL, IRI, Term, Triple, TripleStore, iri

EX = "http://example.org/"


def ex(name):
    return iri(EX + name)


CAPITALS_TTL = """
@prefix : <http://example.org/> .
:Berlin :capitalOf :Germany .
:Paris :capitalOf :France .
:Oslo :capitalOf :Norway .
:Germany a :Country .
:France a :Country .
:Norway a :Country .
:Berlin :locatedIn :Germany .
:Berlin :population :Paris .
"""


@pytest.fixture
def capitals_store():
    from bgplearn.rdf import load_ntriples
    return load_ntriples(CAPITALS_TTL)


@pytest.fixture
def capitals_gt():
    return [GroundTruthPair(ex("Berlin"), ex("Germany")),
            GroundTruthPair(ex("Paris"), ex("France")),
            GroundTruthPair(ex("Oslo"), ex("Norway"))]


def random_store(rng, n_triples=60, n_nodes=15, n_preds=4):
    nodes = [ex("n%d" % i) for i in range(n_nodes)]
    preds = [ex("p%d" % i) for i in range(n_preds)]
    n_triples = min(n_triples, n_nodes * n_nodes * n_preds)
    triples = set()
    while len(triples) < n_triples:
        triples.add(Triple(rng.choice(nodes), rng.choice(preds), rng.choice(nodes)))
    return TripleStore(triples)


def random_pattern(rng, n_triples=3, n_vars=4, store=None, with_reserved=True):
    """Random pattern over the store's vocabulary mixed with variables."""
    variables = [SOURCE_VAR, TARGET_VAR] if with_reserved else []
    variables += [Variable("v%d" % i) for i in range(n_vars)]
    terms = store.terms if store is not None else [ex("n%d" % i) for i in range(5)]
    nodes = [t for t in terms if t.kind != LITERAL]
    preds = [t for t in terms if t.kind == IRI]
    triples = []
    for _ in range(n_triples):
        s = rng.choice(variables + nodes)
        p = rng.choice(variables + preds)
        o = rng.choice(variables + nodes)
        triples.append(TriplePattern(s, p, o))
    return GraphPattern(triples)


def naive_select(store, gp, projection, values=None):
    """Independent oracle: per-pattern naive membership filtering, then a full
    cartesian product with a join consistency check. No indexes, no planning.
    VALUES bindings are substituted per row before filtering, which keeps the
    product tractable without changing the semantics."""
    all_triples = list(store.triples())

    def candidates(tp, base):
        out = []
        for tr in all_triples:
            ok = True
            for node, val in zip(tp, tr):
                if is_var(node):
                    if node in base and base[node] != val:
                        ok = False
                        break
                elif node != val:
                    ok = False
                    break
            if ok:
                out.append(tr)
        return out

    patterns = sorted(gp.triples, key=TriplePattern.sort_key)
    initial = ([dict(zip(values[0], row)) for row in values[1]] if values else [{}])
    rows = set()
    for base in initial:
        cand_lists = [candidates(tp, base) for tp in patterns]
        for combo in itertools.product(*cand_lists):
            binding = dict(base)
            ok = True
            for tp, tr in zip(patterns, combo):
                for node, val in zip(tp, tr):
                    if is_var(node):
                        if node in binding and binding[node] != val:
                            ok = False
                            break
                        binding[node] = val
                    elif node != val:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                rows.add(tuple(binding.get(v) for v in projection))
    return rows


def naive_cost(store, gp, values=None):
    """Size of the cartesian product the naive oracle would enumerate."""
    all_triples = list(store.triples())
    initial = ([dict(zip(values[0], row)) for row in values[1]] if values else [{}])
    total = 0
    for base in initial:
        product = 1
        for tp in sorted(gp.triples, key=TriplePattern.sort_key):
            n = 0
            for tr in all_triples:
                ok = True
                for node, val in zip(tp, tr):
                    if is_var(node):
                        if node in base and base[node] != val:
                            ok = False
                            break
                    elif node != val:
                        ok = False
                        break
                if ok:
                    n += 1
            product *= n
            if product == 0:
                break
        total += product
    return total


def variable_bijection_isomorphic(gp1, gp2):
    """Exhaustive check: some renaming of non-reserved variables maps gp1 to gp2."""
    v1 = sorted((v for v in gp1.variables() if not v.is_reserved),
                key=lambda v: v.name)
    v2 = sorted((v for v in gp2.variables() if not v.is_reserved),
                key=lambda v: v.name)
    if len(v1) != len(v2) or len(gp1) != len(gp2):
        return False
    for perm in itertools.permutations(v2):
        mapping = dict(zip(v1, perm))
        if gp1.substitute(mapping) == gp2:
            return True
    return False
