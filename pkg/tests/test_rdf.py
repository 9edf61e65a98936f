import gzip
import random

import pytest

from bgplearn.rdf import (BIDI, IN, OUT, RDFSyntaxError, Term, Triple, TripleStore,
                          bnode, iri, literal, load_ntriples, parse_triples)

from conftest import ex, random_store


class TestTerm:
    def test_equality_is_bit_exact(self):
        assert iri("http://x/a") == iri("http://x/a")
        assert iri("http://x/a") != iri("http://x/A")
        assert literal("1") != literal("1", datatype="http://x/int")
        assert literal("a", lang="en") != literal("a", lang="de")

    def test_iri_must_be_absolute(self):
        with pytest.raises(ValueError):
            iri("relative/path")
        with pytest.raises(ValueError):
            iri("")

    def test_literal_datatype_lang_exclusive(self):
        with pytest.raises(ValueError):
            Term("literal", "x", datatype="http://x/t", lang="en")

    def test_immutable(self):
        t = iri("http://x/a")
        with pytest.raises(AttributeError):
            t.value = "other"


class TestTriple:
    def test_subject_literal_rejected(self):
        with pytest.raises(ValueError):
            Triple(literal("x"), iri("http://x/p"), iri("http://x/o"))

    def test_predicate_must_be_iri(self):
        with pytest.raises(ValueError):
            Triple(iri("http://x/s"), bnode("b"), iri("http://x/o"))


class TestParser:
    def test_single_statement(self):
        store = load_ntriples("<http://x/s> <http://x/p> <http://x/o> .")
        assert len(store) == 1

    def test_empty_input(self):
        assert len(load_ntriples("")) == 0

    def test_duplicates_collapse(self):
        lines = ["<http://x/s%d> <http://x/p> <http://x/o> ." % i for i in range(8)]
        lines += [lines[0], lines[3]]  # 10 lines, 2 duplicates
        store = load_ntriples("\n".join(lines))
        assert len(store) == 8 + 0  # 8 distinct subjects
        assert len(lines) == 10

    def test_ten_line_fixture_with_two_duplicates(self):
        lines = ["<http://x/s> <http://x/p> <http://x/o%d> ." % i for i in range(9)]
        lines.insert(4, lines[0])
        assert len(lines) == 10
        assert len(load_ntriples("\n".join(lines))) == 9

    def test_turtle_subset(self):
        text = """
        @prefix ex: <http://x/> .
        ex:s a ex:T ; ex:p ex:o1 , ex:o2 .
        ex:s2 ex:q "lit"@en .
        ex:s3 ex:q "42"^^ex:int .
        """
        store = load_ntriples(text)
        assert len(store) == 5
        assert literal("lit", lang="en") in [t.o for t in store.triples()]

    def test_sparql_style_prefix(self):
        store = load_ntriples("PREFIX ex: <http://x/>\nex:a ex:b ex:c .")
        assert len(store) == 1

    def test_literal_escapes(self):
        store = load_ntriples('<http://x/s> <http://x/p> "a\\"b\\nc\\u0041" .')
        assert list(store.triples())[0].o.value == 'a"b\ncA'

    def test_syntax_error_position(self):
        with pytest.raises(RDFSyntaxError) as exc:
            load_ntriples("<http://x/s> <http://x/p>\n ] .")
        assert exc.value.line == 2

    def test_invalid_iri(self):
        with pytest.raises(RDFSyntaxError):
            load_ntriples("<notabsolute> <http://x/p> <http://x/o> .")

    def test_unterminated_literal(self):
        with pytest.raises(RDFSyntaxError):
            load_ntriples('<http://x/s> <http://x/p> "open')

    def test_missing_dot(self):
        with pytest.raises(RDFSyntaxError):
            load_ntriples("<http://x/s> <http://x/p> <http://x/o>")

    def test_gzip_input(self):
        data = gzip.compress(b"<http://x/s> <http://x/p> <http://x/o> .")
        assert len(load_ntriples(data)) == 1

    def test_bnode_subject(self):
        store = load_ntriples("_:b1 <http://x/p> _:b2 .")
        t = list(store.triples())[0]
        assert t.s == bnode("b1") and t.o == bnode("b2")


class TestRoundTrip:
    def test_serialize_reparses_equal(self, capitals_store):
        again = load_ntriples(capitals_store.serialize())
        assert set(again.triples()) == set(capitals_store.triples())

    def test_random_round_trip(self):
        rng = random.Random(7)
        store = random_store(rng, n_triples=40)
        again = load_ntriples(store.serialize())
        assert set(again.triples()) == set(store.triples())


class TestMatch:
    def test_match_all(self, capitals_store):
        assert len(list(capitals_store.match())) == len(capitals_store)

    def test_match_bound_sp(self, capitals_store):
        hits = list(capitals_store.match(ex("Berlin"), ex("capitalOf"), None))
        assert hits == [Triple(ex("Berlin"), ex("capitalOf"), ex("Germany"))]

    def test_match_unknown_term(self, capitals_store):
        assert list(capitals_store.match(ex("Atlantis"), None, None)) == []

    def test_match_matches_bruteforce_all_combos(self):
        rng = random.Random(3)
        store = random_store(rng, n_triples=50, n_nodes=8, n_preds=3)
        triples = list(store.triples())
        probe = triples[17]
        for mask in range(8):
            s = probe.s if mask & 4 else None
            p = probe.p if mask & 2 else None
            o = probe.o if mask & 1 else None
            expected = {t for t in triples
                        if (s is None or t.s == s)
                        and (p is None or t.p == p)
                        and (o is None or t.o == o)}
            assert set(store.match(s, p, o)) == expected

    def test_index_consistency(self, capitals_store):
        spo, pos, osp = capitals_store.index_sizes()
        assert spo == pos == osp == len(capitals_store)


class TestDegree:
    def test_isolated_node(self, capitals_store):
        assert capitals_store.degree(ex("Nowhere"), BIDI) == 0

    def test_directional_counts(self):
        store = load_ntriples("""
        <http://x/n> <http://x/p> <http://x/a> .
        <http://x/n> <http://x/p> <http://x/b> .
        <http://x/n> <http://x/q> <http://x/c> .
        <http://x/d> <http://x/p> <http://x/n> .
        <http://x/e> <http://x/p> <http://x/n> .
        """)
        n = iri("http://x/n")
        assert store.degree(n, OUT) == 3
        assert store.degree(n, IN) == 2
        assert store.degree(n, BIDI) == 5

    def test_self_loop_counts_twice_bidi(self):
        store = load_ntriples("<http://x/x> <http://x/p> <http://x/x> .")
        x = iri("http://x/x")
        assert store.degree(x, OUT) == 1
        assert store.degree(x, IN) == 1
        assert store.degree(x, BIDI) == 2
