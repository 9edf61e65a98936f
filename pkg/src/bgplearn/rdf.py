"""RDF data model, N-Triples / Turtle-subset parsing, and an indexed in-memory store."""

from __future__ import annotations

import gzip
import re
from typing import Iterable, Iterator, Optional

IRI = "iri"
BNODE = "bnode"
LITERAL = "literal"

IN = "in"
OUT = "out"
BIDI = "bidi"

_ABS_IRI_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")

_KIND_ORDER = {IRI: 0, BNODE: 1, LITERAL: 2}


class RDFSyntaxError(ValueError):
    """Parse failure with source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__("%s (line %d, column %d)" % (message, line, column))
        self.line = line
        self.column = column


class Term:
    """An RDF node: IRI, blank node, or literal. Immutable and hashable."""

    __slots__ = ("kind", "value", "datatype", "lang", "_hash")

    def __init__(self, kind: str, value: str, datatype: Optional[str] = None,
                 lang: Optional[str] = None):
        if kind not in (IRI, BNODE, LITERAL):
            raise ValueError("unknown term kind: %r" % kind)
        if kind == IRI and not _ABS_IRI_RE.match(value or ""):
            raise ValueError("not an absolute IRI: %r" % value)
        if kind != LITERAL and (datatype is not None or lang is not None):
            raise ValueError("datatype/lang only valid on literals")
        if datatype is not None and lang is not None:
            raise ValueError("literal has at most one of datatype and language tag")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "datatype", datatype)
        object.__setattr__(self, "lang", lang)
        object.__setattr__(self, "_hash", hash((kind, value, datatype, lang)))

    def __setattr__(self, name, value):
        raise AttributeError("Term is immutable")

    def __eq__(self, other):
        return (isinstance(other, Term)
                and self.kind == other.kind and self.value == other.value
                and self.datatype == other.datatype and self.lang == other.lang)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "Term(%s)" % self.n3()

    def sort_key(self):
        return (_KIND_ORDER[self.kind], self.value, self.datatype or "", self.lang or "")

    def n3(self) -> str:
        if self.kind == IRI:
            return "<%s>" % self.value
        if self.kind == BNODE:
            return "_:%s" % self.value
        lit = '"%s"' % escape_literal(self.value)
        if self.lang is not None:
            return "%s@%s" % (lit, self.lang)
        if self.datatype is not None:
            return '%s^^<%s>' % (lit, self.datatype)
        return lit


def iri(value: str) -> Term:
    return Term(IRI, value)


def bnode(value: str) -> Term:
    return Term(BNODE, value)


def literal(value: str, datatype: Optional[str] = None, lang: Optional[str] = None) -> Term:
    return Term(LITERAL, value, datatype, lang)


def escape_literal(s: str) -> str:
    return (s.replace("\\", "\\\\").replace('"', '\\"')
            .replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t"))


class Triple:
    """A ground RDF statement. Subject is never a literal; predicate is an IRI."""

    __slots__ = ("s", "p", "o", "_hash")

    def __init__(self, s: Term, p: Term, o: Term):
        if s.kind == LITERAL:
            raise ValueError("triple subject must not be a literal")
        if p.kind != IRI:
            raise ValueError("triple predicate must be an IRI")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "o", o)
        object.__setattr__(self, "_hash", hash((s, p, o)))

    def __setattr__(self, name, value):
        raise AttributeError("Triple is immutable")

    def __eq__(self, other):
        return (isinstance(other, Triple)
                and self.s == other.s and self.p == other.p and self.o == other.o)

    def __hash__(self):
        return self._hash

    def __iter__(self):
        return iter((self.s, self.p, self.o))

    def __repr__(self):
        return "Triple(%s %s %s)" % (self.s.n3(), self.p.n3(), self.o.n3())

    def n3(self) -> str:
        return "%s %s %s ." % (self.s.n3(), self.p.n3(), self.o.n3())


class TripleStore:
    """Immutable-after-load set of triples with SPO/POS/OSP indexes.

    Terms are interned to integer ids; all lookups and iteration orders are
    in dictionary-id order, so results are deterministic for a given load.
    """

    def __init__(self, triples: Iterable[Triple] = ()):
        self._terms: list[Term] = []
        self._ids: dict[Term, int] = {}
        self._triples: set[tuple[int, int, int]] = set()
        self._spo: dict[int, dict[int, set[int]]] = {}
        self._pos: dict[int, dict[int, set[int]]] = {}
        self._osp: dict[int, dict[int, set[int]]] = {}
        for t in triples:
            self._add(t)

    def _intern(self, term: Term) -> int:
        tid = self._ids.get(term)
        if tid is None:
            tid = len(self._terms)
            self._ids[term] = tid
            self._terms.append(term)
        return tid

    def _add(self, t: Triple) -> None:
        s, p, o = self._intern(t.s), self._intern(t.p), self._intern(t.o)
        key = (s, p, o)
        if key in self._triples:
            return
        self._triples.add(key)
        self._spo.setdefault(s, {}).setdefault(p, set()).add(o)
        self._pos.setdefault(p, {}).setdefault(o, set()).add(s)
        self._osp.setdefault(o, {}).setdefault(s, set()).add(p)

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, t: Triple) -> bool:
        key = (self._ids.get(t.s), self._ids.get(t.p), self._ids.get(t.o))
        return None not in key and key in self._triples

    def term_id(self, term: Term) -> Optional[int]:
        return self._ids.get(term)

    def term(self, tid: int) -> Term:
        return self._terms[tid]

    @property
    def terms(self) -> list[Term]:
        return list(self._terms)

    def index_sizes(self) -> tuple[int, int, int]:
        spo = sum(len(os) for ps in self._spo.values() for os in ps.values())
        pos = sum(len(ss) for os in self._pos.values() for ss in os.values())
        osp = sum(len(ps) for ss in self._osp.values() for ps in ss.values())
        return spo, pos, osp

    def match_ids(self, s: Optional[int], p: Optional[int], o: Optional[int]
                  ) -> list[tuple[int, int, int]]:
        """All id-triples matching the bound slots, sorted by (s, p, o) ids."""
        out = []
        if s is not None and s >= len(self._terms):
            return out
        if p is not None and p >= len(self._terms):
            return out
        if o is not None and o >= len(self._terms):
            return out
        if s is not None:
            ps = self._spo.get(s)
            if not ps:
                return out
            if p is not None:
                os_ = ps.get(p)
                if not os_:
                    return out
                if o is not None:
                    if o in os_:
                        out.append((s, p, o))
                else:
                    out.extend((s, p, oo) for oo in os_)
            else:
                for pp, os_ in ps.items():
                    if o is not None:
                        if o in os_:
                            out.append((s, pp, o))
                    else:
                        out.extend((s, pp, oo) for oo in os_)
        elif p is not None:
            os_map = self._pos.get(p)
            if not os_map:
                return out
            if o is not None:
                out.extend((ss, p, o) for ss in os_map.get(o, ()))
            else:
                for oo, ss_set in os_map.items():
                    out.extend((ss, p, oo) for ss in ss_set)
        elif o is not None:
            for ss, pp_set in self._osp.get(o, {}).items():
                out.extend((ss, pp, o) for pp in pp_set)
        else:
            out.extend(self._triples)
        out.sort()
        return out

    def match(self, s: Optional[Term] = None, p: Optional[Term] = None,
              o: Optional[Term] = None) -> Iterator[Triple]:
        sid = pid = oid = None
        if s is not None:
            sid = self._ids.get(s)
            if sid is None:
                return iter(())
        if p is not None:
            pid = self._ids.get(p)
            if pid is None:
                return iter(())
        if o is not None:
            oid = self._ids.get(o)
            if oid is None:
                return iter(())
        rows = self.match_ids(sid, pid, oid)
        return (Triple(self._terms[a], self._terms[b], self._terms[c]) for a, b, c in rows)

    def count(self, s: Optional[int] = None, p: Optional[int] = None,
              o: Optional[int] = None) -> int:
        """Exact cardinality of a bound/unbound slot combination (for join planning)."""
        if s is None and p is None and o is None:
            return len(self._triples)
        return len(self.match_ids(s, p, o))

    def degree(self, node: Term, direction: str = BIDI) -> int:
        nid = self._ids.get(node)
        if nid is None:
            return 0
        out_deg = sum(len(os) for os in self._spo.get(nid, {}).values())
        in_deg = sum(len(ps) for ps in self._osp.get(nid, {}).values())
        if direction == OUT:
            return out_deg
        if direction == IN:
            return in_deg
        if direction == BIDI:
            return out_deg + in_deg
        raise ValueError("unknown direction: %r" % direction)

    def triples(self) -> Iterator[Triple]:
        for s, p, o in sorted(self._triples):
            yield Triple(self._terms[s], self._terms[p], self._terms[o])

    def serialize(self) -> str:
        return "".join(t.n3() + "\n" for t in self.triples())

    def edges(self) -> set[tuple[int, int]]:
        """Distinct (subject-id, object-id) pairs, predicates collapsed."""
        return {(s, o) for s, _, o in self._triples}


# ---------------------------------------------------------------------------
# Parsing: N-Triples plus a pragmatic Turtle subset
# (@prefix / PREFIX, `a`, `;` and `,` lists).

_RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

_TOKEN_RE = re.compile(r"""
      (?P<ws>\s+)
    | (?P<comment>\#[^\n]*)
    | (?P<iriref><[^<>"{}|^`\\\x00-\x20]*>)
    | (?P<literal>"(?:[^"\\\n]|\\.)*")
    | (?P<blank>_:[A-Za-z0-9][A-Za-z0-9_.\-]*)
    | (?P<langtag>@[A-Za-z][A-Za-z0-9\-]*)
    | (?P<dtsep>\^\^)
    | (?P<punct>[.;,])
    | (?P<pname>(?:[A-Za-z_][\w\-.]*)?:[\w\-.:%]*)
    | (?P<word>[A-Za-z_][\w\-]*)
""", re.VERBOSE)

_UNESCAPES = {
    "t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f",
    '"': '"', "'": "'", "\\": "\\",
}


def _unescape(raw: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if i + 1 >= len(raw):
            raise RDFSyntaxError("dangling escape in literal", line, col)
        e = raw[i + 1]
        if e in _UNESCAPES:
            out.append(_UNESCAPES[e])
            i += 2
        elif e == "u":
            out.append(chr(int(raw[i + 2:i + 6], 16)))
            i += 6
        elif e == "U":
            out.append(chr(int(raw[i + 2:i + 10], 16)))
            i += 10
        else:
            raise RDFSyntaxError("unknown escape \\%s in literal" % e, line, col)
    return "".join(out)


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.line_start = 0

    def where(self) -> tuple[int, int]:
        return self.line, self.pos - self.line_start + 1

    def next(self) -> Optional[tuple[str, str, int, int]]:
        while self.pos < len(self.text):
            m = _TOKEN_RE.match(self.text, self.pos)
            if m is None:
                line, col = self.where()
                raise RDFSyntaxError(
                    "unexpected character %r" % self.text[self.pos], line, col)
            kind = m.lastgroup
            value = m.group()
            line, col = self.where()
            self.pos = m.end()
            nl = value.count("\n")
            if nl:
                self.line += nl
                self.line_start = m.start() + value.rfind("\n") + 1
            if kind in ("ws", "comment"):
                continue
            return kind, value, line, col
        if '"' in self.text[self.pos:]:
            line, col = self.where()
            raise RDFSyntaxError("unterminated literal", line, col)
        return None


class _Parser:
    def __init__(self, text: str):
        self.tok = _Tokenizer(text)
        self.prefixes: dict[str, str] = {}
        self.pushed: Optional[tuple] = None

    def _next(self, required: Optional[str] = None):
        t = self.pushed
        if t is not None:
            self.pushed = None
        else:
            t = self.tok.next()
        if t is None and required:
            line, col = self.tok.where()
            raise RDFSyntaxError("unexpected end of input, expected %s" % required,
                                 line, col)
        return t

    def _push(self, t) -> None:
        self.pushed = t

    def _expand_pname(self, value: str, line: int, col: int) -> Term:
        pfx, _, local = value.partition(":")
        if pfx not in self.prefixes:
            raise RDFSyntaxError("undeclared prefix %r" % pfx, line, col)
        return iri(self.prefixes[pfx] + local)

    def _term(self, tok, *, as_predicate: bool = False, as_subject: bool = False) -> Term:
        kind, value, line, col = tok
        if kind == "iriref":
            value = value[1:-1]
            if not _ABS_IRI_RE.match(value):
                raise RDFSyntaxError("invalid IRI <%s>" % value, line, col)
            return iri(value)
        if kind == "pname":
            return self._expand_pname(value, line, col)
        if kind == "blank":
            if as_predicate:
                raise RDFSyntaxError("blank node not allowed as predicate", line, col)
            return bnode(value[2:])
        if kind == "word" and value == "a" and as_predicate:
            return iri(_RDF_TYPE)
        if kind == "literal":
            if as_predicate or as_subject:
                raise RDFSyntaxError("literal not allowed in this position", line, col)
            raw = _unescape(value[1:-1], line, col)
            nxt = self._next()
            if nxt is not None and nxt[0] == "langtag":
                return literal(raw, lang=nxt[1][1:])
            if nxt is not None and nxt[0] == "dtsep":
                dtok = self._next("datatype IRI")
                if dtok[0] == "iriref":
                    dt = dtok[1][1:-1]
                elif dtok[0] == "pname":
                    dt = self._expand_pname(dtok[1], dtok[2], dtok[3]).value
                else:
                    raise RDFSyntaxError("expected datatype IRI", dtok[2], dtok[3])
                if not _ABS_IRI_RE.match(dt):
                    raise RDFSyntaxError("invalid datatype IRI <%s>" % dt, line, col)
                return literal(raw, datatype=dt)
            if nxt is not None:
                self._push(nxt)
            return literal(raw)
        raise RDFSyntaxError("unexpected token %r" % value, line, col)

    def _directive(self, tok) -> bool:
        kind, value, line, col = tok
        word = value.lstrip("@").lower()
        if kind in ("langtag", "word") and word == "prefix":
            ptok = self._next("prefix name")
            if ptok[0] != "pname" or not ptok[1].endswith(":"):
                raise RDFSyntaxError("expected prefix declaration", ptok[2], ptok[3])
            itok = self._next("prefix IRI")
            if itok[0] != "iriref":
                raise RDFSyntaxError("expected IRI in prefix declaration", itok[2], itok[3])
            ns = itok[1][1:-1]
            if not _ABS_IRI_RE.match(ns):
                raise RDFSyntaxError("invalid IRI <%s>" % ns, itok[2], itok[3])
            self.prefixes[ptok[1][:-1]] = ns
            dot = self._next()
            if value.startswith("@"):
                if dot is None or dot[1] != ".":
                    raise RDFSyntaxError("@prefix directive must end with '.'", line, col)
            elif dot is not None and dot[1] != ".":
                self._push(dot)
            return True
        return False

    def parse(self) -> Iterator[Triple]:
        while True:
            tok = self._next()
            if tok is None:
                return
            if tok[0] in ("langtag", "word") and tok[1].lstrip("@").lower() == "prefix":
                self._directive(tok)
                continue
            subject = self._term(tok, as_subject=True)
            while True:  # predicate-object list
                ptok = self._next("predicate")
                predicate = self._term(ptok, as_predicate=True)
                while True:  # object list
                    otok = self._next("object")
                    obj = self._term(otok)
                    yield Triple(subject, predicate, obj)
                    sep = self._next("'.'")
                    if sep[1] == ",":
                        continue
                    break
                if sep[1] == ";":
                    nxt = self._next("'.' or predicate")
                    if nxt[1] == ".":
                        sep = nxt
                        break
                    self._push(nxt)
                    continue
                break
            if sep[1] != ".":
                raise RDFSyntaxError("expected '.' at end of statement", sep[2], sep[3])


def parse_triples(data) -> Iterator[Triple]:
    """Parse N-Triples / Turtle-subset text, bytes, or a binary stream."""
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, bytes):
        if data[:2] == b"\x1f\x8b":
            data = gzip.decompress(data)
        data = data.decode("utf-8")
    return _Parser(data).parse()


def load_ntriples(data) -> TripleStore:
    """Build a store from N-Triples / Turtle-subset input; duplicates collapse."""
    return TripleStore(parse_triples(data))


def load_file(path: str) -> TripleStore:
    with open(path, "rb") as fh:
        return load_ntriples(fh)
