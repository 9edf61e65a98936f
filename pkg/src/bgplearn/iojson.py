"""JSON (de)serialization for patterns, run logs, and ground-truth TSV parsing."""

from __future__ import annotations

import json
import re
from typing import Optional

from .fitness import CoverageLedger, FitnessTuple, GroundTruthPair, PatternEvaluation
from .patterns import GraphPattern, TriplePattern, Variable, is_var
from .rdf import BNODE, IRI, LITERAL, Term, bnode, iri, literal

_ABS_IRI_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


class GroundTruthError(ValueError):
    """GT file rejected; carries offending row numbers."""

    def __init__(self, message: str, rows: Optional[list[int]] = None):
        super().__init__(message)
        self.rows = rows or []


def node_to_json(node) -> dict:
    if is_var(node):
        return {"type": "var", "name": node.name}
    if node.kind == IRI:
        return {"type": "iri", "value": node.value}
    if node.kind == BNODE:
        return {"type": "bnode", "value": node.value}
    out = {"type": "literal", "value": node.value}
    if node.datatype is not None:
        out["datatype"] = node.datatype
    if node.lang is not None:
        out["lang"] = node.lang
    return out


def node_from_json(obj: dict):
    typ = obj["type"]
    if typ == "var":
        return Variable(obj["name"])
    if typ == "iri":
        return iri(obj["value"])
    if typ == "bnode":
        return bnode(obj["value"])
    if typ == "literal":
        return literal(obj["value"], obj.get("datatype"), obj.get("lang"))
    raise ValueError("unknown node type: %r" % typ)


def pattern_to_json(gp: GraphPattern) -> list:
    return [[node_to_json(tp.s), node_to_json(tp.p), node_to_json(tp.o)]
            for tp in gp.sorted_triples()]


def pattern_from_json(obj: list) -> GraphPattern:
    return GraphPattern(TriplePattern(node_from_json(s), node_from_json(p),
                                      node_from_json(o))
                        for s, p, o in obj)


def fitness_to_json(ft: FitnessTuple) -> dict:
    return {"remains": ft.remains, "score": ft.score, "gain": ft.gain, "f1": ft.f1,
            "avg_result_len": ft.avg_result_len, "gt_matches": ft.gt_matches,
            "pattern_length": ft.pattern_length, "pattern_vars": ft.pattern_vars,
            "timeout_penalty": ft.timeout_penalty, "query_time_s": ft.query_time_s}


def fitness_from_json(obj: dict) -> FitnessTuple:
    return FitnessTuple(**obj)


def learned_to_json(lp) -> dict:
    from .patterns import SOURCE_VAR, TARGET_VAR, to_select_sparql
    return {
        "pattern": pattern_to_json(lp.pattern),
        "sparql": to_select_sparql(lp.pattern, [SOURCE_VAR, TARGET_VAR]),
        "pattern_text": lp.pattern.text(),
        "canonical_key": lp.canonical_key,
        "fitness": fitness_to_json(lp.fitness),
        "pv": lp.evaluation.pv,
        "covered": lp.evaluation.covered,
        "run_index": lp.run_index,
    }


def learned_from_json(obj: dict):
    from .evolution import LearnedPattern
    return LearnedPattern(
        pattern=pattern_from_json(obj["pattern"]),
        fitness=fitness_from_json(obj["fitness"]),
        evaluation=PatternEvaluation(pv=list(obj["pv"]),
                                     covered=list(obj["covered"])),
        canonical_key=obj["canonical_key"],
        run_index=obj["run_index"],
    )


def run_record_to_json(rec, echo_config: Optional[dict] = None) -> dict:
    doc = {
        "run_index": rec.run_index,
        "remains_before": rec.remains_before,
        "remains_after": rec.remains_after,
        "generations": rec.generations,
        "accepted": [learned_to_json(lp) for lp in rec.accepted],
    }
    if echo_config is not None:
        doc["config"] = echo_config
    return doc


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def ledger_to_json(ledger: CoverageLedger) -> dict:
    return {"values": ledger.values, "remains": ledger.remains()}


def ledger_from_json(obj: dict) -> CoverageLedger:
    return CoverageLedger(obj["values"])


# ---------------------------------------------------------------------------
# Ground-truth TSV: `source<TAB>target`, `#` comments, optional prefix header.


def _parse_gt_term(token: str, prefixes: dict[str, str], row: int) -> Term:
    token = token.strip()
    if token.startswith("<") and token.endswith(">"):
        value = token[1:-1]
    elif ":" in token:
        pfx, _, local = token.partition(":")
        if pfx in prefixes:
            value = prefixes[pfx] + local
        elif _ABS_IRI_RE.match(token):
            value = token  # bare absolute IRI (e.g. http://...)
        else:
            raise GroundTruthError("undeclared prefix %r" % pfx, [row])
    else:
        raise GroundTruthError("not an IRI: %r" % token, [row])
    if not _ABS_IRI_RE.match(value):
        raise GroundTruthError("not an absolute IRI: %r" % value, [row])
    return iri(value)


_PREFIX_LINE = re.compile(
    r"^\s*(?:@prefix|PREFIX|prefix)\s+([A-Za-z_][\w\-]*)?:\s*<([^>]*)>\s*\.?\s*$")


def parse_ground_truth(text: str) -> list[GroundTruthPair]:
    prefixes: dict[str, str] = {}
    pairs: list[GroundTruthPair] = []
    seen: dict[GroundTruthPair, int] = {}
    dup_rows: list[int] = []
    for row, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _PREFIX_LINE.match(line)
        if m:
            prefixes[m.group(1) or ""] = m.group(2)
            continue
        fields = [f for f in re.split(r"\t+", stripped) if f]
        if len(fields) != 2:
            raise GroundTruthError(
                "expected two tab-separated IRIs at row %d" % row, [row])
        pair = GroundTruthPair(_parse_gt_term(fields[0], prefixes, row),
                               _parse_gt_term(fields[1], prefixes, row))
        if pair in seen:
            dup_rows.append(row)
        else:
            seen[pair] = row
            pairs.append(pair)
    if dup_rows:
        raise GroundTruthError("duplicate ground-truth rows: %s"
                               % ", ".join(map(str, dup_rows)), dup_rows)
    if not pairs:
        raise GroundTruthError("ground-truth file contains no pairs")
    return pairs
