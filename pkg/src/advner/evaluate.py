"""Entity-level evaluation.

Two views of the same predictions:

* seqeval-style strict micro P/R/F1 over exact (span, type) matches;
* SemEval-2013 / nervaluate-style fine-grained counts (correct, incorrect,
  partial, missed, spurious) under the strict, exact, partial and type
  schemas, overall and per entity type.

Gold and predicted spans are paired one-to-one, greedily in gold-start order:
an exact-boundary candidate wins, then the largest token overlap, then the
smaller predicted start.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, fields

from . import _kernels
from .corpus import OUTSIDE, Corpus, EntitySpan
from .errors import AlignmentError, DataError

REPORT_VERSION = 1
PARTIAL_CREDIT = 0.5


class EvalSchema(str, enum.Enum):
    STRICT = "strict"
    EXACT = "exact"
    PARTIAL = "partial"
    TYPE = "type"


SCHEMAS = tuple(EvalSchema)
CATEGORIES = ("correct", "incorrect", "partial", "missed", "spurious")


@dataclass(frozen=True)
class SchemaCounts:
    correct: int = 0
    incorrect: int = 0
    partial: int = 0
    missed: int = 0
    spurious: int = 0

    @property
    def possible(self):
        return self.correct + self.incorrect + self.partial + self.missed

    @property
    def actual(self):
        return self.correct + self.incorrect + self.partial + self.spurious

    def __add__(self, other):
        return SchemaCounts(*(getattr(self, c) + getattr(other, c) for c in CATEGORIES))

    def as_tuple(self):
        return tuple(getattr(self, c) for c in CATEGORIES)


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision, recall):
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return cls(precision, recall, f1)

    def as_dict(self):
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def prf_from_counts(counts: SchemaCounts) -> PRF:
    credit = counts.correct + PARTIAL_CREDIT * counts.partial
    precision = credit / counts.actual if counts.actual else 0.0
    recall = credit / counts.possible if counts.possible else 0.0
    return PRF.from_pr(precision, recall)


# -- alignment and encoding ----------------------------------------------------

def check_alignment(gold: Corpus, pred: Corpus) -> None:
    if len(gold) != len(pred):
        first = gold.sentences[len(pred)] if len(gold) > len(pred) else pred.sentences[len(gold)]
        raise AlignmentError(f"gold has {len(gold)} sentences, pred has {len(pred)}", first.sentence_id)
    for g, p in zip(gold.sentences, pred.sentences):
        if g.sentence_id != p.sentence_id:
            raise AlignmentError(f"sentence id mismatch: {g.sentence_id} vs {p.sentence_id}", g.sentence_id)
        if g.tokens != p.tokens:
            raise AlignmentError(f"token mismatch in {g.sentence_id}", g.sentence_id)


def _encode(sentence_tags, types):
    index = {t: i for i, t in enumerate(types)}
    code = {OUTSIDE: 0}
    for t, i in index.items():
        code["B-" + t] = 2 * i + 1
        code["I-" + t] = 2 * i + 2
    codes = []
    offsets = [0]
    for tags in sentence_tags:
        codes.extend(code[t] for t in tags)
        offsets.append(len(codes))
    return codes, offsets


def _spans_flat(sentence_spans, types):
    index = {t: i for i, t in enumerate(types)}
    starts, ends, tys, off = [], [], [], [0]
    for spans in sentence_spans:
        for sp in spans:
            starts.append(sp[0])
            ends.append(sp[1])
            tys.append(index[sp[2]])
        off.append(len(starts))
    return starts, ends, tys, off


def _unflatten(counts, types):
    per_type = {}
    step = _kernels.N_CATEGORIES
    for ti, t in enumerate(types):
        base = ti * _kernels.N_SCHEMAS * step
        per_type[t] = {
            schema: SchemaCounts(*counts[base + si * step: base + (si + 1) * step])
            for si, schema in enumerate(SCHEMAS)
        }
    return per_type


def _sum_types(per_type):
    overall = {schema: SchemaCounts() for schema in SCHEMAS}
    for by_schema in per_type.values():
        for schema, c in by_schema.items():
            overall[schema] = overall[schema] + c
    return overall


def classify_spans(gold_spans, pred_spans, impl=None, per_type=False):
    """Fine-grained counts for the spans of one sentence.

    Spans are ``EntitySpan`` or ``(start, end, type)`` tuples, sorted and
    non-overlapping on each side.
    """
    types = sorted({sp[2] for sp in gold_spans} | {sp[2] for sp in pred_spans})
    try:
        counts = _kernels.classify_flat(_spans_flat([gold_spans], types), _spans_flat([pred_spans], types),
                                        len(types), impl=impl)
    except ValueError as e:
        raise DataError(f"spans overlap within one side: {e.args[-1]}") from None
    by_type = _unflatten(counts, types)
    return by_type if per_type else _sum_types(by_type)


# -- seqeval-style micro F1 ----------------------------------------------------

def micro_f1(gold: Corpus, pred: Corpus) -> PRF:
    check_alignment(gold, pred)
    true_pos = n_gold = n_pred = 0
    for g, p in zip(gold.sentences, pred.sentences):
        gs = {(sp.start, sp.end, sp.entity_type) for sp in g.spans()}
        ps = {(sp.start, sp.end, sp.entity_type) for sp in p.spans()}
        true_pos += len(gs & ps)
        n_gold += len(gs)
        n_pred += len(ps)
    precision = true_pos / n_pred if n_pred else 0.0
    recall = true_pos / n_gold if n_gold else 0.0
    return PRF.from_pr(precision, recall)


# -- reports -------------------------------------------------------------------

@dataclass
class EvalReport:
    overall: dict
    per_type: dict
    strict_micro_f1: PRF
    gold_id: str = "gold"
    pred_id: str = "pred"
    tagset: tuple = ()
    meta: dict = field(default_factory=dict)

    def counts(self, schema, entity_type=None) -> SchemaCounts:
        schema = EvalSchema(schema)
        if entity_type is None:
            return self.overall[schema]
        return self.per_type.get(entity_type, {}).get(schema, SchemaCounts())

    def prf(self, schema, entity_type=None) -> PRF:
        return prf_from_counts(self.counts(schema, entity_type))

    def to_dict(self):
        def block(c):
            d = {name: getattr(c, name) for name in CATEGORIES}
            d["possible"] = c.possible
            d["actual"] = c.actual
            d.update(prf_from_counts(c).as_dict())
            return d

        out = {
            "report_version": REPORT_VERSION,
            "gold": self.gold_id,
            "pred": self.pred_id,
            "tagset": list(self.tagset),
            "strict_micro_f1": self.strict_micro_f1.as_dict(),
            "overall": {s.value: block(self.overall[s]) for s in SCHEMAS},
            "per_type": {t: {s.value: block(by[s]) for s in SCHEMAS} for t, by in self.per_type.items()},
        }
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_dict(cls, d):
        if d.get("report_version") != REPORT_VERSION:
            raise DataError(f"unsupported report_version {d.get('report_version')!r}")

        def counts(b):
            return SchemaCounts(*(int(b[c]) for c in CATEGORIES))

        try:
            return cls(
                overall={EvalSchema(s): counts(b) for s, b in d["overall"].items()},
                per_type={t: {EvalSchema(s): counts(b) for s, b in by.items()} for t, by in d["per_type"].items()},
                strict_micro_f1=PRF(**d["strict_micro_f1"]),
                gold_id=d.get("gold", "gold"),
                pred_id=d.get("pred", "pred"),
                tagset=tuple(d.get("tagset", ())),
                meta=d.get("meta", {}),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"malformed report: {e}") from None

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def render_text(self, schemas=SCHEMAS, per_type=True, overall=True) -> str:
        schemas = [EvalSchema(s) for s in schemas]
        header = ["schema", "scope", *CATEGORIES, "precision", "recall", "f1"]
        rows = []
        scopes = ([None] if overall else []) + (list(self.per_type) if per_type else [])
        for schema in schemas:
            for scope in scopes:
                c = self.counts(schema, scope)
                m = prf_from_counts(c)
                rows.append([schema.value, scope or "overall", *map(str, c.as_tuple()),
                             f"{m.precision:.4f}", f"{m.recall:.4f}", f"{m.f1:.4f}"])
        m = self.strict_micro_f1
        footer = f"micro-F1 (seqeval strict): P={m.precision:.4f} R={m.recall:.4f} F1={m.f1:.4f}"
        return _align([header] + rows) + "\n" + footer + "\n"


def _align(rows, n_left=2):
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(cell.ljust(w) if i < n_left else cell.rjust(w)
                               for i, (cell, w) in enumerate(zip(r, widths))).rstrip() for r in rows)


def evaluate(gold: Corpus, pred: Corpus, impl=None) -> EvalReport:
    check_alignment(gold, pred)
    types = sorted(gold.tagset | pred.tagset)
    g_codes, g_off = _encode((s.tags for s in gold.sentences), types)
    p_codes, p_off = _encode((s.tags for s in pred.sentences), types)
    try:
        g_spans = _kernels.extract_flat(g_codes, g_off, impl=impl)
        p_spans = _kernels.extract_flat(p_codes, p_off, impl=impl)
    except ValueError as e:
        sid = gold.sentences[e.args[0]].sentence_id
        raise AlignmentError(f"invalid IOB2 in {sid} at token {e.args[1]}", sid) from None
    per_type = _unflatten(_kernels.classify_flat(g_spans, p_spans, len(types), impl=impl), types)
    overall = _sum_types(per_type)
    # An exact (span, type) match is always paired with its gold span, so the
    # strict-schema counts are the seqeval counts: TP = correct, and the
    # actual/possible totals are the predicted/gold span counts.
    return EvalReport(
        overall=overall,
        per_type=per_type,
        strict_micro_f1=prf_from_counts(overall[EvalSchema.STRICT]),
        gold_id=gold.name,
        pred_id=pred.name,
        tagset=tuple(sorted(gold.tagset)),
    )


def render_grid(reports, labels=None, schemas=(EvalSchema.STRICT, EvalSchema.EXACT), digits=2) -> str:
    """F1 grid with one row per scope and one column per (report, schema)."""
    labels = labels or [r.pred_id for r in reports]
    schemas = [EvalSchema(s) for s in schemas]
    types = []
    for r in reports:
        types.extend(t for t in r.per_type if t not in types)
    header = [""] + [f"{lab}:{s.value}" for lab in labels for s in schemas]
    rows = [header]
    for scope in [None] + types:
        rows.append([scope or "Overall"] + [f"{r.prf(s, scope).f1:.{digits}f}" for r in reports for s in schemas])
    return _align(rows, n_left=1) + "\n"


# -- comparison ----------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    schema: str
    scope: str
    f1_a: float
    f1_b: float
    delta_f1: float
    delta_correct: int
    delta_incorrect: int
    delta_partial: int
    delta_missed: int
    delta_spurious: int


@dataclass
class Comparison:
    label_a: str
    label_b: str
    rows: list

    def row(self, schema, scope="overall") -> ComparisonRow:
        for r in self.rows:
            if r.schema == EvalSchema(schema).value and r.scope == scope:
                return r
        raise KeyError((schema, scope))

    def to_dict(self):
        return {"a": self.label_a, "b": self.label_b,
                "rows": [{f.name: getattr(r, f.name) for f in fields(r)} for r in self.rows]}

    def to_tsv(self, digits=4):
        names = [f.name for f in fields(ComparisonRow)]
        lines = ["\t".join(names)]
        for r in self.rows:
            vals = [getattr(r, n) for n in names]
            lines.append("\t".join(f"{v:.{digits}f}" if isinstance(v, float) else str(v) for v in vals))
        return "\n".join(lines) + "\n"


def compare_reports(a: EvalReport, b: EvalReport) -> Comparison:
    """F1 and error-category deltas, b minus a, per schema and scope."""
    if set(a.tagset) != set(b.tagset):
        raise DataError(f"tagset mismatch: {sorted(a.tagset)} vs {sorted(b.tagset)}")
    scopes = [None] + sorted(set(a.per_type) | set(b.per_type))
    rows = []
    for schema in SCHEMAS:
        for scope in scopes:
            ca, cb = a.counts(schema, scope), b.counts(schema, scope)
            fa, fb = prf_from_counts(ca).f1, prf_from_counts(cb).f1
            rows.append(ComparisonRow(schema.value, scope or "overall", fa, fb, fb - fa,
                                      *(y - x for x, y in zip(ca.as_tuple(), cb.as_tuple()))))
    return Comparison(a.pred_id, b.pred_id, rows)
