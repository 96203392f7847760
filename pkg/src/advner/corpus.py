"""BIO-tagged corpora: parsing, serialization, span extraction and splitting.

Tags are kept as plain strings (``"O"``, ``"B-PER"``, ``"I-CREATIVE-WORK"``);
IOB2 is the only internal scheme.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import CorpusFormatError, DataError, TagSequenceError

OUTSIDE = "O"
DOCSTART = "-DOCSTART-"


class TagLabel(NamedTuple):
    kind: str  # "O", "B" or "I"
    entity_type: str | None

    @classmethod
    def parse(cls, label: str) -> "TagLabel":
        if label == OUTSIDE:
            return cls(OUTSIDE, None)
        kind, sep, etype = label.partition("-")
        if not sep or kind not in ("B", "I") or not etype:
            raise ValueError(f"not a BIO label: {label!r}")
        return cls(kind, etype)

    def __str__(self):
        return OUTSIDE if self.kind == OUTSIDE else f"{self.kind}-{self.entity_type}"


def check_token(tok: str) -> str:
    if not tok or any(c in tok for c in " \t\n\r"):
        raise DataError(f"invalid token {tok!r}: must be non-empty with no whitespace")
    return tok


class EntitySpan(NamedTuple):
    start: int
    end: int  # exclusive
    entity_type: str
    surface: tuple[str, ...]

    def __len__(self):
        return self.end - self.start


@dataclass(frozen=True)
class AnnotatedSentence:
    tokens: tuple[str, ...]
    tags: tuple[str, ...]
    sentence_id: str
    # per-token values of the non-token, non-tag columns (POS, chunk, ...)
    extra: tuple[tuple[str, ...], ...] | None = None

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise DataError(f"{self.sentence_id}: {len(self.tokens)} tokens but {len(self.tags)} tags")
        if not self.tokens:
            raise DataError(f"{self.sentence_id}: empty sentence")
        if self.extra is not None and len(self.extra) != len(self.tokens):
            raise DataError(f"{self.sentence_id}: extra columns misaligned with tokens")
        bad = validate_iob2(self.tags)
        if bad is not None:
            raise TagSequenceError(f"{self.sentence_id}: invalid IOB2 transition at token {bad} ({self.tags[bad]})")

    def __len__(self):
        return len(self.tokens)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def spans(self) -> list[EntitySpan]:
        return extract_spans(self)


@dataclass(frozen=True)
class ColumnLayout:
    separator: str = " "
    tag_column: int = -1  # index into the full column list; negative counts from the end
    n_columns: int = 2


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[AnnotatedSentence, ...]
    tagset: frozenset[str]
    name: str = "corpus"
    layout: ColumnLayout = field(default_factory=ColumnLayout)
    docstarts: int = 0

    def __post_init__(self):
        for s in self.sentences:
            for t in s.tags:
                if t != OUTSIDE and t[2:] not in self.tagset:
                    raise DataError(f"{s.sentence_id}: entity type {t[2:]!r} not in tagset")

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    @classmethod
    def from_sentences(cls, sentences: Iterable[AnnotatedSentence], name="corpus", tagset=None, **kw) -> "Corpus":
        sentences = tuple(sentences)
        if tagset is None:
            tagset = {t[2:] for s in sentences for t in s.tags if t != OUTSIDE}
        return cls(sentences, frozenset(tagset), name, **kw)

    def with_sentences(self, sentences: Iterable[AnnotatedSentence], **kw) -> "Corpus":
        sentences = tuple(sentences)
        tagset = set(self.tagset) | {t[2:] for s in sentences for t in s.tags if t != OUTSIDE}
        return replace(self, sentences=sentences, tagset=frozenset(tagset), **kw)

    def by_id(self) -> dict[str, AnnotatedSentence]:
        return {s.sentence_id: s for s in self.sentences}


def validate_iob2(tags: Sequence[str]) -> int | None:
    """Index of the first tag that breaks IOB2, or None."""
    prev = OUTSIDE
    for i, t in enumerate(tags):
        if t != OUTSIDE:
            if t[:2] not in ("B-", "I-") or len(t) < 3:
                return i
            if t[0] == "I" and (prev == OUTSIDE or prev[2:] != t[2:]):
                return i
        prev = t
    return None


def coerce_iob2(tags: Sequence[str]) -> tuple[str, ...]:
    """Repair IOB1 / dangling I- tags: an I- that cannot continue a span becomes B-."""
    out = []
    prev = OUTSIDE
    for t in tags:
        if t.startswith("I-") and (prev == OUTSIDE or prev[2:] != t[2:]):
            t = "B-" + t[2:]
        out.append(t)
        prev = t
    return tuple(out)


def extract_spans(sentence: AnnotatedSentence) -> list[EntitySpan]:
    return spans_from_tags(sentence.tags, sentence.tokens)


def spans_from_tags(tags: Sequence[str], tokens: Sequence[str] | None = None) -> list[EntitySpan]:
    bad = validate_iob2(tags)
    if bad is not None:
        raise TagSequenceError(f"invalid IOB2 transition at token {bad} ({tags[bad]})")
    spans = []
    start = None
    for i, t in enumerate(tags):
        if start is not None and not t.startswith("I-"):
            spans.append((start, i, tags[start][2:]))
            start = None
        if t.startswith("B-"):
            start = i
    if start is not None:
        spans.append((start, len(tags), tags[start][2:]))
    toks = tokens if tokens is not None else ("",) * len(tags)
    return [EntitySpan(s, e, ty, tuple(toks[s:e])) for s, e, ty in spans]


def tags_from_spans(length: int, spans: Iterable[tuple]) -> tuple[str, ...]:
    tags = [OUTSIDE] * length
    for sp in spans:
        start, end, etype = sp[0], sp[1], sp[2]
        tags[start] = "B-" + etype
        for i in range(start + 1, end):
            tags[i] = "I-" + etype
    return tuple(tags)


def _resize_extra(extra, span, n_new):
    old = extra[span.start:span.end]
    if n_new <= len(old):
        return old[:n_new]
    return old + (old[-1],) * (n_new - len(old))


def replace_span(sentence: AnnotatedSentence, span: EntitySpan, new_tokens: Sequence[str]) -> AnnotatedSentence:
    """Swap the tokens of ``span`` for ``new_tokens``, keeping its entity type.

    Extra columns of the replaced tokens are truncated, or padded by repeating
    the last one, to fit the new length.
    """
    n = len(sentence)
    if not 0 <= span.start < span.end <= n:
        raise DataError(f"{sentence.sentence_id}: span {span.start}:{span.end} out of bounds")
    expected = tags_from_spans(span.end - span.start, [(0, span.end - span.start, span.entity_type)])
    following = sentence.tags[span.end] if span.end < n else OUTSIDE
    if sentence.tags[span.start:span.end] != expected or following == "I-" + span.entity_type:
        raise DataError(f"{sentence.sentence_id}: span {span.start}:{span.end} does not match the sentence tags")
    new_tokens = tuple(check_token(t) for t in new_tokens)
    if not new_tokens:
        raise DataError("replacement must have at least one token")
    new_tags = tags_from_spans(len(new_tokens), [(0, len(new_tokens), span.entity_type)])
    extra = sentence.extra
    if extra is not None:
        extra = extra[:span.start] + _resize_extra(extra, span, len(new_tokens)) + extra[span.end:]
    return AnnotatedSentence(
        tokens=sentence.tokens[:span.start] + new_tokens + sentence.tokens[span.end:],
        tags=sentence.tags[:span.start] + new_tags + sentence.tags[span.end:],
        sentence_id=sentence.sentence_id,
        extra=extra,
    )


# -- file format ---------------------------------------------------------------

def parse_conll(data: bytes | str, column: int = -1, tagset=None, name: str = "corpus",
                coerce: bool = False) -> Corpus:
    """Parse a CoNLL-style file: one token per line, blank line between sentences.

    ``column`` picks the tag column (default: last). ``-DOCSTART-`` lines are
    dropped and counted in ``Corpus.docstarts``. With ``coerce`` set, IOB1 and
    dangling ``I-`` tags are rewritten to IOB2 instead of rejected.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise CorpusFormatError(f"input is not UTF-8: {e}") from None
    if data.startswith("﻿"):
        data = data[1:]
    known = frozenset(tagset) if tagset is not None else None

    sentences = []
    seen_types = set()
    docstarts = 0
    n_columns = None
    separator = None
    block = []  # (lineno, columns)

    def flush():
        if not block:
            return
        tok_col = 0
        tag_col = column if column >= 0 else n_columns + column
        if tag_col == tok_col or not 0 <= tag_col < n_columns:
            raise CorpusFormatError(f"tag column {column} unusable with {n_columns} columns", block[0][0])
        tokens = tuple(cols[tok_col] for _, cols in block)
        tags = tuple(cols[tag_col] for _, cols in block)
        for lineno, cols in block:
            try:
                lab = TagLabel.parse(cols[tag_col])
            except ValueError as e:
                raise CorpusFormatError(str(e), lineno) from None
            if lab.entity_type is not None:
                if known is not None and lab.entity_type not in known:
                    raise CorpusFormatError(f"unknown entity type {lab.entity_type!r}", lineno)
                seen_types.add(lab.entity_type)
        if coerce:
            tags = coerce_iob2(tags)
        else:
            bad = validate_iob2(tags)
            if bad is not None:
                raise TagSequenceError(f"invalid IOB2 transition {tags[bad]!r} (use coercion to repair)",
                                       block[bad][0])
        extra = None
        if n_columns > 2:
            extra = tuple(tuple(c for j, c in enumerate(cols) if j not in (tok_col, tag_col)) for _, cols in block)
        sentences.append(AnnotatedSentence(tokens, tags, f"{name}:{len(sentences)}", extra))
        block.clear()

    for lineno, raw in enumerate(data.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush()
            continue
        cols = line.split()
        if cols[0] == DOCSTART:
            flush()
            docstarts += 1
            continue
        if n_columns is None:
            n_columns = len(cols)
            separator = "\t" if "\t" in line else " "
            if n_columns < 2:
                raise CorpusFormatError(f"expected a token and a tag column, got {n_columns} column", lineno)
        elif len(cols) != n_columns:
            raise CorpusFormatError(f"expected {n_columns} columns, got {len(cols)}", lineno)
        block.append((lineno, cols))
    flush()

    layout = ColumnLayout(separator or " ", column, n_columns or 2)
    types = known if known is not None else frozenset(seen_types)
    return Corpus(tuple(sentences), types, name, layout, docstarts)


def serialize_conll(corpus: Corpus, layout: ColumnLayout | None = None) -> bytes:
    """Inverse of :func:`parse_conll`. Every sentence ends with one blank line.

    Extra columns are written only when every sentence carries the same number
    of them; otherwise the output has just token and tag columns.
    """
    layout = layout or corpus.layout
    widths = {len(s.extra[0]) if s.extra else 0 for s in corpus.sentences}
    width = widths.pop() if len(widths) == 1 else 0
    n_columns = width + 2
    tag_col = layout.tag_column if layout.tag_column >= 0 else n_columns + layout.tag_column
    if not 0 < tag_col < n_columns:
        tag_col = n_columns - 1
    sep = layout.separator
    lines = []
    for s in corpus.sentences:
        for i, (tok, tag) in enumerate(zip(s.tokens, s.tags)):
            cols = [tok] + (list(s.extra[i]) if width else [])
            cols.insert(tag_col, tag)
            lines.append(sep.join(cols))
        lines.append("")
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def read_corpus(path, column: int = -1, tagset=None, coerce: bool = False, name: str | None = None) -> Corpus:
    p = Path(path)
    return parse_conll(p.read_bytes(), column=column, tagset=tagset, name=name or p.stem, coerce=coerce)


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "wb") as f:
        f.write(serialize_conll(corpus))


# -- splitting -----------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    ratio: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise DataError(f"split ratio must be in (0, 1), got {self.ratio}")
        if not 0 <= self.seed < 2**64:
            raise DataError("seed must be a 64-bit unsigned integer")


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def split_corpus(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Seeded random sentence-level split; each part keeps the input order."""
    n = len(corpus)
    if n < 2:
        raise DataError(f"need at least 2 sentences to split, got {n}")
    k = round_half_up(spec.ratio * n)
    order = list(range(n))
    random.Random(spec.seed).shuffle(order)
    first = sorted(order[:k])
    second = sorted(order[k:])
    return (
        replace(corpus, sentences=tuple(corpus.sentences[i] for i in first)),
        replace(corpus, sentences=tuple(corpus.sentences[i] for i in second)),
    )


def concat_corpora(a: Corpus, b: Corpus) -> Corpus:
    """Sentences of ``a`` then ``b``, under ``a``'s name, with the tagset union.

    Ids are kept when they do not collide; otherwise every id is prefixed with
    its corpus name.
    """
    ids_a = {s.sentence_id for s in a.sentences}
    if any(s.sentence_id in ids_a for s in b.sentences):
        na, nb = (a.name, b.name) if a.name != b.name else (a.name + ".1", b.name + ".2")
        sa = [replace(s, sentence_id=f"{na}/{s.sentence_id}") for s in a.sentences]
        sb = [replace(s, sentence_id=f"{nb}/{s.sentence_id}") for s in b.sentences]
    else:
        sa, sb = list(a.sentences), list(b.sentences)
    widths = {len(s.extra[0]) if s.extra else 0 for s in sa + sb}
    layout = a.layout
    if len(widths) > 1:
        sa = [replace(s, extra=None) for s in sa]
        sb = [replace(s, extra=None) for s in sb]
        layout = ColumnLayout(a.layout.separator, -1, 2)
    return Corpus(tuple(sa + sb), a.tagset | b.tagset, a.name, layout, a.docstarts)
