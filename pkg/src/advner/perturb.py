"""Adversarial corpus variants.

Five generators, each a pure function of the corpus, the seed and the
responses of any external model:

``rs``     shuffle entity occurrences among all occurrences of the same type
``faker``  replace PER/LOC (configurable) entities with gazetteer surface forms
``mask``   replace up to ``max_masks`` Outside tokens per sentence with
           mask-filler suggestions
``para``   re-annotate externally paraphrased sentences, or discard them
``m+r``    ``mask`` followed by ``rs`` on the masked corpus
"""
from __future__ import annotations

import json
import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Protocol, Sequence

from .corpus import (OUTSIDE, AnnotatedSentence, ColumnLayout, Corpus, EntitySpan, check_token, replace_span,
                     tags_from_spans)
from .errors import DataError, GazetteerError, TransportError
from .rng import derive_seed, substream

log = logging.getLogger(__name__)

METHODS = ("rs", "faker", "mask", "para", "m+r")
BUNDLED_GAZETTEERS = ("english", "german", "hindi")

ENTITY_NOT_FOUND = "entity-not-found"
ENTITY_COUNT_MISMATCH = "entity-count-mismatch"
ENTITY_OVERLAP = "entity-overlap"
NO_PARAPHRASE = "no-paraphrase"
EMPTY_PARAPHRASE = "empty-paraphrase"


class MaskFiller(Protocol):
    def fill_mask(self, tokens: Sequence[str], position: int) -> list[str]: ...


class Paraphraser(Protocol):
    def paraphrase(self, sentence_id: str, text: str) -> list[str] | None: ...


# -- gazetteers ----------------------------------------------------------------

@dataclass(frozen=True)
class Gazetteer:
    entries: dict  # (entity_type, locale) -> tuple of token tuples
    locales: tuple

    def __post_init__(self):
        for key, forms in self.entries.items():
            if not forms or any(not f for f in forms):
                raise GazetteerError(f"empty gazetteer entry for {key}")

    @classmethod
    def from_json(cls, obj) -> "Gazetteer":
        """``{locale: {entity_type: ["surface form", ...]}}``"""
        if not isinstance(obj, dict):
            raise GazetteerError("gazetteer must be a JSON object keyed by locale")
        entries = {}
        for locale, by_type in obj.items():
            if not isinstance(by_type, dict):
                raise GazetteerError(f"locale {locale!r}: expected an object of entity types")
            for etype, forms in by_type.items():
                try:
                    toks = [tuple(check_token(t) for t in str(form).split()) for form in forms]
                except DataError as e:
                    raise GazetteerError(f"{locale}/{etype}: {e}") from None
                entries[(etype, locale)] = tuple(t for t in toks if t) or ()
        return cls(entries, tuple(obj))

    @classmethod
    def load(cls, source) -> "Gazetteer":
        """Load a gazetteer file, or one of the bundled ones by name."""
        if str(source) in BUNDLED_GAZETTEERS:
            text = resources.files("advner").joinpath("data", f"{source}.json").read_text(encoding="utf-8")
        else:
            try:
                text = Path(source).read_text(encoding="utf-8")
            except OSError as e:
                raise GazetteerError(f"cannot read gazetteer {source}: {e}") from None
        try:
            return cls.from_json(json.loads(text))
        except json.JSONDecodeError as e:
            raise GazetteerError(f"gazetteer {source} is not valid JSON: {e}") from None

    def forms(self, entity_type, locale):
        return self.entries[(entity_type, locale)]

    def contains(self, entity_type, surface) -> bool:
        surface = tuple(surface)
        return any(surface in forms for (t, _), forms in self.entries.items() if t == entity_type)


# -- config and records --------------------------------------------------------

@dataclass(frozen=True)
class PerturbationConfig:
    method: str
    seed: int = 0
    max_masks: int = 3
    locales: tuple = ()
    faker_types: frozenset = frozenset({"PER", "LOC"})
    jobs: int = 1  # parallel sentence workers for model-backed methods

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        if self.max_masks < 1:
            raise DataError("max_masks must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DataError("seed must be a 64-bit unsigned integer")
        if self.method == "faker" and self.faker_types and not self.locales:
            raise DataError("faker needs at least one locale")


@dataclass
class PerturbationRecord:
    sentence_id: str
    method: str
    changed_token_indices: list = field(default_factory=list)
    replaced_spans: list = field(default_factory=list)  # (old surface, new surface, entity type)
    discarded: str | None = None
    failed_positions: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["replaced_spans"] = [list(r) for r in self.replaced_spans]
        return d


@dataclass(frozen=True)
class Discard:
    reason: str
    detail: str = ""

    def __bool__(self):
        return False


def write_records(records, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")


def _derived(corpus: Corpus, sentences, method, **kw) -> Corpus:
    return replace(corpus.with_sentences(sentences), name=f"{corpus.name}.{method}", **kw)


# -- entity replacement ----------------------------------------------------------

def _apply_replacements(sentence, spans, new_surfaces):
    """Replace spans left to right; ``None`` keeps a span.

    Returns the sentence, changed output indices, replaced-span triples and
    ``(old_end, delta)`` shifts for mapping old indices to new ones.
    """
    out = sentence
    shift = 0
    changed, replaced, shifts = [], [], []
    for sp, new in zip(spans, new_surfaces):
        if new is None or tuple(new) == sp.surface:
            continue
        moved = EntitySpan(sp.start + shift, sp.end + shift, sp.entity_type, sp.surface)
        out = replace_span(out, moved, new)
        changed.extend(range(moved.start, moved.start + len(new)))
        replaced.append((" ".join(sp.surface), " ".join(new), sp.entity_type))
        delta = len(new) - len(sp)
        if delta:
            shifts.append((sp.end, delta))
        shift += delta
    return out, changed, replaced, shifts


def _map_index(i, shifts):
    return i + sum(delta for end, delta in shifts if end <= i)


def _random_sample(corpus, config):
    all_spans = [s.spans() for s in corpus.sentences]
    occurrences: dict[str, list] = {}
    for si, spans in enumerate(all_spans):
        for k, sp in enumerate(spans):
            occurrences.setdefault(sp.entity_type, []).append((si, k))

    new = [[None] * len(spans) for spans in all_spans]
    singletons = set()
    for etype in sorted(occurrences):
        occ = occurrences[etype]
        if len(occ) == 1:
            singletons.add(etype)
            continue
        surfaces = [all_spans[si][k].surface for si, k in occ]
        substream(config.seed, zlib.crc32(etype.encode("utf-8"))).shuffle(surfaces)
        for (si, k), surface in zip(occ, surfaces):
            new[si][k] = surface

    sentences, records, shifts = [], [], []
    for si, s in enumerate(corpus.sentences):
        out, changed, replaced, sh = _apply_replacements(s, all_spans[si], new[si])
        notes = sorted(f"singleton-type:{sp.entity_type}" for sp in all_spans[si] if sp.entity_type in singletons)
        sentences.append(out)
        shifts.append(sh)
        records.append(PerturbationRecord(s.sentence_id, "rs", changed, replaced, notes=notes))
    return sentences, records, shifts


def random_sample(corpus: Corpus, config: PerturbationConfig):
    """Permute entity surface forms among all occurrences of each type.

    Self-mappings are allowed, and a type with a single occurrence stays put
    (noted in the record).
    """
    sentences, records, _ = _random_sample(corpus, config)
    return _derived(corpus, sentences, "rs"), records


def gazetteer_replace(corpus: Corpus, gaz: Gazetteer, config: PerturbationConfig):
    """Replace every span of a selected type with a gazetteer form.

    For each span: draw a locale uniformly, then a form uniformly from that
    locale's list for the span's type.
    """
    types = sorted(config.faker_types)
    locales = list(config.locales)
    missing = [(t, loc) for t in types for loc in locales if (t, loc) not in gaz.entries]
    if missing:
        raise GazetteerError("gazetteer lacks entries for " + ", ".join(f"{t}/{loc}" for t, loc in missing))
    selected = set(types)
    sentences, records = [], []
    for si, s in enumerate(corpus.sentences):
        rng = substream(config.seed, si)
        spans = s.spans()
        new = []
        for sp in spans:
            if sp.entity_type in selected:
                loc = rng.choice(locales)
                new.append(rng.choice(gaz.forms(sp.entity_type, loc)))
            else:
                new.append(None)
        out, changed, replaced, _ = _apply_replacements(s, spans, new)
        sentences.append(out)
        records.append(PerturbationRecord(s.sentence_id, "faker", changed, replaced))
    return _derived(corpus, sentences, "faker"), records


# -- context masking -------------------------------------------------------------

def _valid_token(tok) -> bool:
    return isinstance(tok, str) and bool(tok) and not any(c in tok for c in " \t\n\r")


def _mask_sentence(si, s, suggester, config):
    record = PerturbationRecord(s.sentence_id, "mask")
    outside = [i for i, t in enumerate(s.tags) if t == OUTSIDE]
    if not outside:
        return s, record
    rng = substream(config.seed, si)
    k = min(rng.randint(1, config.max_masks), len(outside))
    positions = sorted(rng.sample(outside, k))
    tokens = list(s.tokens)
    for p in positions:
        try:
            candidates = suggester.fill_mask(tuple(tokens), p)
        except TransportError as e:
            log.warning("mask fill failed for %s position %d: %s", s.sentence_id, p, e)
            record.failed_positions.append(p)
            continue
        valid = [c for c in candidates if _valid_token(c)]
        if not valid:
            record.failed_positions.append(p)
            continue
        alternatives = [c for c in valid if c != tokens[p]]
        choice = alternatives[0] if alternatives else valid[0]
        if choice != tokens[p]:
            tokens[p] = choice
            record.changed_token_indices.append(p)
    if record.changed_token_indices:
        s = replace(s, tokens=tuple(tokens))
    return s, record


def mask_context(corpus: Corpus, suggester: MaskFiller, config: PerturbationConfig):
    """Refill up to ``max_masks`` Outside tokens per sentence.

    The number of masks is uniform on ``1..max_masks`` (capped by the number
    of Outside tokens); positions are filled left to right, each request
    seeing the earlier fills. Entity tokens and all tags are untouched.
    """
    work = list(enumerate(corpus.sentences))
    if config.jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(lambda item: _mask_sentence(*item, suggester, config), work))
    else:
        results = [_mask_sentence(si, s, suggester, config) for si, s in work]
    return _derived(corpus, [r[0] for r in results], "mask"), [r[1] for r in results]


def mask_plus_random(corpus: Corpus, suggester: MaskFiller, config: PerturbationConfig):
    """Masking (stage 0), then random sampling (stage 1) on the masked corpus."""
    mask_cfg, rs_cfg = stage_configs(config)
    masked, mask_records = mask_context(corpus, suggester, mask_cfg)
    sentences, rs_records, shifts = _random_sample(masked, rs_cfg)
    records = []
    for m, r, sh in zip(mask_records, rs_records, shifts):
        records.append(PerturbationRecord(
            m.sentence_id, "m+r",
            changed_token_indices=sorted({_map_index(i, sh) for i in m.changed_token_indices}
                                         | set(r.changed_token_indices)),
            replaced_spans=r.replaced_spans,
            failed_positions=[_map_index(i, sh) for i in m.failed_positions],
            notes=r.notes,
        ))
    return _derived(corpus, sentences, "m+r"), records


def stage_configs(config: PerturbationConfig):
    """Sub-configs of the m+r stages, seeded from splitmix64 outputs 1 and 2."""
    return (replace(config, method="mask", seed=derive_seed(config.seed, 0)),
            replace(config, method="rs", seed=derive_seed(config.seed, 1)))


# -- paraphrasing ----------------------------------------------------------------

def _find_all(tokens, needle):
    n = len(needle)
    return [i for i in range(len(tokens) - n + 1) if tuple(tokens[i:i + n]) == needle]


def remap_paraphrase(original: AnnotatedSentence, paraphrase_tokens: Sequence[str]):
    """Carry entity tags over to a paraphrase, or return a falsy :class:`Discard`.

    Every distinct entity token sequence must occur in the paraphrase exactly
    as many times as it is annotated in the original (exact, case-sensitive
    match); the k-th annotated occurrence maps to the k-th hit. Everything else
    becomes Outside.
    """
    toks = tuple(paraphrase_tokens)
    if not toks:
        return Discard(EMPTY_PARAPHRASE)
    if not all(_valid_token(t) for t in toks):
        raise DataError(f"{original.sentence_id}: paraphrase tokens must be non-empty and whitespace-free")
    groups: dict[tuple, list] = {}
    for sp in original.spans():
        groups.setdefault(sp.surface, []).append(sp)
    located = []
    for surface, group in groups.items():
        hits = _find_all(toks, surface)
        text = " ".join(surface)
        if not hits:
            return Discard(ENTITY_NOT_FOUND, text)
        if len(hits) != len(group):
            return Discard(ENTITY_COUNT_MISMATCH, f"{text}: {len(group)} annotated, {len(hits)} in paraphrase")
        located.extend((h, h + len(surface), sp.entity_type) for sp, h in zip(group, hits))
    located.sort()
    for prev, cur in zip(located, located[1:]):
        if cur[0] < prev[1]:
            return Discard(ENTITY_OVERLAP, f"tokens {prev[0]}:{prev[1]} and {cur[0]}:{cur[1]}")
    return AnnotatedSentence(toks, tags_from_spans(len(toks), located), original.sentence_id)


def paraphrase_corpus(corpus: Corpus, paraphraser: Paraphraser, config: PerturbationConfig | None = None):
    """Re-annotated paraphrases of every sentence the paraphraser covers."""
    sentences, records = [], []
    for s in corpus.sentences:
        toks = paraphraser.paraphrase(s.sentence_id, s.text)
        result = Discard(NO_PARAPHRASE) if toks is None else remap_paraphrase(s, toks)
        if isinstance(result, Discard):
            records.append(PerturbationRecord(s.sentence_id, "para", discarded=result.reason,
                                              notes=[result.detail] if result.detail else []))
            continue
        changed = [i for i, t in enumerate(result.tokens) if i >= len(s.tokens) or s.tokens[i] != t]
        sentences.append(result)
        records.append(PerturbationRecord(s.sentence_id, "para", changed_token_indices=changed))
    layout = ColumnLayout(corpus.layout.separator, -1, 2)
    return _derived(corpus, sentences, "para", layout=layout), records


def perturb(corpus: Corpus, config: PerturbationConfig, gazetteer=None, suggester=None, paraphraser=None):
    """Dispatch on ``config.method``; returns (corpus, records)."""
    if config.method == "rs":
        return random_sample(corpus, config)
    if config.method == "faker":
        if gazetteer is None:
            raise GazetteerError("faker needs a gazetteer")
        return gazetteer_replace(corpus, gazetteer, config)
    if config.method in ("mask", "m+r"):
        if suggester is None:
            raise DataError(f"{config.method} needs a mask filler")
        fn = mask_context if config.method == "mask" else mask_plus_random
        return fn(corpus, suggester, config)
    if paraphraser is None:
        raise DataError("para needs a paraphraser (endpoint or paraphrase file)")
    return paraphrase_corpus(corpus, paraphraser, config)
