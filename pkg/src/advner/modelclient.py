"""Clients for the external model roles, plus offline stubs.

Wire protocol (JSON over HTTP POST):

    tagger      {"sentences": [[tok, ...], ...]}         -> {"tags": [[label, ...], ...]}
    maskfill    {"tokens": [...], "index": i, "top_k": k} -> {"candidates": [{"token": t, "score": s}, ...]}
    paraphrase  {"text": "..."}                           -> {"paraphrase": "..."}
"""
from __future__ import annotations

import logging
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import requests

from .corpus import OUTSIDE, AnnotatedSentence, Corpus, coerce_iob2, tags_from_spans
from .errors import DataError, ProtocolError, TransportError

log = logging.getLogger(__name__)

ROLES = ("tagger", "maskfill", "paraphrase")
MASK_TOKEN = "[MASK]"
DEFAULT_BATCH_SIZE = 32


@dataclass(frozen=True)
class ModelEndpoint:
    base_url: str
    role: str
    timeout: float = 30.0
    max_in_flight: int = 4
    retries: int = 2
    token: str | None = None  # bearer token
    mask_token: str = MASK_TOKEN

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


class HTTPClient:
    def __init__(self, endpoint: ModelEndpoint, session: requests.Session | None = None):
        self.endpoint = endpoint
        self._local = threading.local()
        self._session = session
        self._slots = threading.BoundedSemaphore(endpoint.max_in_flight)

    def _get_session(self):
        if self._session is not None:
            return self._session
        if not hasattr(self._local, "session"):
            self._local.session = requests.Session()
        return self._local.session

    def post(self, payload: dict, what: str = "request") -> dict:
        ep = self.endpoint
        headers = {"Authorization": f"Bearer {ep.token}"} if ep.token else {}
        last = None
        for attempt in range(ep.retries + 1):
            try:
                with self._slots:
                    resp = self._get_session().post(ep.base_url, json=payload, timeout=ep.timeout, headers=headers)
            except requests.RequestException as e:
                last = f"{type(e).__name__}: {e}"
            else:
                if resp.status_code < 500:
                    break
                last = f"HTTP {resp.status_code}"
            log.debug("%s to %s failed (attempt %d): %s", what, ep.base_url, attempt + 1, last)
        else:
            raise TransportError(f"{what} to {ep.base_url} failed after {ep.retries + 1} attempts: {last}")
        if resp.status_code >= 400:
            raise TransportError(f"{what} to {ep.base_url}: HTTP {resp.status_code}")
        try:
            body = resp.json()
        except ValueError:
            raise ProtocolError(f"{what} to {ep.base_url}: response is not JSON") from None
        if not isinstance(body, dict):
            raise ProtocolError(f"{what} to {ep.base_url}: response is not a JSON object")
        return body


# -- tagger ----------------------------------------------------------------------

class HTTPTagger(HTTPClient):
    def __init__(self, endpoint, batch_size=DEFAULT_BATCH_SIZE, **kw):
        super().__init__(endpoint, **kw)
        self.batch_size = batch_size

    def _tag_batch(self, index, batch):
        body = self.post({"sentences": [list(s) for s in batch]}, what=f"tagger batch {index}")
        tags = body.get("tags")
        if not isinstance(tags, list) or len(tags) != len(batch):
            raise ProtocolError(f"tagger batch {index}: expected {len(batch)} tag sequences")
        for sent, labels in zip(batch, tags):
            if not isinstance(labels, list) or len(labels) != len(sent):
                raise ProtocolError(f"tagger batch {index}: tag count does not match token count")
            if not all(isinstance(t, str) for t in labels):
                raise ProtocolError(f"tagger batch {index}: labels must be strings")
        return tags

    def tag(self, sentences: Sequence[Sequence[str]]) -> list[list[str]]:
        batches = [sentences[i:i + self.batch_size] for i in range(0, len(sentences), self.batch_size)]
        with ThreadPoolExecutor(max_workers=self.endpoint.max_in_flight) as pool:
            results = list(pool.map(self._tag_batch, range(len(batches)), batches))
        return [t for batch in results for t in batch]


class StubTagger:
    """Memorizes entity surfaces of a corpus and tags by longest match.

    An ambiguous surface gets its most frequent type (ties: alphabetical).
    """

    def __init__(self, corpus: Corpus):
        seen: dict[tuple, Counter] = {}
        for s in corpus.sentences:
            for sp in s.spans():
                seen.setdefault(sp.surface, Counter())[sp.entity_type] += 1
        self.memory = {surf: min(c.items(), key=lambda kv: (-kv[1], kv[0]))[0] for surf, c in seen.items()}
        self.max_len = max((len(k) for k in self.memory), default=0)

    def tag_one(self, tokens: Sequence[str]) -> tuple[str, ...]:
        tokens = tuple(tokens)
        spans = []
        i, n = 0, len(tokens)
        while i < n:
            for length in range(min(self.max_len, n - i), 0, -1):
                etype = self.memory.get(tokens[i:i + length])
                if etype is not None:
                    spans.append((i, i + length, etype))
                    i += length
                    break
            else:
                i += 1
        return tags_from_spans(n, spans)

    def tag(self, sentences):
        return [list(self.tag_one(s)) for s in sentences]


def tag_sentences(tagger, sentences: Sequence[Sequence[str]], ids=None, name="pred") -> Corpus:
    """Run a tagger (HTTP or stub) and wrap its output as a corpus.

    Predicted tags are coerced to IOB2 (a dangling I- opens a span), which is
    how seqeval reads them.
    """
    sentences = [tuple(s) for s in sentences]
    if any(not s for s in sentences):
        raise DataError("cannot tag an empty sentence")
    ids = list(ids) if ids is not None else [f"{name}:{i}" for i in range(len(sentences))]
    tags = tagger.tag(sentences) if sentences else []
    out = []
    for sid, toks, labels in zip(ids, sentences, tags):
        if len(labels) != len(toks):
            raise ProtocolError(f"{sid}: tagger returned {len(labels)} tags for {len(toks)} tokens")
        labels = tuple(OUTSIDE if t in ("", OUTSIDE) else t for t in labels)
        try:
            out.append(AnnotatedSentence(toks, coerce_iob2(labels), sid))
        except DataError as e:
            raise ProtocolError(f"{sid}: unusable tags from tagger: {e}") from None
    return Corpus.from_sentences(out, name=name)


def tag_corpus(tagger, corpus: Corpus, name=None) -> Corpus:
    return tag_sentences(tagger, [s.tokens for s in corpus.sentences], [s.sentence_id for s in corpus.sentences],
                         name=name or corpus.name)


# -- mask filling ----------------------------------------------------------------

def capitalization_class(tok: str) -> str:
    if not any(c.isalpha() for c in tok):
        return "other"
    if tok.islower():
        return "lower"
    if tok.isupper():
        return "upper"
    if tok[0].isupper():
        return "title"
    return "mixed"


class StubMaskFiller:
    """Suggests the corpus's most frequent Outside tokens of the same
    capitalization class as the masked token."""

    def __init__(self, corpus: Corpus, top_k: int = 5):
        counts: dict[str, Counter] = {}
        for s in corpus.sentences:
            for tok, tag in zip(s.tokens, s.tags):
                if tag == OUTSIDE:
                    counts.setdefault(capitalization_class(tok), Counter())[tok] += 1
        self.ranked = {cls: [t for t, _ in sorted(c.items(), key=lambda kv: (-kv[1], kv[0]))]
                       for cls, c in counts.items()}
        self.top_k = top_k

    def fill_mask(self, tokens: Sequence[str], position: int) -> list[str]:
        if not 0 <= position < len(tokens):
            raise IndexError(position)
        original = tokens[position]
        ranked = self.ranked.get(capitalization_class(original), [])
        out = [t for t in ranked if t != original][: self.top_k]
        return out or [original]


class HTTPMaskFiller(HTTPClient):
    def __init__(self, endpoint, top_k=5, **kw):
        super().__init__(endpoint, **kw)
        self.top_k = top_k

    def fill_mask(self, tokens: Sequence[str], position: int) -> list[str]:
        if not 0 <= position < len(tokens):
            raise IndexError(position)
        masked = list(tokens)
        masked[position] = self.endpoint.mask_token
        body = self.post({"tokens": masked, "index": position, "top_k": self.top_k}, what="maskfill")
        cands = body.get("candidates")
        if not isinstance(cands, list) or not cands:
            raise ProtocolError("maskfill: response has no candidates")
        try:
            ranked = sorted(cands, key=lambda c: -float(c.get("score", 0.0))) if all(
                "score" in c for c in cands) else cands
            return [str(c["token"]) for c in ranked]
        except (AttributeError, KeyError, TypeError, ValueError):
            raise ProtocolError("maskfill: malformed candidate entries") from None


def fill_mask(filler, tokens, position):
    return filler.fill_mask(tokens, position)


# -- paraphrasing ----------------------------------------------------------------

class FileParaphraser:
    """Pre-paraphrased sentences from a TSV file: ``sentence_id <TAB> text``."""

    def __init__(self, mapping: dict):
        self.mapping = mapping

    @classmethod
    def load(cls, path):
        mapping = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\r\n")
                if not line.strip():
                    continue
                sid, sep, text = line.partition("\t")
                if not sep:
                    raise DataError(f"{path}:{lineno}: expected sentence_id<TAB>paraphrase")
                mapping[sid] = text
        return cls(mapping)

    def paraphrase(self, sentence_id: str, text: str):
        para = self.mapping.get(sentence_id)
        return None if para is None else para.split()


class IdentityParaphraser:
    def paraphrase(self, sentence_id, text):
        return text.split()


class HTTPParaphraser(HTTPClient):
    def paraphrase(self, sentence_id: str, text: str):
        body = self.post({"text": text}, what=f"paraphrase {sentence_id}")
        para = body.get("paraphrase")
        if not isinstance(para, str):
            raise ProtocolError(f"paraphrase {sentence_id}: response lacks a 'paraphrase' string")
        return para.split()


def paraphrase(source, sentence_id, text):
    return source.paraphrase(sentence_id, text)
