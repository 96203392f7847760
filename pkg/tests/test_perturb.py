import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advner.corpus import AnnotatedSentence, Corpus, parse_conll, serialize_conll
from advner.errors import DataError, GazetteerError, TransportError
from advner.modelclient import StubMaskFiller
from advner.perturb import (ENTITY_COUNT_MISMATCH, ENTITY_NOT_FOUND, ENTITY_OVERLAP, EMPTY_PARAPHRASE, NO_PARAPHRASE,
                            Discard, Gazetteer, PerturbationConfig, gazetteer_replace, mask_context, mask_plus_random,
                            paraphrase_corpus, perturb, random_sample, remap_paraphrase, stage_configs)
from advner.rng import derive_seed

from invariants import check_faker, check_mask, check_rs
from synth import random_corpus

ORIG = '" We suspect that these killings are linked to politics , " spokesman Bala Naidoo told Reuters .'


def tagged(text, spans, sid):
    """Sentence from text and {surface: type}."""
    toks = text.split()
    tags = ["O"] * len(toks)
    for surface, etype in spans.items():
        sub = surface.split()
        i = next(i for i in range(len(toks)) if toks[i:i + len(sub)] == sub)
        tags[i] = "B-" + etype
        for j in range(i + 1, i + len(sub)):
            tags[j] = "I-" + etype
    return AnnotatedSentence(tuple(toks), tuple(tags), sid)


@pytest.fixture
def example():
    return Corpus.from_sentences([
        tagged(ORIG, {"Bala Naidoo": "PER", "Reuters": "ORG"}, "c:0"),
        tagged("Deborah Compagnoni joined Watford .", {"Deborah Compagnoni": "PER", "Watford": "ORG"}, "c:1"),
    ], name="c")


class ScriptedFiller:
    """Returns a fixed candidate list per (masked-position, original token)."""

    def __init__(self, script, default=None):
        self.script = script
        self.default = default
        self.calls = []

    def fill_mask(self, tokens, position):
        self.calls.append((tuple(tokens), position))
        return list(self.script.get(tokens[position], self.default or [tokens[position]]))


# -- random sampling -------------------------------------------------------------

def test_rs_example_sentence(example):
    out, records = random_sample(example, PerturbationConfig("rs", seed=0))
    assert out.sentences[0].text == ORIG.replace("Bala Naidoo", "Deborah Compagnoni").replace("Reuters", "Watford")
    assert out.sentences[1].text == "Bala Naidoo joined Reuters ."
    assert records[0].replaced_spans == [("Bala Naidoo", "Deborah Compagnoni", "PER"), ("Reuters", "Watford", "ORG")]
    assert out.name == "c.rs"
    assert [s.sentence_id for s in out.sentences] == ["c:0", "c:1"]


def test_rs_deterministic(example):
    cfg = PerturbationConfig("rs", seed=11)
    assert random_sample(example, cfg)[0] == random_sample(example, cfg)[0]


def test_rs_singleton_type_noted():
    c = Corpus.from_sentences([tagged("EU rejects German call", {"EU": "ORG", "German": "MISC"}, "c:0"),
                               tagged("EU again", {"EU": "ORG"}, "c:1")])
    out, records = random_sample(c, PerturbationConfig("rs", seed=3))
    assert out.sentences == c.sentences
    assert records[0].notes == ["singleton-type:MISC"]


def test_rs_no_entities():
    c = Corpus.from_sentences([AnnotatedSentence(("a", "b"), ("O", "O"), "c:0")])
    out, records = random_sample(c, PerturbationConfig("rs"))
    assert out.sentences == c.sentences and records[0].changed_token_indices == []


def test_rs_length_change_marks_new_positions():
    c = Corpus.from_sentences([tagged("Nicol was there", {"Nicol": "PER"}, "c:0"),
                               tagged("then Roger Turner left", {"Roger Turner": "PER"}, "c:1")])
    for seed in range(50):
        out, records = random_sample(c, PerturbationConfig("rs", seed=seed))
        if out.sentences[0].tokens[0] == "Roger":
            assert out.sentences[0].tokens == ("Roger", "Turner", "was", "there")
            assert records[0].changed_token_indices == [0, 1]
            assert records[1].changed_token_indices == [1]
            break
    else:
        pytest.fail("no seed swapped the two PER entities")


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32))
def test_rs_invariants(seed):
    rng = random.Random(seed)
    c = random_corpus(rng)
    out, records = random_sample(c, PerturbationConfig("rs", seed=rng.getrandbits(64)))
    assert check_rs(c, out) == []
    assert len(records) == len(c)


# -- gazetteer replacement ----------------------------------------------------

def _gaz():
    return Gazetteer.from_json({"en-US": {"PER": ["Jeremy Shukla"], "LOC": ["Timor-Leste"]},
                                "en-IN": {"PER": ["Jeremy Shukla"], "LOC": ["Timor-Leste"]}})


def test_faker_example_sentence(example):
    cfg = PerturbationConfig("faker", seed=1, locales=("en-US", "en-IN"))
    out, records = gazetteer_replace(example, _gaz(), cfg)
    assert out.sentences[0].text == ORIG.replace("Bala Naidoo", "Jeremy Shukla")
    assert records[0].replaced_spans == [("Bala Naidoo", "Jeremy Shukla", "PER")]
    assert out.sentences[1].tokens[-2] == "Watford"


def test_faker_missing_locale_entry(example):
    gaz = Gazetteer.from_json({"de-DE": {"PER": ["Elmir"]}})
    with pytest.raises(GazetteerError):
        gazetteer_replace(example, gaz, PerturbationConfig("faker", locales=("de-DE",)))


def test_faker_requires_locale():
    with pytest.raises(DataError):
        PerturbationConfig("faker")


@pytest.mark.parametrize("name,expected", [("english", ("en-US", "en-CA", "en-IN")),
                                           ("german", ("de-DE", "de-AT", "de-CH")), ("hindi", ("hi-IN",))])
def test_bundled_gazetteers(name, expected):
    gaz = Gazetteer.load(name)
    assert gaz.locales == expected
    for loc in expected:
        assert len(gaz.forms("PER", loc)) >= 50 and len(gaz.forms("LOC", loc)) >= 50


def test_gazetteer_errors(tmp_path):
    with pytest.raises(GazetteerError):
        Gazetteer.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(GazetteerError):
        Gazetteer.load(bad)
    with pytest.raises(GazetteerError):
        Gazetteer.from_json({"en-US": {"PER": []}})
    with pytest.raises(GazetteerError):
        Gazetteer.from_json(["en-US"])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_faker_invariants(seed):
    rng = random.Random(seed)
    c = random_corpus(rng)
    gaz = Gazetteer.load("german")
    cfg = PerturbationConfig("faker", seed=rng.getrandbits(64), locales=gaz.locales)
    out, _ = gazetteer_replace(c, gaz, cfg)
    assert check_faker(c, out, gaz, cfg.faker_types) == []


# -- masking ---------------------------------------------------------------------

def test_mask_example_sentence():
    s = tagged(ORIG, {"Bala Naidoo": "PER", "Reuters": "ORG"}, "c:0")
    c = Corpus.from_sentences([s])
    filler = ScriptedFiller({"that": ["that", "the"], "told": ["tells"], ".": [","]})
    # find a seed that picks exactly these three positions
    want = {s.tokens.index("that"), s.tokens.index("told"), len(s) - 1}
    for seed in range(2000):
        out, records = mask_context(c, filler, PerturbationConfig("mask", seed=seed))
        if set(records[0].changed_token_indices) == want:
            break
    else:
        pytest.fail("no seed selected the scripted positions")
    assert out.sentences[0].text == ORIG.replace("that", "the").replace("told", "tells")[:-1] + ","
    assert out.sentences[0].tags == s.tags


def test_mask_fills_left_to_right_with_earlier_fills_visible():
    s = AnnotatedSentence(("a", "b", "c"), ("O", "O", "O"), "c:0")
    filler = ScriptedFiller({}, default=["z"])
    for seed in range(200):
        filler.calls.clear()
        out, _ = mask_context(Corpus.from_sentences([s]), filler, PerturbationConfig("mask", seed=seed, max_masks=3))
        if len(filler.calls) == 3:
            break
    assert [p for _, p in filler.calls] == [0, 1, 2]
    assert filler.calls[1][0][0] == "z" and filler.calls[2][0][:2] == ("z", "z")
    assert out.sentences[0].tokens == ("z", "z", "z")


def test_mask_no_outside_tokens():
    s = AnnotatedSentence(("EU",), ("B-ORG",), "c:0")
    filler = ScriptedFiller({})
    out, records = mask_context(Corpus.from_sentences([s]), filler, PerturbationConfig("mask"))
    assert out.sentences[0] == s and filler.calls == []


def test_mask_transport_failure_is_recorded():
    class Failing:
        def fill_mask(self, tokens, position):
            raise TransportError("down")

    s = AnnotatedSentence(("a", "b"), ("O", "O"), "c:0")
    out, records = mask_context(Corpus.from_sentences([s]), Failing(), PerturbationConfig("mask", max_masks=1))
    assert out.sentences[0] == s
    assert len(records[0].failed_positions) == 1


def test_mask_invalid_candidates_skipped():
    s = AnnotatedSentence(("a",), ("O",), "c:0")
    out, records = mask_context(Corpus.from_sentences([s]), ScriptedFiller({"a": ["", "two words", "b"]}),
                                PerturbationConfig("mask"))
    assert out.sentences[0].tokens == ("b",)
    out, records = mask_context(Corpus.from_sentences([s]), ScriptedFiller({"a": [""]}), PerturbationConfig("mask"))
    assert records[0].failed_positions == [0]


def test_mask_parallel_matches_serial():
    c = random_corpus(random.Random(4), 40)
    filler = StubMaskFiller(c)
    serial = mask_context(c, filler, PerturbationConfig("mask", seed=9))
    parallel = mask_context(c, filler, PerturbationConfig("mask", seed=9, jobs=4))
    assert serial[0] == parallel[0]
    assert [r.to_dict() for r in serial[1]] == [r.to_dict() for r in parallel[1]]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 4))
def test_mask_invariants(seed, max_masks):
    rng = random.Random(seed)
    c = random_corpus(rng)
    out, _ = mask_context(c, StubMaskFiller(c), PerturbationConfig("mask", seed=rng.getrandbits(64),
                                                                    max_masks=max_masks))
    assert check_mask(c, out, max_masks) == []


# -- mask + random sampling ---------------------------------------------------

def test_stage_seeds():
    mask_cfg, rs_cfg = stage_configs(PerturbationConfig("m+r", seed=5))
    assert (mask_cfg.method, mask_cfg.seed) == ("mask", derive_seed(5, 0))
    assert (rs_cfg.method, rs_cfg.seed) == ("rs", derive_seed(5, 1))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_mr_is_composition(seed):
    rng = random.Random(seed)
    c = random_corpus(rng)
    filler = StubMaskFiller(c)
    cfg = PerturbationConfig("m+r", seed=rng.getrandbits(64))
    mask_cfg, rs_cfg = stage_configs(cfg)
    out, records = mask_plus_random(c, filler, cfg)
    expected, _ = random_sample(mask_context(c, filler, mask_cfg)[0], rs_cfg)
    assert out.sentences == expected.sentences
    assert out.name == c.name + ".m+r"
    for r, a, b in zip(records, c.sentences, out.sentences):
        assert all(0 <= i < len(b) for i in r.changed_token_indices)
        if a.spans() == b.spans():  # no entity moved, so positions line up
            assert set(r.changed_token_indices) == {i for i in range(len(a)) if a.tokens[i] != b.tokens[i]}


def test_mr_example(example):
    filler = ScriptedFiller({"that": ["the"], "told": ["tells"]})
    out, records = mask_plus_random(example, filler, PerturbationConfig("m+r", seed=0))
    s = out.sentences[0]
    assert s.tags.count("B-PER") == 1 and s.tags.count("B-ORG") == 1
    assert len(records) == 2


# -- paraphrase remapping ------------------------------------------------------

def test_remap_example():
    s = tagged(ORIG, {"Bala Naidoo": "PER", "Reuters": "ORG"}, "c:0")
    para = '" We assume that these killings are political in nature " , spokesman Bala Naidoo told Reuters .'
    out = remap_paraphrase(s, para.split())
    assert out.tokens == tuple(para.split())
    assert [(sp.entity_type, " ".join(sp.surface)) for sp in out.spans()] == [("PER", "Bala Naidoo"),
                                                                               ("ORG", "Reuters")]
    assert out.sentence_id == "c:0"


@pytest.mark.parametrize("para,reason", [
    ("the U.S. team won", ENTITY_NOT_FOUND),
    ("the united States team won", ENTITY_NOT_FOUND),
    ("United States and United States won", ENTITY_COUNT_MISMATCH),
    ("", EMPTY_PARAPHRASE),
])
def test_remap_discards(para, reason):
    s = tagged("the United States team won", {"United States": "LOC"}, "c:0")
    out = remap_paraphrase(s, para.split())
    assert isinstance(out, Discard) and not out
    assert out.reason == reason


def test_remap_overlap_discard():
    s = AnnotatedSentence(("Bad", "Homburg", "v", "Homburg", "City"), ("B-LOC", "I-LOC", "O", "B-ORG", "I-ORG"), "c:0")
    out = remap_paraphrase(s, "Bad Homburg City".split())
    assert out.reason == ENTITY_OVERLAP


def test_remap_repeated_entity_keeps_order():
    s = AnnotatedSentence(("Bonn", "beat", "Bonn"), ("B-ORG", "O", "B-LOC"), "c:0")
    out = remap_paraphrase(s, "Bonn lost to Bonn".split())
    assert out.tags == ("B-ORG", "O", "O", "B-LOC")


def test_remap_no_entities():
    s = AnnotatedSentence(("hello",), ("O",), "c:0")
    assert remap_paraphrase(s, ["hi", "there"]).tags == ("O", "O")


def test_paraphrase_corpus_records():
    c = Corpus.from_sentences([tagged("EU rejects call", {"EU": "ORG"}, "c:0"),
                               tagged("Bonn wins", {"Bonn": "LOC"}, "c:1"),
                               tagged("no entity", {}, "c:2")], name="c")

    class Source:
        def paraphrase(self, sid, text):
            return {"c:0": "the EU said no".split(), "c:1": "Berlin wins".split()}.get(sid)

    out, records = paraphrase_corpus(c, Source())
    assert [s.sentence_id for s in out.sentences] == ["c:0"]
    assert [r.discarded for r in records] == [None, ENTITY_NOT_FOUND, NO_PARAPHRASE]
    assert out.name == "c.para"


def test_paraphrase_output_drops_extra_columns():
    c = parse_conll(b"EU NNP B-ORG\nrejects VBZ O\n\n", name="c")

    class Source:
        def paraphrase(self, sid, text):
            return ["EU", "says", "no"]

    out, _ = paraphrase_corpus(c, Source())
    assert serialize_conll(out) == b"EU B-ORG\nsays O\nno O\n\n"


# -- dispatcher ----------------------------------------------------------------

def test_dispatch_requires_collaborators(example):
    with pytest.raises(GazetteerError):
        perturb(example, PerturbationConfig("faker", locales=("en-US",)))
    with pytest.raises(DataError):
        perturb(example, PerturbationConfig("mask"))
    with pytest.raises(DataError):
        perturb(example, PerturbationConfig("para"))
    with pytest.raises(DataError):
        PerturbationConfig("swap")
    with pytest.raises(DataError):
        PerturbationConfig("mask", max_masks=0)


def test_record_serialization(example):
    _, records = perturb(example, PerturbationConfig("rs", seed=0))
    d = records[0].to_dict()
    assert set(d) == {"sentence_id", "method", "changed_token_indices", "replaced_spans", "discarded",
                      "failed_positions", "notes"}
    assert d["replaced_spans"][0] == ["Bala Naidoo", "Deborah Compagnoni", "PER"]
