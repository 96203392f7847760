"""Checks shared by the perturbation tests and the acceptance suite.

Each returns a list of violation messages (empty when the invariant holds).
"""
from oracles import is_valid_iob2, naive_spans, outside_tokens, surface_multiset


def _iob2(out):
    return [f"{s.sentence_id}: invalid IOB2" for s in out.sentences if not is_valid_iob2(s.tags)]


def _types(s):
    return [etype for _, etype in sorted(naive_spans(s.tags), key=lambda sp: min(sp[0]))]


def _surfaces(s):
    return [(etype, tuple(s.tokens[i] for i in sorted(idx))) for idx, etype in
            sorted(naive_spans(s.tags), key=lambda sp: min(sp[0]))]


def check_rs(orig, out):
    problems = _iob2(out)
    if len(orig) != len(out):
        return problems + ["sentence count changed"]
    if surface_multiset(orig) != surface_multiset(out):
        problems.append("per-type surface multiset changed")
    for a, b in zip(orig.sentences, out.sentences):
        if outside_tokens(a) != outside_tokens(b):
            problems.append(f"{a.sentence_id}: Outside tokens changed")
        if _types(a) != _types(b):
            problems.append(f"{a.sentence_id}: entity type sequence changed")
        if a.sentence_id != b.sentence_id:
            problems.append(f"{a.sentence_id}: id changed")
    return problems


def check_faker(orig, out, gazetteer, types):
    problems = _iob2(out)
    if len(orig) != len(out):
        return problems + ["sentence count changed"]
    for a, b in zip(orig.sentences, out.sentences):
        if outside_tokens(a) != outside_tokens(b):
            problems.append(f"{a.sentence_id}: Outside tokens changed")
        sa, sb = _surfaces(a), _surfaces(b)
        if [t for t, _ in sa] != [t for t, _ in sb]:
            problems.append(f"{a.sentence_id}: entity type sequence changed")
            continue
        for (etype, old), (_, new) in zip(sa, sb):
            if etype in types and not gazetteer.contains(etype, new):
                problems.append(f"{a.sentence_id}: {' '.join(new)} is not a gazetteer {etype}")
            if etype not in types and old != new:
                problems.append(f"{a.sentence_id}: unselected {etype} entity changed")
    return problems


def check_mask(orig, out, max_masks):
    problems = _iob2(out)
    if len(orig) != len(out):
        return problems + ["sentence count changed"]
    for a, b in zip(orig.sentences, out.sentences):
        if a.tags != b.tags:
            problems.append(f"{a.sentence_id}: tags changed")
            continue
        changed = [i for i, (x, y) in enumerate(zip(a.tokens, b.tokens)) if x != y]
        if len(changed) > max_masks:
            problems.append(f"{a.sentence_id}: {len(changed)} positions changed")
        if any(a.tags[i] != "O" for i in changed):
            problems.append(f"{a.sentence_id}: entity token changed")
    return problems
