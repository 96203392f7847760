"""Independent reference implementations used by the tests.

Nothing here imports the code under test beyond plain data containers, and
spans are recovered from tags with a separate, deliberately naive scan.
"""
import math
from collections import Counter

SCHEMAS = ("strict", "exact", "partial", "type")


def naive_spans(tags):
    """Entity spans as (frozenset of token indices, type), read straight off the tags."""
    spans = []
    current = None
    for i, tag in enumerate(list(tags) + ["O"]):
        if current is not None and tag != "I-" + current[1]:
            spans.append((frozenset(current[0]), current[1]))
            current = None
        if tag.startswith("B-"):
            current = ([i], tag[2:])
        elif tag.startswith("I-") and current is not None:
            current[0].append(i)
    return spans


def _schema_outcome(schema, same_boundary, same_type):
    # SemEval-2013 definitions, one schema at a time.
    if schema == "strict":
        return "correct" if same_boundary and same_type else "incorrect"
    if schema == "exact":
        return "correct" if same_boundary else "incorrect"
    if schema == "partial":
        return "correct" if same_boundary else "partial"
    if schema == "type":
        return "correct" if same_type else "incorrect"
    raise ValueError(schema)


def brute_force_counts(gold_tag_seqs, pred_tag_seqs):
    """{scope: {schema: Counter(category)}}, scope "overall" or an entity type.

    Matching policy: each gold span in order of its first token takes, from
    the still-unused overlapping predictions, an exact-boundary one if any,
    else the one with the most shared tokens, ties going to the leftmost.
    """
    out = {}

    def add(scope, schema, category):
        out.setdefault(scope, {s: Counter() for s in SCHEMAS})[schema][category] += 1

    for gold_tags, pred_tags in zip(gold_tag_seqs, pred_tag_seqs):
        gold = sorted(naive_spans(gold_tags), key=lambda sp: min(sp[0]))
        pred = naive_spans(pred_tags)
        used = set()
        for g_tokens, g_type in gold:
            candidates = []
            for k, (p_tokens, p_type) in enumerate(pred):
                shared = len(g_tokens & p_tokens)
                if k in used or shared == 0:
                    continue
                candidates.append((p_tokens != g_tokens, -shared, min(p_tokens), k))
            if not candidates:
                for schema in SCHEMAS:
                    add("overall", schema, "missed")
                    add(g_type, schema, "missed")
                continue
            k = min(candidates)[3]
            used.add(k)
            p_tokens, p_type = pred[k]
            for schema in SCHEMAS:
                cat = _schema_outcome(schema, p_tokens == g_tokens, p_type == g_type)
                add("overall", schema, cat)
                add(g_type, schema, cat)
        for k, (p_tokens, p_type) in enumerate(pred):
            if k not in used:
                for schema in SCHEMAS:
                    add("overall", schema, "spurious")
                    add(p_type, schema, "spurious")
    return out


def naive_micro_f1(gold_tag_seqs, pred_tag_seqs):
    tp = n_gold = n_pred = 0
    for gold_tags, pred_tags in zip(gold_tag_seqs, pred_tag_seqs):
        g = naive_spans(gold_tags)
        p = naive_spans(pred_tags)
        tp += sum(1 for sp in g if sp in p)
        n_gold += len(g)
        n_pred += len(p)
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def surface_multiset(corpus):
    """Counter of (type, surface) over every entity occurrence."""
    c = Counter()
    for s in corpus.sentences:
        for idx, etype in naive_spans(s.tags):
            c[(etype, tuple(s.tokens[i] for i in sorted(idx)))] += 1
    return c


def outside_tokens(sentence):
    return [tok for tok, tag in zip(sentence.tokens, sentence.tags) if tag == "O"]


def is_valid_iob2(tags):
    prev = "O"
    for t in tags:
        if t.startswith("I-") and prev[2:] != t[2:]:
            return False
        if t != "O" and not (t.startswith("B-") or t.startswith("I-")):
            return False
        prev = t
    return True


def t_pdf(x, df):
    log_c = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(log_c - (df + 1) / 2 * math.log1p(x * x / df))


def numeric_two_sided_p(t, df, n=20000):
    """Two-sided Student-t tail by composite Simpson integration of the density over [0, |t|]."""
    t = abs(t)
    h = t / n
    s = t_pdf(0, df) + t_pdf(t, df)
    s += 4 * sum(t_pdf((2 * i - 1) * h, df) for i in range(1, n // 2 + 1))
    s += 2 * sum(t_pdf(2 * i * h, df) for i in range(1, n // 2))
    return 2 * (0.5 - s * h / 3)
