"""Compare the compiled and pure-Python span kernels.

    python benchmarks/bench_kernels.py --sentences 20000 --repeat 5
"""
import argparse
import random
import time

from advner import _kernels
from advner.corpus import AnnotatedSentence, Corpus, tags_from_spans
from advner.evaluate import evaluate

TYPES = ("PER", "LOC", "ORG", "MISC")


def random_tags(rng, n):
    spans, i = [], 0
    while i < n:
        if rng.random() < 0.2:
            length = min(rng.randint(1, 3), n - i)
            spans.append((i, i + length, rng.choice(TYPES)))
            i += length
        i += 1
    return tags_from_spans(n, spans)


def make_pair(n_sentences, seed):
    rng = random.Random(seed)
    gold, pred = [], []
    for i in range(n_sentences):
        n = rng.randint(5, 40)
        toks = tuple(f"t{j}" for j in range(n))
        gold.append(AnnotatedSentence(toks, random_tags(rng, n), f"b:{i}"))
        pred.append(AnnotatedSentence(toks, random_tags(rng, n), f"b:{i}"))
    return Corpus.from_sentences(gold, name="gold"), Corpus.from_sentences(pred, name="pred")


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sentences", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    gold, pred = make_pair(args.sentences, args.seed)
    backends = _kernels.available()
    if len(backends) < 2:
        print("compiled backend not built; only timing the Python fallback")
    n_tokens = sum(len(s) for s in gold.sentences)
    print(f"{args.sentences} sentence pairs, {n_tokens} tokens per side, best of {args.repeat}")
    print(f"{'backend':<8} {'evaluate (s)':>13} {'kernels only (s)':>17}")

    results = {}
    for name, impl in sorted(backends.items()):
        types = sorted(gold.tagset | pred.tagset)
        from advner.evaluate import _encode

        g = _encode((s.tags for s in gold.sentences), types)
        p = _encode((s.tags for s in pred.sentences), types)

        def kernels_only():
            gs = _kernels.extract_flat(*g, impl=impl)
            ps = _kernels.extract_flat(*p, impl=impl)
            return _kernels.classify_flat(gs, ps, len(types), impl=impl)

        full = best_of(lambda: evaluate(gold, pred, impl=impl), args.repeat)
        core = best_of(kernels_only, args.repeat)
        results[name] = (full, core, list(kernels_only()))
        print(f"{name:<8} {full:>13.4f} {core:>17.4f}")

    if len(results) == 2:
        assert results["python"][2] == results["cython"][2], "backends disagree"
        print(f"speedup: evaluate x{results['python'][0] / results['cython'][0]:.1f}, "
              f"kernels x{results['python'][1] / results['cython'][1]:.1f}")


if __name__ == "__main__":
    main()
