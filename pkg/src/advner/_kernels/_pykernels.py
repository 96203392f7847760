"""Pure-Python span kernels. ``_ckernels.pyx`` implements the same functions.

Encoded tags: 0 is Outside, ``2*t + 1`` is B-<type t>, ``2*t + 2`` is I-<type t>.
Spans are parallel (start, end, type) arrays with per-sentence offsets, so
sentence ``i`` owns spans ``off[i]:off[i+1]``.

Count layout: ``counts[(type * N_SCHEMAS + schema) * N_CATEGORIES + category]``.
"""

N_SCHEMAS = 4  # strict, exact, partial, type
N_CATEGORIES = 5  # correct, incorrect, partial, missed, spurious

COR, INC, PAR, MIS, SPU = range(N_CATEGORIES)

# (exact boundary, same type) -> category per schema
OUTCOMES = {
    (True, True): (COR, COR, COR, COR),
    (True, False): (INC, COR, COR, INC),
    (False, True): (INC, INC, PAR, COR),
    (False, False): (INC, INC, PAR, INC),
}


def extract_flat(codes, offsets):
    """Spans of every sentence. Raises ValueError(sentence, position) on bad IOB2."""
    starts, ends, types = [], [], []
    span_off = [0]
    for s in range(len(offsets) - 1):
        lo, hi = offsets[s], offsets[s + 1]
        open_start = -1
        open_type = -1
        for i in range(lo, hi):
            c = codes[i]
            if c != 0 and c % 2 == 0:  # inside
                if open_start < 0 or (c - 2) // 2 != open_type:
                    raise ValueError(s, i - lo)
                continue
            if open_start >= 0:
                starts.append(open_start)
                ends.append(i - lo)
                types.append(open_type)
                open_start = -1
            if c != 0:
                open_start = i - lo
                open_type = (c - 1) // 2
        if open_start >= 0:
            starts.append(open_start)
            ends.append(hi - lo)
            types.append(open_type)
        span_off.append(len(starts))
    return starts, ends, types, span_off


def _check_sorted(starts, ends, lo, hi, sentence):
    for j in range(lo + 1, hi):
        if starts[j] < ends[j - 1]:
            raise ValueError(sentence, "overlapping or unsorted spans")


def classify_flat(g_start, g_end, g_type, g_off, p_start, p_end, p_type, p_off, n_types):
    counts = [0] * (n_types * N_SCHEMAS * N_CATEGORIES)

    def bump(etype, cats):
        base = etype * N_SCHEMAS * N_CATEGORIES
        for schema in range(N_SCHEMAS):
            counts[base + schema * N_CATEGORIES + cats[schema]] += 1

    missed = (MIS,) * N_SCHEMAS
    spurious = (SPU,) * N_SCHEMAS

    for s in range(len(g_off) - 1):
        glo, ghi = g_off[s], g_off[s + 1]
        plo, phi = p_off[s], p_off[s + 1]
        _check_sorted(g_start, g_end, glo, ghi, s)
        _check_sorted(p_start, p_end, plo, phi, s)
        used = [False] * (phi - plo)
        first = plo  # first pred that may still overlap the current gold span
        for g in range(glo, ghi):
            gs, ge = g_start[g], g_end[g]
            while first < phi and p_end[first] <= gs:
                first += 1
            best = -1
            best_exact = False
            best_overlap = 0
            j = first
            while j < phi and p_start[j] < ge:
                if not used[j - plo]:
                    ps, pe = p_start[j], p_end[j]
                    exact = ps == gs and pe == ge
                    overlap = min(pe, ge) - max(ps, gs)
                    # ties on overlap keep the earlier (smaller start) pred
                    if best < 0 or (exact and not best_exact) or (exact == best_exact and overlap > best_overlap):
                        best, best_exact, best_overlap = j, exact, overlap
                j += 1
            if best < 0:
                bump(g_type[g], missed)
            else:
                used[best - plo] = True
                bump(g_type[g], OUTCOMES[(best_exact, p_type[best] == g_type[g])])
        for j in range(plo, phi):
            if not used[j - plo]:
                bump(p_type[j], spurious)
    return counts
