# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled span kernels; same contract as ``_pykernels``."""
from array import array

cdef enum:
    N_SCHEMAS = 4
    N_CATEGORIES = 5
    COR = 0
    INC = 1
    PAR = 2
    MIS = 3
    SPU = 4

cdef inline void bump(long long[::1] counts, Py_ssize_t etype, int c0, int c1, int c2, int c3):
    cdef Py_ssize_t base = etype * N_SCHEMAS * N_CATEGORIES
    counts[base + c0] += 1
    counts[base + N_CATEGORIES + c1] += 1
    counts[base + 2 * N_CATEGORIES + c2] += 1
    counts[base + 3 * N_CATEGORIES + c3] += 1


def extract_flat(const long long[::1] codes, const long long[::1] offsets):
    cdef Py_ssize_t s, i, lo, hi
    cdef long long c, open_start, open_type
    cdef Py_ssize_t n_sent = offsets.shape[0] - 1
    starts = array("q")
    ends = array("q")
    types = array("q")
    span_off = array("q", [0])
    for s in range(n_sent):
        lo = offsets[s]
        hi = offsets[s + 1]
        open_start = -1
        open_type = -1
        for i in range(lo, hi):
            c = codes[i]
            if c != 0 and c % 2 == 0:
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


cdef int check_sorted(const long long[::1] starts, const long long[::1] ends, Py_ssize_t lo, Py_ssize_t hi):
    cdef Py_ssize_t j
    for j in range(lo + 1, hi):
        if starts[j] < ends[j - 1]:
            return 0
    return 1


def classify_flat(const long long[::1] g_start, const long long[::1] g_end, const long long[::1] g_type,
                  const long long[::1] g_off,
                  const long long[::1] p_start, const long long[::1] p_end, const long long[::1] p_type,
                  const long long[::1] p_off, Py_ssize_t n_types):
    cdef Py_ssize_t n_sent = g_off.shape[0] - 1
    cdef Py_ssize_t s, g, j, glo, ghi, plo, phi, first, best
    cdef long long gs, ge, ps, pe, overlap, best_overlap
    cdef bint exact, best_exact, same
    out = array("q", bytes(8 * n_types * N_SCHEMAS * N_CATEGORIES))
    cdef long long[::1] counts = out
    n_pred = p_start.shape[0]
    used_buf = array("b", bytes(n_pred))
    cdef signed char[::1] used = used_buf

    for s in range(n_sent):
        glo = g_off[s]
        ghi = g_off[s + 1]
        plo = p_off[s]
        phi = p_off[s + 1]
        if not check_sorted(g_start, g_end, glo, ghi) or not check_sorted(p_start, p_end, plo, phi):
            raise ValueError(s, "overlapping or unsorted spans")
        first = plo
        for g in range(glo, ghi):
            gs = g_start[g]
            ge = g_end[g]
            while first < phi and p_end[first] <= gs:
                first += 1
            best = -1
            best_exact = False
            best_overlap = 0
            j = first
            while j < phi and p_start[j] < ge:
                if not used[j]:
                    ps = p_start[j]
                    pe = p_end[j]
                    exact = ps == gs and pe == ge
                    overlap = (pe if pe < ge else ge) - (ps if ps > gs else gs)
                    if best < 0 or (exact and not best_exact) or (exact == best_exact and overlap > best_overlap):
                        best = j
                        best_exact = exact
                        best_overlap = overlap
                j += 1
            if best < 0:
                bump(counts, g_type[g], MIS, MIS, MIS, MIS)
            else:
                used[best] = 1
                same = p_type[best] == g_type[g]
                if best_exact and same:
                    bump(counts, g_type[g], COR, COR, COR, COR)
                elif best_exact:
                    bump(counts, g_type[g], INC, COR, COR, INC)
                elif same:
                    bump(counts, g_type[g], INC, INC, PAR, COR)
                else:
                    bump(counts, g_type[g], INC, INC, PAR, INC)
        for j in range(plo, phi):
            if not used[j]:
                bump(counts, p_type[j], SPU, SPU, SPU, SPU)
    return out
