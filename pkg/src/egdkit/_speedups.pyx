# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: connected-partition minor search and treewidth DP.

Semantics match ``_purepy`` exactly; hosts are limited to 63 vertices.
"""

from libc.stdlib cimport malloc, free

ctypedef unsigned long long u64

cdef extern from *:
    """
    static inline int egd_popcount(unsigned long long x) { return __builtin_popcountll(x); }
    static inline int egd_ctz(unsigned long long x) { return __builtin_ctzll(x); }
    """
    int egd_popcount(u64 x) nogil
    int egd_ctz(u64 x) nogil


cdef struct Search:
    int n
    int k
    int allow_unused
    int n_images
    u64 *adj
    u64 *images
    u64 parts[16]
    u64 quot[17]
    int pidx[16][16]


cdef inline int count_components(Search *st, u64 within) nogil:
    cdef int count = 0
    cdef u64 rest = within, comp, frontier, low, nb
    while rest:
        comp = rest & (~rest + 1)
        frontier = comp
        while frontier:
            low = frontier & (~frontier + 1)
            frontier ^= low
            nb = st.adj[egd_ctz(low)] & rest & ~comp
            comp |= nb
            frontier |= nb
        rest &= ~comp
        count += 1
    return count


cdef int leaf(Search *st, u64 q) nogil:
    cdef int t
    for t in range(st.n_images):
        if st.images[t] & ~q == 0:
            return t
    return -1


cdef int place(Search *st, int depth, u64 avail) nogil:
    cdef u64 v
    cdef int hit
    if depth == st.k:
        if avail and not st.allow_unused:
            return -1
        return leaf(st, st.quot[depth])
    if avail == 0:
        return -1
    if egd_popcount(avail) < st.k - depth:
        return -1
    v = avail & (~avail + 1)
    if st.allow_unused:
        hit = place(st, depth, avail & ~v)
        if hit >= 0:
            return hit
    return grow(st, depth, avail, v, avail & ~v & st.adj[egd_ctz(v)], 0)


cdef int commit(Search *st, int depth, u64 avail, u64 s) nogil:
    cdef u64 rest = avail & ~s
    cdef int left, p
    cdef u64 nb = 0, x, low, q
    if not st.allow_unused:
        left = st.k - depth - 1
        if left == 0:
            if rest:
                return -1
        elif rest == 0 or count_components(st, rest) > left:
            return -1
    x = s
    while x:
        low = x & (~x + 1)
        x ^= low
        nb |= st.adj[egd_ctz(low)]
    q = st.quot[depth]
    for p in range(depth):
        if nb & st.parts[p]:
            q |= (<u64>1) << st.pidx[p][depth]
    st.parts[depth] = s
    st.quot[depth + 1] = q
    return place(st, depth + 1, rest)


cdef int grow(Search *st, int depth, u64 avail, u64 s, u64 ext, u64 banned) nogil:
    cdef int hit = commit(st, depth, avail, s)
    cdef u64 w, wn
    if hit >= 0:
        return hit
    while ext:
        w = ext & (~ext + 1)
        ext ^= w
        wn = st.adj[egd_ctz(w)] & avail & ~s & ~banned & ~w
        hit = grow(st, depth, avail, s | w, ext | wn, banned)
        if hit >= 0:
            return hit
        banned |= w
    return -1


def partition_search(adj, int n, int k, images, allow_unused):
    """See ``_purepy.partition_search``."""
    if n > 63 or k > 16:
        raise ValueError("host limited to 63 vertices and model to 16")
    cdef Search st
    cdef int i, a, b, t, hit
    st.n = n
    st.k = k
    st.allow_unused = 1 if allow_unused else 0
    st.n_images = len(images)
    st.adj = <u64 *> malloc(max(n, 1) * sizeof(u64))
    st.images = <u64 *> malloc(max(st.n_images, 1) * sizeof(u64))
    try:
        for i in range(n):
            st.adj[i] = adj[i]
        for i in range(st.n_images):
            st.images[i] = images[i]
        t = 0
        for a in range(k):
            for b in range(a + 1, k):
                st.pidx[a][b] = t
                st.pidx[b][a] = t
                t += 1
        st.quot[0] = 0
        with nogil:
            hit = place(&st, 0, ((<u64>1) << n) - 1 if n < 64 else <u64>0)
        if hit < 0:
            return None
        return [int(st.parts[i]) for i in range(k)], hit
    finally:
        free(st.adj)
        free(st.images)


def treewidth_dp(adj, int n):
    """See ``_purepy.treewidth_dp``."""
    if n > 30:
        raise ValueError("treewidth DP limited to 30 vertices")
    cdef u64 size = (<u64>1) << n
    cdef signed char *tw = <signed char *> malloc(size)
    cdef u64 *am = <u64 *> malloc(max(n, 1) * sizeof(u64))
    cdef u64 s, x, low, rest, comp, frontier, lw, nb, reach, y
    cdef int best, prev, q, val, i, result
    try:
        for i in range(n):
            am[i] = adj[i]
        with nogil:
            tw[0] = -1
            for s in range(1, size):
                best = n + 1
                x = s
                while x:
                    low = x & (~x + 1)
                    x ^= low
                    rest = s & ~low
                    prev = tw[rest]
                    if prev >= best:
                        continue
                    comp = low
                    frontier = low
                    while frontier:
                        lw = frontier & (~frontier + 1)
                        frontier ^= lw
                        nb = am[egd_ctz(lw)] & rest & ~comp
                        comp |= nb
                        frontier |= nb
                    reach = 0
                    y = comp
                    while y:
                        lw = y & (~y + 1)
                        y ^= lw
                        reach |= am[egd_ctz(lw)]
                    q = egd_popcount(reach & ~s)
                    val = prev if prev > q else q
                    if val < best:
                        best = val
                tw[s] = best
            result = tw[size - 1]
        return result
    finally:
        free(tw)
        free(am)
