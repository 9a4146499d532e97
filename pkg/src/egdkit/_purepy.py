"""Pure-Python versions of the hot kernels.

These mirror ``_speedups.pyx`` line for line and are used whenever the
compiled module is unavailable (or ``EGDKIT_PURE_PYTHON=1`` is set).
Vertex sets are Python ints used as bitmasks.
"""

from __future__ import annotations


def _components(adj, within):
    count = 0
    rest = within
    while rest:
        comp = rest & -rest
        frontier = comp
        while frontier:
            low = frontier & -frontier
            frontier ^= low
            nb = adj[low.bit_length() - 1] & rest & ~comp
            comp |= nb
            frontier |= nb
        rest &= ~comp
        count += 1
    return count


def _pair_index(k):
    idx = [[-1] * k for _ in range(k)]
    t = 0
    for a in range(k):
        for b in range(a + 1, k):
            idx[a][b] = idx[b][a] = t
            t += 1
    return idx


def partition_search(adj, n, k, images, allow_unused):
    """Search for ``k`` disjoint connected vertex sets whose quotient graph
    contains one of the edge-masks in ``images``.

    Without ``allow_unused`` the sets must cover every vertex (so the host is
    expected to be connected).  Parts are created in order of their lowest
    vertex.  Returns ``(parts, image_index)`` for the first hit, else None.
    """
    full = (1 << n) - 1
    pidx = _pair_index(k)
    parts = [0] * k
    nbr = [0] * k
    quot = [0] * (k + 1)

    def leaf(q):
        for t, img in enumerate(images):
            if img & ~q == 0:
                return t
        return -1

    def place(depth, avail):
        # avail: vertices not yet decided
        if depth == k:
            if avail and not allow_unused:
                return -1
            return leaf(quot[depth])
        if avail == 0:
            return -1
        need = k - depth
        if bin(avail).count("1") < need:
            return -1
        v = avail & -avail
        if allow_unused:
            hit = place(depth, avail & ~v)
            if hit >= 0:
                return hit
        # enumerate connected sets S with v = min(S), S within avail
        return grow(depth, avail, v, avail & ~v & adj[v.bit_length() - 1], 0)

    def commit(depth, avail, s):
        rest = avail & ~s
        if not allow_unused:
            left = k - depth - 1
            if left == 0:
                if rest:
                    return -1
            elif rest == 0 or _components(adj, rest) > left:
                return -1
        nb = 0
        x = s
        while x:
            low = x & -x
            x ^= low
            nb |= adj[low.bit_length() - 1]
        q = quot[depth]
        for p in range(depth):
            if nb & parts[p]:
                q |= 1 << pidx[p][depth]
        parts[depth] = s
        nbr[depth] = nb
        quot[depth + 1] = q
        return place(depth + 1, rest)

    def grow(depth, avail, s, ext, banned):
        hit = commit(depth, avail, s)
        if hit >= 0:
            return hit
        while ext:
            w = ext & -ext
            ext ^= w
            wn = adj[w.bit_length() - 1] & avail & ~s & ~banned & ~w
            hit = grow(depth, avail, s | w, ext | wn, banned)
            if hit >= 0:
                return hit
            banned |= w
        return -1

    hit = place(0, full)
    if hit < 0:
        return None
    return list(parts), hit


def treewidth_dp(adj, n):
    """Exact treewidth via TW(S) = min_v max(TW(S - v), |Q(S - v, v)|)."""
    size = 1 << n
    inf = n + 1
    tw = [inf] * size
    tw[0] = -1
    for s in range(1, size):
        best = inf
        x = s
        while x:
            low = x & -x
            x ^= low
            rest = s & ~low
            prev = tw[rest]
            if prev >= best:
                continue
            # vertices outside rest+v reachable from v through rest
            comp = low
            frontier = low
            while frontier:
                lw = frontier & -frontier
                frontier ^= lw
                nb = adj[lw.bit_length() - 1] & rest & ~comp
                comp |= nb
                frontier |= nb
            reach = 0
            y = comp
            while y:
                lw = y & -y
                y ^= lw
                reach |= adj[lw.bit_length() - 1]
            q = bin(reach & ~s).count("1")
            val = prev if prev > q else q
            if val < best:
                best = val
        tw[s] = best
    return tw[size - 1]
