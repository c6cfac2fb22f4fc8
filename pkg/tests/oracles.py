"""Slow reference implementations used only by the tests."""

import numpy as np
from scipy.optimize import least_squares
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching


def in_window(ta, tb, window, offset=0):
    return 2 * abs(tb + offset - ta) <= window


def max_matching_size(a, b, window, offset=0):
    """Largest one-to-one pairing of a and b inside the window (graph matching)."""
    if len(a) == 0 or len(b) == 0:
        return 0
    rows, cols = [], []
    for i, ta in enumerate(a):
        for j, tb in enumerate(b):
            if in_window(int(ta), int(tb), window, offset):
                rows.append(i)
                cols.append(j)
    if not rows:
        return 0
    g = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(a), len(b)))
    m = maximum_bipartite_matching(g, perm_type="column")
    return int(np.sum(m >= 0))


def greedy_flags(a, b, window, offset=0):
    """O(n^2): each a tag, in time order, takes the earliest unused b in its window."""
    used = np.zeros(len(b), dtype=bool)
    flags = np.zeros(len(a), dtype=bool)
    for i, ta in enumerate(a):
        for j, tb in enumerate(b):
            if not used[j] and in_window(int(ta), int(tb), window, offset):
                used[j] = True
                flags[i] = True
                break
    return flags


def greedy_triples(h, a, b, window, offsets=(0, 0)):
    return int(np.sum(greedy_flags(h, a, window, offsets[0])
                      & greedy_flags(h, b, window, offsets[1])))


def existential_triples(h, a, b, window):
    """O(n^3): herald tags with at least one partner in a and one in b."""
    n = 0
    for th in h:
        hit = False
        for ta in a:
            if not in_window(int(th), int(ta), window):
                continue
            for tb in b:
                if in_window(int(th), int(tb), window):
                    hit = True
                    break
            if hit:
                break
        n += hit
    return n


def scipy_fringe_fit(y, p0):
    x = np.arange(len(y), dtype=float)

    def resid(p):
        Y0, A, x0, w, B, om, ph = p
        return Y0 + A * np.exp(-(x - x0) ** 2 / (2 * w**2)) * (1 + B * np.sin(om * x + ph)) - y

    return least_squares(resid, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15).x
