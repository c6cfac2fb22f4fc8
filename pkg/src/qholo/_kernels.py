"""Sequential sweeps over sorted integer timestamps, compiled with numba."""

import numpy as np
from numba import njit


@njit(cache=True)
def dead_time_mask(tags, dead_ps):
    # tags must be sorted; a tag is kept when it is at least dead_ps after
    # the previous *kept* tag.
    n = tags.size
    keep = np.zeros(n, dtype=np.bool_)
    if n == 0:
        return keep
    keep[0] = True
    last = tags[0]
    for i in range(1, n):
        if tags[i] - last >= dead_ps:
            keep[i] = True
            last = tags[i]
    return keep


@njit(cache=True)
def match_flags(a, b, window, offset):
    """Flag the tags of ``a`` that get a partner in ``b``.

    Pairs satisfy ``2*|b + offset - a| <= window``.  Tags of ``a`` are taken
    in time order and each grabs the earliest unused ``b`` tag inside its
    window.  Because every window has the same width, this greedy choice is
    a maximum-cardinality one-to-one matching.
    """
    na = a.size
    nb = b.size
    flags = np.zeros(na, dtype=np.bool_)
    j = 0
    for i in range(na):
        ai = a[i]
        while j < nb and 2 * (ai - (b[j] + offset)) > window:
            j += 1
        if j < nb and 2 * ((b[j] + offset) - ai) <= window:
            flags[i] = True
            j += 1
    return flags


@njit(cache=True)
def difference_histogram(a, b, lo, hi, bin_ps, nbins):
    # histogram of a_i - b_j restricted to [lo, hi); bins start at lo
    hist = np.zeros(nbins, dtype=np.int64)
    nb = b.size
    start = 0
    for i in range(a.size):
        ai = a[i]
        # b is ascending so ai - b[j] falls with j; skip tags that are too early
        while start < nb and ai - b[start] >= hi:
            start += 1
        j = start
        while j < nb:
            d = ai - b[j]
            if d < lo:
                break
            k = (d - lo) // bin_ps
            if k < nbins:
                hist[k] += 1
            j += 1
    return hist
