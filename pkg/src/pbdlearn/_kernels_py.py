"""Pure-Python (numpy) implementations of the hot kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature and semantics.  ``pbdlearn._backend`` picks one at import time.
"""
import numpy as np


def pbd_dp(probs):
    """Exact PMF of a sum of independent Bernoullis by the O(n^2) recurrence."""
    probs = np.asarray(probs, dtype=np.float64)
    n = probs.shape[0]
    mass = np.zeros(n + 1)
    mass[0] = 1.0
    for i, p in enumerate(probs):
        # the right-hand side is built before the slice is overwritten
        mass[1:i + 2] = mass[1:i + 2] * (1.0 - p) + mass[0:i + 1] * p
        mass[0] *= 1.0 - p
    return mass


def delta_statistics(pmfs, lo, hi, fhat):
    """Half the L1 gap on [lo, hi] plus the empirical mass outside it, per row."""
    pmfs = np.asarray(pmfs, dtype=np.float64)
    fhat = np.asarray(fhat, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    idx = np.arange(pmfs.shape[1])
    inside = (idx[None, :] >= lo[:, None]) & (idx[None, :] <= hi[:, None])
    gap = np.where(inside, np.abs(pmfs - fhat[None, :]), 0.0).sum(axis=1)
    covered = np.where(inside, fhat[None, :], 0.0).sum(axis=1)
    return 0.5 * (gap + 1.0 - covered)


def max_cdf_gaps(cdfs, ref):
    cdfs = np.asarray(cdfs, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    return np.abs(cdfs - ref[None, :]).max(axis=1)


def tv_to_ref(pmfs, ref):
    pmfs = np.asarray(pmfs, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    return 0.5 * np.abs(pmfs - ref[None, :]).sum(axis=1)


def competitions_vs(pmfs, opp, counts, m, delta):
    """Outcome of every row against one opponent, from the row's side.

    Returns int8 codes: 1 row wins, -1 opponent wins, 0 draw.  The pair is
    oriented canonically (the distribution with more mass at the first
    differing point owns W1), so the outcome does not depend on which side
    is called the row.
    """
    pmfs = np.asarray(pmfs, dtype=np.float64)
    opp = np.asarray(opp, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    diff = pmfs != opp[None, :]
    any_diff = diff.any(axis=1)
    first = diff.argmax(axis=1)
    rows = np.arange(pmfs.shape[0])
    row_first = pmfs[rows, first] > opp[first]

    a = np.where(row_first[:, None], pmfs, opp[None, :])
    b = np.where(row_first[:, None], opp[None, :], pmfs)
    w1 = a >= b
    p1 = np.where(w1, a, 0.0).sum(axis=1)
    q1 = np.where(w1, b, 0.0).sum(axis=1)
    t = np.where(w1, counts[None, :], 0.0).sum(axis=1) / m

    first_wins = (p1 - q1 > 5 * delta) & (t > p1 - 1.5 * delta)
    second_wins = (p1 - q1 > 5 * delta) & ~first_wins & (t < q1 + 1.5 * delta)
    out = np.zeros(pmfs.shape[0], dtype=np.int8)
    out[first_wins & row_first] = 1
    out[first_wins & ~row_first] = -1
    out[second_wins & row_first] = -1
    out[second_wins & ~row_first] = 1
    out[~any_diff] = 0
    return out


def competition_detail(a, b, counts, m):
    """(a_owns_w1, p1, q1, t) for a single pair under canonical orientation."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    diff = np.flatnonzero(a != b)
    a_first = bool(diff.size == 0 or a[diff[0]] > b[diff[0]])
    if not a_first:
        a, b = b, a
    w1 = a >= b
    p1 = float(np.where(w1, a, 0.0).sum())
    q1 = float(np.where(w1, b, 0.0).sum())
    t = float(np.where(w1, counts, 0.0).sum()) / m
    return a_first, p1, q1, t
