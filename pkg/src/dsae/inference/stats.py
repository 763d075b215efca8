"""Rank-sum test, one-sided two-sample KS test and histogram mutual information."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import rankdata


EXACT_MAX_GROUP = 8


def _exact_rank_sum_p(doubled: np.ndarray, n1: int, w2: int) -> float:
    """Two-sided permutation p-value of a rank sum, ranks given doubled as ints.

    Counts the size-``n1`` subsets by rank sum with a subset-sum recursion;
    a subset is as extreme as the observed one when its sum deviates from the
    mean at least as much.
    """
    n = len(doubled)
    total = int(doubled.sum())
    counts = [[0] * (total + 1) for _ in range(n1 + 1)]
    counts[0][0] = 1
    for r in doubled.tolist():
        for k in range(min(n1, n) - 1, -1, -1):
            row, nxt = counts[k], counts[k + 1]
            for s in range(total - r, -1, -1):
                if row[s]:
                    nxt[s + r] += row[s]
    mu2 = n1 * (n + 1)
    dev = abs(w2 - mu2)
    dist = counts[n1]
    hits = sum(c for s, c in enumerate(dist) if c and abs(s - mu2) >= dev)
    return hits / math.comb(n, n1)


def wilcoxon_rank_sum(a, b) -> tuple[float, float]:
    """Rank-sum statistic of ``a`` and its two-sided p-value.

    When both groups have at most ``EXACT_MAX_GROUP`` observations the
    p-value is exact under the permutation distribution of the (mid)ranks.
    Larger samples use the normal approximation with tie-corrected variance
    and a 0.5 continuity correction. If every observation is tied the
    p-value is 1.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 3 or len(b) < 3:
        raise ValueError("each group needs at least three observations")
    n1, n2 = len(a), len(b)
    n = n1 + n2
    ranks = rankdata(np.concatenate([a, b]))
    w = float(ranks[:n1].sum())
    if max(n1, n2) <= EXACT_MAX_GROUP:
        doubled = np.rint(2 * ranks).astype(np.int64)
        return w, _exact_rank_sum_p(doubled, n1, int(doubled[:n1].sum()))
    _, counts = np.unique(ranks, return_counts=True)
    tie = float(np.sum(counts ** 3 - counts)) / (n * (n - 1))
    var = n1 * n2 / 12.0 * ((n + 1) - tie)
    if var <= 0:
        return w, 1.0
    z = max(abs(w - n1 * (n + 1) / 2.0) - 0.5, 0.0) / math.sqrt(var)
    return w, min(1.0, math.erfc(z / math.sqrt(2.0)))


def ks_test_one_sided(sample_high, sample_low) -> tuple[float, float]:
    """``D+ = sup_x (F_low(x) - F_high(x))`` and ``p = exp(-2 m D^2)``.

    Large ``D`` supports "``sample_high`` is stochastically larger";
    ``m = n1 n2 / (n1 + n2)``.
    """
    hi = np.sort(np.asarray(sample_high, dtype=float))
    lo = np.sort(np.asarray(sample_low, dtype=float))
    if len(hi) == 0 or len(lo) == 0:
        raise ValueError("both samples must be nonempty")
    n_hi, n_lo = len(hi), len(lo)
    grid = np.concatenate([hi, lo])
    c_hi = np.searchsorted(hi, grid, side="right").astype(np.int64)
    c_lo = np.searchsorted(lo, grid, side="right").astype(np.int64)
    # integer numerator, single rounding: D is the correctly rounded rational
    d = max(0, int(np.max(c_lo * n_hi - c_hi * n_lo))) / (n_hi * n_lo)
    m = n_hi * n_lo / (n_hi + n_lo)
    return d, float(min(1.0, math.exp(-2.0 * m * d * d)))


def mutual_information(x, y, bins: int = 8) -> float:
    """Plug-in MI (nats) from an equal-width ``bins x bins`` histogram."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError("x and y must have equal length")
    if len(x) < bins:
        raise ValueError("need at least as many observations as bins")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0
    joint, _, _ = np.histogram2d(x, y, bins=bins)
    total = joint.sum()
    # marginals from integer counts, so both argument orders see identical values
    p = joint / total
    px = joint.sum(axis=1, keepdims=True) / total
    py = joint.sum(axis=0, keepdims=True) / total
    nz = p > 0
    terms = p[nz] * np.log(p[nz] / (px @ py)[nz])
    # fsum is order-independent, so MI(x, y) == MI(y, x) bit for bit
    return max(0.0, math.fsum(terms.tolist()))
