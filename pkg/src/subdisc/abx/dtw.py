"""Dynamic time warping distance between frame sequences.

Alignment paths run from (0, 0) to (Ta-1, Tx-1) with steps (1,0), (0,1),
(1,1). The distance is the minimal accumulated frame-pair cost over such
paths — ties broken toward the fewest path nodes — divided by that path's
node count.

The default frame cost is cosine distance computed as half the squared
euclidean distance of the length-normalized frames, which is exactly zero
for identical frames and never negative. Zero-norm frames cost 0 against
another zero-norm frame and 1 against anything else.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError

FRAME_METRICS = ("cosine", "euclidean_sq")


def frame_cost_matrix(seg_a: np.ndarray, seg_x: np.ndarray,
                      metric: str = "cosine") -> np.ndarray:
    a = np.asarray(seg_a, dtype=np.float64)
    x = np.asarray(seg_x, dtype=np.float64)
    if a.ndim != 2 or x.ndim != 2 or a.shape[1] != x.shape[1]:
        raise DimensionError(f"segment shapes {a.shape} / {x.shape} are incompatible")
    if metric == "cosine":
        na = np.sqrt((a * a).sum(axis=1))
        nx = np.sqrt((x * x).sum(axis=1))
        zero_a = na == 0.0
        zero_x = nx == 0.0
        a_hat = np.where(zero_a[:, None], 0.0, a / np.where(zero_a, 1.0, na)[:, None])
        x_hat = np.where(zero_x[:, None], 0.0, x / np.where(zero_x, 1.0, nx)[:, None])
        diff = a_hat[:, None, :] - x_hat[None, :, :]
        cost = 0.5 * (diff * diff).sum(axis=2)
        either = zero_a[:, None] | zero_x[None, :]
        both = zero_a[:, None] & zero_x[None, :]
        cost[either] = 1.0
        cost[both] = 0.0
        return cost
    if metric == "euclidean_sq":
        diff = a[:, None, :] - x[None, :, :]
        return (diff * diff).sum(axis=2)
    raise DimensionError(f"unknown frame metric {metric!r}")


def _dp_min_sum(cost: np.ndarray) -> tuple[float, int]:
    """Anti-diagonal DP for (min accumulated cost, node count), ties on the
    accumulated cost resolved toward fewer nodes."""
    n, m = cost.shape
    big_len = np.iinfo(np.int64).max
    prev1 = None  # (i0, sums, lens) for diagonal d-1
    prev2 = None
    sums = lens = None
    for d in range(n + m - 1):
        i_lo = max(0, d - (m - 1))
        i_hi = min(d, n - 1)
        idx_i = np.arange(i_lo, i_hi + 1)
        c = cost[idx_i, d - idx_i]
        if d == 0:
            sums = np.array([cost[0, 0]])
            lens = np.array([1], dtype=np.int64)
        else:
            size = idx_i.size
            cand_s = np.full((3, size), np.inf)
            cand_l = np.full((3, size), big_len, dtype=np.int64)
            p_i0, p_s, p_l = prev1
            # step (1,0): predecessor (i-1, j)
            src = idx_i - 1 - p_i0
            ok = (idx_i >= 1) & (src >= 0) & (src < p_s.size)
            cand_s[0, ok] = p_s[src[ok]]
            cand_l[0, ok] = p_l[src[ok]]
            # step (0,1): predecessor (i, j-1)
            src = idx_i - p_i0
            ok = ((d - idx_i) >= 1) & (src >= 0) & (src < p_s.size)
            cand_s[1, ok] = p_s[src[ok]]
            cand_l[1, ok] = p_l[src[ok]]
            # step (1,1): predecessor (i-1, j-1)
            if prev2 is not None:
                p_i0, p_s, p_l = prev2
                src = idx_i - 1 - p_i0
                ok = (idx_i >= 1) & ((d - idx_i) >= 1) & (src >= 0) & (src < p_s.size)
                cand_s[2, ok] = p_s[src[ok]]
                cand_l[2, ok] = p_l[src[ok]]
            best_s = cand_s.min(axis=0)
            tied = cand_s == best_s
            best_l = np.where(tied, cand_l, big_len).min(axis=0)
            sums = best_s + c
            lens = best_l + 1
        prev2 = prev1
        prev1 = (i_lo, sums, lens)
    return float(sums[-1]), int(lens[-1])


def dtw_distance(seg_a: np.ndarray, seg_x: np.ndarray,
                 frame_metric: str = "cosine") -> float:
    """Length-normalized DTW distance between two (T, D) segments."""
    seg_a = np.asarray(seg_a)
    seg_x = np.asarray(seg_x)
    if seg_a.shape[0] < 1 or seg_x.shape[0] < 1:
        raise DimensionError("segments must have at least one frame")
    cost = frame_cost_matrix(seg_a, seg_x, frame_metric)
    total, length = _dp_min_sum(cost)
    return total / length
