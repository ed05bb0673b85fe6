"""Shared independent oracles used by unit and acceptance tests.

Everything here is deliberately written from first principles (loops,
exhaustive enumeration) rather than reusing library code paths it checks.
"""

import numpy as np


def finite_difference_grads(loss_fn, params: dict[str, np.ndarray], step: float = 1e-5):
    """Central finite differences of a scalar loss w.r.t. named float64 arrays."""
    grads = {}
    for name, arr in params.items():
        g = np.zeros_like(arr, dtype=np.float64)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_fn()
            flat[i] = orig - step
            down = loss_fn()
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * step)
        grads[name] = g
    return grads


def max_relative_error(analytic: dict[str, np.ndarray], numeric: dict[str, np.ndarray],
                       floor: float = 1e-5) -> float:
    worst = 0.0
    for name in numeric:
        a = np.asarray(analytic[name], dtype=np.float64)
        n = numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def enumerate_dtw_paths(n_a: int, n_x: int):
    """All monotone index paths from (0,0) to (n_a-1, n_x-1) with steps
    (1,0), (0,1), (1,1)."""
    paths = []

    def walk(i, j, acc):
        if i == n_a - 1 and j == n_x - 1:
            paths.append(list(acc))
            return
        if i + 1 < n_a:
            acc.append((i + 1, j))
            walk(i + 1, j, acc)
            acc.pop()
        if j + 1 < n_x:
            acc.append((i, j + 1))
            walk(i, j + 1, acc)
            acc.pop()
        if i + 1 < n_a and j + 1 < n_x:
            acc.append((i + 1, j + 1))
            walk(i + 1, j + 1, acc)
            acc.pop()

    walk(0, 0, [(0, 0)])
    return paths


def cosine_cost_matrix(seg_a: np.ndarray, seg_x: np.ndarray) -> np.ndarray:
    """1 - cosine similarity per frame pair; zero-vs-zero costs 0, zero-vs-other 1."""
    cost = np.empty((len(seg_a), len(seg_x)))
    for i, a in enumerate(seg_a):
        for j, x in enumerate(seg_x):
            na = np.sqrt(float(np.dot(a, a)))
            nx = np.sqrt(float(np.dot(x, x)))
            if na == 0.0 and nx == 0.0:
                cost[i, j] = 0.0
            elif na == 0.0 or nx == 0.0:
                cost[i, j] = 1.0
            else:
                cost[i, j] = 1.0 - float(np.dot(a, x)) / (na * nx)
    return cost


def brute_force_dtw(seg_a: np.ndarray, seg_x: np.ndarray) -> float:
    """Exhaustive-path DTW: minimal accumulated cost, ties broken toward the
    shorter path, normalized by that path's node count."""
    cost = cosine_cost_matrix(seg_a, seg_x)
    best = None
    for path in enumerate_dtw_paths(len(seg_a), len(seg_x)):
        total = 0.0
        for i, j in path:
            total = total + cost[i, j]
        key = (total, len(path))
        if best is None or key < best:
            best = key
    return best[0] / best[1]


def brute_force_abx(segments, distance_fn):
    """Brute-force ABX scorer over materialized segments.

    ``segments`` is a list of dicts with keys ``phone``, ``speaker``,
    ``frames``. Returns {mode: {"cells": {key: (err, n)}, "macro": float,
    "n_triples": int}} using 0/0.5/1 error per triple, cell-mean then
    unweighted macro mean, cells keyed by (phone_a, phone_b, speaker...) with
    X always sharing A's phone.
    """
    result = {}
    for mode in ("within", "across"):
        cells = {}
        for ia, a in enumerate(segments):
            for ib, b in enumerate(segments):
                if a["phone"] == b["phone"] or a["speaker"] != b["speaker"]:
                    continue
                for ix, x in enumerate(segments):
                    if ix == ia or ix == ib or x["phone"] != a["phone"]:
                        continue
                    if mode == "within" and x["speaker"] != a["speaker"]:
                        continue
                    if mode == "across" and x["speaker"] == a["speaker"]:
                        continue
                    d_ax = distance_fn(a["frames"], x["frames"])
                    d_bx = distance_fn(b["frames"], x["frames"])
                    if d_ax > d_bx:
                        err = 1.0
                    elif d_ax == d_bx:
                        err = 0.5
                    else:
                        err = 0.0
                    if mode == "within":
                        key = (a["phone"], b["phone"], a["speaker"])
                    else:
                        key = (a["phone"], b["phone"], a["speaker"], x["speaker"])
                    tot, cnt = cells.get(key, (0.0, 0))
                    cells[key] = (tot + err, cnt + 1)
        rates = {k: (tot / cnt, cnt) for k, (tot, cnt) in cells.items()}
        macro = sum(r for r, _ in rates.values()) / len(rates) if rates else float("nan")
        result[mode] = {
            "cells": rates,
            "macro": macro,
            "n_triples": sum(n for _, n in rates.values()),
        }
    return result


def plugin_mutual_information(x: np.ndarray, y: np.ndarray) -> float:
    """Plug-in MI estimate in nats between two integer label sequences."""
    x = np.asarray(x)
    y = np.asarray(y)
    n = len(x)
    joint = {}
    for a, b in zip(x.tolist(), y.tolist()):
        joint[(a, b)] = joint.get((a, b), 0) + 1
    px = {}
    py = {}
    for (a, b), c in joint.items():
        px[a] = px.get(a, 0) + c
        py[b] = py.get(b, 0) + c
    mi = 0.0
    for (a, b), c in joint.items():
        p_ab = c / n
        mi += p_ab * np.log(p_ab / (px[a] / n * py[b] / n))
    return float(mi)
