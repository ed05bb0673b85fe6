"""ABX scoring and aggregation.

Per triple: error 1.0 when the wrong-phone segment is strictly closer to X,
0.5 on an exact distance tie, else 0.0. Cell scores are triple means; a
mode's macro error is the unweighted mean over its cells. Reports embed the
frame metric and any per-cell cap so numbers are self-describing.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..corpus import FeatureMatrix, SegmentItem
from ..errors import DataError
from .dtw import dtw_distance
from .task import MODES, AbxTriple, build_cells, build_segments, sample_cell_triples


def worker_count() -> int:
    """Worker cap from SUBDISC_THREADS (0 = all cores; unset = 1)."""
    raw = os.environ.get("SUBDISC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise DataError(f"SUBDISC_THREADS must be an integer, got {raw!r}")
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


@dataclass
class CellScore:
    error: float
    n_triples: int


@dataclass
class ModeReport:
    macro_error: float
    n_triples: int
    cells: dict[str, CellScore] = field(default_factory=dict)


@dataclass
class AbxReport:
    feature_id: str
    metric: str
    modes: dict[str, ModeReport]
    cap_per_cell: int | None = None
    cap_seed: int = 0

    @property
    def average_error(self) -> float:
        return sum(m.macro_error for m in self.modes.values()) / len(self.modes)

    def to_json_dict(self) -> dict:
        return {
            "feature_id": self.feature_id,
            "metric": self.metric,
            "cap_per_cell": self.cap_per_cell,
            "cap_seed": self.cap_seed,
            "modes": {
                mode: {
                    "macro_error": rep.macro_error,
                    "n_triples": rep.n_triples,
                    "cells": {
                        key: {"error": c.error, "n_triples": c.n_triples}
                        for key, c in sorted(rep.cells.items())
                    },
                }
                for mode, rep in sorted(self.modes.items())
            },
            "average_error": self.average_error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def to_tsv(self) -> str:
        lines = ["feature_id\tmode\tcell\tn_triples\terror"]
        for mode, rep in sorted(self.modes.items()):
            lines.append(f"{self.feature_id}\t{mode}\tALL\t{rep.n_triples}\t{rep.macro_error!r}")
            for key, c in sorted(rep.cells.items()):
                lines.append(f"{self.feature_id}\t{mode}\t{key}\t{c.n_triples}\t{c.error!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_json_dict(cls, data: dict) -> "AbxReport":
        modes = {
            mode: ModeReport(
                macro_error=m["macro_error"],
                n_triples=m["n_triples"],
                cells={k: CellScore(v["error"], v["n_triples"]) for k, v in m["cells"].items()},
            )
            for mode, m in data["modes"].items()
        }
        return cls(data["feature_id"], data["metric"], modes,
                   data.get("cap_per_cell"), data.get("cap_seed", 0))


def _triple_error(d_ax: float, d_bx: float) -> float:
    if d_ax > d_bx:
        return 1.0
    if d_ax == d_bx:
        return 0.5
    return 0.0


class _DistanceCache:
    """Symmetric pairwise distance memo shared across cells."""

    def __init__(self, segments, metric):
        self.segments = segments
        self.metric = metric
        self.values: dict[tuple[int, int], float] = {}

    def __call__(self, i: int, j: int) -> float:
        key = (i, j) if i <= j else (j, i)
        val = self.values.get(key)
        if val is None:
            val = dtw_distance(self.segments[key[0]], self.segments[key[1]], self.metric)
            self.values[key] = val
        return val


def score_abx(triples_by_cell: dict[tuple[str, ...], list[AbxTriple]],
              segments: list[np.ndarray], mode: str,
              metric: str = "cosine",
              distance_cache: _DistanceCache | None = None) -> ModeReport:
    """Score pre-built triples. Aggregation is order-free: cell means, then
    an unweighted macro mean over cells sorted by key."""
    if not triples_by_cell:
        raise DataError("empty task: no triples to score")
    cache = distance_cache or _DistanceCache(segments, metric)

    def score_cell(cell_triples):
        total = 0.0
        for tr in cell_triples:
            total += _triple_error(cache(tr.a, tr.x), cache(tr.b, tr.x))
        return total / len(cell_triples), len(cell_triples)

    keys = sorted(triples_by_cell)
    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(lambda k: score_cell(triples_by_cell[k]), keys))
    else:
        scored = [score_cell(triples_by_cell[k]) for k in keys]
    cells = {"|".join(k): CellScore(err, n) for k, (err, n) in zip(keys, scored)}
    macro = float(np.mean([c.error for c in cells.values()]))
    return ModeReport(macro_error=macro, n_triples=sum(c.n_triples for c in cells.values()),
                      cells=cells)


def evaluate_abx(items: list[SegmentItem], features: dict[str, FeatureMatrix],
                 feature_id: str, metric: str = "cosine",
                 modes: tuple[str, ...] = MODES,
                 cap_per_cell: int | None = None, cap_seed: int = 0) -> AbxReport:
    """Full evaluation: materialize segments, build (possibly capped) triples
    for each mode, score, and aggregate into a report."""
    segments = build_segments(items, features)
    cache = _DistanceCache(segments, metric)
    mode_reports = {}
    for mode in modes:
        cells = build_cells(items, mode)
        triples = {
            cell.key: sample_cell_triples(cell, mode, cap_per_cell, cap_seed)
            for cell in cells
        }
        mode_reports[mode] = score_abx(triples, segments, mode, metric, cache)
    return AbxReport(feature_id=feature_id, metric=metric, modes=mode_reports,
                     cap_per_cell=cap_per_cell, cap_seed=cap_seed)


def evaluate_abx_on_features(features: dict[str, FeatureMatrix],
                             items: list[SegmentItem], feature_id: str,
                             metric: str = "cosine",
                             cap_per_cell: int | None = None,
                             cap_seed: int = 0) -> AbxReport:
    return evaluate_abx(items, features, feature_id, metric=metric,
                        cap_per_cell=cap_per_cell, cap_seed=cap_seed)
