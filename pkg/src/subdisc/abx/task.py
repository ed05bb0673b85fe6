"""ABX task construction: segment materialization and triple enumeration.

A triple is (A, B, X) with A and B from the same speaker and different
phones, and X sharing A's phone. The symmetric case "X matches B" is covered
by the mirrored phone-pair cell. Cells — the units later macro-averaged —
are (phone_a, phone_b, speaker) for within-speaker mode and
(phone_a, phone_b, speaker_ab, speaker_x) for across-speaker mode.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..corpus import FeatureMatrix, SegmentItem
from ..errors import DataError

MODES = ("within", "across")


@dataclass(frozen=True)
class AbxTriple:
    a: int
    b: int
    x: int
    mode: str


@dataclass(frozen=True)
class Cell:
    key: tuple[str, ...]
    a_pool: tuple[int, ...]
    b_pool: tuple[int, ...]
    x_pool: tuple[int, ...]
    shared_ax_pool: bool  # X drawn from A's pool with A excluded (within mode)

    @property
    def n_triples(self) -> int:
        na, nb, nx = len(self.a_pool), len(self.b_pool), len(self.x_pool)
        if self.shared_ax_pool:
            return na * (na - 1) * nb
        return na * nb * nx

    def decode(self, flat: int, mode: str) -> AbxTriple:
        nb = len(self.b_pool)
        if self.shared_ax_pool:
            na = len(self.a_pool)
            block = (na - 1) * nb
            ia, rest = divmod(flat, block)
            ix_prime, ib = divmod(rest, nb)
            ix = ix_prime if ix_prime < ia else ix_prime + 1
            return AbxTriple(self.a_pool[ia], self.b_pool[ib], self.x_pool[ix], mode)
        nx = len(self.x_pool)
        ia, rest = divmod(flat, nb * nx)
        ib, ix = divmod(rest, nx)
        return AbxTriple(self.a_pool[ia], self.b_pool[ib], self.x_pool[ix], mode)


def build_segments(items: list[SegmentItem],
                   features: dict[str, FeatureMatrix]) -> list[np.ndarray]:
    """Slice each item's frame span out of its utterance's features."""
    segments = []
    for item in items:
        feats = features.get(item.utt_id)
        if feats is None:
            raise DataError(f"no features for utterance {item.utt_id}")
        if item.offset_frame > feats.n_frames:
            raise DataError(
                f"item [{item.onset_frame}, {item.offset_frame}) exceeds "
                f"{item.utt_id} with {feats.n_frames} frames"
            )
        segments.append(feats.frames[item.onset_frame: item.offset_frame])
    return segments


def _pools(items: list[SegmentItem]):
    by_phone_speaker: dict[tuple[str, str], list[int]] = {}
    for idx, item in enumerate(items):
        by_phone_speaker.setdefault((item.phone, item.speaker_id), []).append(idx)
    return by_phone_speaker


def build_cells(items: list[SegmentItem], mode: str) -> list[Cell]:
    """All scorable cells for the mode, in deterministic key order."""
    if mode not in MODES:
        raise DataError(f"unknown ABX mode {mode!r}")
    pools = _pools(items)
    phones = sorted({p for p, _ in pools})
    speakers = sorted({s for _, s in pools})
    cells = []
    if len(phones) < 2:
        raise DataError("empty task: need at least two phones")
    for pa in phones:
        for pb in phones:
            if pa == pb:
                continue
            for spk in speakers:
                a_pool = pools.get((pa, spk), ())
                b_pool = pools.get((pb, spk), ())
                if not a_pool or not b_pool:
                    continue
                if mode == "within":
                    if len(a_pool) < 2:
                        continue
                    cells.append(Cell((pa, pb, spk), tuple(a_pool), tuple(b_pool),
                                      tuple(a_pool), True))
                else:
                    for spk_x in speakers:
                        if spk_x == spk:
                            continue
                        x_pool = pools.get((pa, spk_x), ())
                        if not x_pool:
                            continue
                        cells.append(Cell((pa, pb, spk, spk_x), tuple(a_pool),
                                          tuple(b_pool), tuple(x_pool), False))
    if not cells:
        raise DataError(f"empty task: no valid {mode}-speaker triples")
    return cells


def enumerate_triples(items: list[SegmentItem], mode: str):
    """Exhaustively yield every valid triple, grouped by cell, in
    deterministic order."""
    for cell in build_cells(items, mode):
        for flat in range(cell.n_triples):
            yield cell.decode(flat, mode)


def _cell_rng(cell: Cell, seed: int) -> np.random.Generator:
    digest = hashlib.sha256("|".join(cell.key).encode("utf-8")).digest()
    return np.random.default_rng([seed, int.from_bytes(digest[:8], "little")])


def sample_cell_triples(cell: Cell, mode: str, cap: int | None,
                        seed: int = 0) -> list[AbxTriple]:
    """The cell's triples, capped to a seeded sample when over the cap."""
    total = cell.n_triples
    if cap is None or total <= cap:
        flats = range(total)
    else:
        rng = _cell_rng(cell, seed)
        flats = np.sort(rng.choice(total, size=cap, replace=False))
    return [cell.decode(int(f), mode) for f in flats]
