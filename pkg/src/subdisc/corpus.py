"""Corpus data model and on-disk formats.

Formats owned by this module:

* manifest: TSV with header ``utt_id  speaker_id  n_frames  frame_shift_s
  feature_path  [label_path]``; paths are relative to the manifest's
  directory.
* feature file ("SDF1"): magic ``SDF1``, u32 T, u32 D, f32 frame shift in
  seconds, then T*D float32 row-major, all little-endian.
* frame labels: plain text, one integer per line (or one space-separated
  line).
* item file: TSV with header ``utt_id  onset_frame  offset_frame  phone
  speaker_id``; offsets are exclusive, in frames.

Frame shifts are canonicalized to float32-representable values everywhere so
that in-memory values survive the f32 field of the feature file bit-exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import CodecError, DataError

FEATURE_MAGIC = b"SDF1"

MANIFEST_COLUMNS = ("utt_id", "speaker_id", "n_frames", "frame_shift_s", "feature_path")
ITEM_COLUMNS = ("utt_id", "onset_frame", "offset_frame", "phone", "speaker_id")


def canonical_frame_shift(value: float) -> float:
    """Round a frame shift to the nearest float32-representable double."""
    return float(np.float32(value))


@dataclass
class FeatureMatrix:
    """A T x D sequence of real-valued frames with frame-rate metadata."""

    frames: np.ndarray
    frame_shift_s: float

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {frames.shape}")
        if frames.dtype not in (np.float32, np.float64):
            frames = frames.astype(np.float64)
        if frames.size and not np.all(np.isfinite(frames)):
            raise DataError("feature matrix contains non-finite values")
        self.frames = frames
        self.frame_shift_s = canonical_frame_shift(self.frame_shift_s)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self.frame_shift_s == other.frame_shift_s
            and self.frames.shape == other.frames.shape
            and self.frames.dtype == other.frames.dtype
            and bool(np.all(self.frames == other.frames))
        )


@dataclass(frozen=True)
class UtteranceRecord:
    utt_id: str
    speaker_id: str
    n_frames: int
    frame_shift_s: float
    feature_path: Path
    label_path: Path | None = None

    @property
    def duration_s(self) -> float:
        return self.n_frames * self.frame_shift_s


@dataclass
class Manifest:
    """An ordered corpus index with unique utterance ids."""

    records: list[UtteranceRecord]
    by_id: dict[str, UtteranceRecord] = field(init=False, repr=False)

    def __post_init__(self):
        by_id: dict[str, UtteranceRecord] = {}
        for rec in self.records:
            if rec.utt_id in by_id:
                raise DataError(f"duplicate utt_id {rec.utt_id}")
            if rec.n_frames < 0:
                raise DataError(f"negative n_frames for {rec.utt_id}")
            by_id[rec.utt_id] = rec
        shifts = {rec.frame_shift_s for rec in self.records}
        if len(shifts) > 1:
            raise DataError(f"frame shift mismatch across manifest records: {sorted(shifts)}")
        self.by_id = by_id

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def total_hours(self) -> float:
        return sum(rec.duration_s for rec in self.records) / 3600.0

    @property
    def speakers(self) -> list[str]:
        return sorted({rec.speaker_id for rec in self.records})

    def frame_shift(self) -> float:
        if not self.records:
            raise DataError("empty manifest has no frame shift")
        return self.records[0].frame_shift_s


@dataclass(frozen=True)
class FrameLabels:
    """Per-frame integer class ids for one utterance."""

    utt_id: str
    labels: np.ndarray
    inventory_size: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise DataError(f"labels for {self.utt_id} must be 1-D")
        if labels.size and labels.min() < 0:
            raise DataError(f"negative label in {self.utt_id}")
        if labels.size and labels.max() >= self.inventory_size:
            raise DataError(
                f"label {labels.max()} out of inventory {self.inventory_size} in {self.utt_id}"
            )
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class SegmentItem:
    """One evaluation segment: a frame span of an utterance with its phone."""

    utt_id: str
    onset_frame: int
    offset_frame: int
    phone: str
    speaker_id: str

    def __post_init__(self):
        if self.onset_frame < 0:
            raise DataError(f"negative onset in item for {self.utt_id}")
        if self.offset_frame <= self.onset_frame:
            raise DataError(
                f"empty segment for {self.utt_id}: [{self.onset_frame}, {self.offset_frame})"
            )

    @property
    def n_frames(self) -> int:
        return self.offset_frame - self.onset_frame


# ---------------------------------------------------------------------------
# manifest I/O


def _parse_header(line: str, required: tuple[str, ...], path: Path) -> list[str]:
    cols = line.rstrip("\n").split("\t")
    if tuple(cols[: len(required)]) != required:
        raise DataError(f"{path}: bad header {cols!r}, expected columns {list(required)}")
    return cols


def load_manifest(path: str | Path) -> Manifest:
    """Load and validate a TSV manifest.

    Raises DataError naming the offending utt_id / line for duplicates and
    malformed rows.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    base = path.parent
    records = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise DataError(f"{path}: empty manifest file")
        cols = _parse_header(header, MANIFEST_COLUMNS, path)
        has_labels = len(cols) > 5 and cols[5] == "label_path"
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) < 5:
                raise DataError(f"{path}:{lineno}: malformed row ({len(fields)} columns)")
            try:
                n_frames = int(fields[2])
                shift = canonical_frame_shift(float(fields[3]))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if n_frames < 0:
                raise DataError(f"{path}:{lineno}: negative n_frames")
            label_path = None
            if has_labels and len(fields) > 5 and fields[5]:
                label_path = base / fields[5]
            records.append(
                UtteranceRecord(
                    utt_id=fields[0],
                    speaker_id=fields[1],
                    n_frames=n_frames,
                    frame_shift_s=shift,
                    feature_path=base / fields[4],
                    label_path=label_path,
                )
            )
    return Manifest(records)


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write a manifest with paths stored relative to the manifest's directory."""
    path = Path(path)
    base = path.parent
    has_labels = any(rec.label_path is not None for rec in manifest)
    header = list(MANIFEST_COLUMNS) + (["label_path"] if has_labels else [])
    lines = ["\t".join(header)]
    for rec in manifest:
        row = [
            rec.utt_id,
            rec.speaker_id,
            str(rec.n_frames),
            repr(rec.frame_shift_s),
            _relpath(rec.feature_path, base),
        ]
        if has_labels:
            row.append(_relpath(rec.label_path, base) if rec.label_path else "")
        lines.append("\t".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _relpath(target: Path, base: Path) -> str:
    try:
        return str(Path(target).resolve().relative_to(base.resolve()))
    except ValueError:
        return str(target)


# ---------------------------------------------------------------------------
# feature file codec


def write_feature_file(features: FeatureMatrix, path: str | Path) -> None:
    frames = features.frames
    if not np.all(np.isfinite(frames)):
        raise CodecError("refusing to write non-finite features")
    t, d = frames.shape
    payload = np.ascontiguousarray(frames, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<IIf", t, d, features.frame_shift_s))
        fh.write(payload)


def read_feature_file(path: str | Path) -> FeatureMatrix:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CodecError(f"cannot read feature file {path}: {exc}") from exc
    if len(raw) < 4 or raw[:4] != FEATURE_MAGIC:
        raise CodecError(f"{path}: bad magic")
    if len(raw) < 16:
        raise CodecError(f"{path}: truncated header")
    t, d, shift = struct.unpack("<IIf", raw[4:16])
    expected = 16 + t * d * 4
    if len(raw) < expected:
        raise CodecError(f"{path}: truncated payload ({len(raw)} bytes, expected {expected})")
    if len(raw) > expected:
        raise CodecError(f"{path}: trailing bytes after payload")
    frames = np.frombuffer(raw[16:], dtype="<f4").reshape(t, d).copy()
    return FeatureMatrix(frames=frames, frame_shift_s=float(shift))


# ---------------------------------------------------------------------------
# frame labels


def load_frame_labels(path: str | Path, expected_t: int,
                      inventory_size: int | None = None) -> FrameLabels:
    """Read integer frame labels; length must equal ``expected_t``."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"label file not found: {path}")
    tokens = path.read_text(encoding="utf-8").split()
    try:
        values = [int(tok) for tok in tokens]
    except ValueError as exc:
        raise DataError(f"{path}: non-integer label: {exc}") from exc
    if len(values) != expected_t:
        raise DataError(f"{path}: label length {len(values)} != {expected_t}")
    for v in values:
        if v < 0:
            raise DataError(f"{path}: negative label {v}")
    if inventory_size is None:
        inventory_size = (max(values) + 1) if values else 1
    return FrameLabels(utt_id=path.stem, labels=np.array(values, dtype=np.int64),
                       inventory_size=inventory_size)


def write_frame_labels(labels: FrameLabels, path: str | Path) -> None:
    Path(path).write_text("\n".join(str(int(v)) for v in labels.labels) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# item files


def load_item_file(path: str | Path, manifest: Manifest) -> list[SegmentItem]:
    """Read evaluation segments and validate them against the manifest."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"item file not found: {path}")
    items = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        _parse_header(header, ITEM_COLUMNS, path)
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise DataError(f"{path}:{lineno}: malformed row")
            utt_id, onset_s, offset_s, phone, speaker = fields
            rec = manifest.by_id.get(utt_id)
            if rec is None:
                raise DataError(f"{path}:{lineno}: unknown utterance {utt_id}")
            try:
                onset, offset = int(onset_s), int(offset_s)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if offset <= onset:
                raise DataError(f"{path}:{lineno}: empty segment [{onset}, {offset})")
            if onset < 0 or offset > rec.n_frames:
                raise DataError(
                    f"{path}:{lineno}: segment [{onset}, {offset}) outside "
                    f"utterance {utt_id} with {rec.n_frames} frames"
                )
            if speaker != rec.speaker_id:
                raise DataError(
                    f"{path}:{lineno}: speaker {speaker} does not match manifest "
                    f"speaker {rec.speaker_id} for {utt_id}"
                )
            items.append(SegmentItem(utt_id, onset, offset, phone, speaker))
    return items


def write_item_file(items: list[SegmentItem], path: str | Path) -> None:
    lines = ["\t".join(ITEM_COLUMNS)]
    for it in items:
        lines.append(
            "\t".join([it.utt_id, str(it.onset_frame), str(it.offset_frame), it.phone, it.speaker_id])
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# subset selection


def subset_manifest(manifest: Manifest, target_hours: float, seed: int) -> Manifest:
    """Select whole utterances by seeded shuffle until >= target_hours.

    For a fixed seed the selection is a prefix of one permutation, so smaller
    targets are subsets of larger ones. Records keep their manifest order.
    """
    available = manifest.total_hours
    if target_hours > available:
        raise DataError(
            f"target_hours {target_hours} exceeds available {available:.6g} hours"
        )
    order = np.random.default_rng(seed).permutation(len(manifest.records))
    chosen: set[int] = set()
    acc = 0.0
    target_s = target_hours * 3600.0
    for idx in order:
        if acc >= target_s:
            break
        chosen.add(int(idx))
        acc += manifest.records[idx].duration_s
    picked = [rec for i, rec in enumerate(manifest.records) if i in chosen]
    return Manifest(picked)


def load_features_for(rec: UtteranceRecord) -> FeatureMatrix:
    feats = read_feature_file(rec.feature_path)
    if feats.n_frames != rec.n_frames:
        raise DataError(
            f"{rec.utt_id}: manifest says {rec.n_frames} frames, "
            f"feature file has {feats.n_frames}"
        )
    return feats
