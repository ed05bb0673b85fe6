"""MFCC front-end and speaker-level cepstral mean normalization.

Recipe: DC removal, pre-emphasis, Hamming window, power FFT (next power of
two >= window length), triangular mel filterbank, floored log, orthonormal
DCT-II. Defaults give the 13-dim variant; ``MfccConfig.high_resolution()``
gives the 40-filter/40-cepstra variant. These parameters are configuration,
not contract; only the output dimensionality and the frame-count formula are.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dct

from .corpus import FeatureMatrix
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class MfccConfig:
    sample_rate_hz: int = 16000
    window_s: float = 0.025
    hop_s: float = 0.010
    n_mel_filters: int = 23
    n_ceps: int = 13
    preemphasis: float = 0.97
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ConfigError("sample_rate_hz must be positive")
        if self.window_s < self.hop_s:
            raise ConfigError("window_s must be >= hop_s")
        if self.n_ceps > self.n_mel_filters:
            raise ConfigError("n_ceps cannot exceed n_mel_filters")
        if not 0.0 <= self.preemphasis < 1.0:
            raise ConfigError("preemphasis must be in [0, 1)")
        if self.log_floor <= 0:
            raise ConfigError("log_floor must be positive")

    @classmethod
    def high_resolution(cls, sample_rate_hz: int = 16000) -> "MfccConfig":
        """40 cepstra from 40 filters, the 'HR MFCC' variant."""
        return cls(sample_rate_hz=sample_rate_hz, n_mel_filters=40, n_ceps=40)

    @property
    def window_samples(self) -> int:
        return int(round(self.window_s * self.sample_rate_hz))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_s * self.sample_rate_hz))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(config: MfccConfig, n_fft: int) -> tuple[np.ndarray, np.ndarray]:
    """Triangular mel filters on the rfft bin grid.

    Returns (weights [n_filters x n_bins], center frequencies in Hz).
    """
    nyquist = config.sample_rate_hz / 2.0
    mel_points = np.linspace(hz_to_mel(0.0), hz_to_mel(nyquist), config.n_mel_filters + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.arange(n_fft // 2 + 1) * (config.sample_rate_hz / n_fft)
    weights = np.zeros((config.n_mel_filters, len(bin_freqs)))
    for i in range(config.n_mel_filters):
        left, center, right = hz_points[i], hz_points[i + 1], hz_points[i + 2]
        up = (bin_freqs - left) / (center - left)
        down = (right - bin_freqs) / (right - center)
        weights[i] = np.maximum(0.0, np.minimum(up, down))
    return weights, hz_points[1:-1]


def frame_count(n_samples: int, window: int, hop: int) -> int:
    if n_samples < window:
        return 0
    return (n_samples - window) // hop + 1


def frame_signal(signal: np.ndarray, window: int, hop: int) -> np.ndarray:
    t = frame_count(len(signal), window, hop)
    idx = np.arange(window)[None, :] + hop * np.arange(t)[:, None]
    return signal[idx]


def log_mel_energies(signal, config: MfccConfig) -> np.ndarray:
    """Floored log filterbank energies, the pre-DCT stage of compute_mfcc."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise DataError("signal must be mono (1-D)")
    win = config.window_samples
    if len(signal) < win:
        raise DataError(f"signal too short: {len(signal)} samples < one {win}-sample window")
    signal = signal - signal.mean()
    emph = np.empty_like(signal)
    emph[0] = signal[0] * (1.0 - config.preemphasis)
    emph[1:] = signal[1:] - config.preemphasis * signal[:-1]
    frames = frame_signal(emph, win, config.hop_samples)
    frames = frames * np.hamming(win)
    n_fft = 1 << (win - 1).bit_length()
    power = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    weights, _ = mel_filterbank(config, n_fft)
    return np.log(power @ weights.T + config.log_floor)


def compute_mfcc(signal, config: MfccConfig) -> FeatureMatrix:
    """MFCCs of a mono PCM signal; T = (N - window) // hop + 1 frames."""
    logmel = log_mel_energies(signal, config)
    ceps = dct(logmel, type=2, axis=1, norm="ortho")[:, : config.n_ceps]
    return FeatureMatrix(ceps.astype(np.float32), config.hop_s)


def apply_cmn(features_by_speaker: dict[str, dict[str, FeatureMatrix]]
              ) -> dict[str, dict[str, FeatureMatrix]]:
    """Subtract per-speaker coefficient means.

    Input maps speaker -> utt_id -> FeatureMatrix. Shapes are preserved; the
    outputs are float64 so each speaker's post-CMN column means vanish to
    numerical precision.
    """
    out: dict[str, dict[str, FeatureMatrix]] = {}
    for speaker in sorted(features_by_speaker):
        utts = features_by_speaker[speaker]
        total = 0
        acc = None
        for utt_id in sorted(utts):
            frames = utts[utt_id].frames.astype(np.float64)
            s = frames.sum(axis=0)
            acc = s if acc is None else acc + s
            total += frames.shape[0]
        if total == 0:
            raise DataError(f"speaker {speaker} has zero frames")
        mean = acc / total
        out[speaker] = {
            utt_id: FeatureMatrix(utts[utt_id].frames.astype(np.float64) - mean,
                                  utts[utt_id].frame_shift_s)
            for utt_id in sorted(utts)
        }
    return out


def read_wav_mono(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a mono 16-bit PCM WAV as float64 in [-1, 1), plus sample rate."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as fh:
            if fh.getnchannels() != 1:
                raise DataError(f"{path}: expected mono, got {fh.getnchannels()} channels")
            if fh.getsampwidth() != 2:
                raise DataError(f"{path}: expected 16-bit PCM, got {8 * fh.getsampwidth()}-bit")
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except wave.Error as exc:
        raise DataError(f"{path}: not a valid WAV file: {exc}") from exc
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return samples, rate


def write_wav_mono(samples: np.ndarray, rate: int, path: str | Path) -> None:
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0 - 1.0 / 32768.0)
    pcm = np.round(clipped * 32768.0).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(rate)
        fh.writeframes(pcm.tobytes())
