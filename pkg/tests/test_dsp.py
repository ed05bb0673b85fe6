import numpy as np
import pytest

from subdisc.corpus import FeatureMatrix
from subdisc.dsp import (
    MfccConfig,
    apply_cmn,
    compute_mfcc,
    frame_count,
    log_mel_energies,
    mel_filterbank,
    read_wav_mono,
    write_wav_mono,
)
from subdisc.errors import ConfigError, DataError


def reference_filterbank_energies(signal, config):
    """Independent pre-DCT filterbank oracle: naive DFT, own mel triangles.

    Mirrors the documented pipeline (DC removal, pre-emphasis, Hamming,
    power spectrum, triangular filters) using direct O(N^2) DFT sums and a
    from-scratch filter construction.
    """
    sig = np.asarray(signal, dtype=np.float64)
    sig = sig - sig.mean()
    pre = np.concatenate([[sig[0] * (1 - config.preemphasis)],
                          sig[1:] - config.preemphasis * sig[:-1]])
    win = config.window_samples
    hop = config.hop_samples
    n_fft = 1
    while n_fft < win:
        n_fft *= 2
    n_bins = n_fft // 2 + 1
    k = np.arange(n_bins)
    n = np.arange(n_fft)
    dft = np.exp(-2j * np.pi * np.outer(k, n) / n_fft)

    def mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def imel(m):
        return 700.0 * (10 ** (m / 2595.0) - 1.0)

    edges = imel(np.linspace(0.0, mel(config.sample_rate_hz / 2.0), config.n_mel_filters + 2))
    bin_hz = k * config.sample_rate_hz / n_fft
    energies = []
    t = 0
    while t * hop + win <= len(pre):
        frame = np.zeros(n_fft)
        frame[:win] = pre[t * hop: t * hop + win] * np.hamming(win)
        spectrum = np.abs(dft @ frame) ** 2
        row = []
        for i in range(config.n_mel_filters):
            lo, c, hi = edges[i], edges[i + 1], edges[i + 2]
            w = np.zeros(n_bins)
            rising = (bin_hz >= lo) & (bin_hz <= c)
            falling = (bin_hz > c) & (bin_hz <= hi)
            w[rising] = (bin_hz[rising] - lo) / (c - lo)
            w[falling] = (hi - bin_hz[falling]) / (hi - c)
            row.append(np.log(w @ spectrum + config.log_floor))
        energies.append(row)
        t += 1
    return np.array(energies), edges[1:-1]


class TestFrameCount:
    def test_formula_example(self):
        # 16 kHz, 1.0 s, 25 ms window, 10 ms hop
        assert frame_count(16000, 400, 160) == 98

    @pytest.mark.parametrize("seed", range(10))
    def test_formula_random(self, seed):
        rng = np.random.default_rng(seed)
        win = int(rng.integers(2, 600))
        hop = int(rng.integers(1, win + 1))
        n = int(rng.integers(win, 20000))
        t = frame_count(n, win, hop)
        assert t == (n - win) // hop + 1
        assert (t - 1) * hop + win <= n
        assert t * hop + win > n


class TestMfcc:
    def test_output_shape_13(self):
        rng = np.random.default_rng(0)
        sig = rng.standard_normal(16000)
        feats = compute_mfcc(sig, MfccConfig())
        assert feats.dim == 13
        assert feats.n_frames == 98

    def test_high_resolution_40(self):
        rng = np.random.default_rng(1)
        sig = rng.standard_normal(8000)
        feats = compute_mfcc(sig, MfccConfig.high_resolution())
        assert feats.dim == 40

    def test_too_short_signal(self):
        with pytest.raises(DataError, match="too short"):
            compute_mfcc(np.zeros(399), MfccConfig())

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        sig = rng.standard_normal(6400)
        a = compute_mfcc(sig, MfccConfig())
        b = compute_mfcc(sig, MfccConfig())
        assert np.array_equal(a.frames, b.frames)

    def test_sine_peaks_at_nearest_mel_filter(self):
        # 1 kHz pure tone: the filter centered nearest 1 kHz carries the
        # largest pre-DCT log energy, checked against an independent oracle.
        config = MfccConfig()
        t = np.arange(8000) / config.sample_rate_hz
        sig = np.sin(2 * np.pi * 1000.0 * t)
        ours = log_mel_energies(sig, config)
        ref, ref_centers = reference_filterbank_energies(sig, config)
        assert ours.shape == ref.shape
        np.testing.assert_allclose(ours, ref, rtol=1e-8, atol=1e-8)
        _, centers = mel_filterbank(config, 512)
        np.testing.assert_allclose(centers, ref_centers, rtol=1e-12)
        nearest = int(np.argmin(np.abs(centers - 1000.0)))
        assert np.argmax(ours.mean(axis=0)) == nearest
        assert np.argmax(ref.mean(axis=0)) == nearest

    def test_invalid_configs(self):
        with pytest.raises(ConfigError):
            MfccConfig(n_ceps=30, n_mel_filters=23)
        with pytest.raises(ConfigError):
            MfccConfig(window_s=0.005, hop_s=0.010)
        with pytest.raises(ConfigError):
            MfccConfig(preemphasis=1.0)


class TestCmn:
    def rand_feats(self, rng, t, d=5, shift=0.01):
        return FeatureMatrix(rng.standard_normal((t, d)) * 3.0 + rng.standard_normal(d), shift)

    def test_single_speaker_single_utt(self):
        rng = np.random.default_rng(3)
        feats = self.rand_feats(rng, 50)
        out = apply_cmn({"s1": {"u1": feats}})["s1"]["u1"]
        expected = feats.frames - feats.frames.mean(axis=0)
        np.testing.assert_allclose(out.frames, expected, atol=1e-12)

    def test_shift_invariance(self):
        rng = np.random.default_rng(4)
        feats = {"u1": self.rand_feats(rng, 30), "u2": self.rand_feats(rng, 20)}
        c = rng.standard_normal(5) * 10
        shifted = {u: FeatureMatrix(f.frames + c, f.frame_shift_s) for u, f in feats.items()}
        base = apply_cmn({"s": feats})["s"]
        moved = apply_cmn({"s": shifted})["s"]
        for u in feats:
            np.testing.assert_allclose(base[u].frames, moved[u].frames, atol=1e-9)

    def test_per_speaker_zero_mean(self):
        rng = np.random.default_rng(5)
        grouped = {
            "s1": {"u1": self.rand_feats(rng, 40), "u2": self.rand_feats(rng, 25)},
            "s2": {"u3": self.rand_feats(rng, 33)},
        }
        out = apply_cmn(grouped)
        for speaker, utts in out.items():
            stacked = np.concatenate([f.frames for f in utts.values()])
            assert np.max(np.abs(stacked.mean(axis=0))) < 1e-9
            for u, f in utts.items():
                assert f.frames.shape == grouped[speaker][u].frames.shape

    def test_idempotent(self):
        rng = np.random.default_rng(6)
        grouped = {"s1": {"u1": self.rand_feats(rng, 64), "u2": self.rand_feats(rng, 16)}}
        once = apply_cmn(grouped)
        twice = apply_cmn(once)
        for u in once["s1"]:
            np.testing.assert_allclose(once["s1"][u].frames, twice["s1"][u].frames, atol=1e-12)

    def test_zero_frame_speaker(self):
        empty = FeatureMatrix(np.zeros((0, 4)), 0.01)
        with pytest.raises(DataError, match="zero frames"):
            apply_cmn({"s1": {"u1": empty}})


class TestWav:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(7)
        sig = rng.uniform(-0.9, 0.9, 1600)
        path = tmp_path / "x.wav"
        write_wav_mono(sig, 16000, path)
        back, rate = read_wav_mono(path)
        assert rate == 16000
        assert len(back) == 1600
        np.testing.assert_allclose(back, sig, atol=1.0 / 32768.0)

    def test_rejects_stereo(self, tmp_path):
        import wave

        path = tmp_path / "st.wav"
        with wave.open(str(path), "wb") as fh:
            fh.setnchannels(2)
            fh.setsampwidth(2)
            fh.setframerate(8000)
            fh.writeframes(b"\x00\x00" * 64)
        with pytest.raises(DataError, match="mono"):
            read_wav_mono(path)
