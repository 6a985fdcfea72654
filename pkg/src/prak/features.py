"""Audio ingestion and acoustic features.

Audio is brought to 16 kHz mono float64 in [-1, 1].  Features are 13 MFCCs
computed the way Kaldi computes them (25 ms frames every 10 ms, Povey
window, 23 mel bins between 20 and 8000 Hz, cepstral liftering with
coefficient 22, C0 replaced by the raw log frame energy), so models trained
here behave like models trained on standard pipelines.  On top of that a
52-number summary of the whole recording stands in for speaker adaptation:
mean MFCC vectors of four frame groups obtained by splitting frames at the
average energy and sub-splitting each half at its own average.  The network
input for frame t is 19 consecutive MFCC frames centered on t plus that
summary: 19 * 13 + 52 = 299 numbers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import AudioError

SAMPLE_RATE = 16000
FRAME_LENGTH = 400   # samples, 25 ms
FRAME_SHIFT = 160    # samples, 10 ms
FRAME_SHIFT_S = FRAME_SHIFT / SAMPLE_RATE
NUM_FFT = 512
NUM_MEL_BINS = 23
NUM_CEPS = 13
LOW_FREQ = 20.0
HIGH_FREQ = 8000.0
PREEMPH = 0.97
CEP_LIFTER = 22.0
DITHER = 1.0 / 32768.0
CONTEXT = 9          # frames each side, 19-frame window
SPK_DIM = 4 * NUM_CEPS
INPUT_DIM = (2 * CONTEXT + 1) * NUM_CEPS + SPK_DIM

_LOG_FLOOR = float(np.finfo(np.float32).eps)

FEAT_MAGIC = b"PRAKFEAT"


@dataclass
class AudioBuffer:
    samples: np.ndarray  # float64 mono at SAMPLE_RATE
    sample_rate: int = SAMPLE_RATE

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def load_audio(path: str | Path) -> AudioBuffer:
    """Read a WAV file, average channels, resample to 16 kHz."""
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise AudioError(f"audio file not found: {path}") from None
    except ValueError as e:
        raise AudioError(f"cannot read {path}: {e}") from None
    if data.size == 0:
        raise AudioError(f"audio file {path} contains no samples")

    if data.dtype == np.int16:
        samples = data / 32768.0
    elif data.dtype == np.int32:
        samples = data / 2147483648.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise AudioError(f"unsupported WAV sample format {data.dtype} in {path}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)

    if rate != SAMPLE_RATE:
        if rate < 8000:
            raise AudioError(f"sample rate {rate} Hz of {path} is too low to use")
        frac = Fraction(SAMPLE_RATE, int(rate))
        samples = resample_poly(samples, frac.numerator, frac.denominator)
    return AudioBuffer(samples=np.asarray(samples, dtype=np.float64))


def _povey_window(n: int) -> np.ndarray:
    t = np.arange(n, dtype=np.float64)
    hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * t / (n - 1))
    return hann ** 0.85


def _mel(freq):
    return 1127.0 * np.log(1.0 + np.asarray(freq, dtype=np.float64) / 700.0)


def _mel_filterbank() -> np.ndarray:
    """Triangular filters, triangle shape computed in mel space."""
    fft_bins = NUM_FFT // 2  # the Nyquist bin is not used
    bin_freqs = np.arange(fft_bins) * (SAMPLE_RATE / NUM_FFT)
    bin_mels = _mel(bin_freqs)
    lo, hi = _mel(LOW_FREQ), _mel(HIGH_FREQ)
    edges = lo + np.arange(NUM_MEL_BINS + 2) * (hi - lo) / (NUM_MEL_BINS + 1)
    bank = np.zeros((NUM_MEL_BINS, fft_bins))
    for j in range(NUM_MEL_BINS):
        left, center, right = edges[j], edges[j + 1], edges[j + 2]
        up = (bin_mels - left) / (center - left)
        down = (right - bin_mels) / (right - center)
        bank[j] = np.clip(np.minimum(up, down), 0.0, None)
    return bank


def _dct_matrix() -> np.ndarray:
    """Orthonormal DCT-II, NUM_CEPS x NUM_MEL_BINS."""
    n = NUM_MEL_BINS
    mat = np.zeros((NUM_CEPS, n))
    mat[0] = np.sqrt(1.0 / n)
    for k in range(1, NUM_CEPS):
        mat[k] = np.sqrt(2.0 / n) * np.cos(np.pi * k * (np.arange(n) + 0.5) / n)
    return mat


_FILTERBANK = _mel_filterbank()
_DCT = _dct_matrix()
_LIFTER = 1.0 + 0.5 * CEP_LIFTER * np.sin(np.pi * np.arange(NUM_CEPS) / CEP_LIFTER)
_WINDOW = _povey_window(FRAME_LENGTH)


def num_frames(num_samples: int) -> int:
    if num_samples < FRAME_LENGTH:
        return 0
    return 1 + (num_samples - FRAME_LENGTH) // FRAME_SHIFT


def compute_mfcc(audio: AudioBuffer, dither: bool = False,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """MFCC matrix of shape (T, 13), float32.

    Frames are snipped from the signal (no padding), so
    T = 1 + floor((num_samples - 400) / 160); short recordings give T = 0.
    Dither is off by default to keep runs bit-reproducible; pass an rng
    when enabling it.
    """
    x = audio.samples
    t_total = num_frames(len(x))
    if t_total == 0:
        return np.zeros((0, NUM_CEPS), dtype=np.float32)
    idx = np.arange(FRAME_LENGTH)[None, :] + FRAME_SHIFT * np.arange(t_total)[:, None]
    frames = x[idx].astype(np.float64)

    if dither:
        gen = rng if rng is not None else np.random.default_rng(0)
        frames = frames + DITHER * gen.standard_normal(frames.shape)

    frames -= frames.mean(axis=1, keepdims=True)
    energy = np.log(np.maximum((frames * frames).sum(axis=1), _LOG_FLOOR))
    frames[:, 1:] -= PREEMPH * frames[:, :-1]
    frames[:, 0] -= PREEMPH * frames[:, 0]
    frames *= _WINDOW

    spec = np.fft.rfft(frames, n=NUM_FFT, axis=1)
    power = (spec.real ** 2 + spec.imag ** 2)[:, : NUM_FFT // 2]
    mel = np.log(np.maximum(power @ _FILTERBANK.T, _LOG_FLOOR))
    ceps = mel @ _DCT.T
    ceps *= _LIFTER
    ceps[:, 0] = energy
    return ceps.astype(np.float32)


def speaker_vector(feats: np.ndarray) -> np.ndarray:
    """52-number recording summary: mean MFCC of four energy bands.

    Frames are split at the mean of C0 (the log energy), each group is
    sub-split at its own C0 mean, and the four group means are stacked from
    the loudest band to the quietest.  A band that ends up empty inherits
    its parent group's mean, so the vector is always fully defined.
    """
    feats = np.asarray(feats, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] != NUM_CEPS:
        raise AudioError(f"expected a (T, {NUM_CEPS}) feature matrix")
    if feats.shape[0] == 0:
        raise AudioError("cannot summarize an empty feature matrix")

    def mean_of(rows: np.ndarray, fallback: np.ndarray) -> np.ndarray:
        return rows.mean(axis=0) if len(rows) else fallback

    energy = feats[:, 0]
    overall = feats.mean(axis=0)
    high = feats[energy >= energy.mean()]
    low = feats[energy < energy.mean()]
    high_mean = mean_of(high, overall)
    low_mean = mean_of(low, overall)
    bands = []
    for group, group_mean in ((high, high_mean), (low, low_mean)):
        if len(group):
            e = group[:, 0]
            upper = group[e >= e.mean()]
            lower = group[e < e.mean()]
            bands.append(mean_of(upper, group_mean))
            bands.append(mean_of(lower, group_mean))
        else:
            bands.append(group_mean)
            bands.append(group_mean)
    return np.concatenate(bands).astype(np.float32)


def window_features(feats: np.ndarray, spk: np.ndarray, t: int) -> np.ndarray:
    """Network input for frame t: 19 stacked frames plus the summary."""
    if not 0 <= t < len(feats):
        raise AudioError(f"frame index {t} outside feature matrix of {len(feats)} frames")
    idx = np.clip(np.arange(t - CONTEXT, t + CONTEXT + 1), 0, len(feats) - 1)
    return np.concatenate([np.asarray(feats)[idx].ravel(), np.asarray(spk)]).astype(np.float32)


def window_matrix(feats: np.ndarray, spk: np.ndarray) -> np.ndarray:
    """All frame windows at once, shape (T, 299)."""
    feats = np.asarray(feats)
    t_total = len(feats)
    if t_total == 0:
        return np.zeros((0, INPUT_DIM), dtype=np.float32)
    idx = np.clip(np.arange(t_total)[:, None] + np.arange(-CONTEXT, CONTEXT + 1)[None, :],
                  0, t_total - 1)
    stacked = feats[idx].reshape(t_total, -1)
    spk_tiled = np.broadcast_to(np.asarray(spk), (t_total, SPK_DIM))
    return np.concatenate([stacked, spk_tiled], axis=1).astype(np.float32)


def write_feature_dump(path: str | Path, feats: np.ndarray) -> None:
    """Binary feature dump: magic, version, T, dim, float32 rows, little endian."""
    feats = np.asarray(feats, dtype=np.float32)
    with open(path, "wb") as f:
        f.write(FEAT_MAGIC)
        f.write(struct.pack("<III", 1, feats.shape[0], feats.shape[1]))
        f.write(feats.astype("<f4").tobytes())


def read_feature_dump(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:8] != FEAT_MAGIC:
        raise AudioError(f"{path} is not a feature dump")
    version, t_total, dim = struct.unpack("<III", raw[8:20])
    if version != 1:
        raise AudioError(f"unsupported feature dump version {version}")
    body = np.frombuffer(raw[20:], dtype="<f4")
    if body.size != t_total * dim:
        raise AudioError(f"feature dump {path} is truncated")
    return body.reshape(t_total, dim).copy()
