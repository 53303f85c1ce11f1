"""Raw PPG record -> fixed-length normalised window.

    bandpass (0.5-8 Hz, zero phase) -> resample to 30 Hz -> fix length -> min-max

plus Gaussian-noise augmentation of training windows.
"""
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import floor

import numpy as np
from scipy import signal as sps

from .errors import (
    DegenerateSignal,
    InvalidInput,
    InvalidRate,
    InvalidSigma,
    LabelOutOfRange,
    NyquistViolation,
    SignalTooShort,
)

GLUCOSE_BOUNDS = (20.0, 600.0)


@dataclass
class PpgRecord:
    samples: np.ndarray
    fs: float
    glucose_mgdl: float
    subject_id: str = ""
    record_id: str = ""
    # generator parameters for synthetic records (heart rate, amplitude ratio)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise InvalidInput(f"record {self.record_id}: samples must be 1-D")
        if not self.fs > 0:
            raise InvalidRate(f"record {self.record_id}: fs must be positive, got {self.fs}")
        if len(self.samples) < 2 * self.fs:
            raise SignalTooShort(
                f"record {self.record_id}: {len(self.samples)} samples is under 2 s at {self.fs} Hz")
        lo, hi = GLUCOSE_BOUNDS
        if not lo < self.glucose_mgdl < hi:
            raise LabelOutOfRange(
                f"record {self.record_id}: glucose {self.glucose_mgdl} mg/dL outside ({lo:g}, {hi:g})")


@dataclass(frozen=True)
class Window:
    values: np.ndarray
    glucose_mgdl: float
    record_id: str = ""
    augmentation: str = ""


@dataclass(frozen=True)
class FilterSpec:
    low_hz: float = 0.5
    high_hz: float = 8.0
    order: int = 4


@dataclass(frozen=True)
class PreprocessConfig:
    filter: FilterSpec = FilterSpec()
    fs_out: float = 30.0
    window_len: int = 300


def bandpass_filter(x, fs, spec=FilterSpec()):
    """Zero-phase Butterworth band-pass (designed by bilinear transform, run forward and back)."""
    x = np.asarray(x, dtype=np.float64)
    if fs <= 2 * spec.high_hz:
        raise NyquistViolation(f"fs={fs} Hz cannot carry a {spec.high_hz} Hz band edge")
    if not 0 < spec.low_hz < spec.high_hz:
        raise InvalidInput(f"band edges must satisfy 0 < low < high, got {spec.low_hz}, {spec.high_hz}")
    if len(x) <= 3 * spec.order:
        raise SignalTooShort(f"{len(x)} samples; need more than {3 * spec.order}")
    sos = sps.butter(spec.order, [spec.low_hz, spec.high_hz], btype="bandpass", fs=fs, output="sos")
    padlen = min(3 * (2 * len(sos) + 1), len(x) - 1)
    return sps.sosfiltfilt(sos, x, padlen=padlen)


def _exact(rate):
    return Fraction(rate).limit_denominator(10**6) if isinstance(rate, float) else Fraction(rate)


def resample(x, fs_in, fs_out):
    """Linear-interpolation resampler; output sample k sits at time k / fs_out."""
    if not (fs_in > 0 and fs_out > 0):
        raise InvalidRate(f"sampling rates must be positive, got {fs_in} -> {fs_out}")
    x = np.asarray(x, dtype=np.float64)
    if fs_in == fs_out:
        return x.copy()
    ratio = _exact(fs_out) / _exact(fs_in)
    n_out = floor(len(x) * ratio)
    positions = np.arange(n_out) * float(1 / ratio)
    return np.interp(positions, np.arange(len(x)), x)


def normalize(x):
    x = np.asarray(x, dtype=np.float64)
    lo, hi = x.min(), x.max()
    if not hi > lo:
        raise DegenerateSignal("cannot min-max scale a constant signal")
    return (x - lo) / (hi - lo)


def fix_length(x, window_len):
    """Center-crop long signals; pad short ones by repeating the last sample."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n < 1:
        raise InvalidInput("fix_length on empty signal")
    if n >= window_len:
        start = (n - window_len) // 2
        return x[start:start + window_len].copy()
    return np.concatenate([x, np.full(window_len - n, x[-1])])


def preprocess(record, config=PreprocessConfig()):
    filtered = bandpass_filter(record.samples, record.fs, config.filter)
    scale = max(np.max(np.abs(record.samples)), 1.0)
    if np.ptp(filtered) <= 1e-9 * scale:
        raise DegenerateSignal(f"record {record.record_id}: no energy in the pass band")
    down = resample(filtered, record.fs, config.fs_out)
    values = normalize(fix_length(down, config.window_len))
    return Window(values, float(record.glucose_mgdl), record.record_id)


def augment_gaussian(windows, copies, sigmas, seed):
    """Originals followed by ``copies`` noisy passes over the whole list.

    Copy ``j`` of a window adds N(0, (sigmas[j] * std(values))^2) noise and is
    min-max rescaled. Inputs are never modified.
    """
    windows = list(windows)
    if not windows:
        raise InvalidInput("augment_gaussian needs at least one window")
    if copies != len(sigmas):
        raise InvalidInput(f"copies={copies} but {len(sigmas)} sigmas given")
    if any(not s > 0 for s in sigmas):
        raise InvalidSigma(f"noise levels must be positive, got {list(sigmas)}")
    rng = np.random.default_rng(seed)
    out = list(windows)
    for j, sigma in enumerate(sigmas):
        for w in windows:
            noisy = w.values + rng.normal(0.0, sigma * np.std(w.values), size=w.values.shape)
            out.append(replace(w, values=normalize(noisy), augmentation=f"gauss{j}:{sigma:g}"))
    return out
