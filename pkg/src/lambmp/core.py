"""Sampled-signal and spectrum primitives shared by the pursuit algorithms.

Continuous-time integrals are realized as Riemann sums weighted by the sample
step, so the time-domain norm and the frequency-domain norm agree to round-off
(discrete Parseval identity).  Delays act on zero-padded spectra and therefore
behave linearly, not circularly, as long as the shifted content stays inside
the padded window.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Signal",
    "Spectrum",
    "DelayGrid",
    "forward_transform",
    "inverse_transform",
    "norm_time",
    "norm_freq",
    "apply_delay",
    "read_signal_csv",
    "write_signal_csv",
]

SIGNAL_CSV_HEADER = ("time_s", "value")

# Relative tolerance for the uniform-spacing check on loaded CSV signals.
_SPACING_RTOL = 1e-9


@dataclass
class Signal:
    """Uniformly sampled real time series.

    Attributes
    ----------
    samples : ndarray
        Real sample values (read-only once constructed).
    sample_rate_hz : float
        Sampling rate, strictly positive.
    """

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("signal samples must form a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("signal contains non-finite samples")
        if not (np.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            raise ValueError("sample_rate_hz must be positive and finite")
        samples.setflags(write=False)
        self.samples = samples
        self.sample_rate_hz = float(self.sample_rate_hz)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def duration_s(self) -> float:
        return (self.samples.size - 1) / self.sample_rate_hz

    def times(self) -> np.ndarray:
        """Sample instants, starting at t = 0."""
        return np.arange(self.samples.size) / self.sample_rate_hz


@dataclass
class Spectrum:
    """Complex transform of a (possibly zero-padded) Signal.

    ``bins`` has the padded length; ``source_len`` remembers how many samples
    the originating signal had, so callers can truncate after inversion.
    """

    bins: np.ndarray
    source_len: int
    sample_rate_hz: float

    def __post_init__(self):
        bins = np.array(self.bins, dtype=complex)
        if bins.ndim != 1 or bins.size == 0:
            raise ValueError("spectrum bins must form a non-empty 1-D array")
        if not (0 < int(self.source_len) <= bins.size):
            raise ValueError("source_len must satisfy 0 < source_len <= len(bins)")
        if not (np.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            raise ValueError("sample_rate_hz must be positive and finite")
        bins.setflags(write=False)
        self.bins = bins
        self.source_len = int(self.source_len)
        self.sample_rate_hz = float(self.sample_rate_hz)

    @property
    def pad_len(self) -> int:
        return self.bins.size

    def angular_frequencies(self) -> np.ndarray:
        """Signed angular frequencies (rad/s) in FFT bin order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.pad_len, d=1.0 / self.sample_rate_hz)


@dataclass
class DelayGrid:
    """Discrete search domain for delays, aligned with the sample grid."""

    min_delay_s: float
    max_delay_s: float
    step_s: float

    def __post_init__(self):
        if not (0.0 <= self.min_delay_s <= self.max_delay_s):
            raise ValueError("need 0 <= min_delay_s <= max_delay_s")
        if not self.step_s > 0:
            raise ValueError("step_s must be positive")

    @classmethod
    def full_window(cls, signal: Signal) -> "DelayGrid":
        """Every on-grid delay that keeps the arrival inside the window."""
        return cls(0.0, (len(signal) - 1) / signal.sample_rate_hz, signal.dt)

    def sample_indices(self) -> np.ndarray:
        """Delays expressed as integer multiples of ``step_s``."""
        lo = int(np.ceil(self.min_delay_s / self.step_s - 1e-9))
        hi = int(np.floor(self.max_delay_s / self.step_s + 1e-9))
        if hi < lo:
            raise ValueError("delay grid is empty")
        return np.arange(lo, hi + 1)

    def delays_s(self) -> np.ndarray:
        return self.sample_indices() * self.step_s


def forward_transform(x: Signal, pad_len: int) -> Spectrum:
    """DFT of ``x`` zero-padded to ``pad_len`` samples."""
    pad_len = int(pad_len)
    if pad_len < len(x):
        raise ValueError(f"pad_len {pad_len} is shorter than the signal ({len(x)})")
    bins = np.fft.fft(x.samples, n=pad_len)
    return Spectrum(bins, len(x), x.sample_rate_hz)


def inverse_transform(spectrum: Spectrum) -> Signal:
    """Inverse DFT over the full padded window.

    The imaginary part is dropped; it is at round-off level whenever the bins
    carry conjugate symmetry.  Truncating back to ``source_len`` is left to
    the caller.
    """
    y = np.fft.ifft(spectrum.bins)
    return Signal(y.real, spectrum.sample_rate_hz)


def norm_time(x: Signal) -> float:
    """sqrt(sum(x^2) * dt), the Riemann approximation of the L2 norm."""
    return float(np.sqrt(np.sum(x.samples**2) / x.sample_rate_hz))


def norm_freq(spectrum: Spectrum) -> float:
    """Frequency-domain norm consistent with :func:`norm_time` (Parseval)."""
    power = np.sum(np.abs(spectrum.bins) ** 2)
    return float(np.sqrt(power / (spectrum.sample_rate_hz * spectrum.pad_len)))


def apply_delay(spectrum: Spectrum, tau_s: float) -> Spectrum:
    """Multiply the bins by exp(-i*omega*tau), i.e. delay by ``tau_s``.

    Raises if the shift would push ``source_len`` samples of content across
    the padded window boundary (circular wrap).
    """
    budget = spectrum.pad_len - spectrum.source_len
    shift_samples = abs(tau_s) * spectrum.sample_rate_hz
    if shift_samples > budget + 1e-9:
        raise ValueError(
            f"delay of {tau_s:g} s exceeds the padding budget "
            f"({budget} samples at {spectrum.sample_rate_hz:g} Hz); "
            "increase pad_len before delaying"
        )
    phase = np.exp(-1j * spectrum.angular_frequencies() * tau_s)
    return Spectrum(spectrum.bins * phase, spectrum.source_len, spectrum.sample_rate_hz)


def write_signal_csv(path, x: Signal) -> None:
    """Write ``time_s,value`` rows, one per sample, starting at t = 0."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SIGNAL_CSV_HEADER)
        for i, v in enumerate(x.samples):
            writer.writerow([repr(i / x.sample_rate_hz), repr(float(v))])


def read_signal_csv(path) -> Signal:
    """Load a ``time_s,value`` CSV, inferring the sample rate.

    The header row is mandatory and the time column must be uniformly spaced
    to within 1e-9 relative.
    """
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a signal CSV") from None
        if [h.strip() for h in header] != list(SIGNAL_CSV_HEADER):
            raise ValueError(
                f"{path}: expected header 'time_s,value', got {','.join(header)!r}"
            )
        times = []
        values = []
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}: expected 2 columns, got {len(row)}")
            try:
                times.append(float(row[0]))
                values.append(float(row[1]))
            except ValueError:
                raise ValueError(f"{path}: non-numeric entry in row {row!r}") from None
    if len(times) < 2:
        raise ValueError(f"{path}: need at least 2 samples to infer the sample rate")
    times = np.asarray(times)
    dt = (times[-1] - times[0]) / (len(times) - 1)
    if dt <= 0:
        raise ValueError(f"{path}: time column must be strictly increasing")
    if np.max(np.abs(np.diff(times) - dt)) > _SPACING_RTOL * dt:
        raise ValueError(f"{path}: time column is not uniformly spaced")
    return Signal(np.asarray(values), 1.0 / dt)
