"""Excitation atom: a windowed tone burst, or a user-supplied CSV waveform."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Signal, read_signal_csv

__all__ = ["BurstSpec", "make_tone_burst", "load_atom"]


@dataclass
class BurstSpec:
    """Tone-burst parameters: ``n_cycles`` of a sine at ``f0_hz`` under a
    half-sine envelope."""

    f0_hz: float
    n_cycles: int
    sample_rate_hz: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.f0_hz > 0:
            raise ValueError("f0_hz must be positive")
        if int(self.n_cycles) < 1:
            raise ValueError("n_cycles must be a positive integer")
        self.n_cycles = int(self.n_cycles)
        if not self.sample_rate_hz > 2.0 * self.f0_hz:
            raise ValueError(
                f"sample_rate_hz must exceed the Nyquist rate 2*f0 = {2 * self.f0_hz:g} Hz"
            )

    @property
    def duration_s(self) -> float:
        return self.n_cycles / self.f0_hz


def make_tone_burst(spec: BurstSpec) -> Signal:
    """Sample amplitude * sin(2*pi*f0*t) * sin(pi*t/T) on [0, T], T = n/f0.

    The burst spans ceil(T*fs) + 1 samples and is identically zero outside
    the window, so both endpoints vanish.
    """
    t_burst = spec.duration_s
    fs = spec.sample_rate_hz
    # Guard against 100.0000000000001-style spill when T*fs is an integer.
    n = int(np.ceil(t_burst * fs - 1e-9)) + 1
    t = np.arange(n) / fs
    envelope = np.sin(np.pi * t / t_burst)
    envelope[t > t_burst * (1 + 1e-12)] = 0.0
    x = spec.amplitude * np.sin(2.0 * np.pi * spec.f0_hz * t) * envelope
    return Signal(x, fs)


def load_atom(path) -> Signal:
    """Load an atom waveform from a signal CSV (header + uniform spacing)."""
    return read_signal_csv(path)
