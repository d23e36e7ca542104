"""Analytic low-frequency Lamb-wave model for an isotropic plate.

The S0 branch is non-dispersive (extensional plate wave).  The A0 branch is
the flexural branch of a shear-corrected (Mindlin-type) plate model; its
closing term is written so that the Kirchhoff limit k = (rho*h*w^2/D)^(1/4)
is recovered as f -> 0, with bending stiffness D = Q*I.

Propagation over a distance is an all-pass phase product per mode applied in
the frequency domain, with conjugate phases on negative-frequency bins so the
output stays real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Signal

__all__ = [
    "PlateModel",
    "ModeSet",
    "k_s0",
    "k_a0",
    "velocities",
    "phase_factors",
    "propagate",
]


@dataclass
class PlateModel:
    """Isotropic plate constants; derived moduli are recomputed on access."""

    youngs_modulus_pa: float
    poisson_ratio: float
    density_kg_m3: float
    thickness_m: float

    def __post_init__(self):
        if not self.youngs_modulus_pa > 0:
            raise ValueError("youngs_modulus_pa must be positive")
        if not 0.0 < self.poisson_ratio < 0.5:
            raise ValueError("poisson_ratio must lie in (0, 0.5)")
        if not self.density_kg_m3 > 0:
            raise ValueError("density_kg_m3 must be positive")
        if not self.thickness_m > 0:
            raise ValueError("thickness_m must be positive")

    @property
    def shear_modulus_pa(self) -> float:
        return self.youngs_modulus_pa / (2.0 * (1.0 + self.poisson_ratio))

    @property
    def plate_modulus_pa(self) -> float:
        return self.youngs_modulus_pa / (1.0 - self.poisson_ratio**2)

    @property
    def shear_correction(self) -> float:
        return np.pi**2 / 12.0

    @property
    def bending_inertia_m3(self) -> float:
        return self.thickness_m**3 / 12.0

    @property
    def extensional_speed_m_s(self) -> float:
        """Phase (= group) speed of the non-dispersive S0 branch."""
        return float(np.sqrt(self.plate_modulus_pa / self.density_kg_m3))


@dataclass
class ModeSet:
    """Which fundamental modes take part in propagation."""

    include_s0: bool = True
    include_a0: bool = True

    def __post_init__(self):
        if not (self.include_s0 or self.include_a0):
            raise ValueError("at least one mode must be enabled")

    def names(self):
        out = []
        if self.include_s0:
            out.append("s0")
        if self.include_a0:
            out.append("a0")
        return out

    @classmethod
    def from_names(cls, names) -> "ModeSet":
        wanted = {n.strip().lower() for n in names if n.strip()}
        unknown = wanted - {"s0", "a0"}
        if unknown:
            raise ValueError(f"unknown mode name(s): {sorted(unknown)}")
        return cls(include_s0="s0" in wanted, include_a0="a0" in wanted)


def k_s0(f_hz, plate: PlateModel):
    """Extensional wavenumber 2*pi*f*sqrt(rho/Q); linear in frequency."""
    f = np.asarray(f_hz, dtype=float)
    k = 2.0 * np.pi * f * np.sqrt(plate.density_kg_m3 / plate.plate_modulus_pa)
    return float(k) if np.isscalar(f_hz) else k


def k_a0(f_hz, plate: PlateModel):
    """Flexural wavenumber of the shear-corrected plate model.

    k = (2*pi*f/sqrt(2)) * sqrt( a + sqrt( b^2 + rho*h/(pi^2 f^2 I Q) ) )
    with a = rho/Q + rho/(G*xi) and b = rho/Q - rho/(G*xi).
    """
    f = np.asarray(f_hz, dtype=float)
    if np.any(f <= 0):
        raise ValueError("k_a0 requires strictly positive frequencies")
    rho = plate.density_kg_m3
    q = plate.plate_modulus_pa
    g_xi = plate.shear_modulus_pa * plate.shear_correction
    a = rho / q + rho / g_xi
    b = rho / q - rho / g_xi
    closing = rho * plate.thickness_m / (np.pi**2 * f**2 * plate.bending_inertia_m3 * q)
    inner = b**2 + closing
    if np.any(inner < 0):
        bad = np.atleast_1d(f)[np.atleast_1d(inner) < 0]
        raise ValueError(f"negative operand under the inner square root at f = {bad[0]:g} Hz")
    bracket = a + np.sqrt(inner)
    if np.any(bracket < 0):
        bad = np.atleast_1d(f)[np.atleast_1d(bracket) < 0]
        raise ValueError(f"negative operand under the outer square root at f = {bad[0]:g} Hz")
    k = (2.0 * np.pi * f / np.sqrt(2.0)) * np.sqrt(bracket)
    return float(k) if np.isscalar(f_hz) else k


def _k_of(mode: str):
    mode = mode.lower()
    if mode == "s0":
        return k_s0
    if mode == "a0":
        return k_a0
    raise ValueError(f"unknown mode {mode!r} (expected 's0' or 'a0')")


def velocities(f_hz: float, plate: PlateModel, mode: str):
    """Phase and group velocity at one frequency.

    The group velocity uses a central finite difference on k(f) with a
    relative frequency step of 1e-4.
    """
    kfun = _k_of(mode)
    k = kfun(f_hz, plate)
    c_phase = 2.0 * np.pi * f_hz / k
    df = 1e-4 * f_hz
    dk = kfun(f_hz + df, plate) - kfun(f_hz - df, plate)
    c_group = 2.0 * np.pi * (2.0 * df) / dk
    return float(c_phase), float(c_group)


def phase_factors(f_hz: np.ndarray, distance_m: float, plate: PlateModel,
                  modes: ModeSet) -> np.ndarray:
    """Summed per-mode propagation factors exp(-i*k(|f|)*d) on a signed grid.

    Negative frequencies receive the conjugate phase; the f = 0 bin passes
    through unchanged per mode (k is undefined there and band content is
    assumed DC-free).  Each individual mode factor has unit modulus, so
    propagation is all-pass mode by mode.
    """
    f = np.asarray(f_hz, dtype=float)
    total = np.zeros(f.shape, dtype=complex)
    nonzero = f != 0
    abs_f = np.abs(f[nonzero])
    sign = np.sign(f[nonzero])
    for mode in modes.names():
        k = _k_of(mode)(abs_f, plate)
        factor = np.ones(f.shape, dtype=complex)
        factor[nonzero] = np.exp(-1j * sign * k * distance_m)
        total += factor
    return total


def _required_samples(x: Signal, distance_m: float, plate: PlateModel,
                      modes: ModeSet) -> int:
    """Samples needed for the slowest enabled packet to fit in the window.

    The input's own extent is taken as its energy-carrying span, so chaining
    propagations through zero-padded windows does not inflate the estimate.
    """
    peak = np.max(np.abs(x.samples))
    content = np.nonzero(np.abs(x.samples) > 1e-6 * peak)[0] if peak > 0 else []
    content_end = int(content[-1]) + 1 if len(content) else len(x)
    if distance_m == 0:
        return content_end
    spectrum = np.abs(np.fft.rfft(x.samples))
    spectrum[0] = 0.0
    f_peak = np.argmax(spectrum) * x.sample_rate_hz / len(x)
    if f_peak <= 0:
        raise ValueError("input signal has no non-DC content to propagate")
    slowest = min(velocities(f_peak, plate, mode)[1] for mode in modes.names())
    travel_s = distance_m / slowest
    return int(np.ceil(travel_s * x.sample_rate_hz)) + content_end + 1


def propagate(x: Signal, distance_m: float, plate: PlateModel,
              modes: ModeSet | None = None, out_len: int | None = None) -> Signal:
    """Propagate ``x`` over ``distance_m`` through the enabled modes.

    All enabled modes are excited with equal amplitude.  When ``out_len`` is
    omitted the window is sized so the slowest packet fits; an explicit
    ``out_len`` shorter than that raises with the required length.
    """
    if distance_m < 0:
        raise ValueError("distance_m must be nonnegative")
    if modes is None:
        modes = ModeSet()
    required = _required_samples(x, distance_m, plate, modes)
    if out_len is None:
        out_len = max(len(x), required)
    else:
        out_len = int(out_len)
        if out_len < required:
            raise ValueError(
                f"window of {out_len} samples is too short for the slowest packet; "
                f"need at least {required} samples at {x.sample_rate_hz:g} Hz"
            )
    pad = 1
    while pad < 2 * max(out_len, len(x)):
        pad *= 2
    freqs = np.fft.fftfreq(pad, d=x.dt)
    bins = np.fft.fft(x.samples, n=pad) * phase_factors(freqs, distance_m, plate, modes)
    y = np.fft.ifft(bins).real[:out_len]
    return Signal(y, x.sample_rate_hz)
