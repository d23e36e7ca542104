"""Greedy single-atom matching pursuit.

Each term is a scaled, delayed copy of one known atom.  Per step the delay is
found by maximizing a matched-filter gain over a discrete delay grid (all
numerators at once via an FFT cross-correlation) and the amplitude follows in
closed form.  The residual is updated in the time domain on the zero-padded
window, so the recorded error history, the frequency-domain gain, and the
Parseval identity are mutually consistent to round-off.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DelayGrid,
    Signal,
    Spectrum,
    apply_delay,
    forward_transform,
    norm_time,
)

__all__ = [
    "SampmTerm",
    "SampmDecomposition",
    "optimal_amplitude",
    "gain_function",
    "sampm_step",
    "sampm_decompose",
    "reconstruct",
    "decomposition_to_dict",
    "save_decomposition_json",
]

# Relative residual-energy gain below which the greedy loop is considered
# stagnated (finite arithmetic cannot improve further).
STAGNATION_RTOL = 1e-14


@dataclass
class SampmTerm:
    """One pursuit term: delay (s, on the sample grid) and scalar amplitude."""

    tau_s: float
    alpha: float


@dataclass
class SampmDecomposition:
    atom: Signal
    terms: list = field(default_factory=list)
    error_history_pct: list = field(default_factory=list)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def final_error_pct(self) -> float:
        return self.error_history_pct[-1] if self.error_history_pct else 100.0


def _validate_pair(atom_spec: Spectrum, residual_spec: Spectrum) -> None:
    if atom_spec.pad_len != residual_spec.pad_len:
        raise ValueError("atom and residual spectra must share the padded length")
    if atom_spec.sample_rate_hz != residual_spec.sample_rate_hz:
        raise ValueError("atom and residual spectra must share the sample rate")


def _atom_energy(atom_spec: Spectrum) -> float:
    energy = float(np.sum(np.abs(atom_spec.bins) ** 2))
    if energy == 0.0:
        raise ValueError("atom has zero energy")
    return energy


def optimal_amplitude(atom_spec: Spectrum, residual_spec: Spectrum, tau_s: float) -> float:
    """Closed-form least-squares amplitude for the atom delayed by ``tau_s``.

    alpha(tau) = Re(<atom_tau, residual>) / ||atom||^2 in the frequency-domain
    inner product; the denominator is delay-independent because delaying is an
    isometry.
    """
    _validate_pair(atom_spec, residual_spec)
    energy = _atom_energy(atom_spec)
    delayed = apply_delay(atom_spec, tau_s)
    num = float(np.real(np.sum(np.conj(delayed.bins) * residual_spec.bins)))
    return num / energy


def _correlation(atom_spec: Spectrum, residual_spec: Spectrum) -> np.ndarray:
    """Numerators Re(<atom_m, residual>) for every integer-sample delay m."""
    c = np.conj(atom_spec.bins) * residual_spec.bins
    return np.fft.ifft(c).real * atom_spec.pad_len


def gain_function(atom_spec: Spectrum, residual_spec: Spectrum, grid: DelayGrid):
    """Matched-filter gain G(tau) over every grid delay.

    Returns ``(delays_s, gains)`` with
    G(tau) = Re(<atom_tau, residual>)^2 / ||atom||^2.  The achieved squared
    time-norm reduction of the corresponding step is G(tau) * dt / pad_len.
    """
    _validate_pair(atom_spec, residual_spec)
    energy = _atom_energy(atom_spec)
    idx = grid.sample_indices()
    if idx[-1] + atom_spec.source_len > atom_spec.pad_len:
        raise ValueError(
            "delay grid exceeds the padding budget; the delayed atom would wrap"
        )
    num = _correlation(atom_spec, residual_spec)[idx]
    gains = num**2 / energy
    return idx / atom_spec.sample_rate_hz, gains


def _pad_len(n_signal: int, n_atom: int, max_delay_samples: int) -> int:
    need = max(2 * n_signal, 2 * n_atom, max_delay_samples + n_atom + 1)
    pad = 1
    while pad < need:
        pad *= 2
    return pad


def _check_rates(residual: Signal, atom: Signal) -> None:
    if residual.sample_rate_hz != atom.sample_rate_hz:
        raise ValueError("residual and atom must share the sample rate")


def sampm_step(residual: Signal, atom: Signal, grid: DelayGrid | None = None) -> SampmTerm:
    """Single greedy step: best (delay, amplitude) pair for this residual.

    Ties in the gain are broken toward the smallest delay.
    """
    _check_rates(residual, atom)
    if grid is None:
        grid = DelayGrid.full_window(residual)
    pad = _pad_len(len(residual), len(atom), grid.sample_indices()[-1])
    atom_spec = forward_transform(atom, pad)
    residual_spec = forward_transform(residual, pad)
    delays, gains = gain_function(atom_spec, residual_spec, grid)
    best = int(np.argmax(gains))  # first occurrence = smallest tau on ties
    tau = float(delays[best])
    alpha = optimal_amplitude(atom_spec, residual_spec, tau)
    return SampmTerm(tau, alpha)


def sampm_decompose(signal: Signal, atom: Signal, max_terms: int,
                    tol_pct: float = 10.0, grid: DelayGrid | None = None) -> SampmDecomposition:
    """Greedy decomposition of ``signal`` into delayed scaled atom copies.

    Stops when the relative reconstruction error drops to ``tol_pct`` percent,
    ``max_terms`` is reached, or the achievable gain stagnates.  ``tol_pct``
    may be 0 to force exactly ``max_terms`` terms (used for feature
    extraction).
    """
    _check_rates(signal, atom)
    if max_terms < 1:
        raise ValueError("max_terms must be at least 1")
    if not 0.0 <= tol_pct < 100.0:
        raise ValueError("tol_pct must lie in [0, 100)")
    if grid is None:
        grid = DelayGrid.full_window(signal)
    idx = grid.sample_indices()
    pad = _pad_len(len(signal), len(atom), idx[-1])
    atom_spec = forward_transform(atom, pad)
    energy = _atom_energy(atom_spec)
    dt = signal.dt

    residual = np.zeros(pad)
    residual[: len(signal)] = signal.samples
    signal_norm = norm_time(signal)
    dec = SampmDecomposition(atom=atom)
    if signal_norm == 0.0:
        return dec

    omega = atom_spec.angular_frequencies()
    for _ in range(max_terms):
        res_norm_sq = np.sum(residual**2) * dt
        spec_bins = np.fft.fft(residual)
        num = np.fft.ifft(np.conj(atom_spec.bins) * spec_bins).real * pad
        gains = num[idx] ** 2 / energy
        best = int(np.argmax(gains))
        # Time-norm^2 reduction achieved by this candidate term.
        drop = gains[best] * dt / pad
        if drop < STAGNATION_RTOL * res_norm_sq:
            break
        tau = idx[best] * dt
        alpha = num[idx[best]] / energy
        delayed = np.fft.ifft(atom_spec.bins * np.exp(-1j * omega * tau)).real
        residual -= alpha * delayed
        error_pct = 100.0 * np.sqrt(np.sum(residual**2) * dt) / signal_norm
        dec.terms.append(SampmTerm(float(tau), float(alpha)))
        dec.error_history_pct.append(float(error_pct))
        if error_pct <= tol_pct:
            break
    return dec


def reconstruct(dec: SampmDecomposition, n_samples: int) -> Signal:
    """Sum of the decomposition terms sampled over ``n_samples``."""
    fs = dec.atom.sample_rate_hz
    out = np.zeros(int(n_samples))
    for term in dec.terms:
        start = int(round(term.tau_s * fs))
        stop = min(start + len(dec.atom), n_samples)
        if start < n_samples:
            out[start:stop] += term.alpha * dec.atom.samples[: stop - start]
    return Signal(out, fs)


def decomposition_to_dict(dec: SampmDecomposition, tol_pct: float | None = None,
                          max_terms: int | None = None) -> dict:
    return {
        "method": "sampm",
        "atom_meta": {
            "n_samples": len(dec.atom),
            "sample_rate_hz": dec.atom.sample_rate_hz,
        },
        "terms": [{"tau_s": t.tau_s, "alpha": t.alpha} for t in dec.terms],
        "error_history_pct": list(dec.error_history_pct),
        "tol_pct": tol_pct,
        "max_terms": max_terms,
    }


def save_decomposition_json(path, dec: SampmDecomposition, tol_pct: float | None = None,
                            max_terms: int | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(decomposition_to_dict(dec, tol_pct, max_terms), fh, indent=2, sort_keys=True)
        fh.write("\n")
