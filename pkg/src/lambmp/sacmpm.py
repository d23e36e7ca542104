"""Convolutional single-atom matching pursuit.

Each term convolves the delayed atom with a short impulse response expanded
on Chebyshev polynomials of the second kind over the atom support.  The delay
is selected exactly as in the scalar pursuit (constant-amplitude gain); the
expansion coefficients then solve a small Galerkin system, optionally ridge
regularized because the system is ill-conditioned by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import DelayGrid, Signal, Spectrum, forward_transform, norm_time
from .sampm import _atom_energy, _check_rates, _pad_len, STAGNATION_RTOL

__all__ = [
    "ChebyshevBasis",
    "SacmpmTerm",
    "SacmpmDecomposition",
    "eval_basis",
    "convolve",
    "build_B",
    "assemble_system",
    "solve_beta",
    "sacmpm_step",
    "sacmpm_decompose",
    "term_signal",
    "reconstruct",
    "decomposition_to_dict",
    "save_decomposition_json",
]

# Relative eigenvalue cutoff for the unregularized Galerkin solve.
_EIG_RCOND = 1e-12


@dataclass
class ChebyshevBasis:
    """Second-kind Chebyshev functions sampled over a time support.

    Basis function i (1-based) is U_{i-1}(2 t / support - 1) for t in
    [0, support_s], sampled at the signal rate.
    """

    n_funcs: int
    support_s: float
    sample_rate_hz: float

    def __post_init__(self):
        if int(self.n_funcs) < 1:
            raise ValueError("n_funcs must be a positive integer")
        self.n_funcs = int(self.n_funcs)
        if not self.support_s > 0:
            raise ValueError("support_s must be positive")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")

    @property
    def n_samples(self) -> int:
        return int(np.ceil(self.support_s * self.sample_rate_hz - 1e-9)) + 1

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate_hz


def eval_basis(basis: ChebyshevBasis) -> np.ndarray:
    """Matrix (n_funcs x support samples) of sampled basis functions."""
    x = 2.0 * basis.times() / basis.support_s - 1.0
    rows = np.empty((basis.n_funcs, x.size))
    rows[0] = 1.0
    if basis.n_funcs > 1:
        rows[1] = 2.0 * x
    for i in range(2, basis.n_funcs):
        rows[i] = 2.0 * x * rows[i - 1] - rows[i - 2]
    return rows


def convolve(a: Signal, b: Signal) -> Signal:
    """Linear convolution scaled by dt (Riemann sum of the integral)."""
    if a.sample_rate_hz != b.sample_rate_hz:
        raise ValueError("convolve requires equal sample rates")
    out = np.convolve(a.samples, b.samples) * a.dt
    return Signal(out, a.sample_rate_hz)


def _delay_index(tau_s: float, fs: float) -> int:
    shift = tau_s * fs
    m = int(round(shift))
    if abs(shift - m) > 1e-6:
        raise ValueError(f"tau_s = {tau_s:g} s does not lie on the sample grid")
    if m < 0:
        raise ValueError("tau_s must be nonnegative")
    return m


def build_B(atom: Signal, tau_s: float, basis: ChebyshevBasis, out_len: int) -> np.ndarray:
    """Rows convolve(basis_i, atom delayed by tau), cut to ``out_len``.

    Rows vanish for t < tau (the delayed atom is causal); a delay at or past
    the window end raises.
    """
    if atom.sample_rate_hz != basis.sample_rate_hz:
        raise ValueError("atom and basis must share the sample rate")
    out_len = int(out_len)
    m = _delay_index(tau_s, atom.sample_rate_hz)
    if m >= out_len:
        raise ValueError(
            f"delay of {tau_s:g} s places the term support entirely outside "
            f"the {out_len}-sample window"
        )
    rows = eval_basis(basis)
    out = np.zeros((basis.n_funcs, out_len))
    for i in range(basis.n_funcs):
        conv = np.convolve(rows[i], atom.samples) * atom.dt
        stop = min(m + conv.size, out_len)
        out[i, m:stop] = conv[: stop - m]
    return out


def assemble_system(b_matrix: np.ndarray, residual: Signal):
    """Galerkin operator M = B B^T dt and load F = B r dt."""
    if b_matrix.shape[1] != len(residual):
        raise ValueError("B column count must equal the residual length")
    dt = residual.dt
    m = (b_matrix @ b_matrix.T) * dt
    m = 0.5 * (m + m.T)  # kill round-off asymmetry
    f = (b_matrix @ residual.samples) * dt
    return m, f


def solve_beta(m_matrix: np.ndarray, f_vector: np.ndarray, ridge_lambda: float) -> np.ndarray:
    """Solve (M + lambda * trace(M)/N * I) beta = F.

    With ``ridge_lambda`` = 0 the system is solved through a symmetric
    eigendecomposition with a relative cutoff, giving the exact Galerkin
    solution on the numerically resolvable subspace; a fully degenerate M
    raises and recommends a positive ridge.
    """
    m_matrix = np.asarray(m_matrix, dtype=float)
    f_vector = np.asarray(f_vector, dtype=float)
    n = f_vector.size
    if m_matrix.shape != (n, n):
        raise ValueError("M must be square and match the length of F")
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be nonnegative")
    if ridge_lambda > 0:
        shift = ridge_lambda * np.trace(m_matrix) / n
        return np.linalg.solve(m_matrix + shift * np.eye(n), f_vector)
    eigvals, eigvecs = np.linalg.eigh(m_matrix)
    keep = eigvals > _EIG_RCOND * max(eigvals[-1], 0.0)
    if not np.any(keep):
        raise ValueError(
            "Galerkin system is singular at ridge_lambda = 0; "
            "set ridge_lambda > 0"
        )
    coeffs = eigvecs[:, keep].T @ f_vector
    return eigvecs[:, keep] @ (coeffs / eigvals[keep])


@dataclass
class SacmpmTerm:
    """One convolutional term: delay plus impulse-response coefficients."""

    tau_s: float
    beta: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or not np.all(np.isfinite(beta)):
            raise ValueError("beta must be a finite 1-D vector")
        self.beta = beta


@dataclass
class SacmpmDecomposition:
    atom: Signal
    basis: ChebyshevBasis
    terms: list = field(default_factory=list)
    error_history_pct: list = field(default_factory=list)
    ridge_lambda: float = 0.0

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def final_error_pct(self) -> float:
        return self.error_history_pct[-1] if self.error_history_pct else 100.0


def default_basis(atom: Signal, n_funcs: int = 40) -> ChebyshevBasis:
    """Basis over the atom's own support, matching its sample rate."""
    return ChebyshevBasis(n_funcs, atom.duration_s, atom.sample_rate_hz)


def _select_delay(residual_samples: np.ndarray, atom_spec: Spectrum,
                  idx: np.ndarray, energy: float) -> float:
    num = np.fft.ifft(np.conj(atom_spec.bins) * np.fft.fft(residual_samples)).real
    num *= atom_spec.pad_len
    gains = num[idx] ** 2 / energy
    best = int(np.argmax(gains))
    return idx[best] / atom_spec.sample_rate_hz


def sacmpm_step(residual: Signal, atom: Signal, basis: ChebyshevBasis,
                grid: DelayGrid | None = None, ridge_lambda: float = 1e-10) -> SacmpmTerm:
    """One greedy step: scalar-gain delay selection, then the Galerkin solve."""
    _check_rates(residual, atom)
    if grid is None:
        grid = DelayGrid.full_window(residual)
    idx = grid.sample_indices()
    pad = _pad_len(len(residual), len(atom), idx[-1])
    atom_spec = forward_transform(atom, pad)
    energy = _atom_energy(atom_spec)
    padded = np.zeros(pad)
    padded[: len(residual)] = residual.samples
    tau = _select_delay(padded, atom_spec, idx, energy)
    b_matrix = build_B(atom, tau, basis, pad)
    m_matrix, f_vector = assemble_system(b_matrix, Signal(padded, residual.sample_rate_hz))
    beta = solve_beta(m_matrix, f_vector, ridge_lambda)
    return SacmpmTerm(float(tau), beta)


def term_signal(atom: Signal, basis: ChebyshevBasis, term: SacmpmTerm,
                out_len: int) -> Signal:
    """Time signal of one term: B(tau)^T beta over ``out_len`` samples."""
    b_matrix = build_B(atom, term.tau_s, basis, out_len)
    return Signal(b_matrix.T @ term.beta, atom.sample_rate_hz)


def sacmpm_decompose(signal: Signal, atom: Signal, n_funcs: int = 40,
                     max_terms: int = 50, tol_pct: float = 10.0,
                     ridge_lambda: float = 1e-10, grid: DelayGrid | None = None,
                     basis: ChebyshevBasis | None = None) -> SacmpmDecomposition:
    """Greedy convolutional decomposition of ``signal``.

    Stops on the relative-error tolerance, the term budget, or stagnation
    (a step that no longer reduces the residual norm is discarded).
    """
    _check_rates(signal, atom)
    if max_terms < 1:
        raise ValueError("max_terms must be at least 1")
    if not 0.0 <= tol_pct < 100.0:
        raise ValueError("tol_pct must lie in [0, 100)")
    if basis is None:
        basis = default_basis(atom, n_funcs)
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
    dec = SacmpmDecomposition(atom=atom, basis=basis, ridge_lambda=ridge_lambda)
    if signal_norm == 0.0:
        return dec

    for _ in range(max_terms):
        res_norm_sq = np.sum(residual**2) * dt
        tau = _select_delay(residual, atom_spec, idx, energy)
        b_matrix = build_B(atom, tau, basis, pad)
        m_matrix, f_vector = assemble_system(b_matrix, Signal(residual, signal.sample_rate_hz))
        beta = solve_beta(m_matrix, f_vector, ridge_lambda)
        candidate = residual - b_matrix.T @ beta
        new_norm_sq = np.sum(candidate**2) * dt
        if res_norm_sq - new_norm_sq < STAGNATION_RTOL * res_norm_sq:
            break
        residual = candidate
        error_pct = 100.0 * np.sqrt(new_norm_sq) / signal_norm
        dec.terms.append(SacmpmTerm(float(tau), beta))
        dec.error_history_pct.append(float(error_pct))
        if error_pct <= tol_pct:
            break
    return dec


def reconstruct(dec: SacmpmDecomposition, n_samples: int) -> Signal:
    """Sum of all term signals over ``n_samples``."""
    out = np.zeros(int(n_samples))
    for term in dec.terms:
        out += term_signal(dec.atom, dec.basis, term, n_samples).samples
    return Signal(out, dec.atom.sample_rate_hz)


def decomposition_to_dict(dec: SacmpmDecomposition) -> dict:
    return {
        "method": "sacmpm",
        "N": dec.basis.n_funcs,
        "ridge_lambda": dec.ridge_lambda,
        "terms": [{"tau_s": t.tau_s, "beta": t.beta.tolist()} for t in dec.terms],
        "error_history_pct": list(dec.error_history_pct),
    }


def save_decomposition_json(path, dec: SacmpmDecomposition) -> None:
    with open(path, "w") as fh:
        json.dump(decomposition_to_dict(dec), fh, indent=2, sort_keys=True)
        fh.write("\n")
