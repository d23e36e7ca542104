"""Matching-pursuit decomposition toolkit for dispersive Lamb-wave signals."""

from .atom import BurstSpec, load_atom, make_tone_burst
from .core import (
    DelayGrid,
    Signal,
    Spectrum,
    apply_delay,
    forward_transform,
    inverse_transform,
    norm_freq,
    norm_time,
    read_signal_csv,
    write_signal_csv,
)
from .dispersion import ModeSet, PlateModel, k_a0, k_s0, propagate, velocities
from .sampm import SampmDecomposition, SampmTerm, sampm_decompose, sampm_step
from .sacmpm import (
    ChebyshevBasis,
    SacmpmDecomposition,
    SacmpmTerm,
    sacmpm_decompose,
    sacmpm_step,
)

__version__ = "0.1.0"
