"""Synthetic damage-signal database on a rectangular plate.

Baselines are direct actuator-to-sensor propagations of the excitation burst;
damage adds a point-scatterer echo along the actuator-damage-sensor path with
a fixed reflection coefficient.  White Gaussian noise at a target SNR is added
to both measurements before differencing, with one RNG stream per (case,
path, measurement) so regeneration is bit-stable under any schedule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .atom import BurstSpec, make_tone_burst
from .core import Signal, read_signal_csv, write_signal_csv
from .dispersion import ModeSet, PlateModel, propagate

__all__ = [
    "SensorLayout",
    "DamageCase",
    "PathRecord",
    "DamageDatabase",
    "default_layout",
    "default_damage_grid",
    "default_plate",
    "gen_baseline",
    "gen_damaged",
    "add_noise",
    "gen_database",
    "write_database",
    "read_manifest",
    "load_residual",
]

MANIFEST_NAME = "manifest.json"

# Laminate of the localization study mapped onto the isotropic plate model:
# E = E11, nu = 0.3, ply density, total thickness 2.4 mm.
_DEFAULT_PLATE = dict(youngs_modulus_pa=60e9, poisson_ratio=0.3,
                      density_kg_m3=1554.0, thickness_m=2.4e-3)


@dataclass
class SensorLayout:
    """PZT positions on the plate; one element acts as the actuator."""

    pzt_positions: list
    actuator_index: int = 0
    plate_width_m: float = 0.3
    plate_height_m: float = 0.3

    def __post_init__(self):
        self.pzt_positions = [(float(x), float(y)) for x, y in self.pzt_positions]
        if len(self.pzt_positions) < 2:
            raise ValueError("need at least 2 PZTs")
        if not 0 <= self.actuator_index < len(self.pzt_positions):
            raise ValueError("actuator_index out of range")
        for x, y in self.pzt_positions:
            if not (0 <= x <= self.plate_width_m and 0 <= y <= self.plate_height_m):
                raise ValueError(f"PZT at ({x}, {y}) lies outside the plate")

    def paths(self):
        """(actuator, sensor) index pairs, one per receiving PZT."""
        a = self.actuator_index
        return [(a, s) for s in range(len(self.pzt_positions)) if s != a]


@dataclass
class DamageCase:
    x_m: float
    y_m: float
    reflection_coeff: float = 0.1
    label: str = ""

    def __post_init__(self):
        # 0 is the degenerate no-damage case, used for verification
        if not 0.0 <= self.reflection_coeff <= 1.0:
            raise ValueError("reflection_coeff must lie in [0, 1]")
        if not self.label:
            self.label = f"x{round(self.x_m * 1e3):03d}_y{round(self.y_m * 1e3):03d}"


@dataclass
class PathRecord:
    actuator: int
    sensor: int
    baseline: Signal
    damaged: Signal
    residual: Signal
    snr_db: float | None


@dataclass
class DamageDatabase:
    layout: SensorLayout
    plate: PlateModel
    burst_spec: BurstSpec
    cases: list
    records: dict = field(default_factory=dict)  # label -> list[PathRecord]
    train_labels: list = field(default_factory=list)
    test_labels: list = field(default_factory=list)
    snr_db: float | None = None
    seed: int = 0
    n_samples: int = 2048


def default_layout() -> SensorLayout:
    """Four PZTs inset 50 mm from the corners plus one bottom-center."""
    return SensorLayout(
        [(0.05, 0.05), (0.25, 0.05), (0.25, 0.25), (0.05, 0.25), (0.15, 0.05)],
        actuator_index=0,
    )


def default_plate() -> PlateModel:
    return PlateModel(**_DEFAULT_PLATE)


def default_damage_grid(reflection_coeff: float = 0.1) -> list:
    """7 x 6 grid: x = 50..200 mm step 25, y = 125..150 mm step 5."""
    cases = []
    for x_mm in range(50, 201, 25):
        for y_mm in range(125, 151, 5):
            cases.append(DamageCase(x_mm / 1e3, y_mm / 1e3, reflection_coeff))
    return cases


def _distance(p, q) -> float:
    return float(np.hypot(p[0] - q[0], p[1] - q[1]))


def gen_baseline(actuator_xy, sensor_xy, plate: PlateModel, burst: Signal,
                 n_samples: int, modes: ModeSet | None = None) -> Signal:
    """Direct-path response of the burst between two transducers."""
    d = _distance(actuator_xy, sensor_xy)
    if d <= 0:
        raise ValueError("degenerate path: actuator and sensor coincide")
    return propagate(burst, d, plate, modes, out_len=n_samples)


def gen_damaged(actuator_xy, sensor_xy, damage: DamageCase, plate: PlateModel,
                burst: Signal, n_samples: int, modes: ModeSet | None = None) -> Signal:
    """Baseline plus a scatterer echo over the actuator-damage-sensor path."""
    base = gen_baseline(actuator_xy, sensor_xy, plate, burst, n_samples, modes)
    d_scatter = (_distance(actuator_xy, (damage.x_m, damage.y_m))
                 + _distance((damage.x_m, damage.y_m), sensor_xy))
    echo = propagate(burst, d_scatter, plate, modes, out_len=n_samples)
    return Signal(base.samples + damage.reflection_coeff * echo.samples,
                  base.sample_rate_hz)


def add_noise(x: Signal, snr_db: float, rng) -> Signal:
    """Add white Gaussian noise at ``snr_db`` below the signal power.

    ``rng`` is a seed or a ``numpy.random.Generator``; the same seed always
    produces the same noise.
    """
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    power = float(np.mean(x.samples**2))
    noise_std = np.sqrt(power * 10.0 ** (-snr_db / 10.0))
    return Signal(x.samples + rng.normal(0.0, noise_std, len(x)), x.sample_rate_hz)


def gen_database(layout: SensorLayout, plate: PlateModel, burst_spec: BurstSpec,
                 damage_cases: list, snr_db: float | None, seed: int,
                 n_samples: int = 2048, n_test: int = 5) -> DamageDatabase:
    """Build every (damage case, path) record and the seeded train/test split.

    Noise is drawn per (case, path, measurement) from streams derived from the
    master seed, so the database is bit-stable under regeneration.
    """
    burst = make_tone_burst(burst_spec)
    positions = layout.pzt_positions
    for case in damage_cases:
        if not (0 <= case.x_m <= layout.plate_width_m
                and 0 <= case.y_m <= layout.plate_height_m):
            raise ValueError(f"damage case {case.label} lies outside the plate")
    labels = [c.label for c in damage_cases]
    if len(set(labels)) != len(labels):
        raise ValueError("damage case labels must be unique")

    baselines = {
        (a, s): gen_baseline(positions[a], positions[s], plate, burst, n_samples)
        for a, s in layout.paths()
    }
    db = DamageDatabase(layout=layout, plate=plate, burst_spec=burst_spec,
                        cases=list(damage_cases), snr_db=snr_db, seed=seed,
                        n_samples=n_samples)
    for ci, case in enumerate(damage_cases):
        records = []
        for pi, (a, s) in enumerate(layout.paths()):
            clean_base = baselines[(a, s)]
            clean_dam = gen_damaged(positions[a], positions[s], case, plate,
                                    burst, n_samples)
            if snr_db is None:
                base, dam = clean_base, clean_dam
            else:
                base = add_noise(clean_base, snr_db, np.random.default_rng([seed, ci, pi, 0]))
                dam = add_noise(clean_dam, snr_db, np.random.default_rng([seed, ci, pi, 1]))
            residual = Signal(dam.samples - base.samples, base.sample_rate_hz)
            records.append(PathRecord(a, s, base, dam, residual, snr_db))
        db.records[case.label] = records

    rng = np.random.default_rng([seed, 0xD1CE])
    order = rng.permutation(len(damage_cases))
    n_train = len(damage_cases) - n_test
    if n_train < 1:
        raise ValueError("split leaves no training cases")
    db.train_labels = [damage_cases[i].label for i in sorted(order[:n_train])]
    db.test_labels = [damage_cases[i].label for i in sorted(order[n_train:])]
    return db


def write_database(db: DamageDatabase, out_dir) -> Path:
    """Write residual CSVs as ``<label>/<actuator>-<sensor>.csv`` + manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for label, records in db.records.items():
        case_dir = out_dir / label
        case_dir.mkdir(exist_ok=True)
        for rec in records:
            write_signal_csv(case_dir / f"{rec.actuator}-{rec.sensor}.csv", rec.residual)
    split = {label: "train" for label in db.train_labels}
    split.update({label: "test" for label in db.test_labels})
    manifest = {
        "plate": {
            "youngs_modulus_pa": db.plate.youngs_modulus_pa,
            "poisson_ratio": db.plate.poisson_ratio,
            "density_kg_m3": db.plate.density_kg_m3,
            "thickness_m": db.plate.thickness_m,
        },
        "layout": {
            "pzt_positions": [list(p) for p in db.layout.pzt_positions],
            "actuator_index": db.layout.actuator_index,
            "plate_width_m": db.layout.plate_width_m,
            "plate_height_m": db.layout.plate_height_m,
        },
        "burst": {
            "f0_hz": db.burst_spec.f0_hz,
            "n_cycles": db.burst_spec.n_cycles,
            "sample_rate_hz": db.burst_spec.sample_rate_hz,
            "amplitude": db.burst_spec.amplitude,
        },
        "snr_db": db.snr_db,
        "seed": db.seed,
        "n_samples": db.n_samples,
        "paths": [list(p) for p in db.layout.paths()],
        "cases": [
            {
                "label": c.label,
                "x_m": c.x_m,
                "y_m": c.y_m,
                "reflection_coeff": c.reflection_coeff,
                "split": split[c.label],
            }
            for c in db.cases
        ],
    }
    with open(out_dir / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


def read_manifest(db_dir) -> dict:
    with open(Path(db_dir) / MANIFEST_NAME) as fh:
        return json.load(fh)


def load_residual(db_dir, label: str, actuator: int, sensor: int) -> Signal:
    return read_signal_csv(Path(db_dir) / label / f"{actuator}-{sensor}.csv")
