"""Command-line entry point: synthesis, decomposition, database generation,
feature extraction, localization training/evaluation, and the full pipeline.

Every subcommand is deterministic given its configuration and seed.  Options
may come from a JSON config file (``--config``); explicit flags win.  Output
paths default under the directory named by the ``LAMBMP_OUT`` environment
variable (falling back to the working directory).  On any error the command
removes the files it created and exits nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .atom import BurstSpec, load_atom, make_tone_burst
from .core import read_signal_csv, write_signal_csv
from .damage_db import (
    default_damage_grid,
    default_layout,
    gen_database,
    load_residual,
    read_manifest,
    write_database,
)
from .dispersion import ModeSet, PlateModel, k_a0, k_s0, propagate, velocities
from .features import (
    extract,
    read_features_csv,
    read_targets_csv,
    write_features_csv,
    write_schema_json,
    write_targets_csv,
)
from .localize import (
    TrainConfig,
    load_model,
    nn_evaluate,
    nn_train,
    save_model,
)
from . import sampm as sampm_mod
from . import sacmpm as sacmpm_mod

_ENV_OUT = "LAMBMP_OUT"


class _Outputs:
    """Tracks files and directories a command creates so a failure can remove
    them; anything that already existed is left alone."""

    def __init__(self):
        self.new_files = []
        self.new_dirs = []

    def file(self, path) -> Path:
        path = Path(path)
        self.directory(path.parent)
        if not path.exists():
            self.new_files.append(path)
        return path

    def directory(self, path) -> Path:
        path = Path(path)
        missing = []
        probe = path
        while not probe.exists() and probe != probe.parent:
            missing.append(probe)
            probe = probe.parent
        path.mkdir(parents=True, exist_ok=True)
        self.new_dirs.extend(missing)
        return path

    def discard(self):
        for path in self.new_files:
            try:
                path.unlink(missing_ok=True)
            except OSError:
                pass
        for path in sorted(set(self.new_dirs), key=lambda p: -len(p.parts)):
            try:
                path.rmdir()
            except OSError:
                pass  # non-empty: keep whatever the user had there


def _default_out(name: str) -> Path:
    return Path(os.environ.get(_ENV_OUT, ".")) / name


def _get(args, config, key, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _load_config(args) -> dict:
    path = getattr(args, "config", None)
    if path is None:
        return {}
    with open(path) as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return config


def _plate_from(args, config) -> PlateModel:
    return PlateModel(
        youngs_modulus_pa=_get(args, config, "plate_e", 70e9),
        poisson_ratio=_get(args, config, "plate_nu", 0.3),
        density_kg_m3=_get(args, config, "plate_rho", 1500.0),
        thickness_m=_get(args, config, "plate_h", 2e-3),
    )


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value: float) -> str:
    return repr(float(value))


def _save_line_svg(path, curves, title, xlabel, ylabel):
    """Render simple line plots without a display."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4))
    for label, x, y in curves:
        ax.plot(x, y, label=label, linewidth=0.9)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(curves) > 1:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# ---------------------------------------------------------------- commands


def cmd_atom(args, out: _Outputs) -> int:
    config = _load_config(args)
    spec = BurstSpec(
        f0_hz=_get(args, config, "f0", 100e3),
        n_cycles=int(_get(args, config, "cycles", 5)),
        sample_rate_hz=_get(args, config, "fs", 2e6),
        amplitude=_get(args, config, "amp", 1.0),
    )
    path = out.file(_get(args, config, "out", _default_out("atom.csv")))
    write_signal_csv(path, make_tone_burst(spec))
    print(f"wrote {path}")
    return 0


def cmd_synth(args, out: _Outputs) -> int:
    config = _load_config(args)
    plate = _plate_from(args, config)
    spec = BurstSpec(
        f0_hz=_get(args, config, "f0", 100e3),
        n_cycles=int(_get(args, config, "cycles", 5)),
        sample_rate_hz=_get(args, config, "fs", 2e6),
        amplitude=_get(args, config, "amp", 1.0),
    )
    modes = ModeSet.from_names(str(_get(args, config, "modes", "s0,a0")).split(","))
    n_samples = int(_get(args, config, "len", 1024))
    d_min = _get(args, config, "d_min", 0.15)
    d_max = _get(args, config, "d_max", 0.55)
    d_step = _get(args, config, "d_step", 0.05)
    out_dir = out.directory(_get(args, config, "out", _default_out("synth")))

    burst = make_tone_burst(spec)
    write_signal_csv(out.file(out_dir / "atom.csv"), burst)
    distances = np.arange(d_min, d_max + d_step / 2, d_step)
    signals = []
    for d in distances:
        sig = propagate(burst, float(d), plate, modes, out_len=n_samples)
        path = out.file(out_dir / f"signal_d{d:.3f}m.csv")
        write_signal_csv(path, sig)
        signals.append((f"d={d:.2f} m", sig))

    freqs = np.linspace(1e3, min(500e3, 0.45 * spec.sample_rate_hz), 500)
    rows = []
    for f in freqs:
        cp_s, cg_s = velocities(float(f), plate, "s0")
        cp_a, cg_a = velocities(float(f), plate, "a0")
        rows.append([_fmt(f), _fmt(k_s0(float(f), plate)), _fmt(k_a0(float(f), plate)),
                     _fmt(cp_s), _fmt(cp_a), _fmt(cg_s), _fmt(cg_a)])
    _write_rows(out.file(out_dir / "dispersion_curves.csv"),
                ["f_hz", "k_s0", "k_a0", "cp_s0", "cp_a0", "cg_s0", "cg_a0"], rows)

    if _get(args, config, "svg", False):
        curves = [(label, sig.times() * 1e6, sig.samples) for label, sig in signals]
        _save_line_svg(out.file(out_dir / "signals.svg"), curves,
                       "propagated signals", "time [us]", "amplitude")
    print(f"wrote {len(signals)} signals and dispersion curves under {out_dir}")
    return 0


def _run_decomposition(signal, atom, method, tol, max_terms, n_funcs, ridge):
    if method == "sampm":
        dec = sampm_mod.sampm_decompose(signal, atom, max_terms=max_terms, tol_pct=tol)
        payload = sampm_mod.decomposition_to_dict(dec, tol_pct=tol, max_terms=max_terms)
        term_signals = []
        for term in dec.terms:
            single = sampm_mod.SampmDecomposition(atom, [term], [])
            term_signals.append(sampm_mod.reconstruct(single, len(signal)).samples)
        recon = sampm_mod.reconstruct(dec, len(signal))
    elif method == "sacmpm":
        dec = sacmpm_mod.sacmpm_decompose(signal, atom, n_funcs=n_funcs,
                                          max_terms=max_terms, tol_pct=tol,
                                          ridge_lambda=ridge)
        payload = sacmpm_mod.decomposition_to_dict(dec)
        term_signals = [
            sacmpm_mod.term_signal(atom, dec.basis, term, len(signal)).samples
            for term in dec.terms
        ]
        recon = sacmpm_mod.reconstruct(dec, len(signal))
    else:
        raise ValueError(f"unknown method {method!r} (expected sampm or sacmpm)")
    return dec, payload, term_signals, recon


def cmd_decompose(args, out: _Outputs) -> int:
    config = _load_config(args)
    signal_path = _get(args, config, "signal")
    if signal_path is None:
        raise ValueError("decompose requires --signal")
    signal = read_signal_csv(signal_path)
    atom_path = _get(args, config, "atom")
    if atom_path is not None:
        atom = load_atom(atom_path)
    else:
        atom = make_tone_burst(BurstSpec(
            f0_hz=_get(args, config, "f0", 100e3),
            n_cycles=int(_get(args, config, "cycles", 5)),
            sample_rate_hz=signal.sample_rate_hz,
            amplitude=_get(args, config, "amp", 1.0),
        ))
    method = str(_get(args, config, "method", "sampm")).lower()
    tol = float(_get(args, config, "tol", 10.0))
    max_terms = int(_get(args, config, "max_terms", 50))
    n_funcs = int(_get(args, config, "n", 40))
    ridge = float(_get(args, config, "ridge", 1e-10))
    out_dir = out.directory(_get(args, config, "out", _default_out("decomposition")))

    dec, payload, term_signals, recon = _run_decomposition(
        signal, atom, method, tol, max_terms, n_funcs, ridge)

    with open(out.file(out_dir / "decomposition.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    times = signal.times()
    _write_rows(
        out.file(out_dir / "reconstruction.csv"),
        ["time_s", "target", "reconstruction", "residual"],
        [[_fmt(t), _fmt(y), _fmt(r), _fmt(y - r)]
         for t, y, r in zip(times, signal.samples, recon.samples)],
    )
    _write_rows(
        out.file(out_dir / "convergence.csv"),
        ["term", "error_pct"],
        [[str(i + 1), _fmt(e)] for i, e in enumerate(dec.error_history_pct)],
    )
    _write_rows(
        out.file(out_dir / "terms.csv"),
        ["time_s"] + [f"term_{i + 1}" for i in range(len(term_signals))],
        [[_fmt(t)] + [_fmt(ts[j]) for ts in term_signals]
         for j, t in enumerate(times)],
    )
    if _get(args, config, "svg", False):
        _save_line_svg(
            out.file(out_dir / "reconstruction.svg"),
            [("target", times * 1e6, signal.samples),
             ("reconstruction", times * 1e6, recon.samples)],
            f"{method} reconstruction ({dec.n_terms} terms)", "time [us]", "amplitude")
        _save_line_svg(
            out.file(out_dir / "convergence.svg"),
            [("error", np.arange(1, dec.n_terms + 1), np.asarray(dec.error_history_pct))],
            f"{method} convergence", "terms", "error [%]")
    final = dec.final_error_pct
    print(f"{method}: {dec.n_terms} terms, final error {final:.4g}% -> {out_dir}")
    return 0


def cmd_db_gen(args, out: _Outputs) -> int:
    config = _load_config(args)
    seed = int(_get(args, config, "seed", 0))
    snr = _get(args, config, "snr", 150.0)
    snr = None if snr in ("none", "") else float(snr)
    spec = BurstSpec(
        f0_hz=_get(args, config, "f0", 200e3),
        n_cycles=int(_get(args, config, "cycles", 5)),
        sample_rate_hz=_get(args, config, "fs", 1e6 / 0.3),
        amplitude=_get(args, config, "amp", 1.0),
    )
    plate = PlateModel(
        youngs_modulus_pa=_get(args, config, "plate_e", 60e9),
        poisson_ratio=_get(args, config, "plate_nu", 0.3),
        density_kg_m3=_get(args, config, "plate_rho", 1554.0),
        thickness_m=_get(args, config, "plate_h", 2.4e-3),
    )
    cases = default_damage_grid(float(_get(args, config, "reflection", 0.1)))
    db = gen_database(default_layout(), plate, spec, cases, snr, seed,
                      n_samples=int(_get(args, config, "len", 2048)),
                      n_test=int(_get(args, config, "n_test", 5)))
    out_dir = out.directory(_get(args, config, "out", _default_out("db")))
    write_database(db, out_dir)
    print(f"wrote {len(cases)} cases ({len(db.train_labels)} train / "
          f"{len(db.test_labels)} test) under {out_dir}")
    return 0


def _decompose_database(db_dir, method, m, n_funcs, ridge):
    """Decompose every residual in the database; rows ordered by manifest."""
    manifest = read_manifest(db_dir)
    if not manifest["cases"]:
        raise ValueError(f"{db_dir}: database has no damage cases")
    burst = make_tone_burst(BurstSpec(**manifest["burst"]))
    labels, rows = [], []
    for case in manifest["cases"]:
        decs = []
        for a, s in manifest["paths"]:
            residual = load_residual(db_dir, case["label"], a, s)
            if method == "sampm":
                dec = sampm_mod.sampm_decompose(residual, burst, max_terms=m, tol_pct=0.0)
            else:
                dec = sacmpm_mod.sacmpm_decompose(residual, burst, n_funcs=n_funcs,
                                                  max_terms=m, tol_pct=0.0,
                                                  ridge_lambda=ridge)
            decs.append(dec)
        vec = extract(decs, method, m)
        labels.append(case["label"])
        rows.append(vec.values)
    return manifest, labels, np.vstack(rows), vec.schema


def cmd_features(args, out: _Outputs) -> int:
    config = _load_config(args)
    db_dir = _get(args, config, "db")
    if db_dir is None:
        raise ValueError("features requires --db")
    method = str(_get(args, config, "method", "sampm")).lower()
    m = int(_get(args, config, "m", 6))
    n_funcs = int(_get(args, config, "n", 40))
    ridge = float(_get(args, config, "ridge", 1e-10))
    out_dir = out.directory(_get(args, config, "out", _default_out("features")))

    manifest, labels, matrix, schema = _decompose_database(db_dir, method, m, n_funcs, ridge)
    write_features_csv(out.file(out_dir / f"features_{method}.csv"), labels, matrix, schema)
    write_schema_json(out.file(out_dir / f"features_{method}.schema.json"), schema)
    targets = np.array([[c["x_m"], c["y_m"]] for c in manifest["cases"]])
    write_targets_csv(out.file(out_dir / "targets.csv"), labels, targets)
    print(f"wrote {matrix.shape[0]}x{matrix.shape[1]} {method} feature matrix under {out_dir}")
    return 0


def cmd_localize_train(args, out: _Outputs) -> int:
    config = _load_config(args)
    feat_path = _get(args, config, "features")
    targ_path = _get(args, config, "targets")
    if feat_path is None or targ_path is None:
        raise ValueError("localize train requires --features and --targets")
    labels, matrix = read_features_csv(feat_path)
    t_labels, targets = read_targets_csv(targ_path)
    if labels != t_labels:
        raise ValueError("feature and target labels disagree")
    train_config = TrainConfig(
        max_epochs=int(_get(args, config, "epochs", 3000)),
        learning_rate=float(_get(args, config, "lr", 0.1)),
        seed=int(_get(args, config, "seed", 0)),
    )
    model = nn_train(matrix, targets, train_config)
    path = out.file(_get(args, config, "out", _default_out("model.json")))
    save_model(path, model)
    report = nn_evaluate(model, matrix, targets, labels)
    print(f"trained on {len(labels)} cases; train errors "
          f"x={report.x_error_pct:.2f}% y={report.y_error_pct:.2f}% -> {path}")
    return 0


def cmd_localize_eval(args, out: _Outputs) -> int:
    config = _load_config(args)
    model_path = _get(args, config, "model")
    feat_path = _get(args, config, "features")
    targ_path = _get(args, config, "targets")
    if model_path is None or feat_path is None or targ_path is None:
        raise ValueError("localize eval requires --model, --features and --targets")
    model = load_model(model_path)
    labels, matrix = read_features_csv(feat_path)
    t_labels, targets = read_targets_csv(targ_path)
    if labels != t_labels:
        raise ValueError("feature and target labels disagree")
    ranges = None
    x_range = _get(args, config, "x_range")
    y_range = _get(args, config, "y_range")
    if x_range is not None and y_range is not None:
        ranges = (float(x_range), float(y_range))
    report = nn_evaluate(model, matrix, targets, labels, coord_ranges=ranges)
    out_dir = out.directory(_get(args, config, "out", _default_out("eval")))
    _write_rows(out.file(out_dir / "report.csv"), ["coordinate", "error_pct"],
                [["x", _fmt(report.x_error_pct)], ["y", _fmt(report.y_error_pct)]])
    _write_rows(
        out.file(out_dir / "predictions.csv"),
        ["label", "true_x_m", "true_y_m", "pred_x_m", "pred_y_m"],
        [[r["label"], _fmt(r["true_x_m"]), _fmt(r["true_y_m"]),
          _fmt(r["pred_x_m"]), _fmt(r["pred_y_m"])] for r in report.predictions],
    )
    print(f"errors: x={report.x_error_pct:.2f}% y={report.y_error_pct:.2f}% -> {out_dir}")
    return 0


def cmd_pipeline(args, out: _Outputs) -> int:
    """Database -> decompositions -> features -> training -> evaluation."""
    config = _load_config(args)
    seed = int(_get(args, config, "seed", 0))
    m = int(_get(args, config, "m", 6))
    n_funcs = int(_get(args, config, "n", 40))
    ridge = float(_get(args, config, "ridge", 1e-10))
    epochs = int(_get(args, config, "epochs", 3000))
    lr = float(_get(args, config, "lr", 0.1))
    out_dir = out.directory(_get(args, config, "out", _default_out("pipeline")))

    spec = BurstSpec(
        f0_hz=_get(args, config, "f0", 200e3),
        n_cycles=int(_get(args, config, "cycles", 5)),
        sample_rate_hz=_get(args, config, "fs", 1e6 / 0.3),
        amplitude=_get(args, config, "amp", 1.0),
    )
    plate = PlateModel(
        youngs_modulus_pa=_get(args, config, "plate_e", 60e9),
        poisson_ratio=_get(args, config, "plate_nu", 0.3),
        density_kg_m3=_get(args, config, "plate_rho", 1554.0),
        thickness_m=_get(args, config, "plate_h", 2.4e-3),
    )
    snr = _get(args, config, "snr", 150.0)
    snr = None if snr in ("none", "") else float(snr)
    cases = default_damage_grid(float(_get(args, config, "reflection", 0.1)))
    db = gen_database(default_layout(), plate, spec, cases, snr, seed,
                      n_samples=int(_get(args, config, "len", 2048)))
    db_dir = out.directory(out_dir / "db")
    write_database(db, db_dir)
    manifest = read_manifest(db_dir)

    case_by_label = {c["label"]: c for c in manifest["cases"]}
    train_labels = [c["label"] for c in manifest["cases"] if c["split"] == "train"]
    test_labels = [c["label"] for c in manifest["cases"] if c["split"] == "test"]
    all_x = [c["x_m"] for c in manifest["cases"]]
    all_y = [c["y_m"] for c in manifest["cases"]]
    grid_ranges = (max(all_x) - min(all_x), max(all_y) - min(all_y))

    report_rows = []
    test_errors = {}
    for method in ("sampm", "sacmpm"):
        _, labels, matrix, schema = _decompose_database(db_dir, method, m, n_funcs, ridge)
        write_features_csv(out.file(out_dir / f"features_{method}.csv"), labels, matrix, schema)
        write_schema_json(out.file(out_dir / f"features_{method}.schema.json"), schema)
        targets = np.array([[case_by_label[l]["x_m"], case_by_label[l]["y_m"]] for l in labels])
        if method == "sampm":
            write_targets_csv(out.file(out_dir / "targets.csv"), labels, targets)
        index = {label: i for i, label in enumerate(labels)}
        tr = [index[l] for l in train_labels]
        te = [index[l] for l in test_labels]
        model = nn_train(matrix[tr], targets[tr], TrainConfig(epochs, lr, seed))
        save_model(out.file(out_dir / f"model_{method}.json"), model)
        train_rep = nn_evaluate(model, matrix[tr], targets[tr],
                                [labels[i] for i in tr], coord_ranges=grid_ranges)
        test_rep = nn_evaluate(model, matrix[te], targets[te],
                               [labels[i] for i in te], coord_ranges=grid_ranges)
        test_errors[method] = (test_rep.x_error_pct, test_rep.y_error_pct)
        report_rows.append([method, "x", _fmt(train_rep.x_error_pct), _fmt(test_rep.x_error_pct)])
        report_rows.append([method, "y", _fmt(train_rep.y_error_pct), _fmt(test_rep.y_error_pct)])
        scatter = [[r["label"], split, _fmt(r["true_x_m"]), _fmt(r["true_y_m"]),
                    _fmt(r["pred_x_m"]), _fmt(r["pred_y_m"])]
                   for split, rep in (("train", train_rep), ("test", test_rep))
                   for r in rep.predictions]
        _write_rows(out.file(out_dir / f"scatter_{method}.csv"),
                    ["label", "split", "true_x_m", "true_y_m", "pred_x_m", "pred_y_m"],
                    scatter)
        if _get(args, config, "svg", False):
            rep_rows = train_rep.predictions + test_rep.predictions
            _save_line_svg(
                out.file(out_dir / f"scatter_{method}.svg"),
                [("true", np.array([r["true_x_m"] for r in rep_rows]),
                  np.array([r["true_y_m"] for r in rep_rows])),
                 ("predicted", np.array([r["pred_x_m"] for r in rep_rows]),
                  np.array([r["pred_y_m"] for r in rep_rows]))],
                f"{method} localization", "x [m]", "y [m]")

    _write_rows(out.file(out_dir / "report.csv"),
                ["method", "coordinate", "train_error_pct", "test_error_pct"],
                report_rows)
    sam_y = test_errors["sampm"][1]
    sac_y = test_errors["sacmpm"][1]
    if sam_y > 0 and sac_y > 1.5 * sam_y:
        print(f"warning: sacmpm y-error {sac_y:.2f}% exceeds sampm {sam_y:.2f}% "
              "by more than 50%", file=sys.stderr)
    for method in ("sampm", "sacmpm"):
        ex, ey = test_errors[method]
        print(f"{method}: test errors x={ex:.2f}% y={ey:.2f}%")
    print(f"pipeline outputs under {out_dir}")
    return 0


# ---------------------------------------------------------------- parser


def _add_common(parser):
    parser.add_argument("--config", help="JSON file with option defaults")
    parser.add_argument("--out", help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lambmp",
        description="Matching-pursuit decomposition toolkit for Lamb-wave signals",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("atom", help="write a tone-burst atom CSV")
    _add_common(p)
    p.add_argument("--f0", type=float, help="center frequency [Hz]")
    p.add_argument("--cycles", type=int, help="number of cycles")
    p.add_argument("--fs", type=float, help="sample rate [Hz]")
    p.add_argument("--amp", type=float, help="amplitude")
    p.set_defaults(func=cmd_atom)

    p = sub.add_parser("synth", help="synthesize propagated plate signals")
    _add_common(p)
    p.add_argument("--d-min", dest="d_min", type=float)
    p.add_argument("--d-max", dest="d_max", type=float)
    p.add_argument("--d-step", dest="d_step", type=float)
    p.add_argument("--f0", type=float)
    p.add_argument("--cycles", type=int)
    p.add_argument("--fs", type=float)
    p.add_argument("--amp", type=float)
    p.add_argument("--len", type=int, help="output window length [samples]")
    p.add_argument("--modes", help="comma list: s0,a0")
    p.add_argument("--plate-e", dest="plate_e", type=float)
    p.add_argument("--plate-nu", dest="plate_nu", type=float)
    p.add_argument("--plate-rho", dest="plate_rho", type=float)
    p.add_argument("--plate-h", dest="plate_h", type=float)
    p.add_argument("--svg", action="store_true", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("decompose", help="decompose a signal CSV")
    _add_common(p)
    p.add_argument("--signal", help="signal CSV path")
    p.add_argument("--atom", help="atom CSV path (default: tone burst at signal rate)")
    p.add_argument("--method", choices=("sampm", "sacmpm"))
    p.add_argument("--tol", type=float, help="stop tolerance [%%]")
    p.add_argument("--max-terms", dest="max_terms", type=int)
    p.add_argument("--n", type=int, help="SACMPM basis size")
    p.add_argument("--ridge", type=float, help="SACMPM ridge factor")
    p.add_argument("--f0", type=float)
    p.add_argument("--cycles", type=int)
    p.add_argument("--amp", type=float)
    p.add_argument("--svg", action="store_true", default=None)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("db", help="damage database commands")
    db_sub = p.add_subparsers(dest="db_command", required=True)
    g = db_sub.add_parser("gen", help="generate the synthetic damage database")
    _add_common(g)
    g.add_argument("--seed", type=int)
    g.add_argument("--snr", help="SNR in dB, or 'none'")
    g.add_argument("--f0", type=float)
    g.add_argument("--cycles", type=int)
    g.add_argument("--fs", type=float)
    g.add_argument("--amp", type=float)
    g.add_argument("--len", type=int)
    g.add_argument("--reflection", type=float)
    g.add_argument("--n-test", dest="n_test", type=int)
    g.add_argument("--plate-e", dest="plate_e", type=float)
    g.add_argument("--plate-nu", dest="plate_nu", type=float)
    g.add_argument("--plate-rho", dest="plate_rho", type=float)
    g.add_argument("--plate-h", dest="plate_h", type=float)
    g.set_defaults(func=cmd_db_gen)

    p = sub.add_parser("features", help="decompose database residuals into features")
    _add_common(p)
    p.add_argument("--db", help="database directory")
    p.add_argument("--method", choices=("sampm", "sacmpm"))
    p.add_argument("--m", type=int, help="terms per path")
    p.add_argument("--n", type=int, help="SACMPM basis size")
    p.add_argument("--ridge", type=float)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("localize", help="damage localization commands")
    loc_sub = p.add_subparsers(dest="localize_command", required=True)
    t = loc_sub.add_parser("train", help="train the localization network")
    _add_common(t)
    t.add_argument("--features", help="feature CSV")
    t.add_argument("--targets", help="target CSV")
    t.add_argument("--seed", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.set_defaults(func=cmd_localize_train)
    e = loc_sub.add_parser("eval", help="evaluate a trained model")
    _add_common(e)
    e.add_argument("--model", help="model JSON")
    e.add_argument("--features", help="feature CSV")
    e.add_argument("--targets", help="target CSV")
    e.add_argument("--x-range", dest="x_range", type=float)
    e.add_argument("--y-range", dest="y_range", type=float)
    e.set_defaults(func=cmd_localize_eval)

    p = sub.add_parser("pipeline", help="database -> features -> train -> eval")
    _add_common(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--ridge", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--snr", help="SNR in dB, or 'none'")
    p.add_argument("--f0", type=float)
    p.add_argument("--cycles", type=int)
    p.add_argument("--fs", type=float)
    p.add_argument("--amp", type=float)
    p.add_argument("--len", type=int)
    p.add_argument("--reflection", type=float)
    p.add_argument("--plate-e", dest="plate_e", type=float)
    p.add_argument("--plate-nu", dest="plate_nu", type=float)
    p.add_argument("--plate-rho", dest="plate_rho", type=float)
    p.add_argument("--plate-h", dest="plate_h", type=float)
    p.add_argument("--svg", action="store_true", default=None)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    outputs = _Outputs()
    try:
        return args.func(args, outputs)
    except Exception as exc:  # noqa: BLE001 - single CLI failure funnel
        print(f"error: {exc}", file=sys.stderr)
        outputs.discard()
        return 1


if __name__ == "__main__":
    sys.exit(main())
