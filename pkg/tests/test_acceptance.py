"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
lines while the suite executes.
"""

import json
import time
import warnings

import numpy as np

from lambmp.atom import BurstSpec, make_tone_burst
from lambmp.cli import main
from lambmp.core import (
    Signal,
    apply_delay,
    forward_transform,
    inverse_transform,
    norm_freq,
    norm_time,
    write_signal_csv,
)
from lambmp.damage_db import add_noise
from lambmp.dispersion import ModeSet, PlateModel, propagate
from lambmp.features import fit_standardizer
from lambmp.localize import NNModel, loss_and_gradients
from lambmp.sampm import sampm_decompose, sampm_step
from lambmp.sacmpm import (
    assemble_system,
    build_B,
    default_basis,
    sacmpm_decompose,
    sacmpm_step,
)

FS = 2e6
PLATE = PlateModel(70e9, 0.3, 1500, 2e-3)  # infinite-plate example constants


def _report(num: int, ok: bool, detail: str = ""):
    print(f"\n[acceptance criterion {num}] {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {num}: {detail}"


def _burst():
    return make_tone_burst(BurstSpec(100e3, 5, FS))


def _plate_signal(d_m, out_len=1024):
    return propagate(_burst(), d_m, PLATE, ModeSet(), out_len=out_len)


def test_criterion_1_parseval_and_transform_properties():
    start = time.perf_counter()
    rng = np.random.default_rng(100)
    worst_parseval = 0.0
    worst_isometry = 0.0
    worst_round_trip = 0.0
    for _ in range(100):
        n = int(rng.integers(8, 512))
        fs = float(rng.uniform(1.0, 5e6))
        x = Signal(rng.normal(size=n), fs)
        nt = norm_time(x)
        spec = forward_transform(x, 2 * n)
        worst_parseval = max(worst_parseval, abs(nt - norm_freq(spec)) / nt)
        tau = float(rng.integers(0, n // 2)) / fs
        worst_isometry = max(
            worst_isometry, abs(norm_freq(apply_delay(spec, tau)) - nt) / nt)
        back = inverse_transform(spec).samples[:n]
        worst_round_trip = max(
            worst_round_trip, np.max(np.abs(back - x.samples)) / np.max(np.abs(x.samples)))
    elapsed = time.perf_counter() - start
    ok = (worst_parseval < 1e-10 and worst_isometry < 1e-12
          and worst_round_trip < 1e-12 and elapsed < 5.0)
    _report(1, ok, f"parseval {worst_parseval:.2e}, isometry {worst_isometry:.2e}, "
                   f"round-trip {worst_round_trip:.2e}, {elapsed:.2f}s")


def test_criterion_2_exact_recovery_of_disjoint_echoes():
    start = time.perf_counter()
    atom = _burst()
    n = 1024
    truth = [(60, 3.0), (320, -2.0), (720, 1.25)]
    x = np.zeros(n)
    for shift, amp in truth:
        x[shift: shift + len(atom)] += amp * atom.samples
    dec = sampm_decompose(Signal(x, FS), atom, max_terms=10, tol_pct=0.1)
    got = sorted(((round(t.tau_s * FS), t.alpha) for t in dec.terms))
    exact = (dec.n_terms == 3
             and all(g[0] == t[0] for g, t in zip(got, truth))
             and all(abs(g[1] - t[1]) <= 1e-9 * abs(t[1]) for g, t in zip(got, truth)))
    elapsed = time.perf_counter() - start
    ok = exact and dec.final_error_pct < 1e-6 and elapsed < 5.0
    _report(2, ok, f"{dec.n_terms} terms, final error {dec.final_error_pct:.2e}%, "
                   f"{elapsed:.2f}s")


def test_criterion_3_brute_force_equivalence():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(32, 257))
        la = int(rng.integers(4, 25))
        atom = Signal(rng.normal(size=la), 1.0)
        residual = Signal(rng.normal(size=n), 1.0)
        term = sampm_step(residual, atom)
        pad = 1
        while pad < max(2 * n, 2 * la, n + la):
            pad *= 2
        r = np.concatenate([residual.samples, np.zeros(pad - n)])
        energy = np.dot(atom.samples, atom.samples)
        best = min(
            np.dot(r, r) - np.dot(r[m: m + la], atom.samples) ** 2 / energy
            for m in range(n))
        psi = np.zeros(pad)
        m = int(round(term.tau_s))
        psi[m: m + la] = atom.samples
        achieved = np.sum((r - term.alpha * psi) ** 2)
        worst = max(worst, abs(achieved - best) / np.dot(r, r))
    ok = worst < 1e-8
    _report(3, ok, f"worst residual-norm mismatch {worst:.2e}")


def test_criterion_4_simulated_plate_convergence():
    start = time.perf_counter()
    sam_terms = {}
    sac_terms = {}
    for d_cm in range(15, 60, 5):
        sig = _plate_signal(d_cm / 100)
        atom = _burst()
        sam = sampm_decompose(sig, atom, max_terms=50, tol_pct=10.0)
        sac = sacmpm_decompose(sig, atom, n_funcs=40, max_terms=50, tol_pct=10.0)
        sam_terms[d_cm] = sam.n_terms if sam.final_error_pct <= 10.0 else None
        sac_terms[d_cm] = sac.n_terms if sac.final_error_pct <= 10.0 else None
    elapsed = time.perf_counter() - start
    ok_a_sam = sam_terms[45] is not None and 8 <= sam_terms[45] <= 12
    ok_a_sac = sac_terms[45] is not None and 3 <= sac_terms[45] <= 5
    ok_b = all(
        sac_terms[d] is not None and sam_terms[d] is not None
        and sac_terms[d] <= sam_terms[d]
        for d in range(30, 60, 5))
    detail = (f"45cm: sampm {sam_terms[45]} terms (want 10+-2) "
              f"{'OK' if ok_a_sam else 'VIOLATED'}; "
              f"sacmpm {sac_terms[45]} terms (want 4+-1) "
              f"{'OK' if ok_a_sac else 'VIOLATED'}; "
              f"d>=30cm sacmpm<=sampm {'OK' if ok_b else 'VIOLATED'} "
              f"(sampm {sam_terms}, sacmpm {sac_terms}); {elapsed:.1f}s")
    ok = ok_a_sam and ok_a_sac and ok_b and elapsed < 120.0
    _report(4, ok, detail)


def test_criterion_5_first_term_matches_s0_arrival():
    sig = _plate_signal(0.45)
    term = sampm_step(sig, _burst())
    expected = 0.45 / PLATE.extensional_speed_m_s
    err_samples = abs(term.tau_s - expected) * FS
    ok = err_samples <= 1.0
    _report(5, ok, f"first tau {term.tau_s * 1e6:.2f} us vs S0 arrival "
                   f"{expected * 1e6:.2f} us ({err_samples:.2f} samples)")


def test_criterion_6_dominance_monotonicity_orthogonality():
    atom = _burst()
    basis = default_basis(atom, 40)
    sig = _plate_signal(0.45)
    n = len(sig)
    pad = 2048
    residual = np.zeros(pad)
    residual[:n] = sig.samples
    dominance_ok = True
    orthogonality_ok = True
    errors = []
    signal_norm = norm_time(sig)
    for _ in range(6):
        r_sig = Signal(residual, FS)
        term = sacmpm_step(r_sig, atom, basis, ridge_lambda=0.0)
        t_sam = sampm_step(r_sig, atom)
        b = build_B(atom, term.tau_s, basis, pad)
        m_mat, f_vec = assemble_system(b, r_sig)
        new = residual - b.T @ term.beta
        orthogonality_ok &= bool(
            np.linalg.norm(b @ new / FS) < 1e-8 * np.linalg.norm(f_vec))
        psi = np.zeros(pad)
        start_idx = int(round(t_sam.tau_s * FS))
        psi[start_idx: start_idx + len(atom)] = atom.samples
        prev = np.sqrt(np.sum(residual**2) / FS)
        res_sac = np.sqrt(np.sum(new**2) / FS)
        res_sam = np.sqrt(np.sum((residual - t_sam.alpha * psi) ** 2) / FS)
        dominance_ok &= bool(res_sac <= res_sam + 1e-8 * prev)
        residual = new
        errors.append(100.0 * res_sac / signal_norm)
    monotone_ok = all(b <= a for a, b in zip(errors, errors[1:]))
    ok = dominance_ok and monotone_ok and orthogonality_ok
    _report(6, ok, f"dominance {'OK' if dominance_ok else 'VIOLATED'}, "
                   f"monotone {'OK' if monotone_ok else 'VIOLATED'}, "
                   f"orthogonality {'OK' if orthogonality_ok else 'VIOLATED'}")


def test_criterion_7_gradient_check():
    rng = np.random.default_rng(102)
    x = rng.normal(size=(12, 48))
    y = rng.normal(size=(12, 2))
    dims = [48, 150, 150, 150, 2]
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    model = NNModel(dims, weights, biases, fit_standardizer(x), fit_standardizer(y))
    _, grad_w, grad_b = loss_and_gradients(model, x, y)
    worst = 0.0
    for _ in range(20):
        layer = int(rng.integers(0, len(weights)))
        if rng.random() < 0.8:
            i = int(rng.integers(0, weights[layer].shape[0]))
            j = int(rng.integers(0, weights[layer].shape[1]))
            param, grad, idx = weights[layer], grad_w[layer][i, j], (i, j)
        else:
            i = int(rng.integers(0, biases[layer].size))
            param, grad, idx = biases[layer], grad_b[layer][i], (i,)
        step = 1e-6 * (1.0 + abs(param[idx]))
        original = param[idx]
        param[idx] = original + step
        hi, _, _ = loss_and_gradients(model, x, y)
        param[idx] = original - step
        lo, _, _ = loss_and_gradients(model, x, y)
        param[idx] = original
        fd = (hi - lo) / (2 * step)
        worst = max(worst, abs(grad - fd) / max(1e-12, abs(fd)))
    ok = worst < 1e-5
    _report(7, ok, f"worst backprop-vs-FD relative error {worst:.2e}")


def test_criterion_8_end_to_end_localization(tmp_path):
    start = time.perf_counter()
    out = tmp_path / "pipeline"
    code = main(["pipeline", "--out", str(out), "--seed", "0"])
    elapsed = time.perf_counter() - start
    lines = (out / "report.csv").read_text().splitlines()
    schema_ok = (lines[0] == "method,coordinate,train_error_pct,test_error_pct"
                 and [l.split(",")[:2] for l in lines[1:]]
                 == [["sampm", "x"], ["sampm", "y"], ["sacmpm", "x"], ["sacmpm", "y"]])
    errors = {tuple(l.split(",")[:2]): float(l.split(",")[3]) for l in lines[1:]}
    finite_ok = all(np.isfinite(v) for v in errors.values())
    sam_y = errors[("sampm", "y")]
    sac_y = errors[("sacmpm", "y")]
    if sam_y > 0 and sac_y > 1.5 * sam_y:
        warnings.warn(
            f"sacmpm y-error {sac_y:.2f}% exceeds sampm {sam_y:.2f}% by more "
            "than 50% (direction check, not a failure)")
    ok = code == 0 and schema_ok and finite_ok and elapsed < 600.0
    _report(8, ok, f"test errors sampm(x={errors[('sampm', 'x')]:.2f}%, y={sam_y:.2f}%) "
                   f"sacmpm(x={errors[('sacmpm', 'x')]:.2f}%, y={sac_y:.2f}%), "
                   f"{elapsed:.0f}s")


def test_criterion_9_external_signal_pathway(tmp_path):
    # stand-in for an experimental record: several boundary echoes per mode,
    # amplitude decay, and measurement noise
    burst = _burst()
    n = 2000
    acc = np.zeros(n)
    rng_amp = [1.0, 0.7, 0.45, 0.3, 0.2]
    for amp, d in zip(rng_amp, (0.20, 0.34, 0.49, 0.63, 0.80)):
        acc += amp * propagate(burst, d, PLATE, ModeSet(), out_len=n).samples
    noisy = add_noise(Signal(acc, FS), 40.0, 9)
    csv_path = tmp_path / "experimental_like.csv"
    write_signal_csv(csv_path, noisy)
    atom_path = tmp_path / "atom.csv"
    write_signal_csv(atom_path, burst)

    # run both decompositions through the CLI pathway
    ok_runs = True
    histories = {}
    for method in ("sampm", "sacmpm"):
        out = tmp_path / method
        code = main(["decompose", "--signal", str(csv_path), "--atom", str(atom_path),
                     "--method", method, "--tol", "0", "--max-terms", "100",
                     "--out", str(out)])
        ok_runs &= code == 0
        payload = json.loads((out / "decomposition.json").read_text())
        histories[method] = payload["error_history_pct"]
    sam_hist = histories["sampm"]
    monotone_ok = (len(sam_hist) > 0
                   and all(b <= a + 1e-9 for a, b in zip(sam_hist, sam_hist[1:])))
    hundred_ok = len(sam_hist) == 100 and len(histories["sacmpm"]) >= 1
    ok = ok_runs and monotone_ok and hundred_ok
    _report(9, ok, f"sampm terms {len(sam_hist)} final {sam_hist[-1]:.1f}%, "
                   f"sacmpm terms {len(histories['sacmpm'])} final "
                   f"{histories['sacmpm'][-1]:.1f}%, monotone "
                   f"{'OK' if monotone_ok else 'VIOLATED'}")
