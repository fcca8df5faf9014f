"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``.
"""

import time

import numpy as np
import pytest

from fritchman import formats
from fritchman.channel import ChannelConfig, PwmConfig, measure_sinr, run_transmission, with_overrides
from fritchman.estimation import TrainingConfig, em_step, forward_scaled, train
from fritchman.model import FritchmanModel, generate_error_sequence, stationary_distribution, table_model
from fritchman.pipeline import compare
from fritchman.stats import efrd, fit_metrics, generate_iid
from oracles import brute_force_likelihood, random_fritchman

# high signal level, PWM interferer at 600 Hz against 6250 bit/s
CASE2 = ChannelConfig(
    bit_rate=6250, signal_amplitude=1.0, noise_sigma=0.02, background_dc=0.5,
    pwm=PwmConfig(frequency=600, duty_cycle=0.5, amplitude=1.5), seed=0,
)


def verdict(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail


def good_good_zero(model):
    return model.transition[0, 1] == 0.0 and model.transition[1, 0] == 0.0


@pytest.fixture(scope="module")
def random_training_runs():
    rng = np.random.default_rng(20240601)
    runs = []
    while len(runs) < 50:
        source = FritchmanModel(*random_fritchman(rng), 2)
        seq = generate_error_sequence(source, 10_000, rng.integers(2**63))
        if 0 < seq.sum() < seq.size:
            start = FritchmanModel(*random_fritchman(rng), 2)
            runs.append(train(TrainingConfig(initial_model=start), seq))
    return runs


@pytest.fixture(scope="module")
def round_trips():
    # results-table model at 6.66 dB SNR
    source = table_model(0.9895, 0.0105, 0.8614, 0.1386, 0.1481, 0.6712, 0.1807)
    pe_source = stationary_distribution(source).error_probability
    out = []
    for seed in range(10):
        seq = generate_error_sequence(source, 100_000, seed)
        rep = train(TrainingConfig(), seq)
        row = compare(seq, rep.final_model, seed + 1000).row
        pe = stationary_distribution(rep.final_model).error_probability
        out.append((rep, row, pe))
    return pe_source, out


def test_c01_em_monotone(capsys, random_training_runs):
    worst = min(np.diff(r.log_likelihoods).min() for r in random_training_runs)
    verdict(capsys, 1, worst >= -1e-9,
            f"50 runs, smallest per-step log10-likelihood change {worst:.3e} (limit -1e-9)")


def test_c02_scaled_forward_matches_enumeration(capsys):
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        a, p = random_fritchman(rng)
        seq = rng.integers(0, 2, int(rng.integers(1, 16)))
        _, c = forward_scaled(FritchmanModel(a, p, 2), seq)
        # paths with a zero emission factor are skipped; they add exactly zero
        exact = brute_force_likelihood(a, p, 2, seq)
        worst = max(worst, abs(np.prod(c) - exact) / exact)
    verdict(capsys, 2, worst <= 1e-10, f"100 models, worst relative error {worst:.2e} (limit 1e-10)")


def test_c03_structure_preserved(capsys, random_training_runs):
    ok = all(good_good_zero(m) for r in random_training_runs for m in r.history)
    # the short enumeration-sized sequences, one re-estimation each
    rng = np.random.default_rng(99)
    steps = 0
    for _ in range(100):
        model = FritchmanModel(*random_fritchman(rng), 2)
        seq = rng.integers(0, 2, int(rng.integers(2, 16)))
        if 0 < seq.sum() < seq.size:
            for _ in range(5):
                model, _ = em_step(model, seq)
                ok &= good_good_zero(model)
                steps += 1
    n_models = sum(len(r.history) for r in random_training_runs) + steps
    verdict(capsys, 3, ok, f"a12 = a21 = 0 exactly in all {n_models} trained models")


def test_c04_round_trip_recovery(capsys, round_trips):
    pe_source, runs = round_trips
    wins = sum(row["chi2_model"] < row["chi2_iid"] for _, row, _ in runs)
    pe_err = max(abs(pe - pe_source) for _, _, pe in runs)
    chi = ", ".join(f"{row['chi2_model']:.3f}/{row['chi2_iid']:.1f}" for _, row, _ in runs)
    verdict(capsys, 4, wins >= 9 and pe_err <= 0.01,
            f"model chi2 < IID chi2 in {wins}/10 seeds [{chi}]; worst Pe error {pe_err:.4f} (limit 0.01)")


def test_c05_convergence_speed(capsys, round_trips):
    _, runs = round_trips
    first = []
    for rep, _, _ in runs:
        lls = np.array(rep.log_likelihoods)
        below = np.flatnonzero(np.diff(lls) < 1e-4 * np.abs(lls[1:])) + 2
        first.append(int(below[0]) if below.size else None)
    ok = all(i is not None and i <= 10 for i in first)
    verdict(capsys, 5, ok, f"first iteration with gain < 1e-4*|LL| per seed: {first} (limit 10)")


def test_c06_iid_gap_law(capsys):
    t0 = time.perf_counter()
    curve = efrd(generate_iid(0.05, 1_000_000, 6))
    m = np.arange(51)
    dev = np.abs(curve.values[:51] - 0.95 ** m).max()
    elapsed = time.perf_counter() - t0
    verdict(capsys, 6, dev <= 0.01 and elapsed < 10,
            f"max |Pr(0^m|1) - 0.95^m| over m<=50 is {dev:.4f} (limit 0.01), {elapsed:.2f} s")


def test_c07_pwm_phenomenology(capsys):
    base = run_transmission(CASE2, 100_000)
    e = base.error_sequence
    pairs = int(np.sum(e[1:] & e[:-1]))
    on_edges = float(base.edge_bits[e == 1].mean())

    sweep = {}
    for sigma in (0.0158, 0.05, 0.126):
        r = run_transmission(with_overrides(CASE2, noise_sigma=sigma), 100_000)
        sweep[r.quality.sinr_db] = float(r.error_sequence.mean())
    span = max(sweep) - min(sweep)
    pe_spread = max(sweep.values()) - min(sweep.values())
    pe_mid = np.mean(list(sweep.values()))
    pe_ok = all(abs(pe - pe_mid) <= 0.02 for pe in sweep.values())

    ok = pairs == 0 and span >= 15 and pe_ok and on_edges == 1.0
    points = ", ".join(f"{q:.1f} dB: {pe:.4f}" for q, pe in sorted(sweep.items()))
    verdict(capsys, 7, ok,
            f"adjacent error pairs {pairs}; Pe over {span:.1f} dB SINR span [{points}] spread {pe_spread:.4f}; "
            f"{on_edges:.0%} of errors in edge bits")


def test_c08_duty_cycle_symmetry(capsys):
    curves = {}
    for duty in (0.25, 0.5, 0.75):
        seq = run_transmission(with_overrides(CASE2, duty_cycle=duty), 100_000, measure_quality=False).error_sequence
        curves[duty] = efrd(seq)
    mutual = max(fit_metrics(curves[0.25], curves[0.75]).chi_squared,
                 fit_metrics(curves[0.75], curves[0.25]).chi_squared)
    vs_half = min(fit_metrics(curves[0.25], curves[0.5]).chi_squared,
                  fit_metrics(curves[0.75], curves[0.5]).chi_squared)
    verdict(capsys, 8, mutual < vs_half,
            f"chi2 between 25% and 75% is {mutual:.4f}; smallest chi2 against 50% is {vs_half:.4f}")


def test_c09_sinr_grouping(capsys):
    lines, ok = [], True
    for duty in (0.25, 0.5, 0.75):
        cfg = with_overrides(CASE2, duty_cycle=duty, noise_sigma=0.1)
        exact = measure_sinr(cfg, "exact-phase")
        est = measure_sinr(cfg, "threshold-estimated")
        ok &= est.sinr < exact.sinr
        lines.append(f"{duty:.0%}: {est.sinr_db:.2f} < {exact.sinr_db:.2f} dB")
        if duty == 0.5:
            ratio = exact.sigma3_sq / exact.sigma4_sq
            ok &= abs(ratio - 1.0) <= 0.10
    verdict(capsys, 9, ok, "; ".join(lines) + f"; exact-phase 50% sigma3^2/sigma4^2 = {ratio:.4f}")


def test_c10_file_round_trips(capsys):
    rng = np.random.default_rng(10)
    ok = True
    for _ in range(20):
        n = int(rng.integers(2, 6))
        k = int(rng.integers(1, n))
        text = formats.dump_model(FritchmanModel(*random_fritchman(rng, n, k), k))
        ok &= formats.dump_model(formats.load_model(text)) == text
        seq_text = formats.dump_sequence(rng.integers(0, 2, int(rng.integers(0, 2000))))
        ok &= formats.dump_sequence(formats.load_sequence(seq_text)) == seq_text
    verdict(capsys, 10, ok, "20 random model files and 20 random sequence files reproduced byte for byte")
