import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fritchman.errors import DegenerateSequenceError, ImpossibleObservationError
from fritchman.estimation import (
    TrainingConfig,
    backward_scaled,
    em_step,
    forward_scaled,
    log10_likelihood,
    paper_initial_model,
    state_posteriors,
    train,
)
from fritchman.model import FritchmanModel, generate_error_sequence, stationary_distribution, validate_model
from fritchman.stats import efrd, error_probability, fit_metrics, generate_iid
from oracles import brute_force_likelihood, random_fritchman

ABSORBING = FritchmanModel([[1.0, 0.0], [0.5, 0.5]], [1.0, 0.0], 1)
COIN = FritchmanModel([[0.5, 0.5], [0.5, 0.5]], [0.5, 0.5], 1)


def test_paper_initial_model():
    m = paper_initial_model()
    assert m.n_states == 3 and m.n_good == 2
    np.testing.assert_array_equal(m.transition, [[0.9, 0, 0.1], [0, 0.8, 0.2], [0.1, 0.7, 0.2]])
    np.testing.assert_array_equal(m.initial, [0.4, 0.4, 0.2])
    assert validate_model(m) == []


class TestForward:
    def test_deterministic_chain(self):
        alpha, c = forward_scaled(ABSORBING, [0, 0, 0])
        np.testing.assert_array_equal(c, [1, 1, 1])
        assert log10_likelihood(ABSORBING, [0, 0, 0]) == 0.0

    def test_impossible_observation(self):
        with pytest.raises(ImpossibleObservationError) as exc:
            forward_scaled(ABSORBING, [0, 0, 1])
        assert exc.value.t == 3

    def test_two_state_enumeration(self):
        # four equally likely paths, exactly one emits "01"
        _, c = forward_scaled(COIN, [0, 1])
        np.testing.assert_allclose(c, [0.5, 0.5])
        assert np.prod(c) == pytest.approx(0.25)
        assert brute_force_likelihood(COIN.transition, COIN.initial, 1, [0, 1], prune=False) == 0.25

    def test_forward_mass_respects_emission(self, snr666):
        seq = generate_error_sequence(snr666, 500, 1)
        alpha, _ = forward_scaled(snr666, seq)
        np.testing.assert_allclose(alpha.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(alpha[seq == 1, :2] == 0)
        assert np.all(alpha[seq == 0, 2] == 0)

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            forward_scaled(COIN, [])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 9))
    def test_matches_full_enumeration(self, seed, T):
        rng = np.random.default_rng(seed)
        a, p = random_fritchman(rng)
        seq = rng.integers(0, 2, T)
        expected = brute_force_likelihood(a, p, 2, seq, prune=False)
        _, c = forward_scaled(FritchmanModel(a, p, 2), seq)
        assert np.prod(c) == pytest.approx(expected, rel=1e-10)

    def test_pruned_oracle_equals_full_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            a, p = random_fritchman(rng)
            seq = rng.integers(0, 2, 8)
            full = brute_force_likelihood(a, p, 2, seq, prune=False)
            assert brute_force_likelihood(a, p, 2, seq) == pytest.approx(full, rel=1e-13)

    def test_long_sequence_does_not_underflow(self, snr666):
        seq = generate_error_sequence(snr666, 100_000, 3)
        ll = log10_likelihood(snr666, seq)
        assert np.isfinite(ll) and ll < -1000


class TestBackward:
    def test_single_step_is_ones(self):
        _, c = forward_scaled(COIN, [1])
        np.testing.assert_array_equal(backward_scaled(COIN, [1], c), [[1.0, 1.0]])

    def test_posteriors_normalised(self):
        alpha, c = forward_scaled(COIN, [0, 1])
        post = state_posteriors(alpha, backward_scaled(COIN, [0, 1], c))
        np.testing.assert_allclose(post.sum(axis=1), 1.0, atol=1e-9)

    def test_bad_state_posterior_one_on_errors(self, snr666):
        seq = generate_error_sequence(snr666, 3000, 9)
        alpha, c = forward_scaled(snr666, seq)
        post = state_posteriors(alpha, backward_scaled(snr666, seq, c))
        np.testing.assert_allclose(post.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_allclose(post[seq == 1, 2], 1.0, atol=1e-12)

    def test_length_mismatch(self):
        _, c = forward_scaled(COIN, [0, 1, 1])
        with pytest.raises(ValueError):
            backward_scaled(COIN, [0, 1], c)

    def test_posteriors_match_brute_force(self):
        rng = np.random.default_rng(3)
        a, p = random_fritchman(rng)
        m = FritchmanModel(a, p, 2)
        seq = [0, 0, 1, 0, 1, 1, 0]
        alpha, c = forward_scaled(m, seq)
        post = state_posteriors(alpha, backward_scaled(m, seq, c))
        # P(state_t = j | seq) by enumeration
        total = brute_force_likelihood(a, p, 2, seq)
        brute = np.zeros((len(seq), 3))
        for path in itertools.product(range(3), repeat=len(seq)):
            pr = p[path[0]] * (path[0] >= 2) ** seq[0] * (path[0] < 2) ** (1 - seq[0])
            for t in range(1, len(seq)):
                ok = (path[t] >= 2) == bool(seq[t])
                pr *= a[path[t - 1], path[t]] * ok
            for t, s in enumerate(path):
                brute[t, s] += pr
        np.testing.assert_allclose(post, brute / total, atol=1e-12)


class TestEmStep:
    def test_zero_structure_exact(self, snr666):
        seq = generate_error_sequence(snr666, 2000, 4)
        new, _ = em_step(paper_initial_model(), seq)
        assert new.transition[0, 1] == 0.0 and new.transition[1, 0] == 0.0
        assert validate_model(new) == []

    def test_likelihood_increases(self):
        rng = np.random.default_rng(0)
        seq = generate_iid(0.1, 1000, rng)
        m0 = paper_initial_model()
        m1, ll0 = em_step(m0, seq)
        assert ll0 == pytest.approx(log10_likelihood(m0, seq))
        assert log10_likelihood(m1, seq) >= ll0

    def test_alternating_sequence_forces_cycle(self):
        seq = np.tile([0, 1], 500)
        # coarse grid search of the likelihood over both self-loops
        grid = np.linspace(0.0, 0.95, 20)
        best = max(
            ((log10_likelihood(FritchmanModel([[s1, 1 - s1], [1 - s2, s2]], [0.5, 0.5], 1), seq), s1, s2)
             for s1 in grid for s2 in grid)
        )
        assert best[1:] == (0.0, 0.0)
        m = FritchmanModel([[0.6, 0.4], [0.3, 0.7]], [0.5, 0.5], 1)
        for _ in range(5):
            m, _ = em_step(m, seq)
        assert m.transition[0, 1] == pytest.approx(1.0, abs=1e-3)
        assert m.transition[1, 0] == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("seq", [[0] * 50, [1] * 50])
    def test_degenerate_sequences(self, seq):
        with pytest.raises(DegenerateSequenceError):
            em_step(paper_initial_model(), seq)

    def test_unvisited_row_kept(self):
        # state 2 has no way in, so it never gets posterior mass
        a = [[0.9, 0.0, 0.1], [0.0, 0.6, 0.4], [0.5, 0.0, 0.5]]
        m = FritchmanModel(a, [0.5, 0.0, 0.5], 2)
        seq = generate_iid(0.2, 500, 1)
        new, _ = em_step(m, seq)
        np.testing.assert_array_equal(new.transition[1], [0.0, 0.6, 0.4])
        assert new.transition[2, 1] == 0.0


class TestTrain:
    def test_monotone_on_random_pairs(self):
        rng = np.random.default_rng(42)
        for _ in range(15):
            a, p = random_fritchman(rng)
            src = FritchmanModel(a, p, 2)
            seq = generate_error_sequence(src, 3000, rng)
            if seq.min() == seq.max():
                continue
            a0, p0 = random_fritchman(rng)
            rep = train(TrainingConfig(10, 0.0, FritchmanModel(a0, p0, 2)), seq)
            assert np.all(np.diff(rep.log_likelihoods) >= -1e-9)
            assert all(h.transition[0, 1] == 0 and h.transition[1, 0] == 0 for h in rep.history)
            assert max(rep.log_likelihoods) <= 0

    def test_defaults(self):
        cfg = TrainingConfig()
        assert cfg.max_iterations == 20 and cfg.log_likelihood_tolerance == 0
        seq = generate_iid(0.05, 2000, 0)
        rep = train(cfg, seq)
        assert rep.iterations_run == 20 and rep.converged_at is None
        assert len(rep.history) == 21

    def test_deterministic(self, snr666):
        seq = generate_error_sequence(snr666, 5000, 1)
        r1, r2 = train(TrainingConfig(), seq), train(TrainingConfig(), seq)
        assert r1.final_model.same_as(r2.final_model)
        assert r1.log_likelihoods == r2.log_likelihoods

    def test_round_trip_beats_iid(self, snr666):
        seq = generate_error_sequence(snr666, 100_000, 0)
        rep = train(TrainingConfig(), seq)
        fresh = generate_error_sequence(rep.final_model, 100_000, 1)
        iid = generate_iid(error_probability(seq), 100_000, 2)
        ref = efrd(seq)
        assert fit_metrics(ref, efrd(fresh)).chi_squared < fit_metrics(ref, efrd(iid)).chi_squared
        src_pe = stationary_distribution(snr666).error_probability
        assert abs(stationary_distribution(rep.final_model).error_probability - src_pe) < 0.01
        # good-state labels may swap; compare sorted self-loops
        loops = sorted(np.diag(rep.final_model.transition)[:2])
        np.testing.assert_allclose(loops, [0.8614, 0.9895], atol=0.02)

    def test_relative_tolerance_converges_early(self, snr666):
        seq = generate_error_sequence(snr666, 100_000, 0)
        rep = train(TrainingConfig(20, 1e-4, relative_tolerance=True), seq)
        assert rep.converged_at is not None and rep.converged_at <= 10
        assert rep.iterations_run == rep.converged_at

    def test_absolute_tolerance_stops_on_small_gain(self, snr666):
        seq = generate_error_sequence(snr666, 20_000, 0)
        rep = train(TrainingConfig(50, 1e-2), seq)
        assert rep.converged_at is not None
        gains = np.diff(rep.log_likelihoods)
        assert gains[-1] < 1e-2 and np.all(gains[:-1] >= 1e-2)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainingConfig(max_iterations=0)
        with pytest.raises(ValueError):
            TrainingConfig(log_likelihood_tolerance=-1)
