import csv
import math

import numpy as np
import pytest

from src.qcis.estimator import EstimatorConfig, clip_to_balls, contraction_bounds, derive_config, extract_pair
from src.qcis.gaussian_core import max_mode_energy, moments_from_state, random_params, state_from_params
from src.qcis.protocol import pair_pauli_vector
from src.qcis.shadows import SyntheticNoiseSource, required_samples
from src.qcis.transduction import build_pair_map, invert_linear, shift
from src.qcis.validation import bounded_states


def exact_run(params, gt=None, orientation='standard', source='series', n_trunc=30, **overrides):
    state = state_from_params(params)
    cfg = EstimatorConfig(eps=1e-3, E_max=max_mode_energy(state), gt_override=gt, **overrides)
    pair_map = build_pair_map(cfg.gt, cfg.gt, orientation)
    raw = pair_pauli_vector(params, cfg.gt, source, n_trunc, orientation)
    truth = moments_from_state(state).pair_slice(0, 1)
    gamma, trace = extract_pair(shift(raw, pair_map.frame_couplings), pair_map, cfg, truth=truth)
    return cfg, gamma, trace, truth


def test_derived_quantities():
    cfg = EstimatorConfig(eps=1e-3, E_max=4.0)
    assert cfg.gt == pytest.approx(0.05)
    assert cfg.eps_prime == pytest.approx(6.25e-5)
    assert cfg.rounds == 12
    assert cfg.in_regime
    assert cfg.mean_radius == pytest.approx(2 * math.sqrt(8))
    assert cfg.moment_radius == pytest.approx(16)


def test_overrides():
    cfg = EstimatorConfig(eps=1e-3, E_max=4.0, gt_override=0.2, rounds_override=3)
    assert cfg.gt == 0.2
    assert cfg.rounds == 3
    assert not cfg.in_regime


def test_config_validated():
    with pytest.raises(ValueError, match='positive'):
        EstimatorConfig(eps=0.0, E_max=1.0)
    with pytest.raises(ValueError, match='at least 2'):
        EstimatorConfig(eps=1e-3, E_max=1.0, K=1)


def test_derive_config_budget():
    cfg, budget = derive_config(4.0, 1e-3, 0.05, 2)
    assert budget.n_states == 2
    assert budget.observables == 15
    assert budget.per_state == required_samples(2, 15, cfg.eps_prime, 0.05)
    assert budget.total == 2 * budget.per_state
    _, larger = derive_config(4.0, 1e-3, 0.05, 16)
    assert larger.n_states == 5


def test_derive_config_rejects_bad_targets():
    with pytest.raises(ValueError, match='below E_max'):
        derive_config(1.0, 2.0, 0.05, 2)
    with pytest.raises(ValueError, match='two modes'):
        derive_config(1.0, 1e-3, 0.05, 1)


def test_contraction_bounds_halve():
    cfg = EstimatorConfig(eps=1e-3, E_max=4.0)
    assert contraction_bounds(cfg, 0) == pytest.approx((1e-3 / 4 + 2, 5e-4 + 4))
    mean_1, moment_1 = contraction_bounds(cfg, 1)
    assert mean_1 == pytest.approx(1e-3 / 4 + 1)
    assert moment_1 == pytest.approx(5e-4 + 2)


def test_clip_to_balls():
    cfg = EstimatorConfig(eps=1e-3, E_max=1.0)
    clipped = clip_to_balls(np.full(14, 100.0), cfg)
    assert np.allclose(clipped[:4], cfg.mean_radius)
    assert np.allclose(clipped[4:], cfg.moment_radius)


def test_exact_paulis_converge(rng):
    _, gamma, trace, truth = exact_run(random_params(2, rng), gt=0.01)
    assert not trace.diverged
    assert np.abs(gamma - truth).max() < 1e-8
    assert trace.rounds[0].max_err <= trace.initial_bound + 1e-12
    errors = trace.errors()
    assert errors[-1] < errors[0]


def test_errors_within_contraction_bounds(rng):
    for params, _ in bounded_states(2, rng, 50, 5.0):
        cfg, _, trace, _ = exact_run(params)
        for entry in trace.rounds:
            mean_bound, moment_bound = contraction_bounds(cfg, entry.round)
            assert entry.mean_err <= mean_bound
            assert entry.cov_err <= moment_bound


def test_exact_errors_never_grow(rng):
    for _ in range(5):
        _, _, trace, _ = exact_run(random_params(2, rng), gt=0.01)
        errors = trace.errors()
        assert all(later <= max(earlier, 1e-12) for earlier, later in zip(errors, errors[1:]))


def test_noisy_paulis_settle_at_noise_floor(rng):
    params = random_params(2, rng)
    cfg, _, exact_trace, truth = exact_run(params, gt=0.01)
    pair_map = build_pair_map(cfg.gt, cfg.gt)
    values = shift(pair_pauli_vector(params, cfg.gt, 'series'), pair_map.couplings).values
    eps_prime = 1e-6
    noisy = SyntheticNoiseSource(dict(enumerate(values)), eps_prime).estimates(range(14), rng)
    _, trace = extract_pair(np.array([noisy[i].estimate for i in range(14)]), pair_map, cfg, truth=truth)
    floor = np.abs(pair_map.M_inv).sum(axis=1).max() * eps_prime
    assert floor == pytest.approx(1e-2, rel=0.01)
    assert trace.final.max_err <= 2 * floor + 3 * exact_trace.final.max_err
    assert abs(trace.errors()[-1] - trace.errors()[-2]) <= floor


def test_each_round_inverts_through_the_linear_map(monkeypatch, rng):
    calls = []

    def recording(p, pair_map):
        calls.append(pair_map)
        return invert_linear(p, pair_map)

    monkeypatch.setattr('src.qcis.estimator.invert_linear', recording)
    _, _, trace, _ = exact_run(random_params(2, rng), gt=0.01, rounds_override=3)
    assert len(calls) == 4
    assert len(trace.rounds) == 4


def test_round_zero_is_linear_inversion(rng):
    params = random_params(2, rng)
    cfg = EstimatorConfig(eps=1e-3, E_max=2.0, gt_override=0.01, rounds_override=0)
    pair_map = build_pair_map(cfg.gt, cfg.gt)
    p_tilde = shift(pair_pauli_vector(params, cfg.gt, 'series'), pair_map.couplings)
    gamma, _ = extract_pair(p_tilde, pair_map, cfg)
    assert np.allclose(gamma, invert_linear(p_tilde, pair_map))


@pytest.mark.parametrize('orientation', ['standard', 'swapped'])
def test_fock_paulis_invert_in_both_orientations(small_params, orientation):
    _, gamma, _, truth = exact_run(small_params, gt=0.02, orientation=orientation, source='fock')
    assert np.abs(gamma - truth).max() < 1e-6


def test_trace_csv(tmp_path, rng):
    _, _, trace, _ = exact_run(random_params(2, rng), rounds_override=3)
    path = tmp_path / 'trace.csv'
    trace.write_csv(path)
    with path.open() as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ['round', 'residual', 'mean_err', 'cov_err']
    assert [row[0] for row in rows[1:]] == ['0', '1', '2', '3']


@pytest.mark.slow
def test_benchmark_state_converges_fast(benchmark):
    _, _, trace, _ = exact_run(benchmark, gt=0.01, source='fock', n_trunc=60, rounds_override=4)
    errors = trace.errors()
    assert all(later <= earlier for earlier, later in zip(errors, errors[1:]))
    assert errors[4] <= errors[0] / 100
