import itertools
import json
import math

import numpy as np
import pytest

from src.qcis.constants import PAIR_PAULIS
from src.qcis.estimator import EstimatorConfig
from src.qcis.gaussian_core import max_mode_energy, moments_from_state, random_params, state_from_params
from src.qcis.fock_engine import FockOperator
from src.qcis.paulis import product_state
from src.qcis.protocol import BudgetError, CoverageError, FockOracle, InitialStateFamily, ProtocolRun, SeriesOracle, \
    assign_pairs, build_family, merge_estimates, pair_table_from_labels, pair_table_from_qubits, run_protocol, \
    state_from_table
from src.qcis.shadows import emulate_estimates, observable_count


def estimator_for(params, **overrides):
    return EstimatorConfig(eps=1e-3, E_max=max_mode_energy(state_from_params(params)), **overrides)


@pytest.mark.parametrize('n_modes', [2, 3, 5, 8, 13, 64, 100])
def test_family_size_and_coverage(n_modes):
    family = build_family(n_modes)
    assert family.size == math.ceil(math.log2(n_modes)) + 1
    family.check_coverage()
    assert len(assign_pairs(family)) == n_modes * (n_modes - 1) // 2


def test_family_of_four_modes():
    family = build_family(4)
    assert family.members == (('g',) * 4, ('+', '+i', '+', '+i'), ('+', '+', '+i', '+i'))


def test_pair_assignments_of_four_modes():
    assignments = assign_pairs(build_family(4))
    assert (assignments[(0, 1)].member, assignments[(0, 1)].orientation) == (1, 'standard')
    assert (assignments[(0, 2)].member, assignments[(0, 2)].orientation) == (2, 'standard')
    assert (assignments[(1, 2)].member, assignments[(1, 2)].orientation) == (1, 'swapped')


def test_slot_sources_route_ground_and_mixed_runs():
    assignment = assign_pairs(build_family(4))[(1, 2)]
    sources = assignment.slot_sources()
    assert sources[0] == (0, 'IY')
    assert sources[5] == (1, 'IX')


def test_missing_coverage_detected():
    family = InitialStateFamily(3, (('g',) * 3, ('+', '+', '+i')))
    with pytest.raises(CoverageError):
        family.check_coverage()
    with pytest.raises(CoverageError, match='separates'):
        assign_pairs(family)


def test_single_mode_rejected():
    with pytest.raises(ValueError, match='two modes'):
        build_family(1)


def test_merge_recovers_true_moments(rng):
    moments = moments_from_state(state_from_params(random_params(3, rng)))
    pairs = {(j, k): moments.pair_slice(j, k) for j in range(3) for k in range(j + 1, 3)}
    estimate = merge_estimates(pairs, 3)
    assert np.allclose(estimate.gamma_hat, moments.gamma)
    assert np.allclose(estimate.spread, 0)
    assert estimate.provenance[0] == [(0, 1), (0, 2)]


def test_merge_requires_every_pair():
    with pytest.raises(ValueError, match='Missing'):
        merge_estimates({(0, 1): np.zeros(14)}, 3)


def test_pair_tables_from_product_state():
    rho_q = FockOperator((2, 2, 2), product_state(('+', 'g', '+i')))
    table = pair_table_from_qubits(rho_q, 0, 2)
    assert table['XY'] == pytest.approx(1)
    assert table['ZI'] == pytest.approx(0)
    assert np.allclose(state_from_table(table).data, product_state(('+', '+i')))


def test_pair_table_from_labels():
    estimates = {'XIZ': 0.5, 'XII': 0.1, 'IIZ': -0.2}
    estimates.update({label: 0.0 for label in ('YII', 'ZII', 'IIX', 'IIY')})
    for a in 'XYZ':
        for b in 'XYZ':
            estimates.setdefault(f'{a}I{b}', 0.0)
    table = pair_table_from_labels(estimates, 3, 0, 2)
    assert table['XZ'] == 0.5
    assert table['XI'] == 0.1
    assert table['IZ'] == -0.2


def test_exact_pairwise_protocol_recovers_moments(rng):
    params = random_params(3, rng)
    cfg = estimator_for(params, gt_override=0.01)
    estimate, moments = run_protocol(params, cfg, rng, ProtocolRun(sampling='exact'))
    assert estimate.max_error(moments.gamma) < 1e-6
    assert estimate.diverged_pairs == []
    assert len(estimate.gamma_hat) == 27


def test_exact_full_simulation_recovers_moments(small_params, rng):
    cfg = estimator_for(small_params, gt_override=0.02)
    run = ProtocolRun(mode='full-sim', sampling='exact', n_trunc=30)
    estimate, moments = run_protocol(small_params, cfg, rng, run)
    assert estimate.max_error(moments.gamma) < 1e-6


def test_shadow_runs_are_reproducible(small_params):
    cfg = estimator_for(small_params, gt_override=0.05)
    first, _ = run_protocol(small_params, cfg, np.random.default_rng(5), ProtocolRun(budget=10 ** 6))
    second, _ = run_protocol(small_params, cfg, np.random.default_rng(5), ProtocolRun(budget=10 ** 6, threads=2))
    assert np.array_equal(first.gamma_hat, second.gamma_hat)
    assert first.config['copies_per_state'] == 5 * 10 ** 5


def test_budget_too_small(small_params, rng):
    cfg = estimator_for(small_params)
    with pytest.raises(BudgetError, match='median-of-means'):
        run_protocol(small_params, cfg, rng, ProtocolRun(budget=10))


def test_full_sim_mode_limited(rng):
    params = random_params(5, rng)
    with pytest.raises(ValueError, match='at most 4'):
        run_protocol(params, estimator_for(params), rng, ProtocolRun(mode='full-sim'))


def test_unknown_sampling():
    with pytest.raises(ValueError, match='Unknown sampling'):
        ProtocolRun(sampling='tomography')


def test_estimate_json(tmp_path, rng):
    moments = moments_from_state(state_from_params(random_params(2, rng)))
    estimate = merge_estimates({(0, 1): moments.pair_slice(0, 1)}, 2, config={'seed': 3})
    path = tmp_path / 'estimate.json'
    estimate.write_json(path)
    data = json.loads(path.read_text())
    assert data['n'] == 2
    assert np.allclose(data['gamma_hat'], moments.gamma)
    assert data['config'] == {'seed': 3}


def test_pairwise_shadows_batch_over_all_observables(monkeypatch, rng):
    params = random_params(3, rng, thermal_scale=0.2, squeeze_scale=0.1, displacement_scale=0.3)
    seen = []

    def recording(*args, **kwargs):
        seen.append(kwargs.get('total_observables'))
        return emulate_estimates(*args, **kwargs)

    monkeypatch.setattr('src.qcis.protocol.emulate_estimates', recording)
    run_protocol(params, estimator_for(params, gt_override=0.05), rng, ProtocolRun(budget=10 ** 6))
    assert seen
    assert set(seen) == {observable_count(3)}


@pytest.mark.slow
@pytest.mark.parametrize('n_modes, n_trunc, tolerance', [(3, 14, 1e-8), (4, 8, 1e-6)])
def test_series_oracle_tables_match_fock_oracle(rng, n_modes, n_trunc, tolerance):
    params = random_params(n_modes, rng, thermal_scale=0.1, squeeze_scale=0.05, displacement_scale=0.2)
    gt = 0.05
    series = SeriesOracle(moments_from_state(state_from_params(params)), gt)
    fock = FockOracle(params, gt, n_trunc)
    family = build_family(n_modes)
    for member in family.members:
        for j, k in itertools.combinations(range(n_modes), 2):
            expected = fock.pair_table(member, j, k)
            actual = series.pair_table(member, j, k)
            assert max(abs(actual[label] - expected[label]) for label in PAIR_PAULIS) < tolerance
