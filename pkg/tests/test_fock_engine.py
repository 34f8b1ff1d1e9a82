import numpy as np
import pytest

from src.qcis.fock_engine import BornSampler, FockOperator, LeakageExceeded, TransductionConfig, build_state, \
    fock_moment, fock_moments, jc_evolve, outcome_signs, partial_trace, pauli_expectation, quadratures, \
    qubit_reduced, sample_in_bases, spectral_block, thermal_populations, transduce, two_mode_squeeze_unitary
from src.qcis.gaussian_core import Letter, StatePrepParams, moments_from_state, parse_word, random_params, \
    state_from_params, vacuum_params, wick_moment
from src.qcis.paulis import product_state
from src.qcis.shadows import collect_shadows


def test_vacuum_build():
    rho = build_state(vacuum_params(2), 5)
    assert rho.dims == (5, 5)
    assert rho.data[0, 0] == pytest.approx(1)
    assert rho.leakage == pytest.approx(0)
    assert rho.is_density()


def test_thermal_build_matches_populations():
    rho = build_state(StatePrepParams(thermal=(0.4,)), 40)
    assert np.allclose(np.diag(rho.data).real, thermal_populations(0.4, 40))


def test_leakage_exceeded_at_small_truncation():
    with pytest.raises(LeakageExceeded, match='increase n_trunc'):
        build_state(StatePrepParams(thermal=(2.0,)), 5)


def test_truncation_validated():
    with pytest.raises(ValueError, match='at least 2'):
        build_state(vacuum_params(1), 1)


def test_two_mode_squeezer_is_unitary():
    unitary = two_mode_squeeze_unitary(6, 0.3 + 0.2j).toarray()
    assert np.allclose(unitary @ unitary.conj().T, np.eye(36))


def test_fock_moments_match_gaussian_moments(small_params):
    state = state_from_params(small_params)
    rho = build_state(small_params, 30)
    words = [parse_word(text) for text in ('Q0', 'P1', 'Q0 Q0', 'Q0 P0', 'P0 Q1', 'Q1 P1 Q0', 'P0 P0 Q1 Q1')]
    fock = fock_moments(rho, words)
    for word in words:
        assert fock[word] == pytest.approx(wick_moment(state, word), abs=1e-8)


def test_pure_state_moments_use_one_eigenvector():
    params = StatePrepParams(thermal=(0.0, 0.0), squeezing={(0, 1): 0.2}, displacement=(0.3j, 0.1))
    rho = build_state(params, 25)
    weights, vectors = spectral_block(rho)
    assert (weights > 1e-12).sum() == 1
    assert weights.max() == pytest.approx(1, abs=1e-6)
    assert vectors.shape == (625, weights.size)
    word = parse_word('Q0 P1 P1 Q1 Q0 P0')
    assert fock_moment(rho, word) == pytest.approx(wick_moment(state_from_params(params), word), abs=1e-8)


def test_fock_moments_of_mixed_state_match_dense_trace(small_params):
    rho = build_state(small_params, 20, leakage_budget=1e-3)
    quads = quadratures(20)
    eye = np.eye(20)
    q0 = np.kron(quads['Q'], eye)
    p1 = np.kron(eye, quads['P'])
    dense = np.trace(rho.data @ q0 @ p1 @ q0)
    assert fock_moment(rho, parse_word('Q0 P1 Q0')) == pytest.approx(dense, abs=1e-10)


def test_fock_moment_commutator():
    rho = build_state(vacuum_params(1), 10)
    assert fock_moment(rho, parse_word('Q0 P0')) == pytest.approx(0.5j)


def test_fock_second_moments_match_moment_vector(small_params):
    rho = build_state(small_params, 30)
    moments = moments_from_state(state_from_params(small_params))
    q1q2 = fock_moment(rho, (Letter(0, 'Q'), Letter(1, 'Q')))
    assert q1q2.real == pytest.approx(moments.pair_slice(0, 1)[10], abs=1e-8)


def test_partial_trace_of_product():
    first = np.diag([0.7, 0.3]).astype(complex)
    second = np.array([[0.5, 0.5j], [-0.5j, 0.5]])
    op = FockOperator((2, 2), np.kron(first, second))
    assert np.allclose(partial_trace(op, [0]).data, first)
    assert np.allclose(partial_trace(op, [1]).data, second)


def test_partial_trace_rejects_bad_factors():
    op = FockOperator((2, 2), np.eye(4) / 4)
    with pytest.raises(ValueError, match='Cannot keep'):
        partial_trace(op, [2])


def test_vacuum_ground_is_stationary():
    rho_q = transduce(build_state(vacuum_params(2), 4), ('g', 'g'), TransductionConfig.uniform(2, 0.3))
    assert pauli_expectation(rho_q, 'ZI') == pytest.approx(-1)
    assert pauli_expectation(rho_q, 'ZZ') == pytest.approx(1)
    assert pauli_expectation(rho_q, 'XI') == pytest.approx(0, abs=1e-12)


def test_vacuum_plus_state_rabi_oscillation():
    gt = 0.3
    theta = np.sqrt(2) * gt
    rho_q = transduce(build_state(vacuum_params(1), 4), ('+',), TransductionConfig.uniform(1, gt))
    assert pauli_expectation(rho_q, 'X') == pytest.approx(np.cos(theta))
    assert pauli_expectation(rho_q, 'Y') == pytest.approx(0, abs=1e-12)
    assert pauli_expectation(rho_q, 'Z') == pytest.approx(-np.sin(theta) ** 2)


def test_transduce_matches_full_evolution(rng):
    params = random_params(2, rng, thermal_scale=0.2, squeeze_scale=0.1, displacement_scale=0.3)
    rho_f = build_state(params, 8, leakage_budget=1e-2)
    cfg = TransductionConfig((0.05, 0.08))
    direct = transduce(rho_f, ('+', '+i'), cfg)
    full = jc_evolve(rho_f, ('+', '+i'), cfg)
    assert full.dims == (8, 8, 2, 2)
    assert np.allclose(qubit_reduced(full).data, direct.data, atol=1e-12)
    assert direct.is_density(tol=1e-8)


def test_jc_evolve_capped_at_benchmark_truncation():
    rho_f = build_state(vacuum_params(2), 60)
    with pytest.raises(ValueError, match='use transduce'):
        jc_evolve(rho_f, ('g', 'g'), TransductionConfig.uniform(2, 0.01))
    rho_q = transduce(rho_f, ('g', 'g'), TransductionConfig.uniform(2, 0.01))
    assert pauli_expectation(rho_q, 'ZZ') == pytest.approx(1)


def test_jc_evolve_preserves_trace_and_purity():
    rho_f = build_state(StatePrepParams(thermal=(0.0,), displacement=(0.5,)), 12, leakage_budget=1e-3)
    full = jc_evolve(rho_f, ('e',), TransductionConfig.uniform(1, 0.2))
    purity = np.trace(full.data @ full.data).real
    assert full.trace() == pytest.approx(rho_f.trace(), abs=1e-10)
    assert purity == pytest.approx(np.trace(rho_f.data @ rho_f.data).real, abs=1e-10)


def test_labels_checked():
    rho_f = build_state(vacuum_params(2), 4)
    with pytest.raises(ValueError):
        transduce(rho_f, ('g',), TransductionConfig.uniform(2, 0.1))


def test_couplings_positive():
    with pytest.raises(ValueError, match='positive'):
        TransductionConfig((0.1, 0.0))


def test_pauli_label_length_checked():
    with pytest.raises(ValueError, match='does not match'):
        pauli_expectation(FockOperator((2,), np.eye(2) / 2), 'XX')


def test_outcome_signs():
    assert outcome_signs(2).tolist() == [[1, 1], [1, -1], [-1, 1], [-1, -1]]


def test_born_sampler_on_excited_state(rng):
    sampler = BornSampler(FockOperator((2,), np.diag([1.0, 0.0])))
    assert (sampler.sample_batch('Z', 50, rng) == 1).all()
    assert np.allclose(sampler.probabilities('X'), [0.5, 0.5])
    assert sampler('Y', rng).shape == (1,)


def test_ground_state_measured_in_z(rng):
    rho_q = FockOperator((2,), product_state(('g',)))
    assert sample_in_bases(rho_q, 'Z', rng).tolist() == [-1]
    assert (sample_in_bases(rho_q, 'Z', rng, size=20) == -1).all()


def test_plus_state_measured_in_x(rng):
    rho_q = FockOperator((2, 2), product_state(('+', '+i')))
    outcomes = sample_in_bases(rho_q, 'XY', rng, size=50)
    assert outcomes.shape == (50, 2)
    assert (outcomes == 1).all()


def test_bell_state_frequencies(rng):
    ket = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho_q = FockOperator((2, 2), np.outer(ket, ket).astype(complex))
    size = 4000
    outcomes = sample_in_bases(rho_q, 'ZZ', rng, size=size)
    assert (outcomes[:, 0] == outcomes[:, 1]).all()
    frequency = np.mean(outcomes[:, 0] == 1)
    assert abs(frequency - 0.5) <= 3 * np.sqrt(0.25 / size)


def test_born_sampler_draws_through_sample_in_bases(monkeypatch, rng):
    calls = []

    def recording(*args, **kwargs):
        calls.append(args[1])
        return sample_in_bases(*args, **kwargs)

    monkeypatch.setattr('src.qcis.fock_engine.sample_in_bases', recording)
    sampler = BornSampler(FockOperator((2, 2), product_state(('e', 'g'))))
    records = collect_shadows(sampler, 200, rng)
    assert sorted(set(calls)) == sorted({record.bases for record in records})
    assert all(record.outcomes == (1, -1) for record in records if record.bases == 'ZZ')
