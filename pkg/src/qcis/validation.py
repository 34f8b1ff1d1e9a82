"""Oracle-equivalence and invariant checks run by the `validate` command."""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from src.qcis.constants import (BENCHMARK_DISPLACEMENT, BENCHMARK_GT, BENCHMARK_SQUEEZING, BENCHMARK_THERMAL,
                                ORIENTATIONS, PAIR_PAULIS, QUADRATURES)
from src.qcis.estimator import EstimatorConfig, contraction_bounds, extract_pair
from src.qcis.fock_engine import TransductionConfig, build_state, fock_moments, partial_trace, transduce
from src.qcis.gaussian_core import Letter, StatePrepParams, max_mode_energy, moments_from_state, random_params, \
    state_from_params, wick_moment
from src.qcis.protocol import CoverageError, build_family, pair_pauli_vector, pair_table_from_qubits
from src.qcis.transduction import PauliVector, block_norms, build_pair_map, shift, tail

logger = logging.getLogger('qcis').getChild('validation')

WICK_STATES = 10
WICK_ENERGY = 3.0
SUBSYSTEM_STATES = 10
SUBSYSTEM_MODES = 3
SUBSYSTEM_TRUNCATION = 20
CONTRACTION_STATES = 50
CONTRACTION_ENERGY = 5.0
TAIL_STATES = 20
GT_LADDER = (0.04, 0.02, 0.01)
NORM_LADDER = (0.1, 0.05, 0.025)

# small random states keep truncated Fock builds well inside the leakage budget
SMALL_STATE = dict(thermal_scale=0.3, squeeze_scale=0.2, displacement_scale=0.5)


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    threshold: float

    @property
    def passed(self):
        return bool(self.measured <= self.threshold)


def benchmark_params():
    return StatePrepParams(thermal=BENCHMARK_THERMAL, squeezing=dict(BENCHMARK_SQUEEZING),
                           displacement=BENCHMARK_DISPLACEMENT)


def _faulty_shift(raw, couplings):
    """shift() with the ground-state Z offsets missing their 2 (gt)^2 term."""
    vector = shift(raw, couplings)
    shifts = np.where(vector.shifts > 1, 1.0, vector.shifts)
    return PauliVector(values=vector.raw + shifts, raw=vector.raw, shifts=shifts, couplings=vector.couplings)


def bounded_states(n_modes, rng, count, energy, **scales):
    """`count` random states whose largest mode energy is at most `energy`, by rejection."""
    while count:
        params = random_params(n_modes, rng, **scales)
        state = state_from_params(params)
        if max_mode_energy(state) <= energy:
            count -= 1
            yield params, state


def check_wick_vs_fock(cfg, rng, n_states=WICK_STATES):
    """Ordered moments of every word up to cfg.wick_order on random two-mode states."""
    letters = [Letter(mode, quad) for mode in range(2) for quad in QUADRATURES]
    words = [word for order in range(1, cfg.wick_order + 1) for word in itertools.product(letters, repeat=order)]
    symmetrized = cfg.inject == 'wick'
    worst = 0.0
    for params, state in bounded_states(2, rng, n_states, WICK_ENERGY, **SMALL_STATE):
        fock = fock_moments(build_state(params, cfg.validate_trunc), words)
        memo = {}
        for word in words:
            wick = wick_moment(state, word, symmetrized=symmetrized, memo=memo)
            worst = max(worst, abs(wick - fock[word]))
    return CheckResult('wick_vs_fock', worst, 1e-6)


def check_subsystem(cfg, rng, gt, n_states=SUBSYSTEM_STATES, n_trunc=SUBSYSTEM_TRUNCATION):
    """Pair Paulis of a full three-mode transduction equal those of the transduced pair marginal."""
    worst = 0.0
    for _ in range(n_states):
        params = random_params(SUBSYSTEM_MODES, rng, **SMALL_STATE)
        rho_f = build_state(params, n_trunc)
        member = tuple(str(label) for label in rng.choice(['g', '+', '+i'], size=SUBSYSTEM_MODES))
        full = transduce(rho_f, member, TransductionConfig.uniform(SUBSYSTEM_MODES, gt))
        for j, k in itertools.combinations(range(SUBSYSTEM_MODES), 2):
            marginal = transduce(partial_trace(rho_f, [j, k]), (member[j], member[k]),
                                 TransductionConfig.uniform(2, gt))
            joint = pair_table_from_qubits(full, j, k)
            reduced = pair_table_from_qubits(marginal, 0, 1)
            worst = max(worst, max(abs(joint[label] - reduced[label]) for label in PAIR_PAULIS))
    return CheckResult('subsystem', worst, 1e-8)


def check_block_norms():
    """Mean and moment blocks of the inverse scale as 1/gt and 1/gt^2 under halving."""
    norms = np.array([block_norms(build_pair_map(gt, gt)) for gt in NORM_LADDER])
    ratios = norms[1:] / norms[:-1]
    deviation = max(np.abs(ratios[:, 0] / 2 - 1).max(), np.abs(ratios[:, 1] / 4 - 1).max())
    return CheckResult('block_norms', float(deviation), 0.01)


def check_map_identity(gt):
    worst = 0.0
    for orientation in ORIENTATIONS:
        pair_map = build_pair_map(gt, 1.5 * gt, orientation)
        worst = max(worst, float(np.abs(pair_map.M @ pair_map.M_inv - np.eye(14)).max()))
    return CheckResult('map_identity', worst, 1e-9)


def check_map_inversion(cfg, gt):
    """Exact series Paulis of the benchmark state, shifted and inverted, give back its moments."""
    params = benchmark_params()
    state = state_from_params(params)
    truth = moments_from_state(state).pair_slice(0, 1)
    est_cfg = EstimatorConfig(eps=cfg.eps, E_max=max_mode_energy(state), K=cfg.K, gt_override=gt, rounds_override=6)
    shifter = _faulty_shift if cfg.inject == 'shift' else shift
    worst = 0.0
    for orientation in ORIENTATIONS:
        pair_map = build_pair_map(gt, gt, orientation)
        raw = pair_pauli_vector(params, gt, 'series', orientation=orientation)
        gamma, _ = extract_pair(shifter(raw, pair_map.frame_couplings), pair_map, est_cfg)
        worst = max(worst, float(np.abs(gamma - truth).max()))
    return CheckResult('map_inversion', worst, 1e-8)


def check_series_vs_fock(cfg, gt):
    params = benchmark_params()
    worst = 0.0
    for orientation in ORIENTATIONS:
        series = pair_pauli_vector(params, gt, 'series', orientation=orientation)
        fock = pair_pauli_vector(params, gt, 'fock', cfg.validate_trunc, orientation)
        worst = max(worst, float(np.abs(series - fock).max()))
    return CheckResult('series_vs_fock', worst, 1e-7)


def check_contraction(cfg, rng, n_states=CONTRACTION_STATES):
    """Per-round errors with exact Paulis stay under the mean and moment contraction bounds."""
    worst = 0.0
    for params, state in bounded_states(2, rng, n_states, CONTRACTION_ENERGY):
        est_cfg = EstimatorConfig(eps=cfg.eps, E_max=max(max_mode_energy(state), 2 * cfg.eps), K=cfg.K)
        pair_map = build_pair_map(est_cfg.gt, est_cfg.gt)
        raw = pair_pauli_vector(params, est_cfg.gt, 'series')
        _, trace = extract_pair(shift(raw, pair_map.couplings), pair_map, est_cfg,
                                truth=moments_from_state(state).pair_slice(0, 1))
        for entry in trace.rounds:
            mean_bound, moment_bound = contraction_bounds(est_cfg, entry.round)
            worst = max(worst, entry.mean_err / mean_bound, entry.cov_err / moment_bound)
    return CheckResult('contraction', worst, 1.0)


def check_family_coverage(cfg):
    """Family size ceil(log2 n) + 1 and full pair coverage for every n up to cfg.coverage_max."""
    failures = 0
    for n_modes in range(2, cfg.coverage_max + 1):
        family = build_family(n_modes)
        try:
            family.check_coverage()
        except CoverageError:
            failures += 1
            continue
        if family.size != math.ceil(math.log2(n_modes)) + 1:
            failures += 1
    return CheckResult('family_coverage', failures, 0)


def check_tail_slope(cfg, rng, n_states=TAIL_STATES):
    """Log-log slope of the tail norm against gt over random states."""
    slopes = []
    for _ in range(n_states):
        gamma = moments_from_state(state_from_params(random_params(2, rng))).pair_slice(0, 1)
        norms = [np.abs(tail(gamma, build_pair_map(gt, gt), cfg.K)).max() for gt in GT_LADDER]
        slopes.append(np.polyfit(np.log(GT_LADDER), np.log(norms), 1)[0])
    return CheckResult('tail_slope', float(abs(np.median(slopes) - 3)), 0.3)


def run_checks(cfg, logger=None):
    """Every check, each on its own random stream spawned from cfg.seed."""
    logger = logger or logging.getLogger('qcis')
    gt = cfg.gt or BENCHMARK_GT
    if cfg.inject:
        logger.warning(f'Fault injection active: {cfg.inject}')
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(4)]
    checks = [
        lambda: check_wick_vs_fock(cfg, streams[0]),
        lambda: check_subsystem(cfg, streams[1], gt),
        check_block_norms,
        lambda: check_map_identity(gt),
        lambda: check_map_inversion(cfg, gt),
        lambda: check_series_vs_fock(cfg, gt),
        lambda: check_contraction(cfg, streams[2]),
        lambda: check_family_coverage(cfg),
        lambda: check_tail_slope(cfg, streams[3]),
    ]
    results = []
    for check in checks:
        result = check()
        logger.debug(f'{result.name}: {result.measured:.3e} (threshold {result.threshold:.1e})')
        results.append(result)
    return results
