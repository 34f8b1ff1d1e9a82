"""Full n-mode orchestration: initial qubit-state family, pair routing, per-pair
extraction and the merge into the 2n^2 + 3n moment estimate."""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from src.qcis.constants import DEFAULT_TRUNCATION, MIXED_PREPARATIONS, ORACLE_SERIES_ORDER, PAIR_PAULIS
from src.qcis.estimator import extract_pair
from src.qcis.fock_engine import BornSampler, FockOperator, TransductionConfig, build_state, partial_trace, \
    pauli_expectation, transduce
from src.qcis.gaussian_core import moment_length, moments_from_state, pair_indices, state_from_params
from src.qcis.paulis import embed_label, local_paulis, pauli_operator
from src.qcis.shadows import SyntheticNoiseSource, collect_shadows, emulate_estimates, estimate_paulis, \
    median_of_means_batches, observable_count, required_samples, write_records
from src.qcis.transduction import build_pair_map, exact_pair_vector, pauli_table, shift, slot_labels

logger = logging.getLogger('qcis').getChild('protocol')

MODES = ('full-sim', 'pairwise-oracle')
SAMPLINGS = ('shadows', 'synthetic', 'exact')
FULL_SIM_MAX_MODES = 4


class CoverageError(RuntimeError):
    """Some mode pair has no family member preparing it in (+, +i) or (+i, +)."""


class BudgetError(ValueError):
    """The copy budget is too small to split across the family and the estimator batches."""


@dataclass(frozen=True)
class InitialStateFamily:
    n_modes: int
    members: tuple

    @property
    def size(self):
        return len(self.members)

    def label_matrix(self):
        """(members - 1, n) array, 1 where a non-ground member prepares +i."""
        return np.array([[label == '+i' for label in member] for member in self.members[1:]], dtype=np.int8)

    def check_coverage(self):
        # every pair differs on some member iff all qubit columns are distinct
        columns = self.label_matrix().T
        distinct = len(np.unique(columns, axis=0))
        if distinct != self.n_modes:
            raise CoverageError(f'{self.n_modes - distinct} qubits share a preparation pattern; '
                                f'some pairs are never prepared in (+, +i)')


def _doubled(n_qubits):
    """Members for 2^m qubits, built by doubling the 2^(m-1) family and appending |+>^h |+i>^h."""
    if n_qubits == 1:
        return []
    half = n_qubits // 2
    members = [member + member for member in _doubled(half)]
    members.append(('+',) * half + ('+i',) * half)
    return members


def build_family(n_modes):
    if n_modes < 2:
        raise ValueError(f'At least two modes are required, got {n_modes}')
    padded = 2 ** math.ceil(math.log2(n_modes))
    members = [('g',) * n_modes] + [member[:n_modes] for member in _doubled(padded)]
    return InitialStateFamily(n_modes, tuple(members))


@dataclass(frozen=True)
class PairAssignment:
    pair: tuple
    member: int
    orientation: str

    def slot_sources(self):
        """(family member, two-letter label in (j, k) order) feeding each of the 14 slots."""
        return [(0 if kind == 'ground' else self.member, label) for label, kind in slot_labels(self.orientation)]


def assign_pairs(family):
    """First non-ground member separating each pair, and its orientation."""
    assignments = {}
    n_modes = family.n_modes
    for j in range(n_modes):
        for k in range(j + 1, n_modes):
            for index, member in enumerate(family.members[1:], start=1):
                if member[j] != member[k]:
                    orientation = 'standard' if (member[j], member[k]) == ('+', '+i') else 'swapped'
                    assignments[(j, k)] = PairAssignment((j, k), index, orientation)
                    break
            else:
                raise CoverageError(f'No family member separates modes ({j}, {k})')
    return assignments


@dataclass
class GlobalEstimate:
    n_modes: int
    gamma_hat: np.ndarray
    provenance: list
    spread: np.ndarray
    config: dict = field(default_factory=dict)
    diverged_pairs: list = field(default_factory=list)

    def max_error(self, truth):
        return float(np.abs(self.gamma_hat - np.asarray(truth)).max())

    def mean_error(self, truth):
        return float(np.abs(self.gamma_hat - np.asarray(truth)).mean())

    def to_dict(self):
        return {
            'n': self.n_modes,
            'gamma_hat': [float(v) for v in self.gamma_hat],
            'provenance': [[list(pair) for pair in pairs] for pairs in self.provenance],
            'spread': [float(v) for v in self.spread],
            'config': self.config,
        }

    def write_json(self, path):
        path = Path(path)
        with path.open('w') as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
        logger.info(f'Wrote global estimate of {self.n_modes} modes to {path}')


def merge_estimates(pair_results, n_modes, use_median=False, config=None):
    """Combine per-pair 14-vectors {(j, k): gamma_pair} into the full moment vector."""
    expected = [(j, k) for j in range(n_modes) for k in range(j + 1, n_modes)]
    missing = [pair for pair in expected if pair not in pair_results]
    if missing:
        raise ValueError(f'Missing pair estimates for {missing}')

    contributions = [[] for _ in range(moment_length(n_modes))]
    provenance = [[] for _ in range(moment_length(n_modes))]
    for pair in expected:
        for index, value in zip(pair_indices(n_modes, *pair), pair_results[pair]):
            contributions[index].append(value)
            provenance[index].append(pair)

    combine = np.median if use_median else np.mean
    gamma_hat = np.array([combine(values) for values in contributions])
    spread = np.array([max(values) - min(values) for values in contributions])
    return GlobalEstimate(n_modes, gamma_hat, provenance, spread, config=dict(config or {}))


def pair_table_from_qubits(rho_q, j, k):
    """Exact 15 Pauli expectations of qubits (j, k) of an n-qubit state."""
    reduced = partial_trace(rho_q, [j, k])
    return {label: pauli_expectation(reduced, label) for label in PAIR_PAULIS}


def pair_pauli_vector(params, gt, source, n_trunc=DEFAULT_TRUNCATION, orientation='standard'):
    """Raw 14-slot vector of a two-mode preparation from the Fock oracle or the series oracle."""
    mixed = MIXED_PREPARATIONS[orientation]
    if source == 'fock':
        rho_f = build_state(params, n_trunc)
        cfg = TransductionConfig.uniform(2, gt)
        ground = pair_table_from_qubits(transduce(rho_f, ('g', 'g'), cfg), 0, 1)
        mixed_table = pair_table_from_qubits(transduce(rho_f, mixed, cfg), 0, 1)
    elif source == 'series':
        gamma_pair = moments_from_state(state_from_params(params)).pair_slice(0, 1)
        ground = pauli_table(gamma_pair, (gt, gt), ('g', 'g'), ORACLE_SERIES_ORDER)
        mixed_table = pauli_table(gamma_pair, (gt, gt), mixed, ORACLE_SERIES_ORDER)
    else:
        raise ValueError(f'Unknown Pauli source {source!r}, expected fock or series')
    return exact_pair_vector(ground, mixed_table, orientation)


def pair_table_from_labels(estimates, n_qubits, j, k):
    return {label: estimates[embed_label(n_qubits, {j: label[0], k: label[1]})] for label in PAIR_PAULIS}


def state_from_table(table):
    """Two-qubit density matrix (I + sum_P <P> P) / 4 of a full Pauli table."""
    data = np.eye(4, dtype=complex)
    for label, value in table.items():
        data = data + value * pauli_operator(label)
    return FockOperator((2, 2), data / 4)


class FockOracle:
    def __init__(self, params, gt, n_trunc=DEFAULT_TRUNCATION, logger=None):
        """Qubit states of every family member from one truncated-Fock build of rho_f."""
        self.logger = logger or logging.getLogger('qcis')
        self.n_modes = params.n_modes
        if self.n_modes > FULL_SIM_MAX_MODES:
            raise ValueError(f'Full simulation supports at most {FULL_SIM_MAX_MODES} modes, got {self.n_modes}')
        self.rho_f = build_state(params, n_trunc)
        self.cfg = TransductionConfig.uniform(self.n_modes, gt)
        self._states = {}
        self.logger.info(f'Built {self.n_modes}-mode Fock state at truncation {n_trunc} '
                         f'(leakage {self.rho_f.leakage:.2e})')

    def qubit_state(self, member):
        if member not in self._states:
            self._states[member] = transduce(self.rho_f, member, self.cfg)
        return self._states[member]

    def pair_table(self, member, j, k):
        return pair_table_from_qubits(self.qubit_state(member), j, k)


class SeriesOracle:
    def __init__(self, moments, gt, order=ORACLE_SERIES_ORDER):
        """Pair Pauli tables from the series model on the pair marginal moments, cached
        per (preparation, pair)."""
        self.moments = moments
        self.gt = gt
        self.order = order
        self._tables = {}

    def pair_table(self, member, j, k):
        key = (member[j], member[k], j, k)
        if key not in self._tables:
            self._tables[key] = pauli_table(self.moments.pair_slice(j, k), (self.gt, self.gt), key[:2], self.order)
        return self._tables[key]


def _map(function, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return list(executor.map(function, items))
    return [function(item) for item in items]


def _spawn_streams(rng, count):
    seed_seq = np.random.SeedSequence(int(rng.integers(2 ** 63)))
    return [np.random.default_rng(child) for child in seed_seq.spawn(count)]


@dataclass
class ProtocolRun:
    """Settings of one protocol execution besides the state and estimator configuration.

    mode 'pairwise-oracle' builds every pair table from the pair marginal moments with the
    order-ORACLE_SERIES_ORDER Heisenberg series (SeriesOracle), an approximation of the
    transduced Fock marginal; 'full-sim' transduces the joint truncated Fock state (FockOracle).
    """
    mode: str = 'pairwise-oracle'
    sampling: str = 'shadows'
    budget: int = None
    delta: float = 0.05
    n_trunc: int = DEFAULT_TRUNCATION
    threads: int = 1
    use_median: bool = False
    record_dir: str = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f'Unknown mode {self.mode!r}, expected one of {MODES}')
        if self.sampling not in SAMPLINGS:
            raise ValueError(f'Unknown sampling {self.sampling!r}, expected one of {SAMPLINGS}')
        if self.threads < 1:
            raise ValueError(f'Thread count must be positive, got {self.threads}')


def copies_per_state(cfg, run, n_modes, n_states):
    observables = observable_count(n_modes)
    if run.budget is None:
        per_state = required_samples(2, observables, cfg.eps_prime, run.delta)
    else:
        per_state = run.budget // n_states
    minimum = median_of_means_batches(observables, run.delta)
    if per_state < minimum:
        raise BudgetError(f'Budget of {run.budget} copies leaves {per_state} per initial state, '
                          f'below the {minimum} median-of-means batches')
    return per_state


def _sample_table(table, labels, run, cfg, copies, rng, total_observables):
    if run.sampling == 'exact':
        return dict(table)
    if run.sampling == 'synthetic':
        estimates = SyntheticNoiseSource(table, cfg.eps_prime).estimates(labels, rng)
    else:
        estimates = emulate_estimates(state_from_table(table), labels, copies, rng, run.delta,
                                      total_observables=total_observables)
    return {label: estimate.estimate for label, estimate in estimates.items()}


def _pairwise_tables(oracle, family, assignments, run, cfg, copies, rng):
    observables = observable_count(family.n_modes)
    tasks = sorted({(0,) + pair for pair in assignments} | {(a.member,) + pair for pair, a in assignments.items()})
    streams = _spawn_streams(rng, len(tasks))

    def measure(task_stream):
        (member, j, k), stream = task_stream
        table = oracle.pair_table(family.members[member], j, k)
        return _sample_table(table, PAIR_PAULIS, run, cfg, copies, stream, observables)

    tables = _map(measure, list(zip(tasks, streams)), run.threads)
    return dict(zip(tasks, tables))


def _full_tables(oracle, family, assignments, run, cfg, copies, rng):
    n_modes = family.n_modes
    labels = local_paulis(n_modes)
    streams = _spawn_streams(rng, family.size)
    tables = {}
    for index, (member, stream) in enumerate(zip(family.members, streams)):
        rho_q = oracle.qubit_state(member)
        if run.sampling == 'exact':
            estimates = {label: pauli_expectation(rho_q, label) for label in labels}
        elif run.sampling == 'synthetic':
            exact = {label: pauli_expectation(rho_q, label) for label in labels}
            estimates = {label: e.estimate
                         for label, e in SyntheticNoiseSource(exact, cfg.eps_prime).estimates(labels, stream).items()}
        elif run.record_dir is not None:
            records = collect_shadows(BornSampler(rho_q), copies, stream, state_id=index)
            write_records(Path(run.record_dir) / f'records_state{index}.tsv', records)
            estimates = {label: e.estimate for label, e in estimate_paulis(records, labels, run.delta).items()}
        else:
            estimates = {label: e.estimate
                         for label, e in emulate_estimates(rho_q, labels, copies, stream, run.delta).items()}
        for j, k in assignments:
            tables[(index, j, k)] = pair_table_from_labels(estimates, n_modes, j, k)
    return tables


def run_protocol(params, cfg, rng, run=None, logger=None, oracle=None):
    """Estimate all 2n^2 + 3n moments of the state prepared by `params`.

    Every family member is measured on T' = T / (ceil(log2 n) + 1) copies, each pair's
    14 Paulis are routed from the ground run and its assigned mixed run, the pair
    moments are extracted iteratively and the overlaps merged.
    """
    run = run or ProtocolRun()
    logger = logger or logging.getLogger('qcis')
    n_modes = params.n_modes
    if n_modes < 2:
        raise ValueError(f'At least two modes are required, got {n_modes}')
    if run.mode == 'full-sim' and n_modes > FULL_SIM_MAX_MODES:
        raise ValueError(f'full-sim mode supports at most {FULL_SIM_MAX_MODES} modes, got {n_modes}')

    family = build_family(n_modes)
    family.check_coverage()
    assignments = assign_pairs(family)
    copies = copies_per_state(cfg, run, n_modes, family.size) if run.sampling == 'shadows' else 0
    logger.info(f'Protocol on {n_modes} modes: {family.size} initial states, {len(assignments)} pairs, '
                f'gt = {cfg.gt:.4g}, mode {run.mode}, sampling {run.sampling}'
                + (f', {copies} copies per state' if copies else ''))

    moments = moments_from_state(state_from_params(params))
    if run.mode == 'full-sim':
        oracle = oracle or FockOracle(params, cfg.gt, run.n_trunc, logger=logger)
        tables = _full_tables(oracle, family, assignments, run, cfg, copies, rng)
    else:
        oracle = oracle or SeriesOracle(moments, cfg.gt)
        tables = _pairwise_tables(oracle, family, assignments, run, cfg, copies, rng)

    def extract(item):
        (j, k), assignment = item
        pair_map = build_pair_map(cfg.gt, cfg.gt, assignment.orientation)
        raw = np.array([tables[(member, j, k)][label] for member, label in assignment.slot_sources()])
        gamma, trace = extract_pair(shift(raw, pair_map.frame_couplings), pair_map, cfg,
                                    truth=moments.pair_slice(j, k))
        logger.debug(f'Pair ({j}, {k}) via state {assignment.member} ({assignment.orientation}): '
                     f'final error {trace.final.max_err:.3e}')
        return gamma, trace

    items = sorted(assignments.items())
    outcomes = _map(extract, items, run.threads)
    pair_results = {pair: gamma for (pair, _), (gamma, _) in zip(items, outcomes)}
    estimate = merge_estimates(pair_results, n_modes, run.use_median,
                               config={'mode': run.mode, 'sampling': run.sampling, 'copies_per_state': copies,
                                       'gt': cfg.gt, 'eps': cfg.eps, 'E_max': cfg.E_max, 'rounds': cfg.rounds})
    estimate.diverged_pairs = [pair for (pair, _), (_, trace) in zip(items, outcomes) if trace.diverged]
    logger.info(f'Max error {estimate.max_error(moments.gamma):.3e} over {moment_length(n_modes)} moments')
    return estimate, moments
