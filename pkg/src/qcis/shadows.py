"""Random single-qubit Pauli shadows and median-of-means estimation of local Paulis."""
import itertools
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.qcis.constants import SHADOW_CONSTANT
from src.qcis.fock_engine import basis_probabilities, outcome_signs
from src.qcis.paulis import pauli_weight

logger = logging.getLogger('qcis').getChild('shadows')

BASES = 'XYZ'
OUTCOME_SYMBOLS = {1: '+', -1: '-'}


@dataclass(frozen=True)
class ShadowRecord:
    state_id: int
    bases: str
    outcomes: tuple

    def __post_init__(self):
        if len(self.bases) != len(self.outcomes):
            raise ValueError(f'{len(self.bases)} bases but {len(self.outcomes)} outcomes')

    def to_line(self):
        return f'{self.state_id}\t{self.bases}\t' + ''.join(OUTCOME_SYMBOLS[o] for o in self.outcomes)

    @classmethod
    def from_line(cls, line):
        state_id, bases, outcomes = line.rstrip('\n').split('\t')
        return cls(int(state_id), bases, tuple(1 if o == '+' else -1 for o in outcomes))


@dataclass(frozen=True)
class ShadowEstimate:
    estimate: float
    samples: int
    batches: int


def observable_count(n_qubits):
    """B = 9 (n choose 2) + 3 n."""
    return 9 * n_qubits * (n_qubits - 1) // 2 + 3 * n_qubits


def median_of_means_batches(n_observables, delta):
    return max(1, math.ceil(2 * math.log(2 * n_observables / delta)))


def required_samples(weight, n_observables, eps_prime, delta, constant=SHADOW_CONSTANT):
    """Records needed to estimate n_observables weight-`weight` Paulis to eps' with probability 1 - delta."""
    if weight < 1 or n_observables < 1 or eps_prime <= 0 or not 0 < delta < 1:
        raise ValueError(f'Invalid sample count request: weight={weight}, B={n_observables}, '
                         f'eps_prime={eps_prime}, delta={delta}')
    return math.ceil(constant * 3 ** weight * math.log(2 * n_observables / delta) / eps_prime ** 2)


def collect_shadows(state_source, copies, rng, n_qubits=None, state_id=0):
    """Measure `copies` copies in independently uniform random Pauli bases.

    `state_source(bases, rng)` returns the +-1 outcome vector of one copy; sources with a
    `sample_batch(bases, size, rng)` method are sampled one basis setting at a time.
    """
    if copies < 1:
        raise ValueError(f'At least one copy is required, got {copies}')
    n_qubits = n_qubits or getattr(state_source, 'n_qubits', None)
    if not n_qubits:
        raise ValueError('Qubit count unknown: pass n_qubits for this state source')

    settings = rng.integers(0, 3, size=(copies, n_qubits))
    outcomes = np.empty((copies, n_qubits), dtype=int)
    sample_batch = getattr(state_source, 'sample_batch', None)
    if sample_batch is None:
        for i, row in enumerate(settings):
            outcomes[i] = state_source(''.join(BASES[b] for b in row), rng)
    else:
        codes = settings @ (3 ** np.arange(n_qubits - 1, -1, -1))
        for code in np.unique(codes):
            rows = np.flatnonzero(codes == code)
            bases = ''.join(BASES[b] for b in settings[rows[0]])
            outcomes[rows] = sample_batch(bases, rows.size, rng)

    return [ShadowRecord(state_id, ''.join(BASES[b] for b in row), tuple(int(o) for o in out))
            for row, out in zip(settings, outcomes)]


def _encode(targets, n_qubits):
    """(targets, qubits) codes: -1 for identity, else the basis index."""
    codes = np.full((len(targets), n_qubits), -1)
    for t, label in enumerate(targets):
        if len(label) != n_qubits:
            raise ValueError(f'Target {label!r} does not act on {n_qubits} qubits')
        weight = pauli_weight(label)
        if weight not in (1, 2):
            raise ValueError(f'Targets must have weight 1 or 2, got {label!r}')
        for q, letter in enumerate(label):
            if letter != 'I':
                codes[t, q] = BASES.index(letter)
    return codes


def single_shot_values(settings, outcomes, codes):
    """(records, targets) inverse-channel values: 3^w times the outcome product when every
    non-identity letter matches the measured basis, else 0."""
    mask = codes >= 0
    matches = np.all((settings[:, None, :] == codes[None, :, :]) | ~mask[None, :, :], axis=2)
    products = np.prod(np.where(mask[None, :, :], outcomes[:, None, :], 1), axis=2)
    scale = 3.0 ** mask.sum(axis=1)
    return np.where(matches, products, 0) * scale


def _combine(batch_means, use_median):
    return np.median(batch_means, axis=0) if use_median else np.mean(batch_means, axis=0)


def estimate_paulis(records, targets, delta=0.05, use_median=True, total_observables=None):
    """Median-of-means shadow estimates {target: ShadowEstimate} of weight-1 and weight-2 Paulis.

    The batch count is ceil(2 ln(2B / delta)) with B = `total_observables`, by default the number
    of targets.
    """
    if not records:
        raise ValueError('Cannot estimate from an empty record list')
    n_qubits = len(records[0].bases)
    codes = _encode(targets, n_qubits)
    settings = np.array([[BASES.index(b) for b in r.bases] for r in records])
    outcomes = np.array([r.outcomes for r in records])
    values = single_shot_values(settings, outcomes, codes)

    batches = min(median_of_means_batches(total_observables or len(targets), delta), len(records))
    batch_means = np.array([chunk.mean(axis=0) for chunk in np.array_split(values, batches)])
    estimates = _combine(batch_means, use_median)
    return {label: ShadowEstimate(float(value), len(records), batches) for label, value in zip(targets, estimates)}


def emulate_estimates(rho_q, targets, copies, rng, delta=0.05, use_median=True, total_observables=None):
    """Estimates distributed exactly as estimate_paulis(collect_shadows(...)) on the qubit
    state `rho_q`, drawn as per-batch multinomial counts over (basis, outcome) categories."""
    if copies < 1:
        raise ValueError(f'At least one copy is required, got {copies}')
    n_qubits = len(rho_q.dims)
    codes = _encode(targets, n_qubits)

    settings = np.array(list(itertools.product(range(3), repeat=n_qubits)))
    signs = outcome_signs(n_qubits)
    category_settings = np.repeat(settings, len(signs), axis=0)
    category_outcomes = np.tile(signs, (len(settings), 1))
    values = single_shot_values(category_settings, category_outcomes, codes)
    probabilities = np.concatenate([basis_probabilities(rho_q, ''.join(BASES[b] for b in row)) for row in settings])
    probabilities /= probabilities.sum()

    batches = min(median_of_means_batches(total_observables or len(targets), delta), copies)
    sizes = [len(chunk) for chunk in np.array_split(np.arange(copies), batches)]
    batch_means = np.array([rng.multinomial(size, probabilities) @ values / size for size in sizes])
    estimates = _combine(batch_means, use_median)
    return {label: ShadowEstimate(float(value), copies, batches) for label, value in zip(targets, estimates)}


class SyntheticNoiseSource:
    def __init__(self, exact, eps_prime, logger=None):
        """Stand-in for shadow estimation: exact expectations {label: value} perturbed by
        independent uniform noise in [-eps', eps']."""
        if eps_prime < 0:
            raise ValueError(f'Noise amplitude must be nonnegative, got {eps_prime}')
        self.exact = dict(exact)
        self.eps_prime = eps_prime
        self.logger = logger or logging.getLogger('qcis')

    def estimates(self, targets, rng):
        noise = rng.uniform(-self.eps_prime, self.eps_prime, size=len(targets))
        return {label: ShadowEstimate(float(self.exact[label] + e), 0, 0) for label, e in zip(targets, noise)}


def write_records(path, records):
    path = Path(path)
    with path.open('w') as handle:
        for record in records:
            handle.write(record.to_line() + '\n')
    logger.info(f'Wrote {len(records)} shadow records to {path}')


def read_records(path):
    with Path(path).open() as handle:
        return [ShadowRecord.from_line(line) for line in handle if line.strip()]
