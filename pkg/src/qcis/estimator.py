"""Iterative extraction of the 14 pair moments from measured shifted Pauli expectations."""
import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from src.qcis.constants import DEFAULT_C, DEFAULT_C_EPS, DEFAULT_SERIES_ORDER
from src.qcis.shadows import observable_count, required_samples
from src.qcis.transduction import invert_linear, tail

logger = logging.getLogger('qcis').getChild('estimator')

# residuals below this are treated as converged when checking for divergence
RESIDUAL_FLOOR = 1e-12


@dataclass(frozen=True)
class EstimatorConfig:
    eps: float
    E_max: float
    C: float = DEFAULT_C
    c_eps: float = DEFAULT_C_EPS
    K: int = DEFAULT_SERIES_ORDER
    gt_override: float = None
    rounds_override: int = None

    def __post_init__(self):
        if self.eps <= 0 or self.E_max <= 0 or self.C <= 0 or self.c_eps <= 0:
            raise ValueError(f'eps, E_max, C and c_eps must be positive: {self}')
        if self.K < 2:
            raise ValueError(f'Series order must be at least 2, got {self.K}')
        if self.gt_override is not None and self.gt_override <= 0:
            raise ValueError(f'gt must be positive, got {self.gt_override}')
        if self.rounds_override is not None and self.rounds_override < 1:
            raise ValueError(f'At least one round is required, got {self.rounds_override}')
        if not self.in_regime:
            logger.warning(f'gt * sqrt(E_max) = {self.gt * math.sqrt(self.E_max):.4f} exceeds 1/C = {1 / self.C:.4f}')

    @property
    def gt(self):
        if self.gt_override is not None:
            return self.gt_override
        return 1 / (self.C * math.sqrt(self.E_max))

    @property
    def eps_prime(self):
        return self.c_eps * self.eps / self.E_max

    @property
    def rounds(self):
        if self.rounds_override is not None:
            return self.rounds_override
        return max(1, math.ceil(math.log2(self.E_max / self.eps)))

    @property
    def in_regime(self):
        return self.gt * math.sqrt(self.E_max) <= 1 / self.C + 1e-12

    @property
    def mean_radius(self):
        return 2 * math.sqrt(2 * self.E_max)

    @property
    def moment_radius(self):
        return 4 * self.E_max


@dataclass(frozen=True)
class SampleBudget:
    n_states: int
    observables: int
    per_state: int
    reference: float

    @property
    def total(self):
        return self.n_states * self.per_state


def derive_config(E_max, eps, delta, n_modes, **overrides):
    """Estimator configuration and shadow budget reaching error eps with probability 1 - delta."""
    if E_max <= 0 or eps <= 0 or not 0 < delta < 1:
        raise ValueError(f'E_max, eps must be positive and delta in (0, 1): {E_max}, {eps}, {delta}')
    if eps >= E_max:
        raise ValueError(f'Target error {eps} must be below E_max {E_max}')
    if n_modes < 2:
        raise ValueError(f'At least two modes are required, got {n_modes}')
    cfg = EstimatorConfig(eps=eps, E_max=E_max, **overrides)
    n_states = math.ceil(math.log2(n_modes)) + 1
    observables = observable_count(n_modes)
    per_state = required_samples(2, observables, cfg.eps_prime, delta)
    reference = E_max ** 2 * math.log(n_modes / delta) * math.ceil(math.log2(n_modes)) / eps ** 2
    return cfg, SampleBudget(n_states, observables, per_state, reference)


def contraction_bounds(cfg, round_index):
    """Per-round (mean, moment) error bounds of the contraction argument with exact Paulis."""
    mean_bound = cfg.eps / (2 * math.sqrt(cfg.E_max)) + 2.0 ** -round_index * math.sqrt(cfg.E_max)
    moment_bound = cfg.eps / 2 + 2.0 ** -round_index * cfg.E_max
    return mean_bound, moment_bound


def clip_to_balls(gamma_pair, cfg):
    clipped = np.array(gamma_pair, dtype=float)
    clipped[:4] = np.clip(clipped[:4], -cfg.mean_radius, cfg.mean_radius)
    clipped[4:] = np.clip(clipped[4:], -cfg.moment_radius, cfg.moment_radius)
    return clipped


@dataclass
class TraceRound:
    round: int
    gamma: np.ndarray
    residual: float
    mean_err: float = None
    cov_err: float = None

    @property
    def max_err(self):
        return None if self.mean_err is None else max(self.mean_err, self.cov_err)


@dataclass
class IterationTrace:
    rounds: list = field(default_factory=list)
    diverged: bool = False
    initial_bound: float = None

    def append(self, entry):
        self.rounds.append(entry)

    @property
    def final(self):
        return self.rounds[-1]

    def errors(self):
        return [entry.max_err for entry in self.rounds]

    def rows(self):
        for entry in self.rounds:
            yield [entry.round, _fmt(entry.residual), _fmt(entry.mean_err), _fmt(entry.cov_err)]

    def write_csv(self, path):
        path = Path(path)
        with path.open('w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['round', 'residual', 'mean_err', 'cov_err'])
            writer.writerows(self.rows())
        logger.info(f'Wrote iteration trace ({len(self.rounds)} rounds) to {path}')


def _fmt(value):
    return '' if value is None else f'{value:.17g}'


def _growing(residuals):
    if len(residuals) < 3:
        return False
    a, b, c = residuals[-3:]
    return c > b > a and c > RESIDUAL_FLOOR


def extract_pair(p_tilde, pair_map, cfg, truth=None):
    """Iterate gamma_r = M^-1 (p - f(gamma_{r-1})) from gamma_{-1} = 0 for cfg.rounds rounds.

    Returns the final estimate and the trace of rounds 0..R. With `truth`, the trace carries
    the mean-part and moment-part errors.
    """
    values = p_tilde.values if hasattr(p_tilde, 'values') else np.asarray(p_tilde, dtype=float)
    truth = None if truth is None else np.asarray(truth, dtype=float)
    trace = IterationTrace()
    if truth is not None:
        # round 0 error <= ||M^-1|| (||p~ - p(gamma)|| + ||f(gamma) - f(0)||)
        norm = np.abs(pair_map.M_inv).sum(axis=1).max()
        exact_tail = tail(truth, pair_map, cfg.K)
        noise = np.abs(values - pair_map.M @ truth - exact_tail).max()
        trace.initial_bound = float(norm * (noise + np.abs(exact_tail).max()))

    gamma = invert_linear(values, pair_map)
    residuals = []
    for r in range(cfg.rounds + 1):
        correction = tail(clip_to_balls(gamma, cfg), pair_map, cfg.K)
        residual = float(np.abs(values - pair_map.M @ gamma - correction).max())
        residuals.append(residual)
        entry = TraceRound(r, gamma.copy(), residual)
        if truth is not None:
            entry.mean_err = float(np.abs(gamma[:4] - truth[:4]).max())
            entry.cov_err = float(np.abs(gamma[4:] - truth[4:]).max())
        trace.append(entry)
        logger.debug(f'Round {r}: residual {residual:.3e}' +
                     ('' if truth is None else f', errors {entry.mean_err:.3e} / {entry.cov_err:.3e}'))
        if _growing(residuals) and not trace.diverged:
            trace.diverged = True
            logger.warning(f'Residual grew for two consecutive rounds at round {r}; gt may be out of regime')
        if r < cfg.rounds:
            gamma = invert_linear(values - correction, pair_map)

    return gamma, trace
