"""Flat `key = value` experiment configuration files."""
import ast
import dataclasses
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from dotenv.parser import parse_stream

from src.qcis.constants import DEFAULT_C, DEFAULT_C_EPS, DEFAULT_SERIES_ORDER, DEFAULT_TRUNCATION
from src.qcis.estimator import EstimatorConfig
from src.qcis.gaussian_core import StatePrepParams, random_params

logger = logging.getLogger('qcis').getChild('config')

SQUEEZE_KEY = re.compile(r'^squeeze_(\d+)_(\d+)$')
BOOLEANS = {'true': True, 'yes': True, 'on': True, 'false': False, 'no': False, 'off': False}


def parse_value(text):
    """Python literal (numbers, complex, tuples) where possible, booleans by name, else the bare string."""
    text = text.strip()
    if text.lower() in BOOLEANS:
        return BOOLEANS[text.lower()]
    if text.lower() == 'none':
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def read_config_file(path):
    """{key: value} of a flat config file, parsed as a dotenv file; keys may use - or _."""
    values = {}
    with Path(path).open() as handle:
        for binding in parse_stream(handle):
            if binding.error or (binding.key is not None and binding.value is None):
                raise ValueError(f'{path}:{binding.original.line}: expected "key = value", '
                                 f'got {binding.original.string.strip()!r}')
            if binding.key is not None:
                values[binding.key.replace('-', '_')] = parse_value(binding.value)
    return values


def _as_tuple(value):
    if value is None:
        return None
    return tuple(value) if isinstance(value, (tuple, list)) else (value,)


@dataclass
class ExperimentConfig:
    n_modes: int = 2
    thermal: tuple = None
    squeezing: dict = field(default_factory=dict)
    displacement: tuple = None
    state_seed: int = None
    n_trunc: int = DEFAULT_TRUNCATION
    gt: float = None
    C: float = None
    c_eps: float = DEFAULT_C_EPS
    E_max: float = None
    eps: float = 1e-3
    delta: float = 0.05
    K: int = DEFAULT_SERIES_ORDER
    rounds: int = None
    threshold: float = 1e-6
    budget: int = None
    pauli_source: str = 'fock'
    mode: str = 'pairwise-oracle'
    sampling: str = 'shadows'
    use_median: bool = False
    records: bool = False
    sweep: str = 'T'
    t_grid: tuple = (10 ** 4, 10 ** 5, 10 ** 6, 10 ** 7)
    n_grid: tuple = (2, 4, 8, 16)
    energy_grid: tuple = (1.0, 2.0, 4.0, 8.0)
    trials: int = 20
    inject: str = None
    wick_order: int = 6
    validate_trunc: int = 60
    coverage_max: int = 2048
    seed: int = 0
    threads: int = 1
    out: str = 'out'

    def __post_init__(self):
        if self.gt is not None and self.C is not None:
            raise ValueError('gt and C are mutually exclusive; give one of them')
        for name in ('eps', 'delta', 'threshold'):
            if getattr(self, name) <= 0:
                raise ValueError(f'{name} must be positive, got {getattr(self, name)}')
        if not 0 < self.delta < 1:
            raise ValueError(f'delta must lie in (0, 1), got {self.delta}')
        if self.n_modes < 1:
            raise ValueError(f'n_modes must be positive, got {self.n_modes}')
        if self.inject not in (None, 'shift', 'wick'):
            raise ValueError(f'Unknown fault injection {self.inject!r}, expected shift or wick')
        for name in ('thermal', 'displacement', 't_grid', 'n_grid', 'energy_grid'):
            setattr(self, name, _as_tuple(getattr(self, name)))

    @classmethod
    def from_mapping(cls, values):
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        squeezing = {}
        for key, value in values.items():
            match = SQUEEZE_KEY.match(key)
            if match:
                j, k = int(match.group(1)) - 1, int(match.group(2)) - 1
                squeezing[(min(j, k), max(j, k))] = complex(value)
            elif key in known:
                kwargs[key] = value
            else:
                raise ValueError(f'Unknown configuration key {key!r}')
        if squeezing:
            kwargs['squeezing'] = squeezing
        return cls(**kwargs)

    def prep_params(self):
        if self.state_seed is not None:
            return random_params(self.n_modes, np.random.default_rng(self.state_seed))
        thermal = self.thermal or (0.0,) * self.n_modes
        displacement = self.displacement or (0j,) * self.n_modes
        if len(thermal) != self.n_modes or len(displacement) != self.n_modes:
            raise ValueError(f'thermal and displacement need {self.n_modes} entries each')
        return StatePrepParams(thermal=tuple(float(x) for x in thermal), squeezing=dict(self.squeezing),
                               displacement=tuple(complex(x) for x in displacement))

    def estimator_config(self, E_max):
        return EstimatorConfig(eps=self.eps, E_max=E_max, C=self.C or DEFAULT_C, c_eps=self.c_eps, K=self.K,
                               gt_override=self.gt, rounds_override=self.rounds)

    def to_dict(self):
        """JSON-ready view; complex numbers become strings, squeezers `squeeze_j_k` keys (1-based)."""
        result = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == 'squeezing':
                for (j, k), z in sorted(value.items()):
                    result[f'squeeze_{j + 1}_{k + 1}'] = _jsonable(z)
                continue
            result[f.name] = _jsonable(value)
        return result


def _jsonable(value):
    if isinstance(value, complex):
        return str(value)
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


def load_config(path=None, overrides=None):
    values = read_config_file(path) if path else {}
    for key, value in (overrides or {}).items():
        values[key.replace('-', '_')] = parse_value(value) if isinstance(value, str) else value
    cfg = ExperimentConfig.from_mapping(values)
    logger.debug(f'Loaded configuration from {path or "defaults"} with {len(overrides or {})} overrides')
    return cfg

