"""First/second-moment representation of n-mode Gaussian states.

Quadratures are ordered (Q_1, P_1, ..., Q_n, P_n) with [Q, P] = i, so the vacuum
has cov = I/2. Ordered operator moments follow from the quantum Wick theorem with
the non-symmetrized two-point function cov + (i/2) * Omega.
"""
import logging
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from src.qcis.constants import GAMMA_SECOND_MOMENTS, QUADRATURES, SYMMETRY_TOL, PSD_TOL

logger = logging.getLogger('qcis').getChild('gaussian_core')

# One letter of an ordered operator word
Letter = namedtuple('Letter', 'mode quad')


def symplectic_form(n_modes):
    """Omega with [R_j, R_k] = i * Omega_jk in the interleaved ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def quadrature_index(letter):
    return 2 * letter.mode + QUADRATURES.index(letter.quad)


def parse_word(text):
    """'Q0 P1 Q0' -> (Letter(0, 'Q'), Letter(1, 'P'), Letter(0, 'Q')). Modes are 0-based."""
    return tuple(Letter(int(token[1:]), token[0]) for token in text.split())


class GaussianState:
    def __init__(self, mean, cov, validate=True):
        """Gaussian state of n modes given by its mean vector and its centralized,
        symmetrized covariance matrix cov_jk = tr(rho {R_j - mu_j, R_k - mu_k}) / 2.

        With validate=False the moments may be nonphysical; the iterative estimator
        evaluates moments of such formal states.
        """
        mean = np.array(mean, dtype=float)
        cov = np.array(cov, dtype=float)
        if mean.ndim != 1 or mean.size % 2:
            raise ValueError(f'Mean vector must have even length, got shape {mean.shape}')
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f'Covariance shape {cov.shape} does not match mean length {mean.size}')
        mean.flags.writeable = False
        cov.flags.writeable = False
        self.mean = mean
        self.cov = cov

        if validate:
            if not np.allclose(cov, cov.T, atol=SYMMETRY_TOL, rtol=0):
                raise ValueError('Covariance matrix is not symmetric')
            if not self.is_physical():
                raise ValueError('Covariance matrix violates the uncertainty relation cov + i/2 Omega >= 0')

    @property
    def n_modes(self):
        return self.mean.size // 2

    def is_physical(self, tol=PSD_TOL):
        eigenvalues = np.linalg.eigvalsh(self.cov + 0.5j * symplectic_form(self.n_modes))
        return bool(eigenvalues.min() >= tol)

    def second_moments(self):
        """Non-centralized symmetrized second moments sigma_jk = cov_jk + mu_j mu_k."""
        return self.cov + np.outer(self.mean, self.mean)

    def mode_energies(self):
        diag = np.diag(self.second_moments())
        return 0.5 * (diag[0::2] + diag[1::2])

    def __repr__(self):
        return f'GaussianState(n_modes={self.n_modes}, max_energy={self.mode_energies().max():.4g})'


def moment_length(n_modes):
    return 2 * n_modes ** 2 + 3 * n_modes


def _upper_indices(n_modes):
    return np.triu_indices(2 * n_modes)


def second_moment_index(n_modes, j, k):
    """Position in gamma of the second moment of quadratures j and k (either order)."""
    j, k = min(j, k), max(j, k)
    size = 2 * n_modes
    return size + j * size - j * (j - 1) // 2 + (k - j)


def pair_indices(n_modes, j, k):
    """Positions in gamma of the 14 pair entries of modes (j, k), in pair ordering."""
    if j == k:
        raise ValueError('Pair slice needs two distinct modes')
    if not (0 <= j < n_modes and 0 <= k < n_modes):
        raise ValueError(f'Pair ({j}, {k}) out of range for {n_modes} modes')
    quads = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1)
    indices = list(quads)
    for a, b in GAMMA_SECOND_MOMENTS:
        indices.append(second_moment_index(n_modes, quads[a], quads[b]))
    return np.array(indices)


class MomentVector:
    def __init__(self, n_modes, gamma):
        """gamma = (mu, sigma): the 2n means followed by the upper triangle (row-major)
        of the non-centralized second-moment matrix, 2n^2 + 3n entries in total."""
        gamma = np.array(gamma, dtype=float)
        if gamma.shape != (moment_length(n_modes),):
            raise ValueError(f'Moment vector of {n_modes} modes needs {moment_length(n_modes)} entries, '
                             f'got {gamma.shape}')
        gamma.flags.writeable = False
        self.n_modes = n_modes
        self.gamma = gamma

    @classmethod
    def from_matrices(cls, mean, second):
        n_modes = len(mean) // 2
        rows, cols = _upper_indices(n_modes)
        return cls(n_modes, np.concatenate([mean, np.asarray(second)[rows, cols]]))

    @property
    def mean(self):
        return self.gamma[:2 * self.n_modes]

    @property
    def sigma(self):
        return self.gamma[2 * self.n_modes:]

    def second_moment_matrix(self):
        size = 2 * self.n_modes
        rows, cols = _upper_indices(self.n_modes)
        second = np.zeros((size, size))
        second[rows, cols] = self.sigma
        second[cols, rows] = self.sigma
        return second

    def pair_indices(self, j, k):
        return pair_indices(self.n_modes, j, k)

    def pair_slice(self, j, k):
        return self.gamma[pair_indices(self.n_modes, j, k)]

    def to_state(self, validate=False):
        mean = self.mean
        return GaussianState(mean, self.second_moment_matrix() - np.outer(mean, mean), validate=validate)

    def energy_bounds_hold(self, max_energy):
        """|mu_j| <= sqrt(2 E) and |sigma_jk| <= 2 E."""
        return bool(np.abs(self.mean).max() <= np.sqrt(2 * max_energy) + 1e-12
                    and np.abs(self.sigma).max() <= 2 * max_energy + 1e-12)


def pair_state(gamma_pair):
    """Formal two-mode state of a 14-entry pair vector, physical or not."""
    gamma_pair = np.asarray(gamma_pair, dtype=float)
    mean = gamma_pair[:4]
    second = np.zeros((4, 4))
    for value, (a, b) in zip(gamma_pair[4:], GAMMA_SECOND_MOMENTS):
        second[a, b] = second[b, a] = value
    return GaussianState(mean, second - np.outer(mean, mean), validate=False)


@dataclass(frozen=True)
class StatePrepParams:
    """rho_f = D S rho_th S^dag D^dag with S = prod S(z_jk) (two-mode, lexicographic, last
    applied leftmost) times prod S(z_jj), and D = prod D(alpha_j)."""
    thermal: tuple
    squeezing: dict = field(default_factory=dict)
    displacement: tuple = ()

    def __post_init__(self):
        n_modes = len(self.thermal)
        if n_modes < 1:
            raise ValueError('At least one mode is required')
        if any(nbar < 0 for nbar in self.thermal):
            raise ValueError(f'Thermal occupations must be nonnegative, got {self.thermal}')
        if self.displacement and len(self.displacement) != n_modes:
            raise ValueError(f'{len(self.displacement)} displacements given for {n_modes} modes')
        for j, k in self.squeezing:
            if not 0 <= j <= k < n_modes:
                raise ValueError(f'Squeezer ({j}, {k}) must satisfy 0 <= j <= k < {n_modes}')

    @property
    def n_modes(self):
        return len(self.thermal)

    def alphas(self):
        return tuple(self.displacement) if self.displacement else (0j,) * self.n_modes

    def squeezer_order(self):
        """(j, k, z) in application order: single-mode squeezers first, then two-mode ones."""
        single = sorted((jk, z) for jk, z in self.squeezing.items() if jk[0] == jk[1])
        double = sorted((jk, z) for jk, z in self.squeezing.items() if jk[0] != jk[1])
        return [(j, k, complex(z)) for (j, k), z in single + double if z != 0]


def vacuum_params(n_modes):
    return StatePrepParams(thermal=(0.0,) * n_modes)


def random_params(n_modes, rng, thermal_scale=0.5, squeeze_scale=0.3, displacement_scale=0.8):
    """Random thermal, single/two-mode squeezing and displacement parameters."""
    thermal = tuple(float(x) for x in rng.uniform(0, thermal_scale, n_modes))
    squeezing = {}
    for j in range(n_modes):
        for k in range(j, n_modes):
            squeezing[(j, k)] = complex(rng.uniform(0, squeeze_scale) * np.exp(2j * np.pi * rng.uniform()))
    displacement = tuple(complex(rng.uniform(0, displacement_scale) * np.exp(2j * np.pi * rng.uniform()))
                         for _ in range(n_modes))
    return StatePrepParams(thermal=thermal, squeezing=squeezing, displacement=displacement)


def _interleave(n_modes):
    perm = np.empty(2 * n_modes, dtype=int)
    perm[0::2] = np.arange(n_modes)
    perm[1::2] = n_modes + np.arange(n_modes)
    return perm


def squeezer_symplectic(n_modes, j, k, z):
    """Heisenberg action S^dag R S = M R of S = exp((z* a_j a_k - z a_j^dag a_k^dag) / 2), interleaved ordering."""
    kernel = np.zeros((n_modes, n_modes), dtype=complex)
    if j == k:
        kernel[j, j] = z
    else:
        kernel[j, k] = kernel[k, j] = z / 2
    zeros = np.zeros_like(kernel)
    ladder = expm(-np.block([[zeros, kernel], [kernel.conj(), zeros]]))
    eye = np.eye(n_modes)
    # (a; a^dag) = L (Q; P), block ordered
    to_ladder = np.block([[eye, 1j * eye], [eye, -1j * eye]]) / np.sqrt(2)
    block = np.real(to_ladder.conj().T @ ladder @ to_ladder)
    perm = _interleave(n_modes)
    return block[np.ix_(perm, perm)]


def state_from_params(params):
    n_modes = params.n_modes
    cov = np.diag(np.repeat(np.asarray(params.thermal, dtype=float) + 0.5, 2))
    transform = np.eye(2 * n_modes)
    for j, k, z in params.squeezer_order():
        transform = squeezer_symplectic(n_modes, j, k, z) @ transform
    cov = transform @ cov @ transform.T
    cov = (cov + cov.T) / 2

    mean = np.zeros(2 * n_modes)
    alphas = np.asarray(params.alphas(), dtype=complex)
    mean[0::2] = np.sqrt(2) * alphas.real
    mean[1::2] = np.sqrt(2) * alphas.imag
    return GaussianState(mean, cov)


def moments_from_state(state):
    return MomentVector.from_matrices(state.mean, state.second_moments())


def marginalize(state, keep):
    keep = sorted(set(keep))
    if not keep:
        raise ValueError('Cannot marginalize onto an empty set of modes')
    if keep[0] < 0 or keep[-1] >= state.n_modes:
        raise ValueError(f'Modes {keep} out of range for a {state.n_modes}-mode state')
    quads = np.array([2 * m + q for m in keep for q in (0, 1)])
    return GaussianState(state.mean[quads], state.cov[np.ix_(quads, quads)], validate=False)


def two_point_function(state, symmetrized=False):
    """<(R_j - mu_j)(R_k - mu_k)> = cov_jk + (i/2) Omega_jk."""
    if symmetrized:
        return state.cov.astype(complex)
    return state.cov + 0.5j * symplectic_form(state.n_modes)


def ordered_moment(indices, mean, two_point, memo=None):
    """<R_i1 R_i2 ... R_ik> by contracting the first letter: <x_1 rest> = mu_1 <rest>
    + sum_m G(1, m) <rest without m>, which sums the order-preserving pairings."""
    if not indices:
        return 1.0 + 0j
    if memo is not None and indices in memo:
        return memo[indices]
    first, rest = indices[0], indices[1:]
    value = mean[first] * ordered_moment(rest, mean, two_point, memo)
    for m, other in enumerate(rest):
        if two_point[first, other] != 0:
            value += two_point[first, other] * ordered_moment(rest[:m] + rest[m + 1:], mean, two_point, memo)
    if memo is not None:
        memo[indices] = value
    return value


def wick_moment(state, word, symmetrized=False, memo=None):
    for letter in word:
        if not 0 <= letter.mode < state.n_modes or letter.quad not in QUADRATURES:
            raise ValueError(f'Letter {letter} invalid for a {state.n_modes}-mode state')
    indices = tuple(quadrature_index(letter) for letter in word)
    return complex(ordered_moment(indices, state.mean, two_point_function(state, symmetrized), memo))


def max_mode_energy(state):
    return float(state.mode_energies().max())
