"""Truncated-Fock oracle: density matrices of Gaussian preparations, exact JC
evolution, qubit reductions, Pauli expectations and Born-rule sampling."""
import functools
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from src.qcis.constants import EIGEN_CUTOFF, IMAG_TOL, LEAKAGE_BUDGET, MAX_FOCK_DIMENSION, MAX_FULL_DIMENSION, \
    QUADRATURES
from src.qcis.paulis import BASIS_ROTATIONS, PREPARED_KETS, pauli_operator

logger = logging.getLogger('qcis').getChild('fock_engine')


class LeakageExceeded(RuntimeError):
    """Population pushed past the Fock truncation exceeds the budget."""


class FockOperator:
    def __init__(self, dims, data, leakage=0.0):
        """Dense operator on the tensor product of subsystems with dimensions `dims`
        (optical modes first, then qubits)."""
        self.dims = tuple(int(d) for d in dims)
        data = np.asarray(data, dtype=complex)
        size = int(np.prod(self.dims))
        if data.shape != (size, size):
            raise ValueError(f'Operator of shape {data.shape} does not match dims {self.dims} (size {size})')
        self.data = data
        self.leakage = leakage

    @property
    def size(self):
        return self.data.shape[0]

    def as_tensor(self):
        return self.data.reshape(self.dims + self.dims)

    def trace(self):
        return complex(np.trace(self.data))

    def is_density(self, tol=1e-8):
        if not np.allclose(self.data, self.data.conj().T, atol=tol, rtol=0):
            return False
        if abs(self.trace() - 1) > max(tol, self.leakage):
            return False
        return bool(np.linalg.eigvalsh(self.data).min() >= -tol)

    def __repr__(self):
        return f'FockOperator(dims={self.dims}, trace={self.trace().real:.10f})'


@dataclass(frozen=True)
class TransductionConfig:
    couplings: tuple
    time: float = 1.0

    def __post_init__(self):
        if self.time <= 0:
            raise ValueError(f'Interaction time must be positive, got {self.time}')
        if any(g <= 0 for g in self.couplings):
            raise ValueError(f'Couplings must be positive, got {self.couplings}')

    @classmethod
    def uniform(cls, n_modes, gt):
        return cls(couplings=(float(gt),) * n_modes, time=1.0)

    @property
    def gt(self):
        return tuple(g * self.time for g in self.couplings)


@functools.lru_cache(maxsize=None)
def ladder(n_trunc):
    return np.diag(np.sqrt(np.arange(1, n_trunc)), k=1).astype(complex)


@functools.lru_cache(maxsize=None)
def quadratures(n_trunc):
    a = ladder(n_trunc)
    q = (a + a.conj().T) / np.sqrt(2)
    p = (a - a.conj().T) / (1j * np.sqrt(2))
    return {'Q': q, 'P': p}


def _apply(tensor, op, axes):
    """Left-multiply the combined `axes` of `tensor` by the matrix `op` (dense or sparse)."""
    front = list(range(len(axes)))
    moved = np.moveaxis(tensor, axes, front)
    shape = moved.shape
    flat = moved.reshape(op.shape[1], -1)
    result = np.asarray(op @ flat).reshape(shape)
    return np.moveaxis(result, front, axes)


def _conjugate(tensor, unitary, factors, n_factors):
    """U rho U^dag on the given factors of a density tensor with n_factors ket axes."""
    tensor = _apply(tensor, unitary, list(factors))
    return _apply(tensor, unitary.conj(), [n_factors + f for f in factors])


def thermal_populations(nbar, n_trunc):
    levels = np.arange(n_trunc)
    if nbar == 0:
        return (levels == 0).astype(float)
    return nbar ** levels / (nbar + 1) ** (levels + 1)


def squeeze_unitary(n_trunc, z):
    a = ladder(n_trunc)
    return expm((np.conj(z) * a @ a - z * a.conj().T @ a.conj().T) / 2)


def displace_unitary(n_trunc, alpha):
    a = ladder(n_trunc)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def two_mode_squeeze_unitary(n_trunc, z):
    """exp((z* a_j a_k - z a_j^dag a_k^dag) / 2) as a sparse (N^2, N^2) matrix.

    The generator conserves n_j - n_k, so it is exponentiated sector by sector.
    """
    rows, cols, values = [], [], []
    for shift in range(-(n_trunc - 1), n_trunc):
        length = n_trunc - abs(shift)
        first = np.arange(length) + max(shift, 0)
        second = np.arange(length) + max(-shift, 0)
        # raising a_j^dag a_k^dag inside the sector
        raising = np.diag(np.sqrt((first[:-1] + 1) * (second[:-1] + 1)), k=-1)
        block = expm((np.conj(z) * raising.T - z * raising) / 2)
        flat = first * n_trunc + second
        r, c = np.nonzero(np.abs(block) > 0)
        rows.append(flat[r])
        cols.append(flat[c])
        values.append(block[r, c])
    size = n_trunc ** 2
    return sp.csr_matrix((np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))


def mode_populations(tensor, n_modes):
    """Per-mode Fock populations of a density tensor (n_modes ket axes, n_modes bra axes)."""
    size = int(np.prod(tensor.shape[:n_modes]))
    diagonal = np.real(np.diagonal(tensor.reshape(size, size))).reshape(tensor.shape[:n_modes])
    return [diagonal.sum(axis=tuple(a for a in range(n_modes) if a != m)) for m in range(n_modes)]


def build_state(params, n_trunc, leakage_budget=LEAKAGE_BUDGET):
    """rho_f of the preparation in a Fock space truncated at n_trunc levels per mode."""
    if n_trunc < 2:
        raise ValueError(f'Truncation must be at least 2, got {n_trunc}')
    n_modes = params.n_modes
    if n_trunc ** n_modes > MAX_FOCK_DIMENSION:
        raise ValueError(f'{n_modes} modes at truncation {n_trunc} exceed the dense simulation limit')

    populations = [thermal_populations(nbar, n_trunc) for nbar in params.thermal]
    diagonal = functools.reduce(np.multiply.outer, populations)
    thermal_deficit = 1 - float(diagonal.sum())
    size = n_trunc ** n_modes
    tensor = np.diag(diagonal.reshape(size).astype(complex)).reshape((n_trunc,) * (2 * n_modes))

    for j, k, z in params.squeezer_order():
        if j == k:
            tensor = _conjugate(tensor, squeeze_unitary(n_trunc, z), [j], n_modes)
        else:
            tensor = _conjugate(tensor, two_mode_squeeze_unitary(n_trunc, z), [j, k], n_modes)
    for m, alpha in enumerate(params.alphas()):
        if alpha != 0:
            tensor = _conjugate(tensor, displace_unitary(n_trunc, alpha), [m], n_modes)

    top = sum(float(pop[-1]) for pop in mode_populations(tensor, n_modes))
    leakage = thermal_deficit + top
    logger.debug(f'Built {n_modes}-mode state at truncation {n_trunc}: thermal deficit {thermal_deficit:.3e}, '
                 f'top-level population {top:.3e}')
    if leakage > leakage_budget:
        raise LeakageExceeded(f'Truncation leakage {leakage:.3e} exceeds budget {leakage_budget:.1e} '
                              f'at truncation {n_trunc}; increase n_trunc')
    return FockOperator((n_trunc,) * n_modes, tensor.reshape(size, size), leakage=leakage)


@functools.lru_cache(maxsize=64)
def pair_unitary(n_trunc, gt):
    """exp(-i gt (Q X - P Y)) on mode (x) qubit, mode the most significant factor."""
    quads = quadratures(n_trunc)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    hamiltonian = np.kron(quads['Q'], x) - np.kron(quads['P'], y)
    return expm(-1j * gt * hamiltonian)


def _check_labels(rho_f, qubit_init, cfg):
    n_modes = len(rho_f.dims)
    if len(qubit_init) != n_modes:
        raise ValueError(f'{len(qubit_init)} qubit preparations given for {n_modes} modes')
    if len(cfg.couplings) != n_modes:
        raise ValueError(f'{len(cfg.couplings)} couplings given for {n_modes} modes')
    unknown = [label for label in qubit_init if label not in PREPARED_KETS]
    if unknown:
        raise ValueError(f'Unknown qubit preparations {unknown}')
    return n_modes


def jc_evolve(rho_f, qubit_init, cfg):
    """Full mode (x) qubit state after the product of pair JC unitaries.

    The joint space is capped at MAX_FULL_DIMENSION, which two modes at truncation 60 already
    exceed; there transduce() applies each pair_unitary to the modes without forming the joint state.
    """
    n_modes = _check_labels(rho_f, qubit_init, cfg)
    n_trunc = rho_f.dims[0]
    dims = rho_f.dims + (2,) * n_modes
    size = int(np.prod(dims))
    if size > MAX_FULL_DIMENSION:
        raise ValueError(f'Joint dimension {size} exceeds {MAX_FULL_DIMENSION}; use transduce instead')

    ket = functools.reduce(np.kron, [PREPARED_KETS[label] for label in qubit_init])
    data = np.kron(rho_f.data, np.outer(ket, ket.conj()))
    tensor = data.reshape(dims + dims)
    n_factors = 2 * n_modes
    for j, gt in enumerate(cfg.gt):
        tensor = _conjugate(tensor, pair_unitary(n_trunc, gt), [j, n_modes + j], n_factors)
    return FockOperator(dims, tensor.reshape(size, size), leakage=rho_f.leakage)


def partial_trace(op, keep):
    """Reduce an operator onto the factors in `keep` (kept in ascending order)."""
    keep = sorted(set(keep))
    n_factors = len(op.dims)
    if not keep or keep[0] < 0 or keep[-1] >= n_factors:
        raise ValueError(f'Cannot keep factors {keep} of an operator with {n_factors} factors')
    traced = [f for f in range(n_factors) if f not in keep]
    tensor = op.as_tensor()
    order = keep + traced + [n_factors + f for f in keep] + [n_factors + f for f in traced]
    kept_size = int(np.prod([op.dims[f] for f in keep]))
    traced_size = int(np.prod([op.dims[f] for f in traced])) if traced else 1
    reduced = np.einsum('aibi->ab', tensor.transpose(order).reshape(kept_size, traced_size, kept_size, traced_size))
    return FockOperator([op.dims[f] for f in keep], reduced, leakage=op.leakage)


def qubit_reduced(rho):
    """Trace out the optical modes of a mode (x) qubit operator."""
    n_qubits = len(rho.dims) // 2
    n_factors = len(rho.dims)
    return partial_trace(rho, range(n_factors - n_qubits, n_factors))


def transduce(rho_f, qubit_init, cfg):
    """Qubit-reduced state after JC transduction, without forming the joint state.

    Each pair unitary acting on a qubit ket gives mode operators K_s; the reduced state is
    rho_q[s, s'] = tr(rho_f (x)_j K_{s'_j}^dag K_{s_j}), contracted one mode at a time.
    """
    n_modes = _check_labels(rho_f, qubit_init, cfg)
    n_trunc = rho_f.dims[0]
    tensor = rho_f.as_tensor()
    for j, (label, gt) in enumerate(zip(qubit_init, cfg.gt)):
        unitary = pair_unitary(n_trunc, gt).reshape(n_trunc, 2, n_trunc, 2)
        kraus = np.einsum('aybx,x->yab', unitary, PREPARED_KETS[label])
        # weights[s, s', row, col] = (K_{s'}^dag K_s)[row, col]
        weights = np.einsum('tmc,smb->stcb', kraus.conj(), kraus)
        remaining = n_modes - j
        tensor = np.tensordot(tensor, weights, axes=([0, remaining], [3, 2]))
    order = [2 * j for j in range(n_modes)] + [2 * j + 1 for j in range(n_modes)]
    size = 2 ** n_modes
    reduced = tensor.transpose(order).reshape(size, size)
    return FockOperator((2,) * n_modes, reduced, leakage=rho_f.leakage)


def pauli_expectation(rho_q, label):
    n_qubits = len(rho_q.dims)
    if len(label) != n_qubits:
        raise ValueError(f'Pauli string {label!r} does not match {n_qubits} qubits')
    value = np.trace(pauli_operator(label) @ rho_q.data)
    if abs(value.imag) > IMAG_TOL:
        logger.warning(f'Imaginary residue {value.imag:.2e} on <{label}>')
    return float(value.real)


def basis_probabilities(rho_q, bases):
    """Outcome distribution after rotating each qubit into its measurement basis."""
    n_qubits = len(rho_q.dims)
    if len(bases) != n_qubits:
        raise ValueError(f'{len(bases)} bases given for {n_qubits} qubits')
    rotation = functools.reduce(np.kron, [BASIS_ROTATIONS[b] for b in bases])
    probabilities = np.real(np.diag(rotation @ rho_q.data @ rotation.conj().T))
    probabilities = np.clip(probabilities, 0, None)
    return probabilities / probabilities.sum()


@functools.lru_cache(maxsize=None)
def outcome_signs(n_qubits):
    """(2^n, n) table of +-1 outcomes per computational index; bit 0 is the +1 outcome."""
    indices = np.arange(2 ** n_qubits)[:, None]
    bits = (indices >> np.arange(n_qubits - 1, -1, -1)[None, :]) & 1
    signs = 1 - 2 * bits
    signs.flags.writeable = False
    return signs


def sample_in_bases(rho_q, bases, rng, size=None, probabilities=None):
    """+-1 outcomes of measuring qubit i of rho_q in bases[i]: one vector, or a (size, n) array.

    `probabilities` is the precomputed basis_probabilities(rho_q, bases), when known.
    """
    n_qubits = len(rho_q.dims)
    if probabilities is None:
        probabilities = basis_probabilities(rho_q, bases)
    indices = rng.choice(2 ** n_qubits, size=size, p=probabilities)
    return outcome_signs(n_qubits)[indices]


class BornSampler:
    def __init__(self, rho_q, logger=None):
        """Measurement source over a fixed qubit state, caching the outcome
        distribution of every basis setting it has been asked for."""
        self.rho_q = rho_q
        self.n_qubits = len(rho_q.dims)
        self.logger = logger or logging.getLogger('qcis')
        self._probabilities = {}

    def probabilities(self, bases):
        if bases not in self._probabilities:
            self._probabilities[bases] = basis_probabilities(self.rho_q, bases)
        return self._probabilities[bases]

    def __call__(self, bases, rng):
        return sample_in_bases(self.rho_q, bases, rng, probabilities=self.probabilities(bases))

    def sample_batch(self, bases, size, rng):
        return sample_in_bases(self.rho_q, bases, rng, size, self.probabilities(bases))


def _quadrature_sparse(n_modes, n_trunc, letter):
    quad = sp.csr_matrix(quadratures(n_trunc)[letter.quad])
    eye = sp.identity(n_trunc, format='csr')
    factors = [quad if m == letter.mode else eye for m in range(n_modes)]
    return functools.reduce(lambda left, right: sp.kron(left, right, format='csr'), factors)


def fock_moment(rho_f, word):
    """tr(rho_f R_1 R_2 ... R_k) for an ordered word of quadrature letters."""
    return fock_moments(rho_f, [word])[tuple(word)]


def spectral_block(rho_f, cutoff=EIGEN_CUTOFF):
    """Eigenvalues above `cutoff` of rho_f and the matching eigenvector columns."""
    hermitian = (rho_f.data + rho_f.data.conj().T) / 2
    eigenvalues, vectors = np.linalg.eigh(hermitian)
    kept = eigenvalues > cutoff
    logger.debug(f'Kept {int(kept.sum())} of {eigenvalues.size} eigenvectors above {cutoff:.0e}')
    return eigenvalues[kept], vectors[:, kept]


def fock_moments(rho_f, words):
    """Ordered moments of many words, sharing the products of common suffixes.

    rho_f = sum_i w_i |v_i><v_i| is truncated to eigenvalues above EIGEN_CUTOFF, and each
    word suffix is applied to the (dim, rank) block of kept eigenvectors.
    """
    n_modes = len(rho_f.dims)
    n_trunc = rho_f.dims[0]
    for word in words:
        for letter in word:
            if not 0 <= letter.mode < n_modes or letter.quad not in QUADRATURES:
                raise ValueError(f'Letter {letter} invalid for a {n_modes}-mode state')
    operators = {}
    trie = {}
    for word in words:
        node = trie
        for letter in reversed(tuple(word)):
            node = node.setdefault(letter, {})
        node[None] = tuple(word)

    weights, vectors = spectral_block(rho_f)
    bra = vectors.conj() * weights
    results = {}

    def visit(node, block):
        if None in node:
            results[node[None]] = complex(np.sum(bra * block))
        for letter, child in node.items():
            if letter is None:
                continue
            if letter not in operators:
                operators[letter] = _quadrature_sparse(n_modes, n_trunc, letter)
            visit(child, operators[letter] @ block)

    visit(trie, vectors)
    return results
