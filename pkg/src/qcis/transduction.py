"""Pair transduction map: shifted Pauli bookkeeping, the linear map M and its
explicit inverse, and the series forward model p(gamma) with its tail f."""
import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from src.qcis.constants import (DEFAULT_SERIES_ORDER, MIXED_PREPARATIONS, ORIENTATIONS, PAIR_PAULIS, PAULI_SLOTS,
                                QUBIT_EXPECTATIONS, SWAP_PERMUTATION)
from src.qcis.gaussian_core import ordered_moment, pair_state, symplectic_form
from src.qcis.paulis import PAULI_PRODUCT

logger = logging.getLogger('qcis').getChild('transduction')

# H' = Q X - P Y as (quadrature, Pauli, sign)
JC_TERMS = (('Q', 'X', 1), ('P', 'Y', -1))

QUADRATURE_OFFSET = {'Q': 0, 'P': 1}


@dataclass(frozen=True)
class PauliVector:
    """The 14 (shifted) pair Pauli expectations in slot ordering, read in the frame of
    the map that produced or consumes them."""
    values: np.ndarray
    raw: np.ndarray
    shifts: np.ndarray
    couplings: tuple
    converged: bool = True
    contributions: np.ndarray = field(default=None, repr=False)

    @property
    def shifted(self):
        return self.shifts != 0


def _slot_preparations(kind, orientation='standard'):
    return ('g', 'g') if kind == 'ground' else MIXED_PREPARATIONS[orientation]


def shift_constants(couplings):
    """Offsets turning the affine Pauli relations into linear ones, per slot."""
    shifts = np.zeros(len(PAULI_SLOTS))
    for i, (first, second, kind) in enumerate(PAULI_SLOTS):
        preps = _slot_preparations(kind)
        for qubit, letter in enumerate((first, second)):
            if letter == 'I':
                continue
            if preps[qubit] == 'g' and letter == 'Z':
                shifts[i] = 1 + 2 * couplings[qubit] ** 2
            elif QUBIT_EXPECTATIONS[preps[qubit]][letter] == 1 and (first == 'I' or second == 'I'):
                shifts[i] = -1
    return shifts


def shift(raw, couplings):
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (len(PAULI_SLOTS),):
        raise ValueError(f'Expected {len(PAULI_SLOTS)} raw Pauli expectations, got shape {raw.shape}')
    if np.abs(raw).max() > 1 + 1e-9:
        logger.debug(f'Raw Pauli expectations outside [-1, 1]: max |p| = {np.abs(raw).max():.6f}')
    shifts = shift_constants(couplings)
    return PauliVector(values=raw + shifts, raw=raw, shifts=shifts, couplings=tuple(couplings))


def _standard_inverse(g1t, g2t):
    m_inv = np.zeros((14, 14))
    a1, a2 = 1 / (2 * g1t), 1 / (2 * g2t)
    b1, b2 = 1 / (2 * g1t ** 2), 1 / (2 * g2t ** 2)
    cross = 1 / (4 * g1t * g2t)
    m_inv[0, 0] = m_inv[1, 1] = a1
    m_inv[2, 2] = m_inv[3, 3] = a2
    m_inv[4, 4] = m_inv[4, 5] = b1
    m_inv[5, 5] = -b1
    m_inv[6, 6] = -b2
    m_inv[7, 6] = m_inv[7, 7] = b2
    m_inv[8, 8] = -b1
    m_inv[9, 9] = -b2
    for i in range(10, 14):
        m_inv[i, i] = cross
    return m_inv


def _swap_matrix():
    perm = np.zeros((14, 14))
    perm[np.arange(14), SWAP_PERMUTATION] = 1
    return perm


class PairMap:
    def __init__(self, g1t, g2t, orientation='standard'):
        """Linear map between the pair moment vector of modes (j, k) and the shifted Pauli
        vector. g1t, g2t are the couplings of j and k. In the swapped orientation the mixed
        preparation is (+i, +) on (j, k) and the Pauli vector is read in (k, j) order."""
        if g1t <= 0 or g2t <= 0:
            raise ValueError(f'Couplings must be positive, got ({g1t}, {g2t})')
        if orientation not in ORIENTATIONS:
            raise ValueError(f'Unknown orientation {orientation!r}')
        self.couplings = (float(g1t), float(g2t))
        self.orientation = orientation
        if orientation == 'standard':
            self.M_inv = _standard_inverse(g1t, g2t)
        else:
            self.M_inv = _swap_matrix() @ _standard_inverse(g2t, g1t)
        self.M = np.linalg.inv(self.M_inv)

    @property
    def frame_couplings(self):
        """Couplings in the order the Pauli vector is read."""
        return self.couplings if self.orientation == 'standard' else self.couplings[::-1]

    def to_frame(self, gamma_pair):
        gamma_pair = np.asarray(gamma_pair, dtype=float)
        return gamma_pair if self.orientation == 'standard' else gamma_pair[list(SWAP_PERMUTATION)]

    def __repr__(self):
        return f'PairMap(couplings={self.couplings}, orientation={self.orientation!r})'


def build_pair_map(g1t, g2t, orientation='standard'):
    return PairMap(g1t, g2t, orientation)


def block_norms(pair_map):
    """Row-sum infinity norms of the mean block A (rows 1-4) and moment block B (rows 5-14) of M^-1."""
    magnitudes = np.abs(pair_map.M_inv)
    return float(magnitudes[:4].sum(axis=1).max()), float(magnitudes[4:].sum(axis=1).max())


def invert_linear(p, pair_map):
    values = p.values if isinstance(p, PauliVector) else np.asarray(p, dtype=float)
    return pair_map.M_inv @ values


@functools.lru_cache(maxsize=None)
def heisenberg_terms(letter, prep, order):
    """Nested commutators [H', O]_k of a single-qubit Pauli O with H' = Q X - P Y,
    collapsed on the qubit preparation.

    Returns one dict per order k = 0..order mapping a mode word (tuple of 'Q'/'P')
    to its coefficient, so that <[H', O]_k> = sum_w coeff_w <w>.
    """
    terms = {((), letter): 1 + 0j}
    collapsed = []
    for k in range(order + 1):
        per_order = {}
        for (word, pauli), coeff in terms.items():
            value = coeff * QUBIT_EXPECTATIONS[prep][pauli]
            if value != 0:
                per_order[word] = per_order.get(word, 0) + value
        collapsed.append({word: c for word, c in per_order.items() if c != 0})
        if k == order:
            break
        following = {}
        for (word, pauli), coeff in terms.items():
            for quad, h_pauli, sign in JC_TERMS:
                left_phase, left = PAULI_PRODUCT[(h_pauli, pauli)]
                right_phase, right = PAULI_PRODUCT[(pauli, h_pauli)]
                key = ((quad,) + word, left)
                following[key] = following.get(key, 0) + sign * left_phase * coeff
                key = (word + (quad,), right)
                following[key] = following.get(key, 0) - sign * right_phase * coeff
        terms = {key: c for key, c in following.items() if c != 0}
    return tuple(collapsed)


@functools.lru_cache(maxsize=64)
def _compiled(slots, couplings, order):
    """Sparse (order + 1) * len(slots) by words coefficient matrix of the series for
    the given slots [(letter1, letter2, (prep1, prep2))] and the word index list."""
    c1, c2 = couplings
    word_index = {}
    rows, cols, values = [], [], []
    n_slots = len(slots)
    for s, (first, second, (prep1, prep2)) in enumerate(slots):
        terms1 = heisenberg_terms(first, prep1, order)
        terms2 = heisenberg_terms(second, prep2, order)
        for k1 in range(order + 1):
            factor1 = (1j * c1) ** k1 / math.factorial(k1)
            for k2 in range(order + 1 - k1):
                factor2 = (1j * c2) ** k2 / math.factorial(k2)
                row = (k1 + k2) * n_slots + s
                for w1, a in terms1[k1].items():
                    for w2, b in terms2[k2].items():
                        indices = tuple(QUADRATURE_OFFSET[q] for q in w1) + tuple(2 + QUADRATURE_OFFSET[q] for q in w2)
                        col = word_index.setdefault(indices, len(word_index))
                        rows.append(row)
                        cols.append(col)
                        values.append(factor1 * factor2 * a * b)
    matrix = sp.csr_matrix((values, (rows, cols)), shape=((order + 1) * n_slots, len(word_index)), dtype=complex)
    words = sorted(word_index, key=word_index.get)
    return matrix, tuple(words)


def _evaluate(slots, gamma_frame, couplings, order):
    """Per-order contributions, shape (order + 1, len(slots)), of the series on a
    (possibly nonphysical) pair moment vector given in the frame of `slots`."""
    matrix, words = _compiled(tuple(slots), tuple(float(c) for c in couplings), order)
    state = pair_state(gamma_frame)
    two_point = state.cov + 0.5j * symplectic_form(2)
    memo = {}
    moments = np.array([ordered_moment(word, state.mean, two_point, memo) for word in words])
    contributions = (matrix @ moments).reshape(order + 1, len(slots))
    residue = np.abs(contributions.imag).max()
    if residue > 1e-8 * max(1.0, np.abs(contributions.real).max()):
        logger.debug(f'Series imaginary residue {residue:.2e}')
    return contributions.real


def _series_converged(contributions):
    per_order = np.abs(contributions).max(axis=1)
    order = len(per_order) - 1
    recent = per_order[order] + per_order[order - 1]
    earlier = per_order[order - 2] + (per_order[order - 3] if order >= 3 else 0)
    return bool(recent <= earlier or recent < 1e-15)


def forward_model(gamma_pair, couplings, order=DEFAULT_SERIES_ORDER, orientation='standard'):
    """Shifted pair Pauli vector of the moments `gamma_pair` (in (j, k) order) to
    order `order` in t. `couplings` are (g_j t, g_k t)."""
    if order < 2:
        raise ValueError(f'Series order must be at least 2, got {order}')
    gamma_pair = np.asarray(gamma_pair, dtype=float)
    if gamma_pair.shape != (14,):
        raise ValueError(f'Pair moment vector must have 14 entries, got shape {gamma_pair.shape}')
    if orientation not in ORIENTATIONS:
        raise ValueError(f'Unknown orientation {orientation!r}')
    if orientation == 'swapped':
        gamma_pair = gamma_pair[list(SWAP_PERMUTATION)]
        couplings = tuple(couplings)[::-1]

    slots = tuple((first, second, _slot_preparations(kind)) for first, second, kind in PAULI_SLOTS)
    contributions = _evaluate(slots, gamma_pair, couplings, order)
    converged = _series_converged(contributions)
    if not converged:
        logger.warning(f'Series of order {order} not converging at couplings {tuple(couplings)}')
    raw = contributions.sum(axis=0)
    vector = shift(raw, couplings)
    return PauliVector(values=vector.values, raw=raw, shifts=vector.shifts, couplings=vector.couplings,
                       converged=converged, contributions=contributions)


def tail(gamma_pair, pair_map, order=DEFAULT_SERIES_ORDER):
    """f(gamma) = p(gamma) - M gamma, the part of the forward model beyond second order."""
    predicted = forward_model(gamma_pair, pair_map.couplings, order, pair_map.orientation)
    return predicted.values - pair_map.M @ np.asarray(gamma_pair, dtype=float)


def pauli_table(gamma_pair, couplings, preps, order=DEFAULT_SERIES_ORDER):
    """All 15 one- and two-qubit Pauli expectations of the pair after transduction from
    the product preparation `preps`, from the moments alone."""
    slots = tuple((label[0], label[1], tuple(preps)) for label in PAIR_PAULIS)
    contributions = _evaluate(slots, np.asarray(gamma_pair, dtype=float), couplings, order)
    if not _series_converged(contributions):
        logger.warning(f'Pauli table series of order {order} not converging for preparation {preps}')
    return dict(zip(PAIR_PAULIS, contributions.sum(axis=0)))


def slot_labels(orientation='standard'):
    """Two-letter labels, in (j, k) order, of the 14 slots read by a map of this orientation."""
    labels = []
    for first, second, kind in PAULI_SLOTS:
        labels.append((first + second if orientation == 'standard' else second + first, kind))
    return labels


def exact_pair_vector(ground, mixed, orientation='standard'):
    """Raw 14-slot vector from Pauli tables {label: value} of the ground and mixed runs,
    labels in (j, k) order."""
    tables = {'ground': ground, 'mixed': mixed}
    return np.array([tables[kind][label] for label, kind in slot_labels(orientation)])
