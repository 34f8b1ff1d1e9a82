import functools
import itertools

import numpy as np

PAULI_MATRICES = {
    'I': np.eye(2, dtype=complex),
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}

# Rotations taking the +1 eigenstate of each basis to the computational |0>
BASIS_ROTATIONS = {
    'X': np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    'Y': np.array([[1, 1], [1, -1]], dtype=complex) @ np.diag([1, -1j]) / np.sqrt(2),
    'Z': np.eye(2, dtype=complex),
}

PREPARED_KETS = {
    'e': np.array([1, 0], dtype=complex),
    'g': np.array([0, 1], dtype=complex),
    '+': np.array([1, 1], dtype=complex) / np.sqrt(2),
    '+i': np.array([1, 1j], dtype=complex) / np.sqrt(2),
}


def _product_table():
    table = {}
    for a, b in itertools.product('IXYZ', repeat=2):
        product = PAULI_MATRICES[a] @ PAULI_MATRICES[b]
        for c in 'IXYZ':
            phase = np.trace(PAULI_MATRICES[c].conj().T @ product) / 2
            if abs(phase) > 0.5:
                table[(a, b)] = (complex(np.round(phase.real) + 1j * np.round(phase.imag)), c)
                break
    return table


# (a, b) -> (phase, c) with a.b = phase * c
PAULI_PRODUCT = _product_table()


def pauli_weight(label):
    """Number of non-identity letters in a Pauli string."""
    return sum(1 for letter in label if letter != 'I')


def pauli_operator(label):
    """Dense matrix of a Pauli string, qubit 0 being the most significant factor."""
    return functools.reduce(np.kron, [PAULI_MATRICES[letter] for letter in label], np.ones((1, 1), dtype=complex))


def embed_label(n_qubits, letters):
    """Place letters {qubit: letter} into an n-qubit Pauli string."""
    label = ['I'] * n_qubits
    for qubit, letter in letters.items():
        label[qubit] = letter
    return ''.join(label)


def product_state(labels):
    """Density matrix of a product of prepared single-qubit states."""
    ket = functools.reduce(np.kron, [PREPARED_KETS[label] for label in labels], np.ones(1, dtype=complex))
    return np.outer(ket, ket.conj())


def local_paulis(n_qubits):
    """All one- and two-qubit Pauli strings on n qubits: 9 * (n choose 2) + 3 * n of them."""
    labels = []
    for q in range(n_qubits):
        for letter in 'XYZ':
            labels.append(embed_label(n_qubits, {q: letter}))
    for j, k in itertools.combinations(range(n_qubits), 2):
        for a, b in itertools.product('XYZ', repeat=2):
            labels.append(embed_label(n_qubits, {j: a, k: b}))
    return labels
