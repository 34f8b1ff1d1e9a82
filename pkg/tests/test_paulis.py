import numpy as np

from src.qcis.paulis import BASIS_ROTATIONS, PAULI_MATRICES, PAULI_PRODUCT, PREPARED_KETS, embed_label, \
    local_paulis, pauli_operator, pauli_weight, product_state


def test_pauli_products():
    assert PAULI_PRODUCT[('X', 'Y')] == (1j, 'Z')
    assert PAULI_PRODUCT[('Z', 'Y')] == (-1j, 'X')
    assert PAULI_PRODUCT[('Y', 'Y')] == (1, 'I')


def test_basis_rotations_map_eigenstates_to_zero():
    for letter, ket in (('X', PREPARED_KETS['+']), ('Y', PREPARED_KETS['+i']), ('Z', PREPARED_KETS['e'])):
        rotated = BASIS_ROTATIONS[letter] @ ket
        assert np.isclose(abs(rotated[0]), 1)


def test_prepared_states_are_eigenstates():
    plus_i = PREPARED_KETS['+i']
    assert np.allclose(PAULI_MATRICES['Y'] @ plus_i, plus_i)
    assert np.allclose(PAULI_MATRICES['Z'] @ PREPARED_KETS['g'], -PREPARED_KETS['g'])


def test_operator_ordering():
    assert np.allclose(pauli_operator('ZI'), np.diag([1, 1, -1, -1]))
    assert pauli_weight('XIZ') == 2


def test_product_state_expectations():
    rho = product_state(('+', 'g'))
    assert np.isclose(np.trace(rho @ pauli_operator('XZ')).real, -1)


def test_local_paulis():
    labels = local_paulis(3)
    assert len(labels) == 36
    assert labels[:3] == ['XII', 'YII', 'ZII']
    assert embed_label(3, {0: 'X', 2: 'Y'}) in labels
    assert all(1 <= pauli_weight(label) <= 2 for label in labels)
