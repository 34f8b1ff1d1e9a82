import math

# Fixed orderings and default numerics of the transduction pipeline.
# Convention: hbar = 1, [Q, P] = i, a = (Q + iP)/sqrt(2), vacuum variance 1/2.

QUADRATURES = ('Q', 'P')

# Qubit preparations. |e> is the computational |0> (Z = +1), |g> is |1> (Z = -1).
QUBIT_PREPARATIONS = ('g', 'e', '+', '+i')

# Expectations of single-qubit Paulis on the preparations above
QUBIT_EXPECTATIONS = {
    'g': {'I': 1, 'X': 0, 'Y': 0, 'Z': -1},
    'e': {'I': 1, 'X': 0, 'Y': 0, 'Z': 1},
    '+': {'I': 1, 'X': 1, 'Y': 0, 'Z': 0},
    '+i': {'I': 1, 'X': 0, 'Y': 1, 'Z': 0},
}

# Pair moment vector, (j, k) = (first, second) mode
GAMMA_LABELS = (
    'Q1', 'P1', 'Q2', 'P2',
    'Q1Q1', 'P1P1', 'Q2Q2', 'P2P2',
    'sym(Q1P1)', 'sym(Q2P2)',
    'Q1Q2', 'Q1P2', 'P1Q2', 'P1P2',
)

# Quadrature index pairs (0 = Q1, 1 = P1, 2 = Q2, 3 = P2) of the second moments in GAMMA_LABELS[4:]
GAMMA_SECOND_MOMENTS = (
    (0, 0), (1, 1), (2, 2), (3, 3),
    (0, 1), (2, 3),
    (0, 2), (0, 3), (1, 2), (1, 3),
)

# Pair Pauli vector: (letter on first qubit, letter on second qubit, preparation).
# 'ground' is |g>|g>, 'mixed' is |+>|+i> (standard orientation).
PAULI_SLOTS = (
    ('Y', 'I', 'ground'), ('X', 'I', 'ground'), ('I', 'Y', 'ground'), ('I', 'X', 'ground'),
    ('Z', 'I', 'ground'), ('X', 'I', 'mixed'), ('I', 'Y', 'mixed'), ('I', 'Z', 'ground'),
    ('Y', 'I', 'mixed'), ('I', 'X', 'mixed'),
    ('Y', 'Y', 'ground'), ('Y', 'X', 'ground'), ('X', 'Y', 'ground'), ('X', 'X', 'ground'),
)

ORIENTATIONS = ('standard', 'swapped')

# Qubit preparations of the mixed pair state per orientation
MIXED_PREPARATIONS = {
    'standard': ('+', '+i'),
    'swapped': ('+i', '+'),
}

# The pair vector of a swapped pair read in (k, j) order, permuted back to (j, k)
SWAP_PERMUTATION = (2, 3, 0, 1, 6, 7, 4, 5, 9, 8, 10, 12, 11, 13)

# All one- and two-qubit Paulis on a pair, as measured by the shadows
PAIR_PAULIS = tuple(a + b for a in 'IXYZ' for b in 'IXYZ' if a + b != 'II')

# Regime constant (gt * sqrt(E_max) <= 1/C) and the eps' = c_eps * eps / E_max factor
DEFAULT_C = 10.0
DEFAULT_C_EPS = 0.25

# Series order of the forward model
DEFAULT_SERIES_ORDER = 8
ORACLE_SERIES_ORDER = 10

# Median-of-means constant for random Pauli shadows
SHADOW_CONSTANT = 34

# Fock simulation
DEFAULT_TRUNCATION = 60
LEAKAGE_BUDGET = 1e-6
MAX_FULL_DIMENSION = 4096
MAX_FOCK_DIMENSION = 8000

# Tolerances
SYMMETRY_TOL = 1e-12
PSD_TOL = -1e-10
IMAG_TOL = 1e-10
EIGEN_CUTOFF = 1e-15

# Benchmark two-mode state of the convergence experiment
BENCHMARK_THERMAL = (0.3, 0.5)
BENCHMARK_SQUEEZING = {(0, 0): 0.2, (1, 1): 0.3, (0, 1): 0.4}
BENCHMARK_DISPLACEMENT = (3 * (1 - 4j) / (10 * math.sqrt(2)), (3 + 2j) / (5 * math.sqrt(2)))
BENCHMARK_GT = 0.01
