import random
from fractions import Fraction

import numpy as np
import pytest

from witopt.dense import PAULI_MATS, opsum_to_matrix, pauli_word_to_matrix
from witopt.pauli import (
    CF_ONE,
    CFrac,
    LETTERS,
    OperatorSum,
    PauliString,
    conjugate_by_gate,
    heisenberg_evolution,
    opsum_mul,
    pauli_mul,
    sqrt_swap,
    sqrt_swap_cached,
)

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def dense_of(p: PauliString) -> np.ndarray:
    return (1j ** p.phase_pow) * pauli_word_to_matrix(p.letters)


def test_single_qubit_products():
    assert pauli_mul(PauliString(0, "X"), PauliString(0, "Y")) == PauliString(1, "Z")
    assert pauli_mul(PauliString(0, "X"), PauliString(0, "X")) == PauliString(0, "I")


def test_two_qubit_product_example():
    # (X (x) Z) * (Z (x) X) = (-iY) (x) (iY) = + Y (x) Y
    out = pauli_mul(PauliString(0, "XZ"), PauliString(0, "ZX"))
    assert out == PauliString(0, "YY")
    lhs = pauli_word_to_matrix("XZ") @ pauli_word_to_matrix("ZX")
    assert np.allclose(lhs, dense_of(out))


def test_pauli_mul_exhaustive_two_qubit():
    words = [a + b for a in LETTERS for b in LETTERS]
    for wa in words:
        for wb in words:
            prod = pauli_mul(PauliString(0, wa), PauliString(0, wb))
            dense = pauli_word_to_matrix(wa) @ pauli_word_to_matrix(wb)
            assert np.allclose(dense, dense_of(prod)), (wa, wb)


def test_pauli_mul_associative_sample():
    rng = random.Random(11)
    for _ in range(200):
        a, b, c = (PauliString(rng.randrange(4), "".join(rng.choices(LETTERS, k=3)))
                   for _ in range(3))
        assert pauli_mul(pauli_mul(a, b), c) == pauli_mul(a, pauli_mul(b, c))


def test_pauli_mul_length_mismatch():
    with pytest.raises(ValueError):
        pauli_mul(PauliString(0, "X"), PauliString(0, "XX"))


def half() -> CFrac:
    return CFrac(Fraction(1, 2))


def test_projector_idempotence():
    p = OperatorSum(1, {"I": half(), "Z": half()})
    assert opsum_mul(p, p) == p


def test_opsum_mul_vs_dense():
    a = OperatorSum(1, {"I": half(), "X": half()})
    b = OperatorSum(1, {"I": half(), "Z": half()})
    prod = opsum_mul(a, b)
    # XZ = -iY, so the Y coefficient is -i/4
    assert prod.coeff("Y") == CFrac(Fraction(0), Fraction(-1, 4))
    assert np.allclose(opsum_to_matrix(prod), opsum_to_matrix(a) @ opsum_to_matrix(b))


def _random_opsum(rng, n, terms):
    d = {}
    for _ in range(terms):
        k = "".join(rng.choices(LETTERS, k=n))
        d[k] = CFrac(Fraction(rng.randrange(-4, 5), 4), Fraction(rng.randrange(-4, 5), 4))
    return OperatorSum(n, d)


def test_opsum_mul_random_vs_dense():
    rng = random.Random(7)
    for _ in range(20):
        n = rng.randrange(1, 5)
        a = _random_opsum(rng, n, 8)
        b = _random_opsum(rng, n, 8)
        lhs = opsum_to_matrix(opsum_mul(a, b))
        rhs = opsum_to_matrix(a) @ opsum_to_matrix(b)
        assert np.linalg.norm(lhs - rhs) < 1e-10


def test_heisenberg_evolution_identity_at_t0():
    g = heisenberg_evolution(1.0, 0.0)
    assert np.allclose(g.matrix, np.eye(4))


def _phase_free_close(a, b):
    ij = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    phase = a[ij] / b[ij]
    return np.allclose(a, phase * b, atol=1e-12)


def test_heisenberg_evolution_sqrt_swap_point():
    j = 0.7
    g = heisenberg_evolution(j, np.pi / (4 * j))
    assert _phase_free_close(g.matrix, sqrt_swap().matrix)
    assert _phase_free_close(g.matrix @ g.matrix, SWAP)


def test_heisenberg_evolution_swap_point():
    j = 1.3
    g = heisenberg_evolution(j, np.pi / (2 * j))
    assert _phase_free_close(g.matrix, SWAP)


def test_heisenberg_zero_coupling_rejected():
    with pytest.raises(ValueError):
        heisenberg_evolution(0.0, 1.0)


def test_conjugate_identity_invariant():
    op = OperatorSum.identity(2)
    assert conjugate_by_gate(op, sqrt_swap_cached(), (1, 2)) == op


def test_conjugate_xx_on_gate_pair_invariant():
    op = OperatorSum(4, {"IXXI": CF_ONE})
    assert conjugate_by_gate(op, sqrt_swap_cached(), (2, 3)) == op


def test_conjugate_single_x_four_terms_and_squares_to_identity():
    op = OperatorSum(2, {"XI": CF_ONE})
    res = conjugate_by_gate(op, sqrt_swap_cached(), (1, 2))
    assert res.num_terms() == 4
    assert set(res.terms) == {"XI", "IX", "YZ", "ZY"}
    assert all(abs(v.re) + abs(v.im) == Fraction(1, 2) for v in res.terms.values())
    assert opsum_mul(res, res) == OperatorSum.identity(2)


def test_conjugate_random_vs_dense():
    rng = random.Random(3)
    g = sqrt_swap_cached()
    gd = g.matrix
    for _ in range(15):
        n = rng.randrange(2, 5)
        q1, q2 = rng.sample(range(1, n + 1), 2)
        a = _random_opsum(rng, n, 6)
        res = conjugate_by_gate(a, g, (q1, q2))
        # dense conjugation on the same qubit pair
        dim = 2 ** n
        big = np.eye(dim, dtype=complex).reshape((2,) * (2 * n))
        # build the full-gate matrix by applying it column-wise
        from witopt.dense import apply_gate_to_vector

        gmat = np.zeros((dim, dim), dtype=complex)
        for col in range(dim):
            e = np.zeros(dim, dtype=complex)
            e[col] = 1.0
            gmat[:, col] = apply_gate_to_vector(e, g, (q1, q2), n)
        lhs = opsum_to_matrix(res)
        rhs = gmat @ opsum_to_matrix(a) @ gmat.conj().T
        assert np.linalg.norm(lhs - rhs) < 1e-10
        # conjugation preserves Hermiticity and trace
        assert abs(np.trace(lhs) - np.trace(opsum_to_matrix(a))) < 1e-10


def test_conjugate_index_errors():
    op = OperatorSum.identity(2)
    with pytest.raises(IndexError):
        conjugate_by_gate(op, sqrt_swap_cached(), (1, 3))
    with pytest.raises(ValueError):
        conjugate_by_gate(op, sqrt_swap_cached(), (1, 1))
