import numpy as np
import pytest

from witopt.dense import (
    DenseCapError,
    SINGLET,
    StateVector,
    apply_gate_to_vector,
    build_target_state,
    coupling_pairs,
    expectation,
    expectation_pure,
    max_schmidt_sq,
    noisy_state,
    opsum_to_matrix,
    psd_check,
    psd_check_matrix,
    total_z_diagonal,
)
from witopt.pauli import CF_ONE, OperatorSum, sqrt_swap_cached
from witopt.stabilizers import TermMask, build_stabilizers, expand_term, projector
from witopt.witness import canonical_witness, p_max


def test_singlet_is_target_for_single_pair_open():
    psi = build_target_state(1, "open")
    assert np.allclose(psi.amplitudes, SINGLET)


def test_target_state_cap():
    with pytest.raises(DenseCapError):
        build_target_state(9, "open", cap=16)


@pytest.mark.parametrize("boundary", ["open", "periodic"])
@pytest.mark.parametrize("N", [2, 3])
def test_magnetization_sector(N, boundary):
    psi = build_target_state(N, boundary)
    diag = total_z_diagonal(2 * N)
    amps = psi.amplitudes
    assert abs(np.vdot(amps, diag * amps)) < 1e-12
    assert abs(np.vdot(amps, diag * diag * amps)) < 1e-12  # zero variance


@pytest.mark.parametrize("N", [2, 3])
def test_coupling_layer_commutes_with_total_z(N):
    n = 2 * N
    dim = 2 ** n
    gate = sqrt_swap_cached()
    u = np.eye(dim, dtype=complex)
    cols = np.eye(dim, dtype=complex)
    for pair in coupling_pairs(N, "periodic"):
        u = np.column_stack([
            apply_gate_to_vector(u[:, c], gate, pair, n) for c in range(dim)
        ])
    z = np.diag(total_z_diagonal(n))
    assert np.linalg.norm(u @ z - z @ u) < 1e-10


def test_stabilizers_fix_target_n2_periodic():
    psi = build_target_state(2, "periodic")
    stab = build_stabilizers(2, "periodic")
    for s in stab.all():
        assert abs(expectation_pure(s, psi) - 1.0) < 1e-12


def test_noisy_state_limits():
    pure = noisy_state(2, 0, "open")
    psi = build_target_state(2, "open")
    assert np.allclose(pure.matrix, psi.projector())
    mixed = noisy_state(2, 1, "open")
    assert np.allclose(mixed.matrix, np.eye(16) / 16)
    with pytest.raises(ValueError):
        noisy_state(2, 1.5, "open")


def test_noisy_state_half_eigenvalues_n2():
    rho = noisy_state(2, 0.5, "open")
    eig = np.sort(np.linalg.eigvalsh(rho.matrix))
    assert np.allclose(eig[:-1], 1 / 32)
    assert abs(eig[-1] - (0.5 + 1 / 32)) < 1e-12


def test_expectation_identity_and_hermiticity_guard():
    rho = noisy_state(2, 0.3, "open")
    assert abs(expectation(OperatorSum.identity(4), rho) - 1.0) < 1e-12
    nonherm = OperatorSum(4, {"XIII": CF_ONE.times_i_pow(1)})
    with pytest.raises(ValueError):
        expectation(nonherm, rho)


def test_xz_witness_expectation_zero_at_pmax():
    w = canonical_witness("xz", 3, "open")
    pm = p_max(w)
    rho = noisy_state(3, pm, "open")
    val = expectation(w.to_operator(), rho)
    assert abs(val) < 1e-10


def test_max_schmidt_product_and_bell():
    prod = StateVector(2, np.array([1, 0, 0, 0], dtype=complex))
    assert abs(max_schmidt_sq(prod) - 1.0) < 1e-12
    bell = StateVector(2, np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2))
    assert abs(max_schmidt_sq(bell) - 0.5) < 1e-12


@pytest.mark.parametrize("N", [2, 3])
def test_max_schmidt_open_chain_five_eighths(N):
    psi = build_target_state(N, "open")
    assert abs(max_schmidt_sq(psi) - 0.625) < 1e-10


def test_psd_identity_minus_projector():
    stab = build_stabilizers(2, "open")
    p = projector(stab.xx[0])
    ok, mineig = psd_check(OperatorSum.identity(4) - p, tol=1e-9)
    assert ok and mineig > -1e-9


def test_psd_product_bound_inequality_n3():
    # product of k projectors dominates their sum minus (k-1) I
    N = 3
    masks = [TermMask(N, 1 << i, 0, "periodic") for i in range(3)]
    prod = expand_term(TermMask(N, 0b111, 0, "periodic"))
    acc = prod
    for t in masks:
        acc = acc - expand_term(t)
    from fractions import Fraction

    acc = acc + OperatorSum.identity(2 * N).scale(Fraction(2))
    ok, mineig = psd_check(acc, tol=1e-9)
    assert ok, mineig


def test_psd_check_matrix_negative():
    ok, mineig = psd_check_matrix(np.diag([1.0, -0.5]))
    assert not ok and abs(mineig + 0.5) < 1e-12
