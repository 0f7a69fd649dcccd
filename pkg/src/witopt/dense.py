"""Brute-force dense linear-algebra ground truth.

Everything here is numpy over full state vectors / matrices and is only
meant for small qubit counts; the symbolic modules are cross-checked
against it.  Qubit 1 is the most significant bit of the basis index.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from .pauli import OperatorSum, TwoQubitGate, sqrt_swap_cached

PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

SINGLET = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)

DEFAULT_VECTOR_CAP = 16   # qubits, for state vectors and pure expectations
DEFAULT_MATRIX_CAP = 12   # qubits, for full matrices / eigensolves


class DenseCapError(ValueError):
    """Requested size exceeds the configured dense cap."""


@dataclass
class StateVector:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != 2 ** self.n:
            raise ValueError("amplitude length does not match qubit count")
        if abs(np.linalg.norm(self.amplitudes) - 1.0) > 1e-12:
            raise ValueError("state vector is not normalized")

    def projector(self) -> np.ndarray:
        v = self.amplitudes
        return np.outer(v, v.conj())


@dataclass
class DensityOperator:
    n: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = 2 ** self.n
        if m.shape != (dim, dim):
            raise ValueError("matrix shape does not match qubit count")
        if np.linalg.norm(m - m.conj().T) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-12:
            raise ValueError("density matrix trace is not 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("density matrix has a negative eigenvalue")
        self.matrix = m


def pauli_word_to_matrix(letters: str) -> np.ndarray:
    return reduce(np.kron, (PAULI_MATS[c] for c in letters))


def opsum_to_matrix(A: OperatorSum, cap: int = DEFAULT_MATRIX_CAP) -> np.ndarray:
    if A.n > cap:
        raise DenseCapError(f"{A.n} qubits exceeds dense matrix cap {cap}")
    dim = 2 ** A.n
    out = np.zeros((dim, dim), dtype=complex)
    for letters, coeff in A.terms.items():
        out += complex(coeff) * pauli_word_to_matrix(letters)
    return out


def apply_pauli_word(letters: str, vec: np.ndarray) -> np.ndarray:
    """Apply a Pauli word to a state vector without building the matrix."""
    n = len(letters)
    out = vec
    for q, c in enumerate(letters):
        if c == "I":
            continue
        axis_bit = n - 1 - q  # qubit q+1 owns this bit (qubit 1 = MSB)
        idx = np.arange(out.size)
        flipped = idx ^ (1 << axis_bit)
        bit = (idx >> axis_bit) & 1
        if c == "X":
            out = out[flipped]
        elif c == "Z":
            out = np.where(bit == 1, -out, out)
        else:  # Y = i|1><0| - i|0><1| : Y|0>=i|1>, Y|1>=-i|0>
            out = out[flipped] * np.where(bit == 1, 1j, -1j)
    return out


def apply_opsum(A: OperatorSum, vec: np.ndarray) -> np.ndarray:
    out = np.zeros_like(vec)
    for letters, coeff in A.terms.items():
        out = out + complex(coeff) * apply_pauli_word(letters, vec)
    return out


def apply_gate_to_vector(vec: np.ndarray, gate: TwoQubitGate, pair: tuple[int, int], n: int) -> np.ndarray:
    qa, qb = pair
    t = vec.reshape((2,) * n)
    t = np.moveaxis(t, [qa - 1, qb - 1], [0, 1]).reshape(4, -1)
    t = (gate.matrix @ t).reshape((2, 2) + (2,) * (n - 2))
    return np.moveaxis(t, [0, 1], [qa - 1, qb - 1]).reshape(-1)


def coupling_pairs(N: int, boundary: str) -> list[tuple[int, int]]:
    """Gate pairs (2i, 2i+1); the wrap pair (2N, 1) only when periodic."""
    if boundary not in ("periodic", "open"):
        raise ValueError(f"unknown boundary {boundary!r}")
    pairs = [(2 * i, 2 * i + 1) for i in range(1, N)]
    if boundary == "periodic":
        pairs.append((2 * N, 1))
    return pairs


def build_target_state(N: int, boundary: str, cap: int = DEFAULT_VECTOR_CAP) -> StateVector:
    """N singlets on pairs (2i-1, 2i), then the sqrt-SWAP coupling layer."""
    if N < 1:
        raise ValueError("need at least one singlet")
    n = 2 * N
    if n > cap:
        raise DenseCapError(f"{n} qubits exceeds dense vector cap {cap}")
    vec = reduce(np.kron, [SINGLET] * N) if N > 1 else SINGLET.copy()
    gate = sqrt_swap_cached()
    for pair in coupling_pairs(N, boundary):
        vec = apply_gate_to_vector(vec, gate, pair, n)
    return StateVector(n, vec)


def noisy_state(N: int, p, boundary: str, cap: int = DEFAULT_MATRIX_CAP) -> DensityOperator:
    """Target state mixed with white noise: (1-p)|psi><psi| + p I / 2^{2N}."""
    p = float(p)
    if not 0 <= p <= 1:
        raise ValueError("noise weight must lie in [0, 1]")
    n = 2 * N
    if n > cap:
        raise DenseCapError(f"{n} qubits exceeds dense matrix cap {cap}")
    psi = build_target_state(N, boundary)
    dim = 2 ** n
    m = (1 - p) * psi.projector() + (p / dim) * np.eye(dim)
    return DensityOperator(n, m)


def expectation(A: OperatorSum, rho: DensityOperator) -> float:
    """tr(A rho) for Hermitian A; the residual imaginary part is checked."""
    if A.n != rho.n:
        raise ValueError("qubit count mismatch")
    if not A.is_hermitian():
        raise ValueError("operator is not Hermitian")
    val = complex(np.trace(opsum_to_matrix(A, cap=rho.n) @ rho.matrix))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary part {val.imag}")
    return val.real


def expectation_pure(A: OperatorSum, psi: StateVector) -> float:
    """<psi|A|psi> via per-word vector application (no matrices)."""
    if A.n != psi.n:
        raise ValueError("qubit count mismatch")
    if not A.is_hermitian():
        raise ValueError("operator is not Hermitian")
    val = complex(np.vdot(psi.amplitudes, apply_opsum(A, psi.amplitudes)))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary part {val.imag}")
    return val.real


def expectation_noisy(A: OperatorSum, N: int, p, boundary: str) -> float:
    """tr(A rho_p) using the pure + maximally-mixed decomposition."""
    p = float(p)
    psi = build_target_state(N, boundary)
    pure = expectation_pure(A, psi)
    ident = float(A.coeff("I" * 2 * N).re)  # tr(A)/2^n keeps only the identity term
    return (1 - p) * pure + p * ident


def max_schmidt_sq(psi: StateVector, cap: int = DEFAULT_MATRIX_CAP) -> float:
    """Largest squared Schmidt coefficient over all nontrivial bipartitions."""
    n = psi.n
    if n > cap:
        raise DenseCapError(f"{n} qubits exceeds bipartition-scan cap {cap}")
    tensor = psi.amplitudes.reshape((2,) * n)
    best = 0.0
    for mask in range(1, 2 ** (n - 1)):
        side_a = [q for q in range(n) if (mask >> q) & 1]
        side_b = [q for q in range(n) if not (mask >> q) & 1]
        mat = np.moveaxis(tensor, side_a + side_b, range(n)).reshape(2 ** len(side_a), -1)
        s = np.linalg.svd(mat, compute_uv=False)
        best = max(best, float(s[0]) ** 2)
    return best


def psd_check(A: OperatorSum, tol: float = 1e-9, cap: int = DEFAULT_MATRIX_CAP) -> tuple[bool, float]:
    """True iff the minimum eigenvalue of A is >= -tol; reports the eigenvalue."""
    if not A.is_hermitian():
        raise ValueError("operator is not Hermitian")
    m = opsum_to_matrix(A, cap=cap)
    min_eig = float(np.linalg.eigvalsh(m).min())
    return min_eig >= -tol, min_eig


def psd_check_matrix(m: np.ndarray, tol: float = 1e-9) -> tuple[bool, float]:
    min_eig = float(np.linalg.eigvalsh(m).min())
    return min_eig >= -tol, min_eig


def total_z_diagonal(n: int) -> np.ndarray:
    """Diagonal of sum_i Z_i in the computational basis."""
    idx = np.arange(2 ** n)
    diag = np.zeros(2 ** n)
    for q in range(n):
        bits = (idx >> (n - 1 - q)) & 1
        diag += 1 - 2 * bits
    return diag
