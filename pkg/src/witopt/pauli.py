"""Exact symbolic algebra for tensor products of Pauli operators.

Coefficients are complex numbers with rational real/imaginary parts
(:class:`CFrac`), so that all stabilizer and witness arithmetic downstream
stays exact.  Dense numpy conversions live in :mod:`witopt.dense`.

Conventions: qubits are 1-based; a Pauli word is a string over ``IXYZ``
with one letter per qubit; phases are powers of ``i`` tracked mod 4.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import cos, sin

import numpy as np

LETTERS = "IXYZ"

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class CFrac:
    """Complex number with exact rational real and imaginary parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __add__(self, other: "CFrac") -> "CFrac":
        return CFrac(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "CFrac") -> "CFrac":
        return CFrac(self.re - other.re, self.im - other.im)

    def __mul__(self, other: "CFrac") -> "CFrac":
        return CFrac(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def __neg__(self) -> "CFrac":
        return CFrac(-self.re, -self.im)

    def conjugate(self) -> "CFrac":
        return CFrac(self.re, -self.im)

    def scale(self, f: Fraction) -> "CFrac":
        return CFrac(self.re * f, self.im * f)

    def times_i_pow(self, k: int) -> "CFrac":
        k %= 4
        if k == 0:
            return self
        if k == 1:
            return CFrac(-self.im, self.re)
        if k == 2:
            return CFrac(-self.re, -self.im)
        return CFrac(self.im, -self.re)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        return f"({self.re}{'+' if self.im >= 0 else ''}{self.im}i)"


CF_ZERO = CFrac()
CF_ONE = CFrac(Fraction(1))


def cfrac_from_complex(z: complex, tol: float = 1e-12, max_den: int = 1 << 24) -> CFrac:
    """Snap a float complex to exact rational parts; raises if not close."""
    re = Fraction(z.real).limit_denominator(max_den)
    im = Fraction(z.imag).limit_denominator(max_den)
    if abs(float(re) - z.real) > tol or abs(float(im) - z.imag) > tol:
        raise ValueError(f"coefficient {z} is not close to a small rational")
    return CFrac(re, im)


@dataclass(frozen=True)
class PauliString:
    """A signed Pauli word: ``i**phase_pow * letters``."""

    phase_pow: int  # exponent of i, mod 4
    letters: str

    def __post_init__(self):
        object.__setattr__(self, "phase_pow", self.phase_pow % 4)
        if any(c not in LETTERS for c in self.letters):
            raise ValueError(f"bad Pauli letters {self.letters!r}")

    @property
    def n(self) -> int:
        return len(self.letters)

    def phase(self) -> complex:
        return 1j ** self.phase_pow

    def __str__(self) -> str:
        sign = ["+", "+i", "-", "-i"][self.phase_pow]
        return sign + self.letters


# single-qubit products: (a, b) -> (letter, i-power)
_MUL1 = {
    ("I", "I"): ("I", 0), ("I", "X"): ("X", 0), ("I", "Y"): ("Y", 0), ("I", "Z"): ("Z", 0),
    ("X", "I"): ("X", 0), ("X", "X"): ("I", 0), ("X", "Y"): ("Z", 1), ("X", "Z"): ("Y", 3),
    ("Y", "I"): ("Y", 0), ("Y", "X"): ("Z", 3), ("Y", "Y"): ("I", 0), ("Y", "Z"): ("X", 1),
    ("Z", "I"): ("Z", 0), ("Z", "X"): ("Y", 1), ("Z", "Y"): ("X", 3), ("Z", "Z"): ("I", 0),
}


def pauli_mul(a: PauliString, b: PauliString) -> PauliString:
    """Product of two Pauli words with exact phase accumulation."""
    if a.n != b.n:
        raise ValueError(f"length mismatch: {a.n} vs {b.n}")
    phase = a.phase_pow + b.phase_pow
    out = []
    for la, lb in zip(a.letters, b.letters):
        lc, k = _MUL1[(la, lb)]
        out.append(lc)
        phase += k
    return PauliString(phase % 4, "".join(out))


def mul_letters(a: str, b: str) -> tuple[str, int]:
    """Letter-wise product, returning (letters, i-power)."""
    phase = 0
    out = []
    for la, lb in zip(a, b):
        lc, k = _MUL1[(la, lb)]
        out.append(lc)
        phase += k
    return "".join(out), phase % 4


class OperatorSum:
    """Finite linear combination of Pauli words with exact coefficients.

    Terms are keyed by phaseless letter strings; phases live in the
    coefficients.  Instances are treated as immutable values.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: dict[str, CFrac] | None = None):
        self.n = n
        self.terms: dict[str, CFrac] = {}
        if terms:
            for k, v in terms.items():
                if len(k) != n:
                    raise ValueError(f"term {k!r} has wrong length for n={n}")
                if not v.is_zero():
                    self.terms[k] = v

    @classmethod
    def identity(cls, n: int) -> "OperatorSum":
        return cls(n, {"I" * n: CF_ONE})

    @classmethod
    def zero(cls, n: int) -> "OperatorSum":
        return cls(n, {})

    @classmethod
    def from_pauli(cls, p: PauliString, coeff: CFrac = CF_ONE) -> "OperatorSum":
        return cls(p.n, {p.letters: coeff.times_i_pow(p.phase_pow)})

    def coeff(self, letters: str) -> CFrac:
        return self.terms.get(letters, CF_ZERO)

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        out = dict(self.terms)
        for k, v in other.terms.items():
            s = out.get(k, CF_ZERO) + v
            if s.is_zero():
                out.pop(k, None)
            else:
                out[k] = s
        return OperatorSum(self.n, out)

    def __sub__(self, other: "OperatorSum") -> "OperatorSum":
        return self + other.scale(Fraction(-1))

    def scale(self, f: Fraction) -> "OperatorSum":
        if f == 0:
            return OperatorSum.zero(self.n)
        return OperatorSum(self.n, {k: v.scale(f) for k, v in self.terms.items()})

    def scale_cfrac(self, c: CFrac) -> "OperatorSum":
        if c.is_zero():
            return OperatorSum.zero(self.n)
        return OperatorSum(self.n, {k: v * c for k, v in self.terms.items()})

    def __matmul__(self, other: "OperatorSum") -> "OperatorSum":
        return opsum_mul(self, other)

    def dagger(self) -> "OperatorSum":
        return OperatorSum(self.n, {k: v.conjugate() for k, v in self.terms.items()})

    def is_hermitian(self) -> bool:
        return all(v.im == 0 for v in self.terms.values())

    def num_terms(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, OperatorSum) and self.n == other.n and self.terms == other.terms

    def __repr__(self) -> str:
        parts = [f"{v}*{k}" for k, v in sorted(self.terms.items())]
        return f"OperatorSum(n={self.n}, {' + '.join(parts) or '0'})"


def opsum_mul(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    """Distribute the Pauli product over all term pairs, merging coefficients."""
    if a.n != b.n:
        raise ValueError("dimension mismatch")
    out: dict[str, CFrac] = {}
    for ka, va in a.terms.items():
        for kb, vb in b.terms.items():
            kc, ph = mul_letters(ka, kb)
            c = (va * vb).times_i_pow(ph)
            s = out.get(kc, CF_ZERO) + c
            if s.is_zero():
                out.pop(kc, None)
            else:
                out[kc] = s
    return OperatorSum(a.n, out)


def commutator_is_zero(a: OperatorSum, b: OperatorSum) -> bool:
    return opsum_mul(a, b) == opsum_mul(b, a)


# ---------------------------------------------------------------------------
# two-qubit gates


class TwoQubitGate:
    """A 4x4 unitary, optionally with exact rational entries.

    The exact form enables exact Heisenberg-picture conjugation; the float
    form is checked unitary to 1e-12 at construction.
    """

    def __init__(self, matrix: np.ndarray, exact: list[list[CFrac]] | None = None):
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError("gate must be 4x4")
        if np.linalg.norm(m @ m.conj().T - np.eye(4)) > 1e-12:
            raise ValueError("gate is not unitary within 1e-12")
        self.matrix = m
        self.exact = exact

    def __repr__(self):
        return f"TwoQubitGate(exact={self.exact is not None})"


def heisenberg_evolution(J: float, t: float) -> TwoQubitGate:
    """Time evolution of the two-qubit exchange coupling (J/2)(XX+YY+ZZ).

    Closed form, basis |00>,|01>,|10>,|11>:
    diag corners exp(-iJt/2); middle block rotates |01>,|10> with
    cos(Jt) e^{iJt/2} on the diagonal and -i sin(Jt) e^{iJt/2} off it.
    """
    if J == 0:
        raise ValueError("coupling strength must be nonzero")
    a = np.exp(-1j * J * t / 2)
    c = cos(J * t) * np.exp(1j * J * t / 2)
    s = -1j * sin(J * t) * np.exp(1j * J * t / 2)
    m = np.array(
        [[a, 0, 0, 0], [0, c, s, 0], [0, s, c, 0], [0, 0, 0, a]], dtype=complex
    )
    return TwoQubitGate(m)


def sqrt_swap() -> TwoQubitGate:
    """The square root of SWAP with exact entries (global phase stripped).

    Equals heisenberg_evolution(J, pi/(4J)) up to the phase e^{-i pi/8}.
    """
    h = HALF
    p = CFrac(h, h)     # (1+i)/2
    q = CFrac(h, -h)    # (1-i)/2
    z = CF_ZERO
    o = CF_ONE
    exact = [
        [o, z, z, z],
        [z, p, q, z],
        [z, q, p, z],
        [z, z, z, o],
    ]
    m = np.array([[complex(x) for x in row] for row in exact])
    return TwoQubitGate(m, exact=exact)


_PAULI_2x2_EXACT = {
    "I": [[CF_ONE, CF_ZERO], [CF_ZERO, CF_ONE]],
    "X": [[CF_ZERO, CF_ONE], [CF_ONE, CF_ZERO]],
    "Y": [[CF_ZERO, CFrac(Fraction(0), Fraction(-1))], [CFrac(Fraction(0), Fraction(1)), CF_ZERO]],
    "Z": [[CF_ONE, CF_ZERO], [CF_ZERO, CFrac(Fraction(-1))]],
}


def _exact_kron2(a, b):
    out = [[CF_ZERO] * 4 for _ in range(4)]
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l]
    return out


def _exact_mm(a, b):
    out = [[CF_ZERO] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(4):
            s = CF_ZERO
            for k in range(4):
                s = s + a[i][k] * b[k][j]
            out[i][j] = s
    return out


def _exact_dagger(a):
    return [[a[j][i].conjugate() for j in range(4)] for i in range(4)]


def _conjugation_table_exact(exact) -> dict[str, list[tuple[str, CFrac]]]:
    """For each 2-qubit Pauli pair ab, expand g(a (x) b)g^dag in the Pauli basis."""
    gd = _exact_dagger(exact)
    table: dict[str, list[tuple[str, CFrac]]] = {}
    paulis = {
        a + b: _exact_kron2(_PAULI_2x2_EXACT[a], _PAULI_2x2_EXACT[b])
        for a in LETTERS
        for b in LETTERS
    }
    quarter = Fraction(1, 4)
    for key, mat in paulis.items():
        conj = _exact_mm(_exact_mm(exact, mat), gd)
        entries = []
        for key2, basis in paulis.items():
            # tr(basis^dag . conj) / 4; Paulis are Hermitian
            s = CF_ZERO
            for i in range(4):
                for k in range(4):
                    s = s + basis[k][i].conjugate() * conj[k][i]
            c = s.scale(quarter)
            if not c.is_zero():
                entries.append((key2, c))
        table[key] = entries
    return table


def _conjugation_table(gate: TwoQubitGate) -> dict[str, list[tuple[str, CFrac]]]:
    cached = getattr(gate, "_conj_table", None)
    if cached is not None:
        return cached
    if gate.exact is not None:
        table = _conjugation_table_exact(gate.exact)
    else:
        # float path: project onto the Pauli basis and snap to rationals,
        # dropping dust below 1e-12
        from .dense import PAULI_MATS

        g = gate.matrix
        table = {}
        for a in LETTERS:
            for b in LETTERS:
                mat = np.kron(PAULI_MATS[a], PAULI_MATS[b])
                conj = g @ mat @ g.conj().T
                entries = []
                for a2 in LETTERS:
                    for b2 in LETTERS:
                        basis = np.kron(PAULI_MATS[a2], PAULI_MATS[b2])
                        c = np.trace(basis.conj().T @ conj) / 4
                        if abs(c) > 1e-12:
                            entries.append((a2 + b2, cfrac_from_complex(complex(c))))
                table[a + b] = entries
    gate._conj_table = table
    return table


@lru_cache(maxsize=1)
def sqrt_swap_cached() -> TwoQubitGate:
    return sqrt_swap()


def conjugate_by_gate(A: OperatorSum, gate: TwoQubitGate, pair: tuple[int, int]) -> OperatorSum:
    """Return g A g^dag for a two-qubit gate acting on the given qubit pair.

    Qubits are 1-based; untouched qubits pass through.
    """
    q1, q2 = pair
    if q1 == q2:
        raise ValueError("qubit pair must be distinct")
    if not (1 <= q1 <= A.n and 1 <= q2 <= A.n):
        raise IndexError(f"qubit pair {pair} out of range for n={A.n}")
    table = _conjugation_table(gate)
    out: dict[str, CFrac] = {}
    for letters, coeff in A.terms.items():
        key = letters[q1 - 1] + letters[q2 - 1]
        for key2, c in table[key]:
            chars = list(letters)
            chars[q1 - 1] = key2[0]
            chars[q2 - 1] = key2[1]
            k2 = "".join(chars)
            s = out.get(k2, CF_ZERO) + coeff * c
            if s.is_zero():
                out.pop(k2, None)
            else:
                out[k2] = s
    return OperatorSum(A.n, out)
