"""Generalized stabilizers of the coupled-singlet chain and projector products.

Each singlet i (qubits 2i-1, 2i) starts with stabilizers -XX and -ZZ;
conjugating by the sqrt-SWAP coupling layer spreads them over the
neighbouring gate pairs.  Projector-product terms are addressed by bit
masks over the singlet index, one mask per stabilizer family.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache

from .dense import coupling_pairs
from .pauli import CF_ONE, CFrac, OperatorSum, conjugate_by_gate, opsum_mul, sqrt_swap_cached


class StabilizerFamily(str, Enum):
    XX = "xx"
    ZZ = "zz"


FAMILIES = (StabilizerFamily.XX, StabilizerFamily.ZZ)


@dataclass(frozen=True)
class TermMask:
    """Selects which stabilizer projectors appear in a product term.

    Bit i-1 of ``xx_mask`` set means the XX-family projector of singlet i
    is a factor; likewise ``zz_mask``.  The all-zero mask is the identity.
    """

    n_pairs: int
    xx_mask: int
    zz_mask: int
    boundary: str

    def __post_init__(self):
        full = (1 << self.n_pairs) - 1
        if not (0 <= self.xx_mask <= full and 0 <= self.zz_mask <= full):
            raise ValueError("mask out of range for n_pairs")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @classmethod
    def from_singlets(cls, n_pairs: int, boundary: str,
                      xx: tuple[int, ...] = (), zz: tuple[int, ...] = ()) -> "TermMask":
        xm = sum(1 << (i - 1) for i in xx)
        zm = sum(1 << (i - 1) for i in zz)
        return cls(n_pairs, xm, zm, boundary)

    def family_mask(self, fam: StabilizerFamily) -> int:
        return self.xx_mask if fam is StabilizerFamily.XX else self.zz_mask

    def singlets(self, fam: StabilizerFamily) -> tuple[int, ...]:
        m = self.family_mask(fam)
        return tuple(i + 1 for i in range(self.n_pairs) if (m >> i) & 1)

    @property
    def weight(self) -> int:
        """Total number of projector factors (Hamming weight of both masks)."""
        return bin(self.xx_mask).count("1") + bin(self.zz_mask).count("1")

    def is_empty(self) -> bool:
        return self.xx_mask == 0 and self.zz_mask == 0

    def is_single_family(self) -> bool:
        return self.xx_mask == 0 or self.zz_mask == 0

    def __str__(self) -> str:
        xs = ",".join(map(str, self.singlets(StabilizerFamily.XX)))
        zs = ",".join(map(str, self.singlets(StabilizerFamily.ZZ)))
        return f"[xx:{{{xs}}} zz:{{{zs}}}]"


def mask_runs(mask: int, n: int, periodic: bool) -> list[tuple[int, int]]:
    """Maximal runs of consecutive set singlets, as (start, end) inclusive.

    With periodic wrap a run may cross N -> 1; the full cycle is the single
    run (1, N).
    """
    members = [i + 1 for i in range(n) if (mask >> i) & 1]
    if not members:
        return []
    mset = set(members)
    if periodic and len(mset) == n:
        return [(1, n)]
    runs = []
    for i in members:
        prev = i - 1 if i > 1 else (n if periodic else 0)
        if prev not in mset:
            # run starts at i; walk forward
            j = i
            while True:
                nxt = j + 1 if j < n else (1 if periodic else n + 1)
                if nxt in mset and nxt != i:
                    j = nxt
                else:
                    break
            runs.append((i, j))
    return sorted(runs)


@dataclass
class GeneralizedStabilizerSet:
    """The 2N stabilizers of the target state, as exact operator sums."""

    n_pairs: int
    boundary: str
    xx: list[OperatorSum]
    zz: list[OperatorSum]

    def get(self, fam: StabilizerFamily, i: int) -> OperatorSum:
        ops = self.xx if fam is StabilizerFamily.XX else self.zz
        return ops[i - 1]

    def all(self) -> list[OperatorSum]:
        return list(self.xx) + list(self.zz)


def _bare_singlet_stabilizer(n: int, i: int, letter: str) -> OperatorSum:
    j = 2 * i - 1
    word = ["I"] * n
    word[j - 1] = letter
    word[j] = letter
    return OperatorSum(n, {"".join(word): CFrac(Fraction(-1))})


@lru_cache(maxsize=None)
def build_stabilizers(N: int, boundary: str) -> GeneralizedStabilizerSet:
    """Conjugate -X_jX_{j+1} and -Z_jZ_{j+1} (j = 2i-1) by the coupling layer.

    Only the gates touching a singlet change it, so edge singlets of an
    open chain keep one bare factor.
    """
    if N < 1:
        raise ValueError("need at least one singlet")
    n = 2 * N
    gate = sqrt_swap_cached()
    pairs = coupling_pairs(N, boundary)
    xx, zz = [], []
    for i in range(1, N + 1):
        qubits = {2 * i - 1, 2 * i}
        touching = [p for p in pairs if qubits & set(p)]
        for letter, out in (("X", xx), ("Z", zz)):
            op = _bare_singlet_stabilizer(n, i, letter)
            for p in touching:
                op = conjugate_by_gate(op, gate, p)
            out.append(op)
    return GeneralizedStabilizerSet(N, boundary, xx, zz)


def projector(S: OperatorSum) -> OperatorSum:
    """(S + I)/2 for a Hermitian unitary S; checked via S^2 = I."""
    if not S.is_hermitian():
        raise ValueError("stabilizer is not Hermitian")
    if opsum_mul(S, S) != OperatorSum.identity(S.n):
        raise ValueError("operator does not square to identity")
    half = Fraction(1, 2)
    return (S + OperatorSum.identity(S.n)).scale(half)


@lru_cache(maxsize=4096)
def _family_product(N: int, boundary: str, fam: StabilizerFamily, mask: int) -> OperatorSum:
    n = 2 * N
    if mask == 0:
        return OperatorSum.identity(n)
    low = mask & -mask
    i = low.bit_length()  # lowest set singlet
    rest = _family_product(N, boundary, fam, mask ^ low)
    stab = build_stabilizers(N, boundary).get(fam, i)
    return opsum_mul(projector(stab), rest)


def expand_term(t: TermMask) -> OperatorSum:
    """Product of the selected projectors as one exact operator sum."""
    xx_part = _family_product(t.n_pairs, t.boundary, StabilizerFamily.XX, t.xx_mask)
    if t.zz_mask == 0:
        return xx_part
    zz_part = _family_product(t.n_pairs, t.boundary, StabilizerFamily.ZZ, t.zz_mask)
    if t.xx_mask == 0:
        return zz_part
    return opsum_mul(xx_part, zz_part)


def term_trace_fraction(t: TermMask) -> Fraction:
    """Normalized trace tr(P)/2^{2N} = 2^{-s} for a product of s projectors."""
    return Fraction(1, 2 ** t.weight)
