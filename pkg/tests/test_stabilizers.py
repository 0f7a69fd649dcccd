from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from witopt.dense import build_target_state, expectation_pure, opsum_to_matrix
from witopt.pauli import OperatorSum, commutator_is_zero, opsum_mul
from witopt.stabilizers import (
    StabilizerFamily,
    TermMask,
    build_stabilizers,
    expand_term,
    mask_runs,
    projector,
    term_trace_fraction,
)


def test_sixteen_terms_each_n2_periodic():
    stab = build_stabilizers(2, "periodic")
    assert [s.num_terms() for s in stab.all()] == [16, 16, 16, 16]


def test_bare_singlet_stabilizers_n1_open():
    stab = build_stabilizers(1, "open")
    assert stab.xx[0] == OperatorSum(2, {"XX": _minus_one()})
    assert stab.zz[0] == OperatorSum(2, {"ZZ": _minus_one()})


def _minus_one():
    from witopt.pauli import CFrac

    return CFrac(Fraction(-1))


@pytest.mark.parametrize("boundary", ["open", "periodic"])
@pytest.mark.parametrize("N", [2, 3])
def test_stabilizer_algebraic_invariants(N, boundary):
    stab = build_stabilizers(N, boundary)
    ops = stab.all()
    ident = OperatorSum.identity(2 * N)
    for s in ops:
        assert s.is_hermitian()
        assert opsum_mul(s, s) == ident
    for a, b in combinations(ops, 2):
        assert commutator_is_zero(a, b)


@pytest.mark.parametrize("boundary", ["open", "periodic"])
def test_stabilizers_fix_the_state_n3(boundary):
    psi = build_target_state(3, boundary)
    for s in build_stabilizers(3, boundary).all():
        assert abs(expectation_pure(s, psi) - 1.0) < 1e-10


def test_independence_no_subset_product_is_identity_n2():
    stab = build_stabilizers(2, "periodic")
    ops = stab.all()
    ident = OperatorSum.identity(4)
    for r in range(1, len(ops) + 1):
        for combo in combinations(ops, r):
            acc = combo[0]
            for s in combo[1:]:
                acc = opsum_mul(acc, s)
            assert acc != ident


def test_projector_requires_involution():
    good = projector(build_stabilizers(1, "open").xx[0])
    assert opsum_mul(good, good) == good
    from witopt.pauli import CFrac

    not_unitary = OperatorSum(1, {"Z": CFrac(Fraction(1, 2))})
    with pytest.raises(ValueError):
        projector(not_unitary)


def test_projector_trace_is_half_dim():
    # rank-half projector: normalized trace 1/2
    stab = build_stabilizers(2, "periodic")
    p = projector(stab.zz[1])
    assert p.coeff("IIII").re == Fraction(1, 2)


@pytest.mark.parametrize("boundary", ["open", "periodic"])
def test_full_product_equals_target_projector_n3(boundary):
    N = 3
    full = (1 << N) - 1
    op = expand_term(TermMask(N, full, full, boundary))
    psi = build_target_state(N, boundary)
    assert np.linalg.norm(opsum_to_matrix(op) - psi.projector()) < 1e-10


def test_expand_term_empty_is_identity():
    assert expand_term(TermMask(3, 0, 0, "open")) == OperatorSum.identity(6)


def test_adjacent_pair_trace_fraction_n5():
    t = TermMask(5, 0b00011, 0, "open")
    assert term_trace_fraction(t) == Fraction(1, 4)
    assert expand_term(t).coeff("I" * 10).re == Fraction(1, 4)


@pytest.mark.parametrize("boundary", ["open", "periodic"])
def test_trace_fraction_matches_expansion_identity_coeff(boundary):
    N = 3
    for xx in range(1 << N):
        for zz in (0, 0b101 & ((1 << N) - 1)):
            t = TermMask(N, xx, zz, boundary)
            if t.weight > 4:
                continue
            ident = expand_term(t).coeff("I" * (2 * N)).re
            assert ident == term_trace_fraction(t)


def test_mask_runs_linear_and_wrap():
    assert mask_runs(0b00111, 5, periodic=False) == [(1, 3)]
    assert mask_runs(0b10011, 5, periodic=True) == [(5, 2)]
    assert mask_runs(0b10011, 5, periodic=False) == [(1, 2), (5, 5)]
    assert mask_runs(0b11111, 5, periodic=True) == [(1, 5)]
    assert mask_runs(0, 5, periodic=True) == []
