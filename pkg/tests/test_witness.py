import random
from fractions import Fraction

import numpy as np
import pytest

from witopt import dense
from witopt.stabilizers import TermMask
from witopt.witness import (
    NonDetectingWitnessError,
    Witness,
    canonical_witness,
    detection_slope,
    joint_spectrum_min,
    noisy_expectation,
    p_max,
    validate,
)


def test_canonical_xz_shape():
    w = canonical_witness("xz", 4, "periodic")
    assert w.beta == Fraction(13, 8)
    assert len(w.terms) == 2
    masks = sorted((m.xx_mask, m.zz_mask) for _, m in w.terms)
    assert masks == [(0, 0b1111), (0b1111, 0)]
    assert all(c == -1 for c, _ in w.terms)


def test_canonical_singles_shape():
    N = 6
    w = canonical_witness("singles", N, "open")
    assert w.beta == 2 * N - Fraction(3, 8)
    assert len(w.terms) == 2 * N
    assert all(bin(m.xx_mask | m.zz_mask).count("1") == 1 for _, m in w.terms)


def test_canonical_w2_shape_and_n_requirement():
    w = canonical_witness("w2", 5, "open")
    assert w.beta == Fraction(13, 8)
    xx = sorted((c, m.xx_mask) for c, m in w.terms if m.xx_mask)
    assert xx == [(Fraction(-1), 0b00111), (Fraction(-1), 0b11100), (Fraction(1), 0b00100)]
    with pytest.raises(ValueError):
        canonical_witness("w1", 4, "open")
    with pytest.raises(ValueError):
        canonical_witness("nope", 5, "open")


def test_tightness_of_all_canonicals():
    for kind, N in [("projector", 3), ("xz", 7), ("singles", 9), ("w1", 5), ("w2", 5)]:
        w = canonical_witness(kind, N, "open")
        assert w.is_tight()


def test_noisy_expectation_at_zero_and_affinity():
    w = canonical_witness("xz", 5, "open")
    assert noisy_expectation(w, Fraction(0)) == Fraction(-3, 8)
    v0, v1 = noisy_expectation(w, Fraction(0)), noisy_expectation(w, Fraction(1))
    drop = sum(c * (Fraction(1, 2 ** m.weight) - 1) for c, m in w.terms)
    assert v1 - v0 == drop
    mid = noisy_expectation(w, Fraction(1, 2))
    assert mid == (v0 + v1) / 2  # affine in the noise weight


@pytest.mark.parametrize("N", range(2, 21))
def test_pmax_closed_form_xz(N):
    w = canonical_witness("xz", N, "periodic")
    assert p_max(w) == Fraction(3, 16) / (1 - Fraction(1, 2 ** N))


def test_pmax_worked_examples():
    assert p_max(canonical_witness("w1", 5, "open")) == Fraction(3, 26)
    assert p_max(canonical_witness("w2", 5, "open")) == Fraction(3, 20)
    assert p_max(canonical_witness("singles", 8, "open")) == Fraction(3, 64)


def test_pmax_invariant_under_cyclic_relabeling():
    # p_max depends only on the multiset of (coeff, weight)
    N = 6
    t1 = [(Fraction(-1), TermMask(N, 0b000111, 0, "periodic")),
          (Fraction(-1), TermMask(N, 0, 0b000111, "periodic")),
          (Fraction(-1), TermMask(N, 0b111000, 0, "periodic")),
          (Fraction(-1), TermMask(N, 0, 0b111000, "periodic"))]
    t2 = [(c, TermMask(N, _rot(m.xx_mask, 2, N), _rot(m.zz_mask, 2, N), "periodic"))
          for c, m in t1]
    beta = Fraction(5, 8) - 1 + 4
    w1 = Witness(N, "periodic", beta, t1)
    w2 = Witness(N, "periodic", beta, t2)
    assert p_max(w1) == p_max(w2)


def _rot(mask, k, N):
    out = 0
    for i in range(N):
        if (mask >> i) & 1:
            out |= 1 << ((i + k) % N)
    return out


def test_non_detecting_witness_rejected():
    N = 3
    terms = [(Fraction(1), TermMask(N, 0b001, 0, "open"))]
    w = Witness(N, "open", Fraction(5, 8) - 2, terms)
    with pytest.raises(NonDetectingWitnessError):
        p_max(w)


def test_noisy_expectation_matches_dense_random_points():
    rng = random.Random(5)
    for _ in range(8):
        N = rng.choice([2, 3])
        kind = rng.choice(["xz", "singles", "projector"])
        w = canonical_witness(kind, N, rng.choice(["open", "periodic"]))
        p = Fraction(rng.randrange(0, 101), 100)
        exact = noisy_expectation(w, p)
        rho = dense.noisy_state(N, p, w.boundary)
        val = dense.expectation(w.to_operator(), rho)
        assert abs(float(exact) - val) < 1e-10


def test_joint_spectrum_matches_dense_q_minimum():
    for kind, N, boundary in [("xz", 3, "open"), ("singles", 3, "periodic"),
                              ("w2", 5, "open"), ("w1", 5, "open")]:
        w = canonical_witness(kind, N, boundary)
        exact = joint_spectrum_min(w)
        psi = dense.build_target_state(N, boundary)
        q = (dense.opsum_to_matrix(w.to_operator())
             - float(w.alpha) * np.eye(4 ** N) + psi.projector())
        dense_min = float(np.linalg.eigvalsh(q).min())
        assert abs(float(exact) - dense_min) < 1e-9, (kind, N)


def test_validate_passes_canonicals_open():
    for kind in ("projector", "xz", "singles"):
        rep = validate(canonical_witness(kind, 3, "open"))
        assert rep.passed, rep.to_dict()


def test_validate_flags_broken_beta():
    w = canonical_witness("xz", 3, "open")
    broken = Witness(w.n_pairs, w.boundary, w.beta - Fraction(1, 8), w.terms, w.alpha)
    rep = validate(broken)
    assert not rep.passed
    assert rep.checks["q_psd_exact"]["passed"] is False
    assert rep.checks["q_psd_dense"]["passed"] is False


def test_validate_projector_witness_q_zero():
    rep = validate(canonical_witness("projector", 2, "open"))
    assert rep.checks["q_psd_exact"]["passed"]
    assert abs(rep.checks["q_psd_dense"]["min_eigenvalue"]) < 1e-9


def test_json_round_trip_bit_exact():
    w = canonical_witness("w2", 5, "open")
    s = w.to_json(lmc=54)
    w2 = Witness.from_json(s)
    assert w2.to_json(lmc=54) == s
    assert w2.beta == w.beta and w2.alpha == w.alpha
    assert sorted((str(c), m.xx_mask, m.zz_mask) for c, m in w2.terms) == \
           sorted((str(c), m.xx_mask, m.zz_mask) for c, m in w.terms)


def test_detection_slope_positive_for_detecting_witnesses():
    for kind in ("projector", "xz", "singles"):
        assert detection_slope(canonical_witness(kind, 4, "open")) > 0
