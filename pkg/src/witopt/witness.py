"""Witness operators: canonical forms, exact noise tolerance, validation.

A witness is ``beta * I + sum_j coeff_j * P[mask_j]`` with rational
coefficients; every projector-product term evaluates to 1 on the target
state, so tightness means ``beta + sum coeff = alpha - 1``.

Under white noise ``rho_p = (1-p)|psi><psi| + p I/2^{2N}`` the expectation
is affine in p, and the zero crossing (the noise tolerance) is

    p_max = (1 - alpha) / sum_j (-coeff_j) (1 - 2^{-s_j})

with s_j the number of projector factors in term j.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import dense
from .pauli import OperatorSum
from .stabilizers import FAMILIES, StabilizerFamily, TermMask, expand_term

DEFAULT_ALPHA = Fraction(5, 8)

WITNESS_SCHEMA_VERSION = 1

CANONICAL_KINDS = ("projector", "xz", "singles", "w1", "w2")


class NonDetectingWitnessError(ValueError):
    """The witness expectation never goes negative under white noise."""


@dataclass
class Witness:
    n_pairs: int
    boundary: str
    beta: Fraction
    terms: list[tuple[Fraction, TermMask]]
    alpha: Fraction = DEFAULT_ALPHA
    kind: str | None = None

    def __post_init__(self):
        for coeff, mask in self.terms:
            if mask.is_empty():
                raise ValueError("identity weight must live in beta, not in a term")
            if mask.n_pairs != self.n_pairs or mask.boundary != self.boundary:
                raise ValueError("term mask does not match witness geometry")

    def coeff_sum(self) -> Fraction:
        return sum((c for c, _ in self.terms), Fraction(0))

    def is_tight(self) -> bool:
        return self.beta + self.coeff_sum() == self.alpha - 1

    def to_operator(self) -> OperatorSum:
        n = 2 * self.n_pairs
        out = OperatorSum.identity(n).scale(self.beta)
        for coeff, mask in self.terms:
            out = out + expand_term(mask).scale(coeff)
        return out

    # -- serialization ------------------------------------------------------

    def to_dict(self, lmc: int | None = None, include_pmax: bool = True) -> dict:
        d = {
            "version": WITNESS_SCHEMA_VERSION,
            "n_pairs": self.n_pairs,
            "boundary": self.boundary,
            "alpha": _frac_str(self.alpha),
            "beta": _frac_str(self.beta),
            "terms": [
                {
                    "coeff": _frac_str(coeff),
                    "xx_mask": hex(mask.xx_mask),
                    "zz_mask": hex(mask.zz_mask),
                }
                for coeff, mask in self.terms
            ],
            "lmc": lmc,
            "p_max": None,
        }
        if include_pmax:
            try:
                d["p_max"] = _frac_str(p_max(self))
            except NonDetectingWitnessError:
                d["p_max"] = None
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Witness":
        if d.get("version") != WITNESS_SCHEMA_VERSION:
            raise ValueError(f"unsupported witness schema version {d.get('version')!r}")
        n_pairs = int(d["n_pairs"])
        boundary = d["boundary"]
        terms = [
            (
                _parse_frac(t["coeff"]),
                TermMask(n_pairs, int(t["xx_mask"], 16), int(t["zz_mask"], 16), boundary),
            )
            for t in d["terms"]
        ]
        return cls(
            n_pairs=n_pairs,
            boundary=boundary,
            beta=_parse_frac(d["beta"]),
            terms=terms,
            alpha=_parse_frac(d["alpha"]),
        )

    @classmethod
    def from_json(cls, s: str) -> "Witness":
        return cls.from_dict(json.loads(s))


def _frac_str(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _parse_frac(s: str) -> Fraction:
    return Fraction(s)


# ---------------------------------------------------------------------------
# canonical witnesses


def canonical_witness(kind: str, N: int, boundary: str) -> Witness:
    """Build one of the named reference witnesses.

    projector: alpha I - |psi><psi|
    xz:        alpha+1 I - (prod XX projectors + prod ZZ projectors)
    singles:   one term per single projector, both families
    w1 / w2:   the two N=5 bounding decompositions over {1,2,3}/{3,4,5}
    """
    if kind not in CANONICAL_KINDS:
        raise ValueError(f"unknown witness kind {kind!r}; expected one of {CANONICAL_KINDS}")
    alpha = DEFAULT_ALPHA
    full = (1 << N) - 1
    minus1 = Fraction(-1)

    if kind == "projector":
        terms = [(minus1, TermMask(N, full, full, boundary))]
        beta = alpha
    elif kind == "xz":
        terms = [
            (minus1, TermMask(N, full, 0, boundary)),
            (minus1, TermMask(N, 0, full, boundary)),
        ]
        beta = alpha + 1
    elif kind == "singles":
        terms = []
        for i in range(N):
            terms.append((minus1, TermMask(N, 1 << i, 0, boundary)))
        for i in range(N):
            terms.append((minus1, TermMask(N, 0, 1 << i, boundary)))
        beta = alpha - 1 + 2 * N
    elif kind in ("w1", "w2"):
        if N != 5:
            raise ValueError(f"witness kind {kind!r} is defined for N=5 only")
        m123 = 0b00111
        m45 = 0b11000
        m345 = 0b11100
        m3 = 0b00100
        terms = []
        if kind == "w1":
            for fam_sel in ("xx", "zz"):
                for m in (m123, m45):
                    terms.append((minus1, _fam_mask(N, boundary, fam_sel, m)))
            beta = alpha + 3  # 29/8
        else:
            for fam_sel in ("xx", "zz"):
                terms.append((minus1, _fam_mask(N, boundary, fam_sel, m123)))
                terms.append((minus1, _fam_mask(N, boundary, fam_sel, m345)))
                terms.append((Fraction(1), _fam_mask(N, boundary, fam_sel, m3)))
            beta = alpha + 1  # 13/8
    w = Witness(N, boundary, beta, terms, alpha, kind=kind)
    assert w.is_tight()
    return w


def _fam_mask(N: int, boundary: str, fam: str, m: int) -> TermMask:
    return TermMask(N, m, 0, boundary) if fam == "xx" else TermMask(N, 0, m, boundary)


# ---------------------------------------------------------------------------
# noise tolerance


def noisy_expectation(w: Witness, p: Fraction) -> Fraction:
    """Exact tr(W rho_p): beta + sum_j c_j [(1-p) + p 2^{-s_j}]."""
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError("noise weight must lie in [0, 1]")
    acc = w.beta
    for coeff, mask in w.terms:
        s = mask.weight
        acc += coeff * ((1 - p) + p * Fraction(1, 2 ** s))
    return acc


def detection_slope(w: Witness) -> Fraction:
    """sum_j (-coeff_j)(1 - 2^{-s_j}); positive iff noise degrades detection."""
    return sum(
        ((-coeff) * (1 - Fraction(1, 2 ** mask.weight)) for coeff, mask in w.terms),
        Fraction(0),
    )


def p_max(w: Witness) -> Fraction:
    """Noise weight at which the witness expectation crosses zero, exact.

    For a tight witness this is (1 - alpha) / slope.
    """
    slope = detection_slope(w)
    v0 = w.beta + w.coeff_sum()
    if slope <= 0 or v0 >= 0:
        raise NonDetectingWitnessError("witness expectation never reaches zero")
    return -v0 / slope


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    checks: dict[str, dict] = field(default_factory=dict)

    def add(self, name: str, passed: bool | None, detail: str = "", **extra):
        entry = {"passed": passed, "detail": detail}
        entry.update(extra)
        self.checks[name] = entry

    @property
    def passed(self) -> bool:
        return all(c["passed"] is not False for c in self.checks.values())

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": self.checks}


def joint_spectrum_min(w: Witness) -> Fraction:
    """Exact minimum eigenvalue of Q = W - (alpha I - |psi><psi|).

    All projector products and the target projector are simultaneously
    diagonal in the joint stabilizer eigenbasis; each of the 2^{2N} sign
    patterns occurs exactly once, so the spectrum is enumerable per family.
    The eigenvalue at pattern (y_xx, y_zz) is
    beta - alpha + [y = 1] + sum_j coeff_j [mask_j <= y].
    """
    N = w.n_pairs
    full = (1 << N) - 1
    size = 1 << N
    base = w.beta - w.alpha
    mixed = [t for _, t in w.terms if t.xx_mask and t.zz_mask]

    if not mixed:
        integral = all(c.denominator == 1 for c, _ in w.terms)

        def family_values(fam_masks: list[tuple[Fraction, int]]):
            if integral:
                y = np.arange(size, dtype=np.int64)
                vals = np.zeros(size, dtype=np.int64)
                for coeff, m in fam_masks:
                    vals += int(coeff) * ((y & m) == m)
                return vals
            vals = [Fraction(0)] * size
            for coeff, m in fam_masks:
                for yy in range(size):
                    if yy & m == m:
                        vals[yy] += coeff
            return vals

        vx = family_values([(c, m.xx_mask) for c, m in w.terms if m.xx_mask])
        vz = family_values([(c, m.zz_mask) for c, m in w.terms if m.zz_mask])
        if integral:
            min_vx, min_vz = int(vx.min()), int(vz.min())
            ax, az = vx.copy(), vz.copy()
            ax[full] = vx.max() + 1
            az[full] = vz.max() + 1
            mx2, mz2 = int(ax.min()), int(az.min())
            corner = 1 + int(vx[full]) + int(vz[full])
        else:
            min_vx, min_vz = min(vx), min(vz)
            mx2 = min(vx[y] for y in range(size) if y != full)
            mz2 = min(vz[y] for y in range(size) if y != full)
            corner = 1 + vx[full] + vz[full]
        # a non-corner pattern pair needs y1 != full or y2 != full
        best = min(mx2 + min_vz, min_vx + mz2, corner)
        return base + best

    # mixed-family terms: enumerate the joint grid (exact, small N only)
    if N > 7:
        raise ValueError("joint spectrum with mixed-family terms is limited to N <= 7")
    best = None
    for y1 in range(size):
        for y2 in range(size):
            v = base + (1 if (y1 == full and y2 == full) else 0)
            for coeff, m in w.terms:
                if (y1 & m.xx_mask) == m.xx_mask and (y2 & m.zz_mask) == m.zz_mask:
                    v += coeff
            best = v if best is None else min(best, v)
    return best


def validate(w: Witness, dense_cap: int = dense.DEFAULT_MATRIX_CAP) -> ValidationReport:
    """Arithmetic, spectral, and oracle checks; failures are reported, not raised."""
    rep = ValidationReport()
    n = 2 * w.n_pairs

    rep.add("tightness", w.is_tight(),
            f"beta + sum(coeff) = {w.beta + w.coeff_sum()}, alpha - 1 = {w.alpha - 1}")

    try:
        qmin = joint_spectrum_min(w)
        rep.add("q_psd_exact", qmin >= 0, f"exact min eigenvalue of Q = {qmin}",
                min_eigenvalue=str(qmin))
    except ValueError as e:
        rep.add("q_psd_exact", None, f"skipped: {e}")

    if n <= dense_cap:
        wop = w.to_operator()
        psi = dense.build_target_state(w.n_pairs, w.boundary)
        q = dense.opsum_to_matrix(wop, cap=dense_cap) - float(w.alpha) * np.eye(2 ** n) \
            + psi.projector()
        ok, mineig = dense.psd_check_matrix(q, tol=1e-9)
        rep.add("q_psd_dense", ok, f"dense min eigenvalue of Q = {mineig:.3e}",
                min_eigenvalue=mineig)
    else:
        rep.add("q_psd_dense", None, f"skipped: {n} qubits exceeds dense cap {dense_cap}")

    try:
        pm = p_max(w)
        rep.add("detecting", True, f"p_max = {pm} = {float(pm):.6f}")
        eps = Fraction(1, 1000)
        lo = pm * (1 - eps)
        hi = min(Fraction(1), pm * (1 + eps))
        if n <= dense_cap:
            wop = w.to_operator()
            below = dense.expectation(wop, dense.noisy_state(w.n_pairs, lo, w.boundary, cap=dense_cap))
            above = dense.expectation(wop, dense.noisy_state(w.n_pairs, hi, w.boundary, cap=dense_cap))
        else:
            below = float(noisy_expectation(w, lo))
            above = float(noisy_expectation(w, hi))
        rep.add("sign_change", below < 0 < above,
                f"expectation {below:.3e} below / {above:.3e} above the crossing")
    except NonDetectingWitnessError as e:
        rep.add("detecting", False, str(e))

    if n <= dense_cap:
        psi = dense.build_target_state(w.n_pairs, w.boundary)
        measured = dense.max_schmidt_sq(psi, cap=dense_cap)
        rep.add("alpha_matches_schmidt", abs(measured - float(w.alpha)) < 1e-10,
                f"stored alpha = {float(w.alpha)}, largest squared Schmidt = {measured:.10f}",
                measured=measured)
    else:
        rep.add("alpha_matches_schmidt", None, "skipped: beyond dense cap")

    return rep
