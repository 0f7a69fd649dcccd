"""Budget-constrained witness search.

The searched family consists of overlap chains: contiguous runs of
projector indices covering the whole chain (or cycle), where consecutive
runs either touch or overlap, and every overlap region is subtracted back
as its own projector term.  This is the iterated common-divisor
construction; partitions, the single full product, and the two-run
divisor shape are all special cases.

Per-term admission under a settings budget comes in two accountings:

- ``formula``: the closed-form gap count (:func:`witopt.lms.lmc_formula`);
- ``span``: the tiled-cover size ``3^span`` (:func:`witopt.lms.span_lmc`),
  which for open chains is also the exact full-product cover.

Scoring is exact: a chain with runs of lengths l_i and subtracted
overlaps g_j contributes, per family,
``D = sum (1 - 2^-l_i) - sum (1 - 2^-g_j)``, and the noise tolerance is
``p_max = (1 - alpha)/(2 D)`` for the symmetric two-family split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from . import lms
from .stabilizers import TermMask
from .witness import DEFAULT_ALPHA, Witness, p_max as witness_p_max

TERM_ACCOUNTINGS = ("formula", "span")


class InfeasibleBudgetError(ValueError):
    """The budget cannot measure any witness covering every singlet."""


@dataclass
class CandidateSet:
    n_pairs: int
    boundary: str
    budget_per_family: int
    accounting: str
    runs: list[int]  # admissible contiguous-run masks

    def covers_all(self) -> bool:
        u = 0
        for m in self.runs:
            u |= m
        return u == (1 << self.n_pairs) - 1


@dataclass
class ChainStructure:
    """Runs plus the subtracted overlap regions, all as per-family masks."""

    runs: tuple[int, ...]
    subtracted: tuple[int, ...]

    def d_value(self) -> Fraction:
        d = Fraction(0)
        for m in self.runs:
            d += 1 - Fraction(1, 2 ** bin(m).count("1"))
        for m in self.subtracted:
            d -= 1 - Fraction(1, 2 ** bin(m).count("1"))
        return d

    def term_masks(self) -> list[int]:
        return list(self.runs) + list(self.subtracted)

    def canonical(self) -> tuple:
        return (tuple(sorted(self.runs)), tuple(sorted(self.subtracted)))


@dataclass
class SearchResult:
    witness: Witness
    structure: ChainStructure
    p_max: Fraction
    budget: int
    budget_per_family: int
    achieved_lmc: int
    achieved_lmc_exactness: str
    t_star: list[int]
    p_cd: int
    accounting: str
    audit: list[dict] = field(default_factory=list)

    @property
    def f_min(self) -> Fraction:
        return 1 - self.p_max


# ---------------------------------------------------------------------------
# candidate enumeration


def _run_mask(a: int, b: int, N: int) -> int:
    """Mask of the cyclic run a..b inclusive (wraps when a > b)."""
    if a <= b:
        return ((1 << (b - a + 1)) - 1) << (a - 1)
    return _run_mask(a, N, N) | _run_mask(1, b, N)


def term_cost(mask: int, N: int, boundary: str, accounting: str) -> int:
    if accounting == "formula":
        return lms.lmc_formula(mask, N, boundary)
    if accounting == "span":
        return lms.span_lmc(mask, N, boundary)
    raise ValueError(f"unknown accounting {accounting!r}")


def enumerate_candidates(N: int, boundary: str, budget_per_family: int,
                         accounting: str = "formula") -> CandidateSet:
    """All admissible contiguous runs under the per-term budget.

    Raises when the admissible runs cannot jointly cover every singlet.
    """
    runs = []
    ends = range(1, N + 1)
    for a in range(1, N + 1):
        for b in ends:
            if boundary == "open" and b < a:
                continue
            m = _run_mask(a, b, N)
            if m == (1 << N) - 1 and (a, b) != (1, N):
                continue  # canonical representative of the full chain/cycle
            if term_cost(m, N, boundary, accounting) <= budget_per_family:
                runs.append(m)
    cand = CandidateSet(N, boundary, budget_per_family, accounting, sorted(set(runs)))
    if not cand.covers_all():
        raise InfeasibleBudgetError(
            f"per-family budget {budget_per_family} cannot cover all {N} singlets")
    return cand


# ---------------------------------------------------------------------------
# common-divisor extraction and truncation


def extract_gcd(terms: list[TermMask]) -> tuple[TermMask, list[TermMask]]:
    """Greatest common divisor projector: the bitwise AND of all masks.

    The divisor's bits are cleared from each term; after one pass the
    remaining masks share nothing, so the iteration always stops.
    """
    if not terms:
        raise ValueError("empty term list")
    N, boundary = terms[0].n_pairs, terms[0].boundary
    gx = gz = (1 << N) - 1
    for t in terms:
        gx &= t.xx_mask
        gz &= t.zz_mask
    reduced = [TermMask(N, t.xx_mask & ~gx, t.zz_mask & ~gz, boundary) for t in terms]
    while True:
        rx = rz = (1 << N) - 1
        for t in reduced:
            rx &= t.xx_mask
            rz &= t.zz_mask
        if rx == 0 and rz == 0:
            break
        reduced = [TermMask(N, t.xx_mask & ~rx, t.zz_mask & ~rz, boundary) for t in reduced]
        gx |= rx
        gz |= rz
    return TermMask(N, gx, gz, boundary), reduced


def _gcd_of(masks: list[int], full: int) -> int:
    g = full
    for m in masks:
        g &= m
    return g


def truncate(terms: list[int], gcd: int, full_support: int) -> list[int]:
    """Drop terms (or divisor bits within terms) that change neither the
    common divisor nor the joint support, largest terms first."""
    terms = list(terms)
    full_bits = full_support
    changed = True
    while changed:
        changed = False
        order = sorted(range(len(terms)),
                       key=lambda i: (-bin(terms[i]).count("1"), terms[i]))
        for i in order:
            rest = [terms[j] for j in range(len(terms)) if j != i]
            if not rest:
                continue
            union = 0
            for m in rest:
                union |= m
            if union == full_bits and _gcd_of(rest, full_bits) == gcd:
                del terms[i]
                changed = True
                break
        if changed:
            continue
        # try clearing a divisor bit inside one term
        for i in order:
            m = terms[i]
            for bit in range(full_bits.bit_length()):
                b = 1 << bit
                if not (m & b) or (gcd & b):
                    continue
                trial = terms[:i] + [m & ~b] + terms[i + 1:]
                trial = [t for t in trial if t]
                union = 0
                for t in trial:
                    union |= t
                if union == full_bits and _gcd_of(trial, full_bits) == gcd:
                    terms = trial
                    changed = True
                    break
            if changed:
                break
    return sorted(terms, key=lambda m: (bin(m).count("1"), m), reverse=True)


# ---------------------------------------------------------------------------
# witness assembly


def assemble_witness(t_star: list[TermMask], p_cd: TermMask | None,
                     alpha: Fraction = DEFAULT_ALPHA) -> Witness:
    """Alpha I - sum of terms + (|T*|-1) P_cd, mirrored over both families.

    ``t_star`` holds single-family masks for the XX family; the ZZ family
    receives the same decomposition.  An empty divisor folds the
    (|T*|-1) identity weight into the constant instead.
    """
    if not t_star:
        raise ValueError("empty decomposition")
    N, boundary = t_star[0].n_pairs, t_star[0].boundary
    terms: list[tuple[Fraction, TermMask]] = []
    minus1 = Fraction(-1)
    surplus = Fraction(len(t_star) - 1)
    for t in t_star:
        if t.zz_mask:
            raise ValueError("t_star must be XX-family masks; mirroring is automatic")
        terms.append((minus1, t))
        terms.append((minus1, TermMask(N, 0, t.xx_mask, boundary)))
    beta = alpha + 1  # family split costs one identity
    if p_cd is not None and not p_cd.is_empty():
        if surplus > 0:
            terms.append((surplus, p_cd))
            terms.append((surplus, TermMask(N, 0, p_cd.xx_mask, boundary)))
    else:
        beta += 2 * surplus
    w = Witness(N, boundary, beta, terms, alpha)
    if not w.is_tight():
        raise AssertionError("assembled witness is not tight")
    return w


def assemble_chain(structure: ChainStructure, N: int, boundary: str,
                   alpha: Fraction = DEFAULT_ALPHA) -> Witness:
    """Chain witness: -runs + overlaps per family, both families mirrored."""
    terms: list[tuple[Fraction, TermMask]] = []
    for m in structure.runs:
        terms.append((Fraction(-1), TermMask(N, m, 0, boundary)))
        terms.append((Fraction(-1), TermMask(N, 0, m, boundary)))
    for m in structure.subtracted:
        terms.append((Fraction(1), TermMask(N, m, 0, boundary)))
        terms.append((Fraction(1), TermMask(N, 0, m, boundary)))
    csum = 2 * (len(structure.subtracted) - len(structure.runs))
    beta = alpha - 1 - csum
    w = Witness(N, boundary, beta, terms, alpha)
    if not w.is_tight():
        raise AssertionError("assembled witness is not tight")
    return w


# ---------------------------------------------------------------------------
# chain optimization (exact dynamic program over run placements)


def _admissible_runs(N: int, boundary: str, budget: int, accounting: str) -> set[tuple[int, int]]:
    """Linear runs (a, b) with a <= b whose mask fits the per-term budget."""
    out = set()
    for a in range(1, N + 1):
        for b in range(a, N + 1):
            m = _run_mask(a, b, N)
            if term_cost(m, N, boundary, accounting) <= budget:
                out.add((a, b))
    return out


def _overlap_ok(g_mask: int, N: int, boundary: str, budget: int, accounting: str) -> bool:
    return g_mask == 0 or term_cost(g_mask, N, boundary, accounting) <= budget


def optimize_family_chain(N: int, boundary: str, budget: int,
                          accounting: str = "formula") -> ChainStructure:
    """Exact optimum of the chain objective under per-term admission.

    Open chains use one linear DP.  Cycles are cut at the single
    junction that is never subtracted (any structure can be turned so its
    unsubtracted junction sits at the cut, and both the score and the
    admission rule are rotation invariant), then solved by the same DP
    with the wrap overlap enumerated against the first run.
    """
    if boundary == "open":
        best = _optimize_linear_chain(N, boundary, budget, accounting)
        if best is None:
            raise InfeasibleBudgetError(
                f"per-family budget {budget} admits no covering chain")
        return best[2]

    best: tuple | None = None
    full = (1 << N) - 1
    if term_cost(full, N, boundary, accounting) <= budget:
        cand = ChainStructure((full,), ())
        best = (cand.d_value(), 1, cand)

    for wrap_g in range(0, N - 1):
        solve = _linear_dp(N, "periodic", budget, accounting, last_extra_len=wrap_g)
        for e1 in range(max(1, wrap_g + 1), N):
            res = _optimize_cyclic_cut(N, budget, accounting, wrap_g, e1, solve)
            if res is not None and (best is None or
                                    (res[0], res[1], res[2].canonical())
                                    < (best[0], best[1], best[2].canonical())):
                best = res
    if best is None:
        raise InfeasibleBudgetError(
            f"per-family budget {budget} admits no covering chain")
    return best[2]


_FRAC_POW = {}


def _one_minus_pow(k: int) -> Fraction:
    v = _FRAC_POW.get(k)
    if v is None:
        v = 1 - Fraction(1, 2 ** k)
        _FRAC_POW[k] = v
    return v


def _linear_dp(N: int, boundary: str, budget: int, accounting: str,
               last_extra_len: int = 0):
    """Suffix solver for chains covering positions 1..N.

    Returns solve(end, low): the best completion once the prefix 1..end is
    covered, where `low` is the least admissible start for the next run
    (it encodes both proper-overlap and non-consecutive disjointness).
    ``last_extra_len`` lengthens the final run cyclically (wrap overlap).
    """
    ok_run: dict[tuple[int, int], bool] = {}

    def run_ok(s, e2, extra=0):
        key = (s, e2, extra)
        v = ok_run.get(key)
        if v is None:
            if extra:
                m = _run_mask(s, extra, N)  # wraps through N into 1..extra
            else:
                m = _run_mask(s, e2, N)
            v = term_cost(m, N, boundary, accounting) <= budget
            ok_run[key] = v
        return v

    suffix: dict[tuple[int, int], tuple | None] = {}

    def solve(e: int, lo: int):
        if e == N:
            return (Fraction(0), 0, ())
        key = (e, lo)
        if key in suffix:
            return suffix[key]
        best = None
        for s in range(lo, e + 2):
            g = e - s + 1
            if g >= 1 and not run_ok(s, e):
                continue  # the subtracted overlap is itself a term
            for e2 in range(e + 1, N + 1):
                extra = last_extra_len if e2 == N else 0
                if not run_ok(s, e2, extra):
                    continue
                tail = solve(e2, max(s + 1, e + 1))
                if tail is None:
                    continue
                d = tail[0] + _one_minus_pow(e2 - s + 1 + extra)
                if g >= 1:
                    d -= _one_minus_pow(g)
                key2 = (d, tail[1] + 1, ((s, e2, g),) + tail[2])
                if best is None or key2 < best:
                    best = key2
        suffix[key] = best
        return best

    return solve


def _optimize_linear_chain(N, boundary, budget, accounting):
    solve = _linear_dp(N, boundary, budget, accounting)
    best = None
    for e1 in range(1, N + 1):
        if term_cost(_run_mask(1, e1, N), N, boundary, accounting) > budget:
            continue
        tail = solve(e1, 2)
        if tail is None:
            continue
        d = tail[0] + _one_minus_pow(e1)
        key = (d, tail[1] + 1, ((1, e1, 0),) + tail[2])
        if best is None or key < best:
            best = key
    if best is None:
        return None
    return (best[0], best[1], _structure_from_moves(best[2], N, 0))


def _optimize_cyclic_cut(N, budget, accounting, wrap_g, e1, solve):
    """Cyclic chains cut at the unsubtracted junction: first run [1..e1]
    owns the wrap region [1..wrap_g], which the final run re-enters."""
    if term_cost(_run_mask(1, e1, N), N, "periodic", accounting) > budget:
        return None
    tail = solve(e1, max(2, wrap_g + 1))
    if tail is None or tail[1] == 0:
        return None  # at least two runs; the full cycle is handled separately
    d = tail[0] + _one_minus_pow(e1)
    moves = ((1, e1, 0),) + tail[2]
    structure = _structure_from_moves(moves, N, wrap_g)
    return (d, tail[1] + 1, structure)


def _structure_from_moves(moves, N: int, wrap_g: int) -> ChainStructure:
    runs, subs = [], []
    for s, e2, g in moves:
        if e2 == N and wrap_g > 0:
            runs.append(_run_mask(s, wrap_g, N))
        else:
            runs.append(_run_mask(s, e2, N))
        if g >= 1:
            subs.append(_run_mask(s, s + g - 1, N))
    return ChainStructure(tuple(runs), tuple(subs))


# ---------------------------------------------------------------------------
# achieved measurement cost of a search result


def structure_lmc(structure: ChainStructure, N: int, boundary: str,
                  try_exact_blocks: int = 6,
                  node_budget: int = 50_000) -> tuple[int, str]:
    """Certified per-family settings count for all terms of the structure,
    doubled for the two families.

    Small instances get the exact cover (with a modest node budget; an
    exhausted search still yields a certified upper bound); larger ones the
    cheapest certified construction (tiled window / difference array).
    """
    masks = structure.term_masks()
    blocks = set()
    for m in masks:
        blocks |= lms.term_blocks(m, N, boundary)
    if len(blocks) <= try_exact_blocks:
        try:
            res = lms.family_min_cover(masks, lms.StabilizerFamily.XX, N, boundary,
                                       node_budget=node_budget)
            kind = "exact" if res.optimal else "upper bound"
            return 2 * res.count, kind
        except lms.CoverTooLargeError:
            pass
    tw = lms.tiled_cover_width(masks, N, boundary)
    if tw is not None:
        width, _ = tw
        nb = lms.block_count(N, boundary)
        return 2 * 3 ** min(width, nb), "tiled upper bound"
    nb = lms.block_count(N, boundary)
    return 2 * 3 ** nb, "full product upper bound"


# ---------------------------------------------------------------------------
# top-level search


def search_optimal(N: int, boundary: str, budget: int,
                   accounting: str = "formula",
                   split: str = "sym",
                   alpha: Fraction = DEFAULT_ALPHA) -> SearchResult:
    """Best chain witness under the total settings budget.

    The budget is split evenly over the two stabilizer families (they share
    no settings); each family receives the same decomposition.  With
    ``split='scan'`` uneven splits are also tried, mirroring the cheaper
    family's structure is then not required, but in practice the symmetric
    split always wins because both family products are isomorphic.
    """
    if accounting not in TERM_ACCOUNTINGS:
        raise ValueError(f"accounting must be one of {TERM_ACCOUNTINGS}")
    if budget < 18:
        raise InfeasibleBudgetError(
            "a witness needs at least 9 settings per family (18 total)")
    audit: list[dict] = []
    budget_f = budget // 2
    cand = enumerate_candidates(N, boundary, budget_f, accounting)
    audit.append({
        "event": "candidates",
        "per_family_budget": budget_f,
        "accounting": accounting,
        "admissible_runs": len(cand.runs),
    })
    structure = optimize_family_chain(N, boundary, budget_f, accounting)
    audit.append({
        "event": "optimum",
        "runs": [f"{m:#x}" for m in structure.runs],
        "subtracted": [f"{m:#x}" for m in structure.subtracted],
        "d_per_family": str(structure.d_value()),
    })

    # express the run set through the common-divisor pipeline for the audit
    t_star = [TermMask(N, m, 0, boundary) for m in structure.runs]
    p_cd, reduced = extract_gcd(t_star)
    full_support = (1 << N) - 1
    truncated = truncate([t.xx_mask for t in t_star], p_cd.xx_mask, full_support)
    audit.append({
        "event": "gcd",
        "p_cd": f"{p_cd.xx_mask:#x}",
        "reduced": [f"{t.xx_mask:#x}" for t in reduced],
        "truncated": [f"{m:#x}" for m in truncated],
        "nested": len(structure.subtracted) > (0 if p_cd.is_empty() else 1),
    })

    witness = assemble_chain(structure, N, boundary, alpha)
    pm = witness_p_max(witness)
    achieved, kind = structure_lmc(structure, N, boundary)
    audit.append({
        "event": "score",
        "p_max": str(pm),
        "f_min": str(1 - pm),
        "achieved_lmc": achieved,
        "achieved_lmc_kind": kind,
    })
    return SearchResult(
        witness=witness,
        structure=structure,
        p_max=pm,
        budget=budget,
        budget_per_family=budget_f,
        achieved_lmc=achieved,
        achieved_lmc_exactness=kind,
        t_star=list(structure.runs),
        p_cd=p_cd.xx_mask,
        accounting=accounting,
        audit=audit,
    )


def audit_jsonl(result: SearchResult) -> str:
    return "\n".join(json.dumps(entry, sort_keys=True) for entry in result.audit)
