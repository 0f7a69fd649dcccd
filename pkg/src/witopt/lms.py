"""Local measurement settings: coverage, exact covers, and cost formulas.

A setting assigns one Pauli letter (or nothing) per qubit; it covers a
Pauli word when they agree on every non-identity position.  All words
appearing in a single stabilizer family factor over the coupling-gate
pairs ("blocks") into a three-letter alphabet, so covers are searched at
block granularity: a candidate setting is one letter per block.

Per-family block geometry: block b is the gate pair (2b, 2b+1); singlet i
touches blocks i-1 and i.  Open chains have blocks 1..N-1 plus two edge
qubits whose letter is forced, so they add nothing to the search space.

Cover costs come in three certified flavours:
- exact minimum set cover (branch and bound over block assignments),
- cyclic-difference arrays of 9 settings (cover all single projectors),
- tiled families of 3^w settings covering every term whose blocks fit in
  a window of w consecutive blocks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .stabilizers import FAMILIES, StabilizerFamily, TermMask, expand_term, mask_runs

BLOCK_LETTERS = {
    StabilizerFamily.XX: ("XX", "YZ", "ZY"),
    StabilizerFamily.ZZ: ("ZZ", "YX", "XY"),
}

EDGE_LETTER = {StabilizerFamily.XX: "X", StabilizerFamily.ZZ: "Z"}

DEFAULT_NODE_BUDGET = 10 ** 6
DEFAULT_SETTINGS_CAP = 3 ** 10
DEFAULT_UNIVERSE_CAP = 200_000


class MixedFamilyTermError(ValueError):
    """A term mixes both stabilizer families; its words do not factor into
    a single family's block alphabet."""


class CoverTooLargeError(ValueError):
    """The exact-cover instance exceeds the configured size caps."""


# ---------------------------------------------------------------------------
# geometry


def block_count(N: int, boundary: str) -> int:
    return N if boundary == "periodic" else N - 1


def block_qubits(b: int, N: int) -> tuple[int, int]:
    """Gate pair of block b (1-based); block N wraps to (2N, 1)."""
    return (2 * b, 2 * b + 1 if b < N else 1)


def _blk(x: int, N: int) -> int:
    return ((x - 1) % N) + 1


def term_blocks(mask: int, N: int, boundary: str) -> set[int]:
    """Blocks that carry a free (three-way) letter in some word of the term."""
    blocks: set[int] = set()
    for i in range(1, N + 1):
        if not (mask >> (i - 1)) & 1:
            continue
        if boundary == "periodic":
            blocks.add(_blk(i - 1, N))
            blocks.add(i)
        else:
            if i >= 2:
                blocks.add(i - 1)
            if i <= N - 1:
                blocks.add(i)
    return blocks


def block_span(mask: int, N: int, boundary: str) -> int:
    """Length of the smallest window of consecutive blocks containing the term.

    Open chains use the natural linear order; periodic ones take the
    smallest cyclic arc.
    """
    blocks = term_blocks(mask, N, boundary)
    if not blocks:
        return 0
    if boundary == "open":
        return max(blocks) - min(blocks) + 1
    nb = N
    present = sorted(blocks)
    if len(present) == nb:
        return nb
    # smallest arc = N - largest gap between consecutive present blocks
    largest_gap = 0
    for a, b in zip(present, present[1:] + [present[0] + nb]):
        largest_gap = max(largest_gap, b - a - 1)
    return nb - largest_gap


def span_lmc(mask: int, N: int, boundary: str) -> int:
    """3^span: the size of the cheapest tiled family covering the term."""
    return 3 ** block_span(mask, N, boundary)


def lmc_formula(mask: int, N: int, boundary: str) -> int:
    """Closed-form settings count for a single-family projector product.

    9 for one projector; 15 for an adjacent pair; otherwise
    3^{sum_r min(i_r - i_{r-1}, 2)} with the leading index set to
    i_k - N (periodic) or i_1 - 2 (open).
    """
    members = [i + 1 for i in range(N) if (mask >> i) & 1]
    if not members:
        raise ValueError("empty mask has no measurement cost")
    k = len(members)
    if k == 1:
        return 9
    if k == 2:
        gap = (members[0] - members[1]) % N if boundary == "periodic" else members[0] - members[1]
        if gap in (1, N - 1) if boundary == "periodic" else abs(gap) == 1:
            return 15
    i0 = members[-1] - N if boundary == "periodic" else members[0] - 2
    prev = i0
    exponent = 0
    for i in members:
        exponent += min(i - prev, 2)
        prev = i
    return 3 ** exponent


# ---------------------------------------------------------------------------
# words and coverage


def covers(setting: str, word: str) -> bool:
    """A setting covers a word iff they agree wherever the word is not I."""
    if len(setting) != len(word):
        raise ValueError("length mismatch")
    for s, w in zip(setting, word):
        if w == "I":
            continue
        if s != w:
            return False
    return True


def required_strings(terms: list[TermMask]) -> set[str]:
    """Union of non-identity Pauli words in the expansions of all terms."""
    out: set[str] = set()
    for t in terms:
        op = expand_term(t)
        ident = "I" * op.n
        out.update(k for k in op.terms if k != ident)
    return out


# ---------------------------------------------------------------------------
# requirement classes

# A requirement is a frozenset of (block, code) pairs: the block letters a
# single setting must take so that one specific group of words of the term
# gets measured.  Boundary blocks of a run range over all three codes;
# interior blocks are pinned to code 0 (the XX / ZZ letter), because the
# product of the two conjugated factors meeting on an interior block
# collapses to the plain double letter.


def _subset_runs(members: tuple[int, ...], sub_bits: int, N: int, periodic: bool):
    m = 0
    for j, i in enumerate(members):
        if (sub_bits >> j) & 1:
            m |= 1 << (i - 1)
    return m, mask_runs(m, N, periodic)


def term_requirements(mask: int, N: int, boundary: str,
                      universe_cap: int = DEFAULT_UNIVERSE_CAP) -> set[frozenset]:
    periodic = boundary == "periodic"
    members = tuple(i + 1 for i in range(N) if (mask >> i) & 1)
    if not members:
        return set()
    if (1 << len(members)) > universe_cap:
        raise CoverTooLargeError(
            f"mask {mask:#x} has {1 << len(members)} word groups, over cap {universe_cap}")
    reqs: set[frozenset] = set()
    for sub_bits in range(1, 1 << len(members)):
        sub_mask, runs = _subset_runs(members, sub_bits, N, periodic)
        fixed: list[tuple[int, int]] = []
        free_blocks: list[int] = []
        if periodic and runs == [(1, N)] and bin(sub_mask).count("1") == N:
            fixed = [(b, 0) for b in range(1, N + 1)]
            reqs.add(frozenset(fixed))
            continue
        for a, b in runs:
            # walk the run cyclically, collecting interior blocks
            length = (b - a) % N + 1 if periodic else b - a + 1
            for step in range(length - 1):
                fixed.append((_blk(a + step, N), 0))
            if periodic:
                free_blocks.append(_blk(a - 1, N))
                free_blocks.append(_blk(b, N))
            else:
                if a >= 2:
                    free_blocks.append(a - 1)
                if b <= N - 1:
                    free_blocks.append(b)
        if len(reqs) + 3 ** len(free_blocks) > universe_cap:
            raise CoverTooLargeError(
                f"requirement universe for mask {mask:#x} exceeds {universe_cap}")
        for codes in itertools.product((0, 1, 2), repeat=len(free_blocks)):
            reqs.add(frozenset(fixed + list(zip(free_blocks, codes))))
    return reqs


def maximal_requirements(reqs: set[frozenset]) -> list[frozenset]:
    """Drop requirements implied by a stricter one (subset as constraint sets)."""
    by_size = sorted(reqs, key=len, reverse=True)
    kept: list[frozenset] = []
    for r in by_size:
        if not any(r < k for k in kept):
            kept.append(r)
    return kept


# ---------------------------------------------------------------------------
# settings construction


def setting_string(assign: dict[int, int], fam: StabilizerFamily, N: int, boundary: str) -> str:
    """Render a block assignment as a per-qubit setting, '.' for idle qubits."""
    chars = ["."] * (2 * N)
    for b, code in assign.items():
        qa, qb = block_qubits(b, N)
        letters = BLOCK_LETTERS[fam][code]
        chars[qa - 1] = letters[0]
        chars[qb - 1] = letters[1]
    if boundary == "open":
        chars[0] = EDGE_LETTER[fam]
        chars[2 * N - 1] = EDGE_LETTER[fam]
    return "".join(chars)


def full_assignments(blocks: list[int]):
    for codes in itertools.product((0, 1, 2), repeat=len(blocks)):
        yield dict(zip(blocks, codes))


def difference_array(N: int, boundary: str) -> list[dict[int, int]] | None:
    """Nine settings a + d*f(b) over GF(3) with f adjacent-distinct.

    Covers every requirement constraining at most two adjacent blocks with
    independent letters, hence all single projectors at once.
    """
    nb = block_count(N, boundary)
    if nb < 1 or (boundary == "periodic" and nb < 2):
        return None
    f = [j % 3 for j in range(nb)]
    if boundary == "periodic" and f[-1] == f[0]:
        # repair the wrap (nb % 3 == 1): pick a value distinct from both ends
        choices = {0, 1, 2} - {f[0], f[-2]}
        if not choices:
            return None
        f[-1] = min(choices)
    out = []
    for a in range(3):
        for d in range(3):
            out.append({b + 1: (a + d * f[b]) % 3 for b in range(nb)})
    return out


def tiled_settings(width: int, N: int, boundary: str, seam: int = 0) -> list[dict[int, int]]:
    """3^width settings tiling the blocks with a repeating window.

    Any `width` consecutive blocks (starting after the seam, which only
    matters for periodic chains) carry distinct residues, so the family
    realizes every letter combination on every such window.
    """
    nb = block_count(N, boundary)
    width = min(width, nb)
    out = []
    for base in itertools.product((0, 1, 2), repeat=width):
        out.append({b: base[((b - 1 - seam) % nb) % width] for b in range(1, nb + 1)})
    return out


def tiled_cover_width(masks: list[int], N: int, boundary: str) -> tuple[int, int] | None:
    """(width, seam) of the cheapest tiled family covering all terms, if any.

    Open: width = max linear span.  Periodic: seek a seam such that every
    term's cyclic arc avoids the seam crossing; width = max arc length.
    """
    if not masks:
        return (0, 0)
    nb = block_count(N, boundary)
    if boundary == "open":
        return (max(block_span(m, N, boundary) for m in masks), 0)
    spans = [term_blocks(m, N, boundary) for m in masks]
    if any(len(s) == nb for s in spans):
        return (nb, 0)
    for seam in range(nb):
        # linear order seam+1, ..., nb, 1, ..., seam; arc must not wrap there
        ok = True
        width = 0
        for s in spans:
            pos = sorted(((b - 1 - seam) % nb) for b in s)
            width_here = pos[-1] - pos[0] + 1
            # the arc is seam-free iff its linear extent equals its cyclic span
            if width_here != block_span_from_blocks(s, nb):
                ok = False
                break
            width = max(width, width_here)
        if ok:
            return (width, seam)
    return None


def block_span_from_blocks(blocks: set[int], nb: int) -> int:
    present = sorted(blocks)
    if len(present) == nb:
        return nb
    largest_gap = 0
    for a, b in zip(present, present[1:] + [present[0] + nb]):
        largest_gap = max(largest_gap, b - a - 1)
    return nb - largest_gap


# ---------------------------------------------------------------------------
# exact minimum cover


@dataclass
class CoverResult:
    count: int
    settings: list[str] | None
    optimal: bool
    lower_bound: int
    method: str
    universe_size: int = 0
    nodes: int = 0
    notes: list[str] = field(default_factory=list)

    def __iter__(self):  # allow tuple-style unpacking (count, settings)
        yield self.count
        yield self.settings


def _req_covered_by(req: frozenset, assign: dict[int, int]) -> bool:
    return all(assign.get(b) == c for b, c in req)


def _min_cover_exact(reqs: list[frozenset], blocks: list[int],
                     node_budget: int, settings_cap: int,
                     warm_starts: list[list[dict[int, int]]]) -> CoverResult:
    """Branch and bound over block assignments restricted to `blocks`."""
    nblocks = len(blocks)
    nsettings = 3 ** nblocks
    if nsettings > settings_cap:
        raise CoverTooLargeError(f"3^{nblocks} settings exceeds cap {settings_cap}")
    U = len(reqs)
    pos = {b: i for i, b in enumerate(blocks)}
    pow3 = [3 ** i for i in range(nblocks)]

    # per-requirement covering setting indices
    req_settings: list[list[int]] = []
    cov: dict[int, int] = {}
    for ri, req in enumerate(reqs):
        fixed = sum(pow3[pos[b]] * c for b, c in req)
        free = [pow3[pos[b]] for b in blocks if b not in dict(req)]
        idxs = []
        for combo in itertools.product((0, 1, 2), repeat=len(free)):
            idx = fixed + sum(p * c for p, c in zip(free, combo))
            idxs.append(idx)
            cov[idx] = cov.get(idx, 0) | (1 << ri)
        req_settings.append(idxs)

    # pairwise compatibility: two requirements can share a setting iff they
    # agree on every common block
    compat = [0] * U
    dicts = [dict(r) for r in reqs]
    for i in range(U):
        di = dicts[i]
        for j in range(i + 1, U):
            dj = dicts[j]
            if all(dj.get(b, c) == c for b, c in di.items()):
                compat[i] |= 1 << j
                compat[j] |= 1 << i

    full = (1 << U) - 1

    def clique_lb(uncovered: int) -> int:
        lb = 0
        allowed = uncovered
        while allowed:
            r = (allowed & -allowed).bit_length() - 1
            lb += 1
            allowed &= ~(compat[r] | (1 << r))
        return lb

    def greedy(uncovered: int) -> list[int]:
        chosen = []
        while uncovered:
            best_idx, best_gain = None, 0
            seen = set()
            r = (uncovered & -uncovered).bit_length() - 1
            for idx in req_settings[r]:
                if idx in seen:
                    continue
                seen.add(idx)
                gain = bin(cov[idx] & uncovered).count("1")
                if gain > best_gain:
                    best_idx, best_gain = idx, gain
            chosen.append(best_idx)
            uncovered &= ~cov[best_idx]
        return chosen

    best_sets = greedy(full)
    for ws in warm_starts:
        ws_idx = []
        covered = 0
        for assign in ws:
            idx = sum(pow3[pos[b]] * assign[b] for b in blocks)
            ws_idx.append(idx)
            covered |= cov.get(idx, 0)
        if covered == full and len(ws_idx) < len(best_sets):
            best_sets = ws_idx

    best = [len(best_sets), best_sets]
    nodes = [0]
    aborted = [False]

    def bnb(uncovered: int, chosen: list[int]):
        if aborted[0]:
            return
        nodes[0] += 1
        if nodes[0] > node_budget:
            aborted[0] = True
            return
        if not uncovered:
            if len(chosen) < best[0]:
                best[0] = len(chosen)
                best[1] = list(chosen)
            return
        if len(chosen) + clique_lb(uncovered) >= best[0]:
            return
        # branch on the uncovered requirement with fewest distinct coverages
        r_pick, cands = None, None
        for r in _bits(uncovered):
            byc: dict[int, int] = {}
            for idx in req_settings[r]:
                c = cov[idx] & uncovered
                prev = byc.get(c)
                if prev is None:
                    byc[c] = idx
            if cands is None or len(byc) < len(cands):
                r_pick, cands = r, byc
                if len(byc) == 1:
                    break
        ordered = sorted(cands.items(), key=lambda kv: (-bin(kv[0]).count("1"), kv[1]))
        for c, idx in ordered:
            chosen.append(idx)
            bnb(uncovered & ~c, chosen)
            chosen.pop()

    bnb(full, [])
    lb = clique_lb(full)
    optimal = not aborted[0] or best[0] == lb
    return CoverResult(
        count=best[0],
        settings=[_idx_to_assign(i, blocks, pow3, pos) for i in best[1]],
        optimal=optimal,
        lower_bound=lb,
        method="branch-and-bound" if optimal else "greedy (node budget exhausted)",
        universe_size=U,
        nodes=nodes[0],
    )


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def _idx_to_assign(idx: int, blocks: list[int], pow3, pos) -> dict[int, int]:
    return {b: (idx // pow3[pos[b]]) % 3 for b in blocks}


def family_min_cover(masks: list[int], fam: StabilizerFamily, N: int, boundary: str,
                     node_budget: int = DEFAULT_NODE_BUDGET,
                     settings_cap: int = DEFAULT_SETTINGS_CAP,
                     universe_cap: int = DEFAULT_UNIVERSE_CAP) -> CoverResult:
    """Minimum settings for all words of the given single-family terms.

    Falls back to the best certified construction (difference array, tiled
    family) when the exact instance exceeds its caps, flagged non-optimal.
    """
    masks = [m for m in masks if m]
    if not masks:
        return CoverResult(0, [], True, 0, "empty", 0)

    certified: list[tuple[int, str, list[dict[int, int]] | None]] = []
    tw = tiled_cover_width(masks, N, boundary)
    if tw is not None:
        width, seam = tw
        nb = block_count(N, boundary)
        cost = 3 ** min(width, nb)
        tiles = tiled_settings(width, N, boundary, seam) if cost <= settings_cap else None
        certified.append((cost, f"tiled window w={width}", tiles))
    arr = difference_array(N, boundary)
    if arr is not None and all(_array_coverable(m, N, boundary) for m in masks):
        certified.append((9, "difference array", arr))

    try:
        reqs: set[frozenset] = set()
        for m in masks:
            reqs |= term_requirements(m, N, boundary, universe_cap)
        universe = maximal_requirements(reqs)
        blocks = sorted({b for r in universe for b, _ in r})
        warm = [c[2] for c in certified if c[2] is not None]
        res = _min_cover_exact(universe, blocks, node_budget, settings_cap, warm)
        res.settings = [setting_string(a, fam, N, boundary) for a in res.settings]
        if not res.optimal:
            # an aborted search may still be beaten by a certified family
            for cost, method, tiles in certified:
                if cost < res.count:
                    res = CoverResult(cost, None, False, res.lower_bound,
                                      f"certified {method}", res.universe_size, res.nodes)
        return res
    except CoverTooLargeError as e:
        if not certified:
            raise
        cost, method, tiles = min(certified, key=lambda c: c[0])
        settings = None
        if tiles is not None and len(tiles) <= 60000:
            settings = [setting_string(a, fam, N, boundary) for a in tiles]
        return CoverResult(cost, settings, False, 0, f"certified {method}",
                           notes=[f"exact cover skipped: {e}"])


def _array_coverable(mask: int, N: int, boundary: str) -> bool:
    """Terms the 9-setting difference array provably covers: single
    projectors anywhere, and edge pairs on open chains (their product words
    only pin the shared block to the family letter)."""
    k = bin(mask).count("1")
    if k == 1:
        return True
    if boundary == "open" and k == 2:
        members = [i + 1 for i in range(N) if (mask >> i) & 1]
        return members in ([1, 2], [N - 1, N])
    return False


def lmc_exact(terms: list[TermMask],
              node_budget: int = DEFAULT_NODE_BUDGET,
              settings_cap: int = DEFAULT_SETTINGS_CAP) -> CoverResult:
    """Minimum number of settings measuring every term, families summed."""
    if not terms:
        return CoverResult(0, [], True, 0, "empty", 0)
    N = terms[0].n_pairs
    boundary = terms[0].boundary
    per_family: list[CoverResult] = []
    for fam in FAMILIES:
        masks = []
        for t in terms:
            if not t.is_single_family():
                raise MixedFamilyTermError(
                    f"term {t} mixes families; its words do not block-factor")
            m = t.family_mask(fam)
            if m:
                masks.append(m)
        if masks:
            per_family.append(family_min_cover(masks, fam, N, boundary,
                                               node_budget, settings_cap))
    count = sum(r.count for r in per_family)
    settings = None
    if all(r.settings is not None for r in per_family):
        settings = [s for r in per_family for s in r.settings]
    return CoverResult(
        count=count,
        settings=settings,
        optimal=all(r.optimal for r in per_family),
        lower_bound=sum(r.lower_bound for r in per_family),
        method=" + ".join(r.method for r in per_family) or "empty",
        universe_size=sum(r.universe_size for r in per_family),
        nodes=sum(r.nodes for r in per_family),
        notes=[n for r in per_family for n in r.notes],
    )


def witness_lmc(w, **kw) -> CoverResult:
    """Measurement cost of a whole witness: per-family cover, summed."""
    return lmc_exact([mask for _, mask in w.terms], **kw)
