"""HTTP service exposing the witness toolkit.

Request/response models double as the wire schema for the CLI, which calls
the handler functions in-process by default and over HTTP with --server.
All rationals travel as "num/den" strings next to float convenience
fields, so results survive round-trips exactly.
"""

from __future__ import annotations

import datetime as _dt
from fractions import Fraction

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import dense, lms, reference, search
from .stabilizers import FAMILIES, StabilizerFamily, TermMask, build_stabilizers
from .witness import (
    CANONICAL_KINDS,
    NonDetectingWitnessError,
    Witness,
    canonical_witness,
    p_max,
    validate,
)

API_VERSION = "1"


def _frac(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class ServiceError(Exception):
    """Carries the CLI exit code alongside the message."""

    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


# ---------------------------------------------------------------------------
# wire models


class WitnessTermModel(BaseModel):
    coeff: str
    xx_mask: str
    zz_mask: str


class WitnessModel(BaseModel):
    version: int = 1
    n_pairs: int
    boundary: str
    alpha: str
    beta: str
    terms: list[WitnessTermModel]
    lmc: int | None = None
    p_max: str | None = None

    @classmethod
    def from_witness(cls, w: Witness, lmc: int | None = None) -> "WitnessModel":
        return cls(**w.to_dict(lmc=lmc))

    def to_witness(self) -> Witness:
        return Witness.from_dict(self.model_dump())


class StateRequest(BaseModel):
    n_pairs: int = Field(ge=1)
    boundary: str = "open"
    include_amplitudes: bool = False
    dense_cap: int = dense.DEFAULT_VECTOR_CAP
    timestamp: bool = True


class StateResponse(BaseModel):
    n_pairs: int
    boundary: str
    n_qubits: int
    magnetization: float
    magnetization_variance: float
    alpha: float | None
    stabilizer_residuals: list[float]
    amplitudes: list[list[float]] | None = None
    generated_at: str | None = None


class StabilizersRequest(BaseModel):
    n_pairs: int = Field(ge=1)
    boundary: str = "open"
    timestamp: bool = True


class StabilizerModel(BaseModel):
    family: str
    index: int
    n_terms: int
    terms: dict[str, str]


class StabilizersResponse(BaseModel):
    n_pairs: int
    boundary: str
    stabilizers: list[StabilizerModel]
    generated_at: str | None = None


class LmcRequest(BaseModel):
    n_pairs: int = Field(ge=1)
    boundary: str = "open"
    family: str = "xx"
    masks: list[list[int]] | None = None  # lists of singlet indices
    kind: str | None = None               # canonical witness instead of masks
    witness: WitnessModel | None = None
    node_budget: int = lms.DEFAULT_NODE_BUDGET
    timestamp: bool = True


class MaskLmcModel(BaseModel):
    singlets: list[int]
    formula: int
    span: int
    exact: int | None
    exact_optimal: bool | None


class LmcResponse(BaseModel):
    n_pairs: int
    boundary: str
    per_mask: list[MaskLmcModel] | None = None
    witness_lmc: int | None = None
    witness_lmc_optimal: bool | None = None
    witness_lmc_method: str | None = None
    settings: list[str] | None = None
    generated_at: str | None = None


class PmaxRequest(BaseModel):
    kind: str | None = None
    n_pairs: int | None = None
    boundary: str = "open"
    witness: WitnessModel | None = None
    with_lmc: bool = True
    timestamp: bool = True


class PmaxResponse(BaseModel):
    n_pairs: int
    boundary: str
    p_max: str
    p_max_float: float
    f_min: str
    f_min_float: float
    lmc: int | None = None
    lmc_optimal: bool | None = None
    lmc_formula_per_term: list[int] | None = None
    witness: WitnessModel
    generated_at: str | None = None


class SearchRequest(BaseModel):
    n_pairs: int = Field(ge=2)
    boundary: str = "open"
    budget: int = Field(ge=18)
    accounting: str = "formula"
    timestamp: bool = True


class SearchResponse(BaseModel):
    n_pairs: int
    boundary: str
    budget: int
    budget_per_family: int
    accounting: str
    p_max: str
    p_max_float: float
    f_min_percent: float
    achieved_lmc: int
    achieved_lmc_exactness: str
    t_star: list[list[int]]
    p_cd: list[int]
    witness: WitnessModel
    audit: list[dict]
    generated_at: str | None = None


class TableRequest(BaseModel):
    n_pairs_list: list[int]
    budgets: list[int] | None = None
    boundary: str = "open"
    accounting: str = "span"
    timestamp: bool = True


class TableRow(BaseModel):
    n_pairs: int
    boundary: str
    budget: int
    achieved_lmc: int
    achieved_lmc_exactness: str
    p_max: str
    f_min_percent: float
    reference_f_min_percent: float | None
    delta_pp: float | None
    within_tolerance: bool | None
    ceiling_f_min_percent: float
    error: str | None = None
    witness: WitnessModel | None = None
    gap_report: dict | None = None


class TableResponse(BaseModel):
    rows: list[TableRow]
    generated_at: str | None = None


class VerifyRequest(BaseModel):
    witness: WitnessModel
    dense_cap: int = dense.DEFAULT_MATRIX_CAP
    timestamp: bool = True


class VerifyResponse(BaseModel):
    passed: bool
    checks: dict[str, dict]
    p_max: str | None
    generated_at: str | None = None


# ---------------------------------------------------------------------------
# handlers (shared by the HTTP routes and the in-process CLI)


def _singlets_to_mask(singlets: list[int], N: int) -> int:
    m = 0
    for i in singlets:
        if not 1 <= i <= N:
            raise ServiceError(f"singlet index {i} out of range 1..{N}", 2)
        m |= 1 << (i - 1)
    return m


def do_state(req: StateRequest) -> StateResponse:
    n = 2 * req.n_pairs
    if n > req.dense_cap:
        raise ServiceError(
            f"{n} qubits exceeds the dense cap {req.dense_cap}; "
            "use the symbolic commands (stabilizers, pmax, search) instead", 4)
    psi = dense.build_target_state(req.n_pairs, req.boundary, cap=req.dense_cap)
    diag = dense.total_z_diagonal(n)
    amps = psi.amplitudes
    mz = float(np.real(np.vdot(amps, diag * amps)))
    mz2 = float(np.real(np.vdot(amps, diag * diag * amps)))
    alpha = None
    if n <= dense.DEFAULT_MATRIX_CAP:
        alpha = dense.max_schmidt_sq(psi)
    stab = build_stabilizers(req.n_pairs, req.boundary)
    residuals = [
        float(np.linalg.norm(dense.apply_opsum(s, amps) - amps)) for s in stab.all()
    ]
    return StateResponse(
        n_pairs=req.n_pairs,
        boundary=req.boundary,
        n_qubits=n,
        magnetization=mz,
        magnetization_variance=mz2 - mz ** 2,
        alpha=alpha,
        stabilizer_residuals=residuals,
        amplitudes=[[float(a.real), float(a.imag)] for a in amps]
        if req.include_amplitudes else None,
        generated_at=_now() if req.timestamp else None,
    )


def do_stabilizers(req: StabilizersRequest) -> StabilizersResponse:
    stab = build_stabilizers(req.n_pairs, req.boundary)
    out = []
    for fam in FAMILIES:
        ops = stab.xx if fam is StabilizerFamily.XX else stab.zz
        for i, op in enumerate(ops, start=1):
            out.append(StabilizerModel(
                family=fam.value,
                index=i,
                n_terms=op.num_terms(),
                terms={k: str(v) for k, v in sorted(op.terms.items())},
            ))
    return StabilizersResponse(
        n_pairs=req.n_pairs, boundary=req.boundary, stabilizers=out,
        generated_at=_now() if req.timestamp else None)


def do_lmc(req: LmcRequest) -> LmcResponse:
    N, boundary = req.n_pairs, req.boundary
    if req.witness is not None or req.kind is not None:
        w = (req.witness.to_witness() if req.witness is not None
             else canonical_witness(req.kind, N, boundary))
        try:
            res = lms.witness_lmc(w, node_budget=req.node_budget)
        except lms.MixedFamilyTermError as e:
            raise ServiceError(str(e), 2)
        return LmcResponse(
            n_pairs=w.n_pairs, boundary=w.boundary,
            witness_lmc=res.count, witness_lmc_optimal=res.optimal,
            witness_lmc_method=res.method, settings=res.settings,
            generated_at=_now() if req.timestamp else None)
    if not req.masks:
        raise ServiceError("provide masks, a witness, or a canonical kind", 2)
    fam = StabilizerFamily(req.family)
    per_mask = []
    for singlets in req.masks:
        m = _singlets_to_mask(singlets, N)
        exact = exact_opt = None
        try:
            res = lms.family_min_cover([m], fam, N, boundary,
                                       node_budget=req.node_budget)
            exact, exact_opt = res.count, res.optimal
        except lms.CoverTooLargeError:
            pass
        per_mask.append(MaskLmcModel(
            singlets=sorted(singlets),
            formula=lms.lmc_formula(m, N, boundary),
            span=lms.span_lmc(m, N, boundary),
            exact=exact,
            exact_optimal=exact_opt,
        ))
    return LmcResponse(n_pairs=N, boundary=boundary, per_mask=per_mask,
                       generated_at=_now() if req.timestamp else None)


def _load_witness(kind: str | None, n_pairs: int | None, boundary: str,
                  witness: WitnessModel | None) -> Witness:
    if witness is not None:
        return witness.to_witness()
    if kind is None:
        raise ServiceError("provide a witness or a canonical kind", 2)
    if kind not in CANONICAL_KINDS:
        raise ServiceError(f"unknown canonical kind {kind!r}", 2)
    if n_pairs is None:
        raise ServiceError("canonical witnesses need n_pairs", 2)
    return canonical_witness(kind, n_pairs, boundary)


def do_pmax(req: PmaxRequest) -> PmaxResponse:
    w = _load_witness(req.kind, req.n_pairs, req.boundary, req.witness)
    try:
        pm = p_max(w)
    except NonDetectingWitnessError as e:
        raise ServiceError(str(e), 2)
    lmc = lmc_opt = None
    formulas = None
    if req.with_lmc:
        try:
            res = lms.witness_lmc(w)
            lmc, lmc_opt = res.count, res.optimal
        except (lms.MixedFamilyTermError, lms.CoverTooLargeError):
            pass
        try:
            formulas = [lms.lmc_formula(mask.xx_mask or mask.zz_mask, w.n_pairs, w.boundary)
                        for _, mask in w.terms if mask.is_single_family()]
        except ValueError:
            formulas = None
    return PmaxResponse(
        n_pairs=w.n_pairs,
        boundary=w.boundary,
        p_max=_frac(pm), p_max_float=float(pm),
        f_min=_frac(1 - pm), f_min_float=float(1 - pm),
        lmc=lmc, lmc_optimal=lmc_opt, lmc_formula_per_term=formulas,
        witness=WitnessModel.from_witness(w, lmc=lmc),
        generated_at=_now() if req.timestamp else None)


def _masks_to_singlets(mask: int, N: int) -> list[int]:
    return [i + 1 for i in range(N) if (mask >> i) & 1]


def do_search(req: SearchRequest) -> SearchResponse:
    try:
        res = search.search_optimal(req.n_pairs, req.boundary, req.budget,
                                    accounting=req.accounting)
    except search.InfeasibleBudgetError as e:
        raise ServiceError(str(e), 3)
    return SearchResponse(
        n_pairs=req.n_pairs,
        boundary=req.boundary,
        budget=req.budget,
        budget_per_family=res.budget_per_family,
        accounting=req.accounting,
        p_max=_frac(res.p_max), p_max_float=float(res.p_max),
        f_min_percent=float(1 - res.p_max) * 100,
        achieved_lmc=res.achieved_lmc,
        achieved_lmc_exactness=res.achieved_lmc_exactness,
        t_star=[_masks_to_singlets(m, req.n_pairs) for m in res.t_star],
        p_cd=_masks_to_singlets(res.p_cd, req.n_pairs),
        witness=WitnessModel.from_witness(res.witness, lmc=res.achieved_lmc),
        audit=res.audit,
        generated_at=_now() if req.timestamp else None)


def do_table(req: TableRequest) -> TableResponse:
    rows: list[TableRow] = []
    for N in req.n_pairs_list:
        budgets = req.budgets or reference.default_budgets(N)
        ceiling_p = Fraction(3, 16) / (1 - Fraction(1, 2 ** N))
        ceiling_f = float(1 - ceiling_p) * 100
        for b in budgets:
            target = reference.target_f_min(N, b)
            try:
                res = search.search_optimal(N, req.boundary, b,
                                            accounting=req.accounting)
            except search.InfeasibleBudgetError as e:
                rows.append(TableRow(
                    n_pairs=N, boundary=req.boundary, budget=b,
                    achieved_lmc=0, achieved_lmc_exactness="n/a",
                    p_max="0/1", f_min_percent=100.0,
                    reference_f_min_percent=target, delta_pp=None,
                    within_tolerance=None, ceiling_f_min_percent=ceiling_f,
                    error=str(e)))
                continue
            f = float(1 - res.p_max) * 100
            delta = None if target is None else f - target
            within = None if target is None else delta <= reference.F_MIN_TOLERANCE_PP
            gap = None
            if within is False:
                gap = {
                    "reason": "found witness is above the reference F_min tolerance",
                    "reference_f_min_percent": target,
                    "achieved_f_min_percent": f,
                    "delta_pp": delta,
                    "witness": res.witness.to_dict(lmc=res.achieved_lmc),
                    "audit": res.audit,
                }
            rows.append(TableRow(
                n_pairs=N, boundary=req.boundary, budget=b,
                achieved_lmc=res.achieved_lmc,
                achieved_lmc_exactness=res.achieved_lmc_exactness,
                p_max=_frac(res.p_max), f_min_percent=f,
                reference_f_min_percent=target, delta_pp=delta,
                within_tolerance=within, ceiling_f_min_percent=ceiling_f,
                witness=WitnessModel.from_witness(res.witness, lmc=res.achieved_lmc),
                gap_report=gap))
    return TableResponse(rows=rows, generated_at=_now() if req.timestamp else None)


def do_verify(req: VerifyRequest) -> VerifyResponse:
    w = req.witness.to_witness()
    rep = validate(w, dense_cap=req.dense_cap)
    pm = None
    try:
        pm = _frac(p_max(w))
    except NonDetectingWitnessError:
        pass
    return VerifyResponse(passed=rep.passed, checks=rep.checks, p_max=pm,
                          generated_at=_now() if req.timestamp else None)


# ---------------------------------------------------------------------------
# FastAPI wiring

app = FastAPI(title="witopt", version=API_VERSION,
              description="Witness synthesis and measurement planning for "
                          "coupled-singlet chains")

_HTTP_CODES = {2: 422, 3: 400, 4: 413}


def _wrap(handler, req):
    try:
        return handler(req)
    except ServiceError as e:
        raise HTTPException(status_code=_HTTP_CODES.get(e.exit_code, 400),
                            detail={"message": str(e), "exit_code": e.exit_code})
    except (ValueError, dense.DenseCapError) as e:
        raise HTTPException(status_code=422, detail={"message": str(e), "exit_code": 2})


@app.get("/health")
def health():
    return {"status": "ok", "version": API_VERSION}


@app.post("/state", response_model=StateResponse, response_model_exclude_none=True)
def state_route(req: StateRequest):
    return _wrap(do_state, req)


@app.post("/stabilizers", response_model=StabilizersResponse, response_model_exclude_none=True)
def stabilizers_route(req: StabilizersRequest):
    return _wrap(do_stabilizers, req)


@app.post("/lmc", response_model=LmcResponse, response_model_exclude_none=True)
def lmc_route(req: LmcRequest):
    return _wrap(do_lmc, req)


@app.post("/pmax", response_model=PmaxResponse, response_model_exclude_none=True)
def pmax_route(req: PmaxRequest):
    return _wrap(do_pmax, req)


@app.post("/search", response_model=SearchResponse, response_model_exclude_none=True)
def search_route(req: SearchRequest):
    return _wrap(do_search, req)


@app.post("/table", response_model=TableResponse, response_model_exclude_none=True)
def table_route(req: TableRequest):
    return _wrap(do_table, req)


@app.post("/verify", response_model=VerifyResponse, response_model_exclude_none=True)
def verify_route(req: VerifyRequest):
    return _wrap(do_verify, req)
