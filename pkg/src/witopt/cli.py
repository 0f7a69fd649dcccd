"""Command-line frontend: a thin client over the service layer.

Every subcommand builds the service request model, executes it in-process
by default (or POSTs it to a running server with --server), and renders
the response.  Exit codes: 0 success, 2 validation failure, 3 infeasible
budget, 4 dense cap exceeded.

Examples:

    witopt gen-state -N 3
    witopt pmax --kind w2 -N 5
    witopt search -N 8 --budget 486 --accounting span
    witopt table -N 8 -N 10 --format csv -o table.csv
    witopt verify witness.json
"""

from __future__ import annotations

import io
import json
import os
import sys
from pathlib import Path

import click

from . import service
from .service import (
    LmcRequest,
    PmaxRequest,
    SearchRequest,
    ServiceError,
    StabilizersRequest,
    StateRequest,
    TableRequest,
    VerifyRequest,
    WitnessModel,
)

EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_CAP = 4


def _default_outdir() -> Path:
    return Path(os.environ.get("WITOPT_OUTPUT_DIR", "."))


def _call(ctx, path: str, handler, req):
    server = ctx.obj.get("server")
    if server:
        import httpx

        resp = httpx.post(server.rstrip("/") + path, json=req.model_dump(), timeout=600.0)
        if resp.status_code != 200:
            try:
                detail = resp.json().get("detail", {})
            except Exception:
                detail = {}
            message = detail.get("message", resp.text)
            click.echo(f"error: {message}", err=True)
            sys.exit(detail.get("exit_code", EXIT_VALIDATION))
        return resp.json()
    try:
        return handler(req).model_dump()
    except ServiceError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(e.exit_code)
    except ValueError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_VALIDATION)


def _emit(data: dict, output: str | None):
    text = json.dumps(_drop_none(data), indent=2, sort_keys=True) + "\n"
    if output:
        Path(output).write_text(text)
        click.echo(f"wrote {output}", err=True)
    else:
        click.echo(text, nl=False)


def _drop_none(obj):
    if isinstance(obj, dict):
        return {k: _drop_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_drop_none(v) for v in obj]
    return obj


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Send requests to a running witopt service instead of "
                   "computing in-process.")
@click.pass_context
def main(ctx, server):
    """Witness synthesis and measurement planning for coupled-singlet chains."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


boundary_opt = click.option("--boundary", type=click.Choice(["open", "periodic"]),
                            default="open", show_default=True)
pairs_opt = click.option("-N", "--n-pairs", type=int, required=True,
                         help="Number of singlet pairs.")
timestamp_opt = click.option("--no-timestamp", is_flag=True,
                             help="Suppress the generated_at field for "
                                  "byte-identical reruns.")
output_opt = click.option("-o", "--output", default=None, metavar="PATH",
                          help="Write the report to a file instead of stdout.")


@main.command("gen-state")
@pairs_opt
@boundary_opt
@click.option("--amplitudes", is_flag=True, help="Include the state vector.")
@click.option("--dense-cap", type=int, default=16, show_default=True)
@timestamp_opt
@output_opt
@click.pass_context
def gen_state(ctx, n_pairs, boundary, amplitudes, dense_cap, no_timestamp, output):
    """Build the target state and report magnetization and alpha checks."""
    req = StateRequest(n_pairs=n_pairs, boundary=boundary,
                       include_amplitudes=amplitudes, dense_cap=dense_cap,
                       timestamp=not no_timestamp)
    _emit(_call(ctx, "/state", service.do_state, req), output)


@main.command()
@pairs_opt
@boundary_opt
@timestamp_opt
@output_opt
@click.pass_context
def stabilizers(ctx, n_pairs, boundary, no_timestamp, output):
    """List the transformed stabilizers with their Pauli expansions."""
    req = StabilizersRequest(n_pairs=n_pairs, boundary=boundary,
                             timestamp=not no_timestamp)
    _emit(_call(ctx, "/stabilizers", service.do_stabilizers, req), output)


@main.command()
@pairs_opt
@boundary_opt
@click.option("--family", type=click.Choice(["xx", "zz"]), default="xx",
              show_default=True)
@click.option("--mask", "masks", multiple=True, metavar="I,J,...",
              help="Projector product by singlet indices; repeatable.")
@click.option("--kind", type=str, default=None,
              help="Measure a canonical witness instead of masks.")
@click.option("--witness", "witness_file", type=click.Path(exists=True), default=None)
@timestamp_opt
@output_opt
@click.pass_context
def lmc(ctx, n_pairs, boundary, family, masks, kind, witness_file, no_timestamp, output):
    """Settings counts (formula, tiled, exact) for terms or a witness."""
    wm = None
    if witness_file:
        wm = WitnessModel.model_validate_json(Path(witness_file).read_text())
    req = LmcRequest(
        n_pairs=n_pairs, boundary=boundary, family=family,
        masks=[[int(x) for x in m.split(",") if x] for m in masks] or None,
        kind=kind, witness=wm, timestamp=not no_timestamp)
    _emit(_call(ctx, "/lmc", service.do_lmc, req), output)


@main.command()
@click.option("--kind", type=str, default=None,
              help="Canonical witness: projector|xz|singles|w1|w2.")
@click.option("-N", "--n-pairs", type=int, default=None)
@boundary_opt
@click.option("--witness", "witness_file", type=click.Path(exists=True), default=None,
              help="Witness JSON file.")
@click.option("--no-lmc", is_flag=True, help="Skip the settings-count report.")
@timestamp_opt
@output_opt
@click.pass_context
def pmax(ctx, kind, n_pairs, boundary, witness_file, no_lmc, no_timestamp, output):
    """Exact noise tolerance (and settings count) of a witness."""
    wm = None
    if witness_file:
        wm = WitnessModel.model_validate_json(Path(witness_file).read_text())
    req = PmaxRequest(kind=kind, n_pairs=n_pairs, boundary=boundary, witness=wm,
                      with_lmc=not no_lmc, timestamp=not no_timestamp)
    data = _call(ctx, "/pmax", service.do_pmax, req)
    pm = data["p_max_float"]
    click.echo(f"p_max = {data['p_max']} ({pm * 100:.1f}%)   "
               f"F_min = {data['f_min']} ({data['f_min_float'] * 100:.1f}%)", err=True)
    _emit(data, output)


@main.command()
@pairs_opt
@boundary_opt
@click.option("--budget", type=int, required=True,
              help="Total settings budget over both families.")
@click.option("--accounting", type=click.Choice(["formula", "span"]),
              default="formula", show_default=True,
              help="Per-term admission rule: closed-form gap count or tiled "
                   "window size.")
@click.option("--audit", "audit_file", default=None, metavar="PATH",
              help="Write the audit log as JSON lines.")
@timestamp_opt
@output_opt
@click.pass_context
def search(ctx, n_pairs, boundary, budget, accounting, audit_file, no_timestamp, output):
    """Best chain witness under a total measurement-settings budget."""
    req = SearchRequest(n_pairs=n_pairs, boundary=boundary, budget=budget,
                        accounting=accounting, timestamp=not no_timestamp)
    data = _call(ctx, "/search", service.do_search, req)
    if audit_file:
        Path(audit_file).write_text(
            "\n".join(json.dumps(e, sort_keys=True) for e in data["audit"]) + "\n")
    click.echo(f"p_max = {data['p_max']} ({data['p_max_float'] * 100:.2f}%)   "
               f"F_min = {data['f_min_percent']:.2f}%   "
               f"settings = {data['achieved_lmc']} ({data['achieved_lmc_exactness']})",
               err=True)
    _emit(data, output)


@main.command()
@click.option("-N", "--n-pairs", "n_pairs_list", type=int, multiple=True, required=True,
              help="Chain size; repeatable.")
@click.option("--budget", "budgets", type=int, multiple=True,
              help="Budget column; repeatable. Default: the published ladder.")
@boundary_opt
@click.option("--accounting", type=click.Choice(["formula", "span"]),
              default="span", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
              show_default=True)
@click.option("--witness-dir", default=None, metavar="DIR",
              help="Write per-row witness JSON files (and gap reports) here. "
                   "Defaults to $WITOPT_OUTPUT_DIR when set.")
@timestamp_opt
@output_opt
@click.pass_context
def table(ctx, n_pairs_list, budgets, boundary, accounting, fmt, witness_dir,
          no_timestamp, output):
    """Noise-tolerance versus measurement-budget table, with reference deltas."""
    req = TableRequest(n_pairs_list=list(n_pairs_list),
                       budgets=list(budgets) or None,
                       boundary=boundary, accounting=accounting,
                       timestamp=not no_timestamp)
    data = _call(ctx, "/table", service.do_table, req)

    outdir = Path(witness_dir) if witness_dir else (
        _default_outdir() if os.environ.get("WITOPT_OUTPUT_DIR") else None)
    for row in data["rows"]:
        row["witness_path"] = None
        if outdir is not None and row.get("witness"):
            outdir.mkdir(parents=True, exist_ok=True)
            stem = f"witness_N{row['n_pairs']}_b{row['budget']}"
            wpath = outdir / f"{stem}.json"
            wpath.write_text(json.dumps(row["witness"], indent=2, sort_keys=True) + "\n")
            row["witness_path"] = str(wpath)
            if row.get("gap_report"):
                gpath = outdir / f"{stem}_gap.json"
                gpath.write_text(json.dumps(row["gap_report"], indent=2, sort_keys=True) + "\n")
                row["gap_report_path"] = str(gpath)

    if fmt == "csv":
        text = _table_csv(data)
        if output:
            Path(output).write_text(text)
            click.echo(f"wrote {output}", err=True)
        else:
            click.echo(text, nl=False)
    else:
        for row in data["rows"]:
            row.pop("witness", None)
            row.pop("gap_report", None)
        _emit(data, output)


CSV_COLUMNS = [
    "n_pairs", "boundary", "budget", "achieved_lmc", "achieved_lmc_exactness",
    "p_max", "f_min_percent", "reference_f_min_percent", "delta_pp",
    "within_tolerance", "ceiling_f_min_percent", "witness_path", "error",
]


def _table_csv(data: dict) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in data["rows"]:
        cells = []
        for col in CSV_COLUMNS:
            v = row.get(col)
            if isinstance(v, float):
                v = f"{v:.6f}"
            cells.append("" if v is None else str(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


@main.command()
@click.argument("witness_file", type=click.Path(exists=True))
@click.option("--dense-cap", type=int, default=12, show_default=True)
@timestamp_opt
@output_opt
@click.pass_context
def verify(ctx, witness_file, dense_cap, no_timestamp, output):
    """Validate a witness JSON file; exit 0 iff every check passes."""
    wm = WitnessModel.model_validate_json(Path(witness_file).read_text())
    req = VerifyRequest(witness=wm, dense_cap=dense_cap, timestamp=not no_timestamp)
    data = _call(ctx, "/verify", service.do_verify, req)
    _emit(data, output)
    if not data["passed"]:
        failed = [k for k, v in data["checks"].items() if v["passed"] is False]
        click.echo(f"validation failed: {', '.join(failed)}", err=True)
        sys.exit(EXIT_VALIDATION)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("witopt.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
