"""Command-line client.

Each subcommand builds the same request models the HTTP service accepts
and either executes them in-process (default) or posts them to a running
service given via --server. File formats are exactly the service schemas.
"""
from __future__ import annotations

import json
import sys

import click

from .errors import SecrecyOptError
from .service import models as sm
from .service.app import handle_evaluate, handle_simulate, handle_solve


def _dispatch(server, path, request_model, response_cls, handler):
    if server is None:
        return handler(request_model)
    import httpx

    resp = httpx.post(
        server.rstrip("/") + path,
        json=json.loads(request_model.model_dump_json()),
        timeout=None,
    )
    if resp.status_code != 200:
        raise click.ClickException(f"server returned {resp.status_code}: {resp.text}")
    return response_cls.model_validate(resp.json())


def _load_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


server_option = click.option(
    "--server", default=None, metavar="URL", help="Run against a remote service instead of in-process."
)


@click.group()
def main():
    """Worst-case secrecy-rate-optimal transmit design."""


@main.command()
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True))
@click.option("--grid", default=40, show_default=True, help="Line-search grid points.")
@click.option("--exhaustive", "exhaustive", default=None, type=int, metavar="N",
              help="Use an N-point grid only (no refinement).")
@click.option("--extract-beam/--no-extract-beam", default=True, show_default=True,
              help="Recover the rank-one beamformer after the covariance stage.")
@click.option("--out", "out_path", required=True, type=click.Path())
@server_option
def solve(instance_path, grid, exhaustive, extract_beam, out_path, server):
    """Solve the robust design problem for one instance."""
    req = sm.SolveRequest(
        instance=sm.InstanceModel(**_load_json(instance_path)),
        grid=grid,
        exhaustive=exhaustive,
        extract_beam=extract_beam,
    )
    try:
        resp = _dispatch(server, "/solve", req, sm.SolveResponse, handle_solve)
    except SecrecyOptError as e:
        raise click.ClickException(str(e)) from e
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(resp.model_dump_json(indent=2))
        f.write("\n")
    click.echo(f"rate {resp.rate:.6f} bps/Hz at beta* = {resp.beta_star:.6f} -> {out_path}")


@main.command()
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True))
@click.option("--design", "design_path", default=None, type=click.Path(exists=True),
              help="Design JSON (as written by `solve`).")
@click.option("--baseline", type=click.Choice(["isotropic", "mrt"]), default=None,
              help="Evaluate a reference design instead of a file.")
@server_option
def evaluate(instance_path, design_path, baseline, server):
    """Worst-case evaluation of a design; prints the report as JSON."""
    if (design_path is None) == (baseline is None):
        raise click.UsageError("provide exactly one of --design or --baseline")
    design = None
    if design_path is not None:
        raw = _load_json(design_path)
        design = sm.DesignModel(
            w=raw["w"], sigma=raw["sigma"], beam=raw.get("beam")
        )
    req = sm.EvaluateRequest(
        instance=sm.InstanceModel(**_load_json(instance_path)),
        design=design,
        baseline=baseline,
    )
    try:
        resp = _dispatch(server, "/evaluate", req, sm.EvaluateResponse, handle_evaluate)
    except SecrecyOptError as e:
        raise click.ClickException(str(e)) from e
    click.echo(resp.model_dump_json(indent=2))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--trials", default=None, type=int, help="Override trial count from the config.")
@click.option("--baseline", "baselines", type=click.Choice(["isotropic", "mrt"]), multiple=True,
              help="Override the config's methods with robust + the given baseline(s).")
@server_option
def simulate(config_path, out_path, trials, baselines, server):
    """Monte Carlo sweep; writes the aggregate CSV."""
    raw = _load_json(config_path)
    if trials is not None:
        raw["trials"] = trials
    if baselines:
        raw["methods"] = ["robust", *baselines]
    req = sm.SimulateRequest(config=sm.SweepConfigModel(**raw))
    try:
        resp = _dispatch(server, "/simulate", req, sm.SimulateResponse, handle_simulate)
    except SecrecyOptError as e:
        raise click.ClickException(str(e)) from e
    with open(out_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(resp.csv)
    click.echo(f"wrote {len(resp.rows)} rows -> {out_path}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("secrecy_opt.service.app:app", host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
