"""HTTP face of the laboratory.

Every endpoint parses config text through the same validator the CLI
uses and maps domain exceptions to structured error bodies: 422 for
config violations (with the full list), 500 for simulation failures.
The service holds no state between requests; artifacts land on the
filesystem the server can see.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..config import parse_config
from ..errors import BdlabError, ConfigError
from ..experiments import (
    regsweep_experiment,
    resolve_out_root,
    run_experiment,
    sweep_experiment,
)
from ..reporting import results_csv, write_text
from ..verification import run_acceptance
from .schemas import (
    CriterionModel,
    ErrorBody,
    RegsweepRequest,
    RegsweepResponse,
    RunRequest,
    RunResponse,
    SweepRequest,
    SweepResponse,
    VerifyRequest,
    VerifyResponse,
)

app = FastAPI(title="bdlab", version="0.1.0")


@app.exception_handler(ConfigError)
async def _config_error(request: Request, exc: ConfigError):
    body = ErrorBody(error="invalid config", violations=list(exc.violations))
    return JSONResponse(status_code=422, content=body.model_dump())


@app.exception_handler(BdlabError)
async def _domain_error(request: Request, exc: BdlabError):
    body = ErrorBody(error=str(exc))
    return JSONResponse(status_code=500, content=body.model_dump())


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok"}


@app.post("/run", response_model=RunResponse)
def post_run(req: RunRequest) -> RunResponse:
    cfg = parse_config(req.config)
    out = os.path.join(resolve_out_root(cfg, req.out), "run")
    art = run_experiment(cfg, out, plots=req.plots)
    return RunResponse(
        out_dir=art["out_dir"], manifest=art["manifest"], energy=art["energy"],
        monitor=art["monitor"], snapshots=art["snapshots"],
        max_boundary_fraction=art["max_boundary_fraction"],
    )


@app.post("/sweep", response_model=SweepResponse)
def post_sweep(req: SweepRequest) -> SweepResponse:
    cfg = parse_config(req.config)
    out = os.path.join(resolve_out_root(cfg, req.out), "sweep")
    art = sweep_experiment(cfg, out, jobs=req.jobs, plots=req.plots)
    return SweepResponse(
        out_dir=art["out_dir"], report=art["report"], shift=art["shift"],
        members=art["members"], rows=art["rows"], plots=art.get("plots", []),
    )


@app.post("/regsweep", response_model=RegsweepResponse)
def post_regsweep(req: RegsweepRequest) -> RegsweepResponse:
    cfg = parse_config(req.config)
    out = os.path.join(resolve_out_root(cfg, req.out), "regsweep")
    art = regsweep_experiment(cfg, out, plots=req.plots)
    return RegsweepResponse(
        out_dir=art["out_dir"], table=art["table"], rows=art["rows"],
        plots=art.get("plots", []),
    )


@app.post("/verify", response_model=VerifyResponse)
def post_verify(req: VerifyRequest) -> VerifyResponse:
    if req.config is not None:
        # the suite pins its own parameters; a supplied config is
        # still validated so a broken one fails loudly here
        parse_config(req.config)
    results = run_acceptance(jobs=req.jobs)
    path = None
    if req.out:
        path = os.path.join(req.out, "results.csv")
        write_text(path, results_csv(results))
    return VerifyResponse(
        passed=all(r.passed for r in results),
        results=[CriterionModel(**r.__dict__) for r in results],
        results_path=path,
    )
