"""FastAPI service wrapping the core package.

All heavy computation lives in the core modules; the service provides the
HTTP surface: quick synchronous endpoints for parameters, closed forms,
decode-count estimates and single simulations, plus background jobs for
sweeps and table precomputation.  Output files are written on the service
host's filesystem.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.requests import Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..analytic import fixed_metrics
from ..model import ConfigError
from ..policy import adaptive_params, fixed_params
from ..sic import MhLookupError, estimate_mh
from ..sim import SimConfig, replicate
from ..sweep import (
    SweepSpec,
    analytic_mh_table,
    compare,
    mh_precompute,
    sweep,
)
from .jobs import JobRegistry
from .schemas import (
    AdaptiveParamsRequest,
    AnalyticRequest,
    CompareReportModel,
    CompareRequest,
    FixedMetricsModel,
    FixedParamsRequest,
    HealthModel,
    JobModel,
    MhEstimateRequest,
    MhEstimateResponse,
    MhPrecomputeRequest,
    SchemeParamsModel,
    SimMetricsModel,
    SimulateRequest,
    SweepRequest,
)

DEFAULT_CACHE_DIR = Path("var/mh-cache")


def _report_model(report) -> CompareReportModel:
    return CompareReportModel(
        passed=report.passed,
        entries=[e for e in report.to_dict()["entries"]],
        text=report.to_text(),
    )


def create_app(mh_cache_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(
        title="sicra",
        version=__version__,
        description="Slotted random multiple access with SIC: simulation and analysis",
    )
    app.state.registry = JobRegistry()
    app.state.mh_cache_dir = Path(mh_cache_dir) if mh_cache_dir else DEFAULT_CACHE_DIR
    app.state.mh_lock = threading.Lock()

    @app.exception_handler(ValueError)
    async def _domain_error(_request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(MhLookupError)
    async def _missing_entry(_request: Request, exc: MhLookupError) -> JSONResponse:
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthModel)
    def health() -> HealthModel:
        return HealthModel(status="ok", version=__version__)

    @app.post("/policy/fixed", response_model=SchemeParamsModel)
    def policy_fixed(req: FixedParamsRequest) -> SchemeParamsModel:
        return SchemeParamsModel.from_params(fixed_params(req.system.to_config()))

    @app.post("/policy/adaptive", response_model=SchemeParamsModel)
    def policy_adaptive(req: AdaptiveParamsRequest) -> SchemeParamsModel:
        return SchemeParamsModel.from_params(
            adaptive_params(req.system.to_config(), req.k)
        )

    @app.post("/analytic/fixed", response_model=FixedMetricsModel)
    def analytic_fixed(req: AnalyticRequest) -> FixedMetricsModel:
        config = req.system.to_config()
        if req.s_seconds is not None:
            config = config.with_mean_generation_time(req.s_seconds)
        with app.state.mh_lock:
            table = analytic_mh_table(
                config,
                app.state.mh_cache_dir,
                samples=req.mh_samples,
                seed_base=req.mh_seed,
            )
        return FixedMetricsModel.from_metrics(fixed_metrics(config, table))

    @app.post("/mh/estimate", response_model=MhEstimateResponse)
    def mh_estimate(req: MhEstimateRequest) -> MhEstimateResponse:
        estimate, stderr = estimate_mh(
            req.h, req.gamma, req.epsilon, samples=req.samples, seed=req.seed
        )
        return MhEstimateResponse(
            h=req.h,
            gamma=req.gamma,
            epsilon=req.epsilon,
            samples=req.samples,
            seed=req.seed,
            estimate=estimate,
            stderr=stderr,
        )

    @app.post("/simulate", response_model=SimMetricsModel)
    def simulate(req: SimulateRequest) -> SimMetricsModel:
        config = req.system.to_config()
        if req.s_seconds is not None:
            config = config.with_mean_generation_time(req.s_seconds)
        sim_config = SimConfig(
            system=config,
            scheme=req.scheme,
            seed=req.seed,
            target_slots=req.target_slots,
            horizon_s=req.horizon_s,
            warmup_s=req.warmup_s,
        )
        return SimMetricsModel.from_metrics(replicate(sim_config, req.replications))

    @app.post("/compare", response_model=CompareReportModel)
    def compare_rows(req: CompareRequest) -> CompareReportModel:
        return _report_model(compare(req.analytic_rows, req.sim_rows, z_max=req.z_max))

    @app.post("/jobs/sweep", response_model=JobModel)
    def submit_sweep(req: SweepRequest) -> JobModel:
        config = req.system.to_config()
        spec_kwargs = dict(
            out_dir=Path(req.out_dir),
            schemes=tuple(req.schemes),
            replications=req.replications,
            slots_per_rep=req.slots_per_rep,
            horizon_s=req.horizon_s,
            warmup_s=req.warmup_s,
            seed_base=req.seed_base,
            workers=req.workers,
            mh_samples=req.mh_samples,
            mh_cache_dir=app.state.mh_cache_dir,
        )
        if req.s_grid is not None:
            spec_kwargs["s_grid"] = tuple(req.s_grid)
        spec = SweepSpec(**spec_kwargs)

        def job() -> dict:
            result = sweep(spec, config)
            payload: dict = {
                "out_dir": str(result.out_dir),
                "files": [str(p) for p in result.files],
                "rows": len(result.rows),
            }
            if req.run_compare and "fixed" in spec.schemes:
                analytic = [r for r in result.rows if r["source"] == "analytic"]
                sims = [
                    r
                    for r in result.rows
                    if r["source"] == "sim" and r["scheme"] == "fixed"
                ]
                report = compare(analytic, sims, z_max=req.z_max)
                payload["compare"] = _report_model(report).model_dump()
            return payload

        return JobModel(**app.state.registry.submit("sweep", job).snapshot())

    @app.post("/jobs/mh", response_model=JobModel)
    def submit_mh(req: MhPrecomputeRequest) -> JobModel:
        config = req.system.to_config()

        def job() -> dict:
            table, computed = mh_precompute(
                config,
                Path(req.cache_dir),
                h_max=req.h_max,
                samples=req.samples,
                seed_base=req.seed,
            )
            return {
                "cache_dir": req.cache_dir,
                "entries": len(table),
                "computed": computed,
            }

        return JobModel(**app.state.registry.submit("mh", job).snapshot())

    @app.get("/jobs/{job_id}", response_model=JobModel)
    def job_status(job_id: str) -> JobModel:
        job = app.state.registry.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no job {job_id}")
        return JobModel(**job.snapshot())

    @app.get("/jobs", response_model=list[JobModel])
    def jobs() -> list[JobModel]:
        return [JobModel(**j.snapshot()) for j in app.state.registry.all()]

    return app
