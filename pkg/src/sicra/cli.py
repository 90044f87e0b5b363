"""Command-line client for the sicra service.

Every command talks to the HTTP API.  By default the app is run embedded
in-process (same machine, same filesystem); pass ``--server URL`` to drive
a remote service started with ``sicra serve``, in which case output files
are written on the server host.
"""

from __future__ import annotations

import asyncio
import json
import sys
import time
from pathlib import Path

import click
import httpx

from .model import SystemConfig
from .sweep import read_csv_rows


class ApiError(click.ClickException):
    pass


class ApiClient:
    """Minimal JSON client: embedded ASGI transport or a remote base URL."""

    def __init__(self, server: str | None, cache_dir: str) -> None:
        self._server = server
        self._cache_dir = cache_dir
        self._app = None

    def _embedded_app(self):
        if self._app is None:
            from .service import create_app

            self._app = create_app(mh_cache_dir=self._cache_dir)
        return self._app

    def request(self, method: str, path: str, payload: dict | None = None) -> dict | list:
        if self._server is None:
            return asyncio.run(self._request_embedded(method, path, payload))
        with httpx.Client(base_url=self._server, timeout=None) as client:
            response = client.request(method, path, json=payload)
        return self._unwrap(response)

    async def _request_embedded(self, method: str, path: str, payload: dict | None):
        transport = httpx.ASGITransport(app=self._embedded_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://sicra.local", timeout=None
        ) as client:
            response = await client.request(method, path, json=payload)
        return self._unwrap(response)

    @staticmethod
    def _unwrap(response: httpx.Response) -> dict | list:
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except Exception:
                detail = response.text
            raise ApiError(f"{response.status_code}: {detail}")
        return response.json()

    def wait_for_job(self, job: dict, poll_seconds: float = 0.5, echo=None) -> dict:
        job_id = job["id"]
        while job["status"] in ("queued", "running"):
            time.sleep(poll_seconds)
            job = self.request("GET", f"/jobs/{job_id}")
            if echo is not None:
                echo(".", nl=False)
        if echo is not None:
            echo("")
        if job["status"] == "failed":
            raise ApiError(f"job {job_id} failed: {job['error']}")
        return job


def _load_system(config_path: str) -> dict:
    config = SystemConfig.from_file(config_path)
    return config.to_mapping()


def _parse_s_grid(text: str | None) -> list[float] | None:
    """Grid format: 'low:high:points' (log-spaced) or a comma list of seconds."""
    if text is None:
        return None
    if ":" in text:
        import numpy as np

        low, high, points = text.split(":")
        return [float(s) for s in np.geomspace(float(low), float(high), int(points))]
    return [float(s) for s in text.split(",")]


@click.group()
@click.option("--server", default=None, help="Base URL of a running service; default runs embedded.")
@click.option(
    "--cache",
    "cache_dir",
    default="var/mh-cache",
    show_default=True,
    help="Decode-count table cache directory (embedded mode).",
)
@click.pass_context
def main(ctx: click.Context, server: str | None, cache_dir: str) -> None:
    """Slotted random multiple access with SIC: experiments and analysis."""
    ctx.obj = ApiClient(server, cache_dir)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--scheme", type=click.Choice(["both", "fixed", "adaptive"]), default="both", show_default=True)
@click.option("--s-grid", default=None, help="'low:high:points' log grid or comma list of S values in seconds.")
@click.option("--reps", default=10, show_default=True, help="Replications per sweep point.")
@click.option("--slots", default=11_000, show_default=True, help="Post-warmup slots per replication.")
@click.option("--horizon", "horizon_s", default=None, type=float, help="Simulated seconds per replication (overrides --slots).")
@click.option("--warmup", "warmup_s", default=None, type=float, help="Warmup seconds discarded (with --horizon).")
@click.option("--seed", default=20_240, show_default=True, help="Seed base for the campaign.")
@click.option("--workers", default=1, show_default=True, help="Parallel simulation jobs.")
@click.option("--mh-samples", default=800_000, show_default=True, help="Samples per decode-count entry for the analytic curve.")
@click.option("--compare/--no-compare", "run_compare", default=True, show_default=True, help="Cross-validate fixed-scheme simulation against the closed forms.")
@click.pass_obj
def sweep(client: ApiClient, config_path, out_dir, scheme, s_grid, reps, slots, horizon_s, warmup_s, seed, workers, mh_samples, run_compare):
    """Run the load sweep and write figure-ready CSV files."""
    schemes = ["fixed", "adaptive"] if scheme == "both" else [scheme]
    payload = {
        "system": _load_system(config_path),
        "out_dir": str(out_dir),
        "schemes": schemes,
        "replications": reps,
        "slots_per_rep": slots,
        "horizon_s": horizon_s,
        "warmup_s": warmup_s,
        "seed_base": seed,
        "workers": workers,
        "mh_samples": mh_samples,
        "run_compare": run_compare and "fixed" in schemes,
    }
    grid = _parse_s_grid(s_grid)
    if grid is not None:
        payload["s_grid"] = grid
    job = client.request("POST", "/jobs/sweep", payload)
    click.echo(f"sweep job {job['id']} submitted", nl=False)
    job = client.wait_for_job(job, echo=click.echo)
    result = job["result"]
    click.echo(f"wrote {len(result['files'])} files to {result['out_dir']}")
    for name in result["files"]:
        click.echo(f"  {name}")
    if "compare" in result:
        report = result["compare"]
        failures = [e for e in report["entries"] if not e["passed"] and e["skipped"] is None]
        click.echo(
            f"cross-validation: {'PASS' if report['passed'] else 'FAIL'} "
            f"({len(report['entries'])} checks, {len(failures)} failures)"
        )
        if not report["passed"]:
            for entry in failures:
                click.echo(
                    f"  FAIL {entry['metric']} at S={entry['S_seconds']:.6g}: z={entry['z']:+.2f}"
                )
            sys.exit(1)


@main.command()
@click.option("--results", "results_path", default=None, type=click.Path(exists=True), help="Path to a results.csv file.")
@click.option("--in", "in_dir", default=None, type=click.Path(exists=True), help="Sweep output directory containing results.csv.")
@click.option("--z-max", default=3.0, show_default=True)
@click.option("--report", "report_path", default=None, type=click.Path(), help="Write the machine-readable report here (JSON).")
@click.pass_obj
def compare(client: ApiClient, results_path, in_dir, z_max, report_path):
    """Validate fixed-scheme simulation rows against the closed forms.

    Exit code 0 on PASS, 1 on validation FAIL.
    """
    if results_path is None:
        if in_dir is None:
            raise ApiError("pass --results FILE or --in DIR")
        results_path = Path(in_dir) / "results.csv"
    rows, _ = read_csv_rows(Path(results_path))
    payload = {
        "analytic_rows": [r for r in rows if r["source"] == "analytic"],
        "sim_rows": [r for r in rows if r["source"] == "sim" and r["scheme"] == "fixed"],
        "z_max": z_max,
    }
    if not payload["analytic_rows"] or not payload["sim_rows"]:
        raise ApiError("results file lacks fixed-scheme analytic and simulated rows")
    report = client.request("POST", "/compare", payload)
    click.echo(report["text"])
    if report_path is not None:
        Path(report_path).write_text(json.dumps(report, indent=2) + "\n")
        click.echo(f"report written to {report_path}")
    sys.exit(0 if report["passed"] else 1)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--cache", "cache_dir", default=None, type=click.Path(), help="Table directory; defaults to the client cache.")
@click.option("--h-max", default=None, type=int, help="Largest transmitter count per table (default n).")
@click.option("--samples", default=100_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.pass_obj
def mh(client: ApiClient, config_path, cache_dir, h_max, samples, seed):
    """Precompute decode-count tables for every policy threshold."""
    payload = {
        "system": _load_system(config_path),
        "cache_dir": str(cache_dir) if cache_dir else client._cache_dir,
        "h_max": h_max,
        "samples": samples,
        "seed": seed,
    }
    job = client.request("POST", "/jobs/mh", payload)
    click.echo(f"mh job {job['id']} submitted", nl=False)
    job = client.wait_for_job(job, echo=click.echo)
    result = job["result"]
    click.echo(
        f"tables in {result['cache_dir']}: {result['entries']} entries "
        f"({result['computed']} freshly computed)"
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--scheme", type=click.Choice(["fixed", "adaptive"]), required=True)
@click.option("--s", "s_seconds", default=None, type=float, help="Mean generation time in seconds; defaults to the config's lambda.")
@click.option("--slots", default=20_000, show_default=True, help="Post-warmup slots.")
@click.option("--horizon", "horizon_s", default=None, type=float, help="Simulated seconds (overrides --slots).")
@click.option("--warmup", "warmup_s", default=None, type=float)
@click.option("--seed", default=0, show_default=True)
@click.option("--reps", default=1, show_default=True)
@click.pass_obj
def single(client: ApiClient, config_path, scheme, s_seconds, slots, horizon_s, warmup_s, seed, reps):
    """Simulate one scenario and print every metric."""
    payload = {
        "system": _load_system(config_path),
        "scheme": scheme,
        "s_seconds": s_seconds,
        "seed": seed,
        "replications": reps,
    }
    if horizon_s is not None:
        payload["horizon_s"] = horizon_s
        payload["warmup_s"] = warmup_s
    else:
        payload["target_slots"] = slots
    metrics = client.request("POST", "/simulate", payload)
    conservation = metrics.pop("conservation")
    click.echo("simulation:")
    for key, value in metrics.items():
        click.echo(f"  {key:>24}: {value}")
    click.echo("  message accounting: " + json.dumps(conservation))
    if scheme == "fixed":
        analytic = client.request(
            "POST",
            "/analytic/fixed",
            {"system": _load_system(config_path), "s_seconds": s_seconds},
        )
        analytic.pop("q", None)
        click.echo("closed form (fixed scheme):")
        for key, value in analytic.items():
            click.echo(f"  {key:>24}: {value}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.pass_obj
def serve(client: ApiClient, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(mh_cache_dir=client._cache_dir), host=host, port=port)


if __name__ == "__main__":
    main()
