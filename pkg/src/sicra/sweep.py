"""Evaluation campaign: load sweeps, CSV outputs, and cross-validation.

A sweep runs both schemes over a grid of mean message generation times
S = 1/lambda, adds the closed-form fixed-scheme curve, and writes
figure-ready CSV files.  ``compare`` then z-tests every simulated
fixed-scheme metric against its closed form and gates the result.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import norm, t as student_t

from . import __version__
from .analytic import FixedMetrics, fixed_metrics
from .model import SystemConfig, config_hash
from .policy import adaptive_params, fixed_params
from .sic import DEFAULT_SAMPLES, MhTable, quantize_key
from .sim import SimConfig, SimMetrics, aggregate, run_replications

#: contract columns, in order; extensions are only ever appended.
CSV_COLUMNS = (
    "scheme",
    "source",
    "S_seconds",
    "pdr",
    "pdr_stderr",
    "mean_access_delay_s",
    "delay_stderr",
    "throughput_bps",
    "thr_stderr",
    "normalized_throughput",
    "nthr_stderr",
    "mean_aoi_s",
    "aoi_stderr",
    "cbr",
    "slots",
    "censored_flag",
    "pdr_per_generated",
    "replications",
    "cbr_stderr",
)

#: metrics compared between simulation and closed form, as CSV column pairs
COMPARED_METRICS = (
    ("pdr", "pdr_stderr"),
    ("mean_access_delay_s", "delay_stderr"),
    ("throughput_bps", "thr_stderr"),
    ("normalized_throughput", "nthr_stderr"),
    ("mean_aoi_s", "aoi_stderr"),
    ("cbr", "cbr_stderr"),
)

#: figure-data files, one per plotted metric
FIGURES = (
    ("fig1_pdr.csv", "pdr", "pdr_stderr"),
    ("fig2_access_delay.csv", "mean_access_delay_s", "delay_stderr"),
    ("fig3_throughput.csv", "throughput_bps", "thr_stderr"),
    ("fig4_normalized_throughput.csv", "normalized_throughput", "nthr_stderr"),
    ("fig5_aoi.csv", "mean_aoi_s", "aoi_stderr"),
)

RESULTS_FILE = "results.csv"
REPLICATIONS_FILE = "replications.csv"

#: mh sample count used for the closed-form curve; larger than the cache
#: default so the analytic side's Monte-Carlo error stays well below the
#: simulation standard errors it is compared against.
ANALYTIC_MH_SAMPLES = 800_000


def default_s_grid(points: int = 40, low: float = 1e-3, high: float = 1.0) -> tuple[float, ...]:
    """Log-spaced mean generation times covering 1 ms to 1000 ms."""
    return tuple(float(s) for s in np.geomspace(low, high, points))


@dataclass(frozen=True)
class SweepSpec:
    """What to run: grid, schemes, replication budget, output location."""

    out_dir: Path
    s_grid: tuple[float, ...] = field(default_factory=default_s_grid)
    schemes: tuple[str, ...] = ("fixed", "adaptive")
    replications: int = 10
    slots_per_rep: int = 11_000
    horizon_s: float | None = None
    warmup_s: float | None = None
    seed_base: int = 20_240
    workers: int = 1
    mh_samples: int = ANALYTIC_MH_SAMPLES
    mh_cache_dir: Path | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.mh_cache_dir is not None:
            object.__setattr__(self, "mh_cache_dir", Path(self.mh_cache_dir))
        grid = tuple(float(s) for s in self.s_grid)
        if not grid or any(s <= 0.0 for s in grid):
            raise ValueError("S grid must be non-empty and positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("S grid must be strictly increasing")
        object.__setattr__(self, "s_grid", grid)
        for scheme in self.schemes:
            if scheme not in ("fixed", "adaptive"):
                raise ValueError(f"unknown scheme {scheme!r}")
        if self.replications < 1 or self.slots_per_rep < 1:
            raise ValueError("replications and slots_per_rep must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def point_seed(seed_base: int, scheme: str, s_seconds: float) -> int:
    """Stable per-point seed; replication r then uses seed + r."""
    key = f"{seed_base}|{scheme}|{s_seconds:.12g}"
    digest = hashlib.sha256(key.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.12g}"
    return str(value)


def sim_row(s_seconds: float, metrics: SimMetrics) -> dict:
    return {
        "scheme": metrics.scheme,
        "source": "sim",
        "S_seconds": s_seconds,
        "pdr": metrics.pdr,
        "pdr_stderr": metrics.pdr_stderr,
        "mean_access_delay_s": metrics.mean_access_delay_s,
        "delay_stderr": metrics.delay_stderr,
        "throughput_bps": metrics.throughput_bps,
        "thr_stderr": metrics.thr_stderr,
        "normalized_throughput": metrics.normalized_throughput,
        "nthr_stderr": metrics.nthr_stderr,
        "mean_aoi_s": metrics.mean_aoi_s,
        "aoi_stderr": metrics.aoi_stderr,
        "cbr": metrics.cbr,
        "slots": metrics.slots,
        "censored_flag": metrics.censored,
        "pdr_per_generated": metrics.pdr_per_generated,
        "replications": metrics.replications,
        "cbr_stderr": metrics.cbr_stderr,
    }


def analytic_row(s_seconds: float, fm: FixedMetrics) -> dict:
    return {
        "scheme": "fixed",
        "source": "analytic",
        "S_seconds": s_seconds,
        "pdr": fm.P_s,
        "pdr_stderr": 0.0,
        "mean_access_delay_s": fm.ED,
        "delay_stderr": 0.0,
        "throughput_bps": fm.Theta_bps,
        "thr_stderr": 0.0,
        "normalized_throughput": fm.Theta_norm,
        "nthr_stderr": 0.0,
        "mean_aoi_s": fm.EA,
        "aoi_stderr": 0.0,
        "cbr": fm.CBR,
        "slots": 0,
        "censored_flag": False,
        "pdr_per_generated": fm.Theta_norm,
        "replications": 0,
        "cbr_stderr": 0.0,
    }


def write_csv(path: Path, rows: Iterable[Mapping], columns: Sequence[str], meta: Mapping[str, str]) -> None:
    """Write rows with '#'-prefixed metadata lines; output is byte-stable."""
    buf = io.StringIO()
    buf.write(f"# sicra v{__version__}\n")
    for key, value in meta.items():
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())


def read_csv_rows(path: Path) -> tuple[list[dict], dict]:
    """Read a sweep CSV back into typed rows plus its metadata mapping."""
    meta: dict[str, str] = {}
    lines = []
    for raw in Path(path).read_text().splitlines():
        if raw.startswith("#"):
            body = raw[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        lines.append(raw)
    reader = csv.DictReader(lines)
    rows = []
    for record in reader:
        row: dict = {}
        for key, value in record.items():
            if key in ("scheme", "source"):
                row[key] = value
            elif key in ("slots", "replications"):
                row[key] = int(value)
            elif key == "censored_flag":
                row[key] = value == "1"
            else:
                row[key] = float(value)
        rows.append(row)
    return rows, meta


def _mh_cache_path(base: Path, gamma: float, epsilon: float, samples: int, seed: int) -> Path:
    return base / f"mh_g{quantize_key(gamma):.6g}_e{quantize_key(epsilon):.6g}_s{samples}_r{seed}.txt"


def analytic_mh_table(
    config: SystemConfig,
    cache_dir: Path | None,
    samples: int = ANALYTIC_MH_SAMPLES,
    seed_base: int = 0,
) -> MhTable:
    """m_h table for the fixed scheme's threshold, h = 0..n, cached on disk."""
    gamma = fixed_params(config).gamma
    if cache_dir is None:
        table = MhTable()
        table.ensure(config.n, gamma, config.epsilon, samples=samples, seed_base=seed_base)
        return table
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = _mh_cache_path(cache_dir, gamma, config.epsilon, samples, seed_base)
    table = MhTable.load_or_empty(path)
    if table.ensure(config.n, gamma, config.epsilon, samples=samples, seed_base=seed_base):
        table.save(path)
    return table


def mh_precompute(
    config: SystemConfig,
    cache_dir: Path,
    h_max: int | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed_base: int = 0,
) -> tuple[MhTable, int]:
    """Precompute tables for every threshold either policy can select.

    Covers the fixed threshold and the adaptive thresholds for
    k = k_c..n, each over h = 0..h_max (default n).  Idempotent: a second
    invocation with the same cache performs zero sampling.  Returns the
    merged table and the number of freshly computed entries.
    """
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    h_max = config.n if h_max is None else h_max
    gammas = [fixed_params(config).gamma]
    gammas += [adaptive_params(config, k).gamma for k in range(config.k_c, config.n + 1)]
    merged = MhTable()
    computed = 0
    for gamma in gammas:
        path = _mh_cache_path(cache_dir, gamma, config.epsilon, samples, seed_base)
        table = MhTable.load_or_empty(path)
        fresh = table.ensure(h_max, gamma, config.epsilon, samples=samples, seed_base=seed_base)
        if fresh:
            table.save(path)
        computed += fresh
        for entry in table.entries():
            merged.add(entry)
    return merged, computed


def _run_point(args: tuple) -> list[SimMetrics]:
    config, scheme, s_seconds, spec, seed = args
    kwargs = (
        dict(horizon_s=spec.horizon_s, warmup_s=spec.warmup_s)
        if spec.horizon_s is not None
        else dict(target_slots=spec.slots_per_rep)
    )
    sim_config = SimConfig(
        system=config.with_mean_generation_time(s_seconds),
        scheme=scheme,
        seed=seed,
        **kwargs,
    )
    return run_replications(sim_config, spec.replications)


@dataclass(frozen=True)
class SweepResult:
    out_dir: Path
    rows: list[dict]
    replication_rows: list[dict]
    files: tuple[Path, ...]


def sweep(spec: SweepSpec, config: SystemConfig) -> SweepResult:
    """Run the full campaign and write the CSV set.

    Jobs (one per scheme and grid point) are independent and may execute on
    a worker pool; results are assembled in grid order, so the output is
    identical regardless of scheduling.  Rerunning with the same spec and
    config produces byte-identical files.
    """
    jobs = [
        (config, scheme, s, spec, point_seed(spec.seed_base, scheme, s))
        for s in spec.s_grid
        for scheme in spec.schemes
    ]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            per_point = list(pool.map(_run_point, jobs))
    else:
        per_point = [_run_point(job) for job in jobs]

    cache_dir = spec.mh_cache_dir if spec.mh_cache_dir is not None else spec.out_dir
    table = analytic_mh_table(config, cache_dir, samples=spec.mh_samples)

    rows: list[dict] = []
    rep_rows: list[dict] = []
    for (cfg, scheme, s, _spec, _seed), runs in zip(jobs, per_point):
        rows.append(sim_row(s, aggregate(runs)))
        for r_index, metrics in enumerate(runs):
            row = sim_row(s, metrics)
            row["replications"] = 1
            row["replication"] = r_index
            rep_rows.append(row)
    if "fixed" in spec.schemes:
        for s in spec.s_grid:
            rows.append(analytic_row(s, fixed_metrics(config.with_mean_generation_time(s), table)))

    # deterministic order: S ascending, then scheme, then source
    order = {("fixed", "analytic"): 0, ("fixed", "sim"): 1, ("adaptive", "sim"): 2}
    rows.sort(key=lambda r: (r["S_seconds"], order[(r["scheme"], r["source"])]))

    meta = {
        "config_hash": config_hash(config),
        "seed_base": str(spec.seed_base),
        "schemes": ",".join(spec.schemes),
        "s_points": str(len(spec.s_grid)),
        "replications": str(spec.replications),
    }
    if spec.horizon_s is not None:
        meta["horizon_s"] = f"{spec.horizon_s:.12g}"
        if spec.warmup_s is not None:
            meta["warmup_s"] = f"{spec.warmup_s:.12g}"
    else:
        meta["slots_per_rep"] = str(spec.slots_per_rep)
    out = spec.out_dir
    files = []
    results_path = out / RESULTS_FILE
    write_csv(results_path, rows, CSV_COLUMNS, meta)
    files.append(results_path)
    reps_path = out / REPLICATIONS_FILE
    write_csv(reps_path, rep_rows, CSV_COLUMNS + ("replication",), meta)
    files.append(reps_path)
    for name, column, stderr_col in FIGURES:
        fig_rows = [
            {
                "scheme": r["scheme"],
                "source": r["source"],
                "S_seconds": r["S_seconds"],
                "value": r[column],
                "stderr": r[stderr_col],
                "censored_flag": r["censored_flag"],
            }
            for r in rows
        ]
        fig_path = out / name
        write_csv(
            fig_path,
            fig_rows,
            ("scheme", "source", "S_seconds", "value", "stderr", "censored_flag"),
            {**meta, "metric": column},
        )
        files.append(fig_path)
    return SweepResult(out_dir=out, rows=rows, replication_rows=rep_rows, files=tuple(files))


@dataclass(frozen=True)
class CompareEntry:
    s_seconds: float
    metric: str
    analytic: float
    simulated: float
    stderr: float
    z: float
    threshold: float
    passed: bool
    skipped: str | None = None


@dataclass(frozen=True)
class CompareReport:
    entries: tuple[CompareEntry, ...]
    passed: bool

    def failures(self) -> list[CompareEntry]:
        return [e for e in self.entries if not e.passed and e.skipped is None]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "entries": [
                {
                    "S_seconds": e.s_seconds,
                    "metric": e.metric,
                    "analytic": e.analytic,
                    "simulated": e.simulated,
                    "stderr": e.stderr,
                    "z": e.z,
                    "threshold": e.threshold,
                    "passed": e.passed,
                    "skipped": e.skipped,
                }
                for e in self.entries
            ],
        }

    def to_text(self) -> str:
        lines = []
        for e in self.entries:
            if e.skipped is not None:
                lines.append(f"SKIP {e.metric:<22} S={e.s_seconds:<10.6g} ({e.skipped})")
                continue
            tag = "ok  " if e.passed else "FAIL"
            lines.append(
                f"{tag} {e.metric:<22} S={e.s_seconds:<10.6g} "
                f"sim={e.simulated:.6g} ana={e.analytic:.6g} z={e.z:+.2f} (|z|<={e.threshold:.2f})"
            )
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


_THREE_SIGMA_COVERAGE = float(2.0 * norm.cdf(3.0) - 1.0)


_WIDENING_CAP = 2.5


def z_threshold(replications: int, z_max: float = 3.0) -> float:
    """Acceptance threshold equivalent to ``z_max`` standard errors.

    With few replications the standard error itself is noisy, so the
    nominal band is widened toward the Student-t quantile with the same
    two-sided coverage.  The widening is capped so that a near-degenerate
    replication count (dof 1 would ask for 78 sigma) cannot neuter the
    gate; below ~4 replications the test is conservative rather than
    exactly calibrated.
    """
    dof = replications - 1
    if dof < 1:
        return z_max * _WIDENING_CAP
    if dof >= 60:
        return z_max
    quantile = 0.5 * (1.0 + _THREE_SIGMA_COVERAGE)
    ratio = float(student_t.ppf(quantile, dof) / norm.ppf(quantile))
    return z_max * min(ratio, _WIDENING_CAP)


def compare(
    analytic_rows: Sequence[Mapping],
    sim_rows: Sequence[Mapping],
    z_max: float = 3.0,
) -> CompareReport:
    """z-test simulated fixed-scheme rows against their closed forms.

    Pairs rows by S, checks every compared metric at a Student-t widened
    ``z_max``-standard-error gate, and passes only if no test fails.
    Censored points are reported but excluded from gating.  Zero-stderr
    pairs must agree to float accuracy.
    """
    analytic_by_s = {f"{row['S_seconds']:.12g}": row for row in analytic_rows}
    entries: list[CompareEntry] = []
    overall = True
    for row in sim_rows:
        if row.get("scheme") != "fixed" or row.get("source") not in (None, "sim"):
            continue
        key = f"{row['S_seconds']:.12g}"
        if key not in analytic_by_s:
            raise ValueError(f"no analytic row for S={key}")
        ana = analytic_by_s[key]
        threshold = z_threshold(int(row.get("replications", 0)), z_max)
        censored = bool(row.get("censored_flag"))
        for metric, stderr_col in COMPARED_METRICS:
            sim_value = float(row[metric])
            ana_value = float(ana[metric])
            stderr = float(row.get(stderr_col, math.nan))
            if censored:
                entries.append(
                    CompareEntry(row["S_seconds"], metric, ana_value, sim_value, stderr, math.nan, threshold, True, skipped="censored point")
                )
                continue
            if math.isnan(sim_value):
                entries.append(
                    CompareEntry(row["S_seconds"], metric, ana_value, sim_value, stderr, math.nan, threshold, True, skipped="no observations")
                )
                continue
            if not math.isfinite(stderr) or stderr == 0.0:
                # degenerate empirical ratios (e.g. every slot busy) carry
                # rule-of-three uncertainty ~3/N even though their sample
                # error is exactly zero
                tol = 1e-9 * max(1.0, abs(ana_value))
                slots = int(row.get("slots", 0) or 0)
                if slots > 0:
                    tol = max(tol, 3.0 / slots)
                z = 0.0 if abs(sim_value - ana_value) <= tol else math.inf
            else:
                z = (sim_value - ana_value) / stderr
            ok = abs(z) <= threshold
            overall &= ok
            entries.append(
                CompareEntry(row["S_seconds"], metric, ana_value, sim_value, stderr, z, threshold, ok)
            )
    return CompareReport(entries=tuple(entries), passed=overall)


def compare_results_file(path: Path, z_max: float = 3.0) -> CompareReport:
    """Run the cross-validation over a written results CSV."""
    rows, _meta = read_csv_rows(path)
    analytic_rows = [r for r in rows if r["source"] == "analytic"]
    sim_rows = [r for r in rows if r["source"] == "sim" and r["scheme"] == "fixed"]
    if not analytic_rows or not sim_rows:
        raise ValueError("results file lacks fixed-scheme analytic and simulated rows")
    return compare(analytic_rows, sim_rows, z_max=z_max)
