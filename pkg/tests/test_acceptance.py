"""Acceptance suite: one test per acceptance criterion, desk scale.

Desk scale means n=50, L=4000 bits, W=1 MHz, epsilon=0.1, gamma_max=31,
k_c=6, a_gamma=0.39, b_gamma=0.78.  Each test prints one PASS line; run
with ``pytest -v`` to see one line per criterion.  Decode-count tables are
cached under var/mh-cache, so the first run pays a few minutes of
sampling that later runs skip.
"""

import math
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from sicra.analytic import fixed_metrics, mean_access_delay
from sicra.cli import main as cli_main
from sicra.model import SystemConfig
from sicra.policy import (
    adaptive_params,
    grid_maximize_sum_rate,
    policy_gamma_grid,
    policy_p_grid,
    sum_rate,
)
from sicra.sic import MhTable, estimate_mh
from sicra.sim import SimConfig, replicate
from sicra.sweep import (
    SweepSpec,
    _mh_cache_path,
    analytic_mh_table,
    analytic_row,
    compare,
    read_csv_rows,
    sim_row,
    sweep,
)

from .oracles import m2_quadrature

REPO_ROOT = Path(__file__).resolve().parents[1]
MH_CACHE = REPO_ROOT / "var" / "mh-cache"

DESK = SystemConfig(
    n=50,
    L=4000,
    W=1e6,
    epsilon=0.1,
    gamma_max=31.0,
    lam=100.0,
    k_c=6,
    a_gamma=0.39,
    b_gamma=0.78,
)

CONFIG_YAML = (
    "n: 50\nL: 500 B\nW: 1.0e6\nepsilon: 0.1\ngamma_max: 31\n"
    "lambda: 100.0\nk_c: 6\na_gamma: 0.39\nb_gamma: 0.78\nP_N: -107\n"
)


def _announce(number: int, text: str) -> None:
    print(f"\nACCEPTANCE CRITERION {number}: PASS - {text}")


@pytest.fixture(scope="session")
def default_sweep(tmp_path_factory):
    """The default desk-scale sweep: 40 S points, both schemes."""
    out = tmp_path_factory.mktemp("acceptance-sweep")
    spec = SweepSpec(out_dir=out, mh_cache_dir=MH_CACHE)
    result = sweep(spec, DESK)
    return spec, result


@pytest.mark.parametrize("gamma", [0.0493, 1.0, 31.0])
def test_criterion_1_single_transmitter_identity(gamma):
    estimate, stderr = estimate_mh(1, gamma, 0.1, samples=1_000_000, seed=101)
    assert abs(estimate - 0.900) <= 3 * stderr, (gamma, estimate, stderr)
    _announce(1, f"m_1({gamma}) = {estimate:.5f} within 3se of 0.900 at 1e6 samples")


def test_criterion_2_two_user_quadrature_oracle():
    estimate, stderr = estimate_mh(2, 31.0, 0.1, samples=1_000_000, seed=202)
    oracle = m2_quadrature(31.0, 0.1)
    assert abs(estimate - oracle) <= 3 * stderr, (estimate, oracle, stderr)
    _announce(
        2, f"m_2(31) = {estimate:.5f} within 3se of quadrature value {oracle:.5f}"
    )


def test_criterion_3_fixed_scheme_cross_validation():
    table = analytic_mh_table(DESK, MH_CACHE, samples=800_000, seed_base=0)
    worst = 0.0
    for s_seconds in (0.001, 0.01, 0.1, 1.0):
        config = DESK.with_mean_generation_time(s_seconds)
        metrics = replicate(
            SimConfig(system=config, scheme="fixed", target_slots=7_500, seed=424_242),
            16,
        )
        assert metrics.slots >= 100_000
        report = compare(
            [analytic_row(s_seconds, fixed_metrics(config, table))],
            [sim_row(s_seconds, metrics)],
        )
        for entry in report.entries:
            assert entry.skipped is None, entry
            assert abs(entry.z) <= 3.0, (s_seconds, entry)
            if math.isfinite(entry.z):
                worst = max(worst, abs(entry.z))
    _announce(
        3,
        "P_s, E[D], throughput, normalized throughput, E[A], CBR all within "
        f"3se at S in {{1,10,100,1000}} ms (worst |z| = {worst:.2f}, >=1e5 slots/point)",
    )


def test_criterion_4_delay_bounds():
    t_star = 0.05760327311192757
    for x in np.logspace(-3, 3, 100):
        ed = mean_access_delay(x / t_star, t_star)
        assert t_star < ed <= 1.5 * t_star, (x, ed)
    _announce(4, "T* < E[D] <= 1.5 T* on a 100-point log grid of lambda*T*")


@pytest.mark.parametrize("k", [10, 50])
def test_criterion_5_policy_near_optimality(k):
    gamma_grid = policy_gamma_grid(DESK.gamma_max, points=40)
    params = adaptive_params(DESK, k)
    table = MhTable()
    for gamma in list(gamma_grid) + [params.gamma]:
        path = _mh_cache_path(MH_CACHE, gamma, DESK.epsilon, 100_000, 0)
        part = MhTable.load_or_empty(path)
        if part.ensure(k, gamma, DESK.epsilon, samples=100_000, seed_base=0):
            part.save(path)
        for entry in part.entries():
            if entry.h <= k:
                table.add(entry)
    u_policy = sum_rate(k, params.p, params.gamma, DESK.epsilon, table)
    _, _, u_grid = grid_maximize_sum_rate(
        k, policy_p_grid(), gamma_grid, DESK.epsilon, table
    )
    assert u_policy >= 0.95 * u_grid, (k, u_policy, u_grid)
    _announce(
        5,
        f"k={k}: policy sum-rate {u_policy:.4f} >= 0.95 x grid optimum {u_grid:.4f} "
        f"(ratio {u_policy / u_grid:.3f})",
    )


def _curve(rows, scheme, source, column):
    points = sorted(
        (r["S_seconds"], r[column])
        for r in rows
        if r["scheme"] == scheme and r["source"] == source
    )
    return [v for _, v in points]


def test_criterion_6_qualitative_figure_reproduction(default_sweep):
    _spec, result = default_sweep
    rows = result.rows
    s_grid = sorted({r["S_seconds"] for r in rows})
    assert len(s_grid) == 40

    # (a) adaptive PDR dips to an interior minimum; fixed PDR has no notch
    a_pdr = _curve(rows, "adaptive", "sim", "pdr")
    f_pdr = _curve(rows, "fixed", "sim", "pdr")
    notch = lambda v: min(v[0], v[-1]) - min(v[1:-1])
    idx_min = a_pdr.index(min(a_pdr))
    assert 0 < idx_min < len(a_pdr) - 1
    assert notch(a_pdr) > 0.03, notch(a_pdr)
    assert notch(f_pdr) < 0.03, notch(f_pdr)

    # (b) heavy traffic: adaptive access delay beats fixed
    a_ed = _curve(rows, "adaptive", "sim", "mean_access_delay_s")
    f_ed = _curve(rows, "fixed", "sim", "mean_access_delay_s")
    assert a_ed[0] < f_ed[0]

    # (c) heavy traffic: adaptive age beats fixed (ratio informational)
    a_aoi = _curve(rows, "adaptive", "sim", "mean_aoi_s")
    f_aoi = _curve(rows, "fixed", "sim", "mean_aoi_s")
    assert a_aoi[0] < f_aoi[0]
    ratio = f_aoi[0] / a_aoi[0]

    # (d) throughput saturates toward S = 1 ms and fixed saturates lower
    a_thr = _curve(rows, "adaptive", "sim", "throughput_bps")
    f_thr = _curve(rows, "fixed", "sim", "throughput_bps")
    assert abs(a_thr[1] - a_thr[0]) < 0.1 * a_thr[0]
    assert abs(f_thr[1] - f_thr[0]) < 0.1 * f_thr[0]
    assert f_thr[0] < a_thr[0]

    # (e) adaptive normalized throughput grows toward the light-traffic side
    a_norm = _curve(rows, "adaptive", "sim", "normalized_throughput")
    assert a_norm[-1] > a_norm[len(a_norm) // 2] > a_norm[0]

    _announce(
        6,
        "default sweep reproduces the qualitative figure set "
        f"(adaptive notch {notch(a_pdr):.3f}, heavy-traffic AoI ratio {ratio:.2f})",
    )


def test_criterion_7_sweep_determinism(tmp_path):
    (tmp_path / "system.yaml").write_text(CONFIG_YAML)
    runner = CliRunner()
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        args = [
            "--cache",
            str(MH_CACHE),
            "sweep",
            "--config",
            str(tmp_path / "system.yaml"),
            "--out",
            str(out),
            "--s-grid",
            "0.002,0.2",
            "--reps",
            "2",
            "--slots",
            "300",
            "--seed",
            "31415",
            "--mh-samples",
            "20000",
            "--no-compare",
        ]
        result = runner.invoke(cli_main, args, catch_exceptions=False)
        assert result.exit_code == 0, result.output
        outputs.append(out)
    first_files = sorted(p.name for p in outputs[0].iterdir())
    assert first_files == sorted(p.name for p in outputs[1].iterdir())
    for name in first_files:
        assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes(), name
    _announce(7, f"two identical sweep invocations wrote byte-identical CSVs ({len(first_files)} files)")


def test_criterion_8_figure_rendering(default_sweep, tmp_path):
    frontend = REPO_ROOT / "frontend" / "dist" / "index.js"
    node = shutil.which("node")
    if node is None or not frontend.exists():
        pytest.skip("frontend not built (run `npm install && npm run build` in frontend/)")
    _spec, result = default_sweep
    out = tmp_path / "figs"
    proc = subprocess.run(
        [node, str(frontend), "--in", str(result.out_dir), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    figures = sorted(out.glob("*.svg"))
    assert len(figures) == 5
    for path in figures:
        svg = path.read_text()
        assert '<metadata id="figure-meta">' in svg
        assert '"scheme": "fixed"' in svg.replace('":"', '": "') or '"scheme":"fixed"' in svg
        assert '"scheme":"adaptive"' in svg or '"scheme": "adaptive"' in svg
        # simulation series carry error bars; the adaptive line is dashed
        assert 'class="errorbar"' in svg
        assert "stroke-dasharray" in svg
        fixed_analytic = svg.split('data-scheme="fixed" data-source="analytic"')[1].split("</g>")[0]
        assert "stroke-dasharray" not in fixed_analytic
        assert "errorbar" not in fixed_analytic
    _announce(8, "five figures rendered with the fixed/adaptive conventions and error bars")
