"""Slot-by-slot simulation of the full multiple-access system.

Each node is a two-state machine: idle until a message arrives, then
backlogged until it transmits, after which it is idle again whether or not
decoding succeeded (no retransmissions; a failed message is lost, and
arrivals to an engaged node are dropped).  The backlog count at each slot
start is known to all nodes and selects the transmit probability, SNIR
threshold, and slot length.  Slot lengths therefore vary under the
adaptive scheme, which couples arrivals to the backlog in a way the
closed-form analysis does not attempt to capture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .analytic import backlog_prob
from .model import SystemConfig, target_snr
from .policy import adaptive_params, fixed_params
from .sic import _prefix_decode_count

SCHEMES = ("fixed", "adaptive")

DEFAULT_BATCHES = 25


@dataclass(frozen=True)
class SimConfig:
    """One simulation scenario.

    The measurement window can be set either in simulated seconds
    (``horizon_s``/``warmup_s``) or as an exact slot budget
    (``target_slots`` measured slots after ``warmup_slots`` discarded
    ones).  The slot budget is what the sweep uses, since slot durations
    differ wildly across schemes and load points.
    """

    system: SystemConfig
    scheme: str
    seed: int = 0
    horizon_s: float | None = None
    warmup_s: float | None = None
    target_slots: int | None = None
    warmup_slots: int | None = None
    batches: int = DEFAULT_BATCHES
    record_events: bool = False

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        seconds_mode = self.horizon_s is not None
        slots_mode = self.target_slots is not None
        if seconds_mode == slots_mode:
            raise ValueError("set exactly one of horizon_s or target_slots")
        if seconds_mode:
            if self.horizon_s <= 0.0:
                raise ValueError("horizon_s must be positive")
            warm = 0.1 * self.horizon_s if self.warmup_s is None else self.warmup_s
            if not 0.0 <= warm < self.horizon_s:
                raise ValueError(
                    f"warmup ({warm}s) must be shorter than the horizon ({self.horizon_s}s)"
                )
            object.__setattr__(self, "warmup_s", warm)
        else:
            if self.target_slots < 1:
                raise ValueError("target_slots must be >= 1")
            warm = (
                math.ceil(0.1 * self.target_slots)
                if self.warmup_slots is None
                else self.warmup_slots
            )
            if warm < 0:
                raise ValueError("warmup_slots must be >= 0")
            object.__setattr__(self, "warmup_slots", warm)
        if self.batches < 2:
            raise ValueError("batches must be >= 2")

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class Conservation:
    """Exact full-run message accounting (warmup included)."""

    generated: int
    delivered: int
    decode_failures: int
    dropped_engaged: int
    dropped_overwrite: int
    in_flight: int

    @property
    def balanced(self) -> bool:
        return self.generated == (
            self.delivered
            + self.decode_failures
            + self.dropped_engaged
            + self.dropped_overwrite
            + self.in_flight
        )


@dataclass(frozen=True)
class SimMetrics:
    """Observable metrics of one run (or a replication aggregate).

    ``pdr`` is the per-transmission delivery ratio; ``pdr_per_generated``
    counts delivered over generated messages instead.  ``slots`` counts
    post-warmup slots only.
    """

    scheme: str
    pdr: float
    pdr_stderr: float
    mean_access_delay_s: float
    delay_stderr: float
    throughput_bps: float
    thr_stderr: float
    normalized_throughput: float
    nthr_stderr: float
    mean_aoi_s: float
    aoi_stderr: float
    cbr: float
    cbr_stderr: float
    pdr_per_generated: float
    slots: int
    transmissions: int
    successes: int
    generated: int
    duration_s: float
    window_start_s: float
    window_end_s: float
    censored: bool
    conservation: Conservation
    replications: int = 1
    events: tuple[tuple[tuple[float, float], ...], ...] | None = field(
        default=None, repr=False
    )


def _segment_area(t1: float, t2: float, gen: float) -> float:
    """Integral of (t - gen) over [t1, t2] for a linearly growing age."""
    return (t2 - t1) * (0.5 * (t1 + t2) - gen)


def aoi_time_average(
    deliveries: Sequence[tuple[float, float]],
    window_start: float,
    window_end: float,
    initial_gen_time: float = 0.0,
) -> tuple[float, bool]:
    """Exact time-average of one node's sawtooth age over a window.

    ``deliveries`` holds (delivery_time, generation_time) pairs in
    chronological order; at each delivery the age drops to
    delivery_time - generation_time.  Returns (mean age, censored), where
    censored marks a window containing no delivery, so the average is only
    a lower bound on the stationary age.
    """
    if window_end <= window_start:
        raise ValueError("window must have positive length")
    gen = initial_gen_time
    t_prev = window_start
    area = 0.0
    censored = True
    for t_del, g_del in deliveries:
        if t_del <= window_start:
            gen = g_del
            continue
        if t_del > window_end:
            break
        area += _segment_area(t_prev, t_del, gen)
        gen = g_del
        t_prev = t_del
        censored = False
    area += _segment_area(t_prev, window_end, gen)
    return area / (window_end - window_start), censored


def _ratio_with_batch_stderr(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """Ratio of totals plus a standard error from the per-batch spread.

    The point estimate is the exact window-wide ratio; batches only supply
    an error estimate that absorbs autocorrelation across nearby slots.
    """
    total_den = float(den.sum())
    if total_den <= 0.0:
        return math.nan, math.nan
    overall = float(num.sum()) / total_den
    valid = den > 0
    count = int(valid.sum())
    if count < 2:
        return overall, math.nan
    ratios = num[valid] / den[valid]
    stderr = float(ratios.std(ddof=1) / math.sqrt(count))
    return overall, stderr


def run(config: SimConfig) -> SimMetrics:
    """Simulate one scenario and collect post-warmup metrics.

    Deterministic for a given config (seed included).  The fixed scheme
    starts from independent stationary node states: under heavy traffic
    its per-node cycles are nearly periodic and effectively never mix, so
    an all-idle start would lock every node into the same phase instead of
    sampling the stationary ensemble the analysis describes.  The adaptive
    scheme mixes on its own (empty slots are short) and starts idle.
    """
    sysc = config.system
    n = sysc.n
    lam = sysc.lam
    rng = np.random.default_rng(config.seed)

    # per-backlog decision tables; index k = number of backlogged nodes
    if config.scheme == "fixed":
        prm = fixed_params(sysc)
        p_k = np.full(n + 1, prm.p)
        gamma_k = np.full(n + 1, prm.gamma)
        t_k = np.full(n + 1, prm.T)  # fixed slot length even when idle
    else:
        p_k = np.zeros(n + 1)
        gamma_k = np.zeros(n + 1)
        t_k = np.zeros(n + 1)
        t_k[0] = sysc.T_0
        for k in range(1, n + 1):
            prm = adaptive_params(sysc, k)
            p_k[k], gamma_k[k], t_k[k] = prm.p, prm.gamma, prm.T
    s0_k = np.array(
        [target_snr(g, sysc.epsilon) if g > 0 else 0.0 for g in gamma_k]
    )

    backlogged = np.zeros(n, dtype=bool)
    gen_time = np.zeros(n)
    last_del_gen = np.zeros(n)

    generated = delivered = failures = dropped_engaged = dropped_overwrite = 0

    if config.scheme == "fixed":
        # stationary start: each node independently backlogged w.p. b,
        # holding the last of >=1 arrivals from a virtual previous slot
        t_star = t_k[0]
        b = backlog_prob(lam, t_star)
        backlogged = rng.random(n) < b
        pending = np.flatnonzero(backlogged)
        if pending.size:
            counts = rng.poisson(lam * t_star, pending.size)
            while True:  # condition on at least one arrival
                zero = counts == 0
                if not zero.any():
                    break
                counts[zero] = rng.poisson(lam * t_star, int(zero.sum()))
            u = rng.random(pending.size)
            gen_time[pending] = t_star * (u ** (1.0 / counts) - 1.0)
            generated += int(counts.sum())
            dropped_overwrite += int(counts.sum()) - pending.size

    slots_mode = config.target_slots is not None
    batches = config.batches
    if slots_mode:
        warmup_slots = config.warmup_slots
        total_slots = warmup_slots + config.target_slots
    else:
        warmup_time = config.warmup_s
        batch_dur = (config.horizon_s - warmup_time) / batches

    b_trans = np.zeros(batches)
    b_succ = np.zeros(batches)
    b_delay = np.zeros(batches)
    b_busy = np.zeros(batches)
    b_time = np.zeros(batches)
    b_age = np.zeros(batches)
    b_gen = np.zeros(batches)

    sum_del_gen = 0.0  # running sum of last delivered generation times
    deliveries_in_window = np.zeros(n, dtype=np.int64)
    events: list[list[tuple[float, float]]] | None = (
        [[] for _ in range(n)] if config.record_events else None
    )

    t = 0.0
    window_start = None  # set when the first measured slot begins
    slot_idx = 0
    measured_slots = 0
    transmissions = successes = 0
    gen_window = 0

    while True:
        if slots_mode:
            if slot_idx >= total_slots:
                break
        elif t >= config.horizon_s:
            break

        k = int(np.count_nonzero(backlogged))
        T = float(t_k[k])
        t_end = t + T

        if slots_mode:
            measured = slot_idx >= warmup_slots
            w0 = t if measured and window_start is None else window_start
        else:
            measured = t_end > warmup_time
            w0 = warmup_time
        if measured and window_start is None:
            window_start = w0

        # transmissions and decoding
        m = 0
        winners = None
        if k > 0:
            idx = np.flatnonzero(backlogged)
            p = p_k[k]
            tx = idx if p >= 1.0 else idx[rng.random(k) < p]
            m = tx.size
            if m > 0:
                gains = rng.standard_exponential(m)
                powers = gains * s0_k[k]
                order = np.argsort(-powers, kind="stable")  # ties have measure zero
                nd = _prefix_decode_count(powers[order], gamma_k[k])
                winners = tx[order[:nd]]
                delivered += nd
                failures += m - nd

        # arrivals: one draw for all nodes; only those idle at slot start
        # capture a message (the last one in the slot), engaged nodes drop all
        counts = rng.poisson(lam * T, n)
        arrivals_total = int(counts.sum())
        new_nodes = None
        idle_counts = np.where(backlogged, 0, counts)
        pos = idle_counts > 0
        if pos.any():
            cpos = idle_counts[pos]
            u = rng.random(cpos.size)
            new_nodes = np.flatnonzero(pos)
            new_gen = t + T * u ** (1.0 / cpos)
            dropped_overwrite += int(cpos.sum()) - cpos.size
        if k > 0:
            dropped_engaged += arrivals_total - int(idle_counts.sum())
        generated += arrivals_total

        if measured:
            measured_slots += 1
            t1 = max(t, w0)
            span = t_end - t1
            if slots_mode:
                bi = (slot_idx - warmup_slots) * batches // config.target_slots
            else:
                bi = min(batches - 1, int((t_end - w0) / batch_dur))
            b_time[bi] += span
            b_age[bi] += span * (0.5 * (t1 + t_end) * n - sum_del_gen)
            b_gen[bi] += arrivals_total
            gen_window += arrivals_total
            if m > 0:
                b_busy[bi] += span
                delays = t_end - gen_time[tx]
                b_trans[bi] += m
                b_delay[bi] += float(delays.sum())
                transmissions += m
                nd = winners.size if winners is not None else 0
                b_succ[bi] += nd
                successes += nd
                if nd:
                    deliveries_in_window[winners] += 1

        # state updates at slot end
        if winners is not None and winners.size:
            new_ref = gen_time[winners]
            sum_del_gen += float((new_ref - last_del_gen[winners]).sum())
            last_del_gen[winners] = new_ref
            if events is not None:
                for node, g in zip(winners, new_ref):
                    events[int(node)].append((t_end, float(g)))
        if m > 0:
            backlogged[tx] = False
        if new_nodes is not None:
            backlogged[new_nodes] = True
            gen_time[new_nodes] = new_gen

        t = t_end
        slot_idx += 1

    if window_start is None:
        raise ValueError("horizon leaves no slots after warmup")
    window_end = t
    duration = window_end - window_start

    pdr, pdr_se = _ratio_with_batch_stderr(b_succ, b_trans)
    delay, delay_se = _ratio_with_batch_stderr(b_delay, b_trans)
    per_node_time = b_time * n
    thr, thr_se = _ratio_with_batch_stderr(b_succ * sysc.L, per_node_time)
    nthr, nthr_se = _ratio_with_batch_stderr(b_succ / lam, per_node_time)
    aoi, aoi_se = _ratio_with_batch_stderr(b_age, per_node_time)
    busy, busy_se = _ratio_with_batch_stderr(b_busy, b_time)

    conservation = Conservation(
        generated=generated,
        delivered=delivered,
        decode_failures=failures,
        dropped_engaged=dropped_engaged,
        dropped_overwrite=dropped_overwrite,
        in_flight=int(np.count_nonzero(backlogged)),
    )

    return SimMetrics(
        scheme=config.scheme,
        pdr=pdr,
        pdr_stderr=pdr_se,
        mean_access_delay_s=delay,
        delay_stderr=delay_se,
        throughput_bps=thr,
        thr_stderr=thr_se,
        normalized_throughput=nthr,
        nthr_stderr=nthr_se,
        mean_aoi_s=aoi,
        aoi_stderr=aoi_se,
        cbr=busy,
        cbr_stderr=busy_se,
        pdr_per_generated=(successes / gen_window) if gen_window else math.nan,
        slots=measured_slots,
        transmissions=transmissions,
        successes=successes,
        generated=gen_window,
        duration_s=duration,
        window_start_s=window_start,
        window_end_s=window_end,
        censored=bool((deliveries_in_window == 0).any()),
        conservation=conservation,
        events=(
            tuple(tuple(ev) for ev in events) if events is not None else None
        ),
    )


_MEANS = (
    "pdr",
    "mean_access_delay_s",
    "throughput_bps",
    "normalized_throughput",
    "mean_aoi_s",
    "cbr",
    "pdr_per_generated",
)
_STDERRS = {
    "pdr": "pdr_stderr",
    "mean_access_delay_s": "delay_stderr",
    "throughput_bps": "thr_stderr",
    "normalized_throughput": "nthr_stderr",
    "mean_aoi_s": "aoi_stderr",
    "cbr": "cbr_stderr",
}


def aggregate(runs: Sequence[SimMetrics]) -> SimMetrics:
    """Combine independent runs of the same scenario.

    Means are averaged across replications and standard errors are the
    across-replication sample errors, which remain honest even where a
    single run barely fluctuates (the fixed scheme under heavy traffic
    freezes into one phase split per run).
    """
    if not runs:
        raise ValueError("need at least one run")
    if len(runs) == 1:
        return runs[0]
    replications = len(runs)

    def agg(name: str) -> tuple[float, float]:
        vals = np.array([getattr(r, name) for r in runs])
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(replications))

    values: dict[str, float] = {}
    for name in _MEANS:
        mean, se = agg(name)
        values[name] = mean
        if name in _STDERRS:
            values[_STDERRS[name]] = se

    conservation = Conservation(
        generated=sum(r.conservation.generated for r in runs),
        delivered=sum(r.conservation.delivered for r in runs),
        decode_failures=sum(r.conservation.decode_failures for r in runs),
        dropped_engaged=sum(r.conservation.dropped_engaged for r in runs),
        dropped_overwrite=sum(r.conservation.dropped_overwrite for r in runs),
        in_flight=sum(r.conservation.in_flight for r in runs),
    )
    return SimMetrics(
        scheme=runs[0].scheme,
        slots=sum(r.slots for r in runs),
        transmissions=sum(r.transmissions for r in runs),
        successes=sum(r.successes for r in runs),
        generated=sum(r.generated for r in runs),
        duration_s=sum(r.duration_s for r in runs),
        window_start_s=math.nan,
        window_end_s=math.nan,
        censored=any(r.censored for r in runs),
        conservation=conservation,
        replications=replications,
        **values,
    )


def run_replications(config: SimConfig, replications: int) -> list[SimMetrics]:
    """Independent runs seeded seed, seed+1, ..., seed+replications-1."""
    if replications < 1:
        raise ValueError("replications must be >= 1")
    return [run(config.with_seed(config.seed + i)) for i in range(replications)]


def replicate(config: SimConfig, replications: int) -> SimMetrics:
    """Aggregate of ``replications`` independent runs; one run is returned as-is."""
    return aggregate(run_replications(config, replications))
