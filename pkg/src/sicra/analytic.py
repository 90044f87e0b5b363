"""Closed-form performance metrics for the fixed-parameter scheme.

Under the fixed scheme every backlogged node transmits in the next slot
(p* = 1), the slot length is constant, and nodes evolve as independent
two-state renewal processes.  That makes every quantity below exact.  All
expressions are specialized to p* = 1; the ``p_star`` arguments are kept
for documentation and asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import SystemConfig
from .policy import SchemeParams, binomial_pmf, fixed_params
from .sic import MhTable


def _require_p_star_one(p_star: float) -> None:
    if p_star != 1.0:
        raise ValueError(f"analysis is specialized to p* = 1, got {p_star}")


def _arrival_prob(lam: float, t_slot: float) -> float:
    """P(at least one arrival in a slot) = 1 - exp(-lam*T), computed stably."""
    return -math.expm1(-lam * t_slot)


def _residual_fraction(x: float) -> float:
    """(mean time from last arrival to slot end) / T for arrival load x = lam*T.

    Equals 1/x - 1/(e^x - 1); a short series avoids cancellation for small x
    and the exp(-x) form avoids overflow for large x.
    """
    if x < 1e-4:
        return 0.5 - x / 12.0 + x**3 / 720.0
    return 1.0 / x - math.exp(-x) / -math.expm1(-x)


def backlog_prob(lam: float, t_star: float) -> float:
    """Stationary probability that a node is backlogged at a slot start.

    Ratio of the single backlogged slot per cycle to backlogged plus idle
    slots, where the idle stretch is geometric with success probability
    1 - exp(-lam*T*).
    """
    if lam <= 0.0 or t_star <= 0.0:
        raise ValueError("lam and t_star must be positive")
    q = _arrival_prob(lam, t_star)
    return q / (1.0 + q)


def q_dist(n: int, b: float) -> np.ndarray:
    """Distribution of the backlogged count among the n-1 other nodes.

    Entry k is the probability that exactly k of them are backlogged;
    binomial with parameter ``b``, so the vector sums to one.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"b must lie in [0, 1], got {b}")
    return binomial_pmf(np.arange(n), n - 1, b)


def success_prob(
    n: int,
    tau: float,
    gamma: float,
    epsilon: float,
    table: MhTable,
) -> float:
    """Probability that a given transmission is decoded.

    Mean decoded count over mean transmitter count per slot, with the
    transmitter count binomial at per-slot transmit probability ``tau``.
    Requires m_h entries for h = 1..n at this gamma.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    h = np.arange(1, n + 1)
    weights = binomial_pmf(h, n, tau)
    mh = np.array([table.get(int(i), gamma, epsilon) for i in h])
    return float(np.dot(weights, mh) / (n * tau))


def cbr(n: int, b: float, p_star: float = 1.0) -> float:
    """Mean fraction of time the channel carries at least one transmission."""
    if not 0.0 <= b * p_star <= 1.0:
        raise ValueError("b * p_star must lie in [0, 1]")
    return 1.0 - (1.0 - b * p_star) ** n


def interdeparture_moments(
    lam: float, t_star: float, p_star: float = 1.0
) -> tuple[float, float]:
    """First two moments of the time between consecutive transmissions.

    The inter-departure time is a geometric number of idle slots plus the
    transmission slot itself.
    """
    _require_p_star_one(p_star)
    q = _arrival_prob(lam, t_star)
    ey = t_star + t_star / q
    ey2 = t_star**2 * (1.0 + (3.0 - math.exp(-lam * t_star)) / q**2)
    return ey, ey2


def mean_access_delay(lam: float, t_star: float, p_star: float = 1.0) -> float:
    """Mean time from message arrival to the end of its transmission slot.

    Residual time to the arrival slot's end plus the contention time
    T*/p*.  Bounded between T*/p* (heavy traffic) and T*/p* + T*/2.
    """
    _require_p_star_one(p_star)
    return t_star * _residual_fraction(lam * t_star) + t_star / p_star


def throughput(
    p_s: float, ey: float, L: int, lam: float
) -> tuple[float, float, float]:
    """Per-node throughput: (messages/s, bit/s, fraction of generated).

    Transmissions depart every E[Y] seconds on average and each succeeds
    with probability P_s.
    """
    theta = p_s / ey
    return theta, L * theta, theta / lam


def mean_aoi(ed: float, ey: float, ey2: float, p_s: float) -> float:
    """Mean age of the freshest delivered update.

    Access delay of the delivered message plus the mean excess of the
    inter-delivery time, which is a geometric (1/P_s) number of
    inter-departure times.  P_s = 0 yields infinite age.
    """
    if p_s == 0.0:
        return math.inf
    return ed + ey2 / (2.0 * ey) + ey * (1.0 / p_s - 1.0)


@dataclass(frozen=True)
class FixedMetrics:
    """Every closed-form observable of the fixed scheme at one load point."""

    params: SchemeParams
    b: float
    tau: float
    P_s: float
    CBR: float
    EY: float
    EY2: float
    ED: float
    Theta: float
    Theta_bps: float
    Theta_norm: float
    EA: float
    q: tuple[float, ...] = field(repr=False, default=())


def fixed_metrics(config: SystemConfig, table: MhTable) -> FixedMetrics:
    """Evaluate the full fixed-scheme metric set for one configuration.

    Pure function of the configuration and an m_h table covering
    h = 0..n at the fixed scheme's threshold.
    """
    params = fixed_params(config)
    b = backlog_prob(config.lam, params.T)
    tau = b * params.p
    p_s = success_prob(config.n, tau, params.gamma, config.epsilon, table)
    busy = cbr(config.n, b, params.p)
    ey, ey2 = interdeparture_moments(config.lam, params.T, params.p)
    ed = mean_access_delay(config.lam, params.T, params.p)
    theta, theta_bps, theta_norm = throughput(p_s, ey, config.L, config.lam)
    ea = mean_aoi(ed, ey, ey2, p_s)
    return FixedMetrics(
        params=params,
        b=b,
        tau=tau,
        P_s=p_s,
        CBR=busy,
        EY=ey,
        EY2=ey2,
        ED=ed,
        Theta=theta,
        Theta_bps=theta_bps,
        Theta_norm=theta_norm,
        EA=ea,
        q=tuple(float(x) for x in q_dist(config.n, b)),
    )
