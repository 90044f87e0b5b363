"""Fixed and adaptive transmission parameter settings and the sum-rate objective."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .model import SystemConfig, slot_time
from .sic import MhTable


def binomial_pmf(counts: np.ndarray, trials: int, prob: float) -> np.ndarray:
    """Binomial pmf over integer ``counts`` with exact coefficients.

    Plain powers underflow to zero harmlessly, which keeps extreme but
    legal probabilities (p ~ 1e-308) from tripping library edge cases.
    """
    counts = np.asarray(counts, dtype=np.int64)
    coeffs = np.array([comb(trials, int(k)) for k in counts], dtype=float)
    return coeffs * prob**counts * (1.0 - prob) ** (trials - counts)


@dataclass(frozen=True)
class SchemeParams:
    """Per-slot decision triple: transmit probability, SNIR threshold, slot length."""

    p: float
    gamma: float
    T: float


def fixed_params(config: SystemConfig) -> SchemeParams:
    """Parameters of the fixed scheme, set once for ``n`` nodes.

    Every backlogged node transmits (p = 1) at the conservative threshold
    1/(a*n + b) sized for the worst case of all n nodes contending.
    """
    gamma = 1.0 / (config.a_gamma * config.n + config.b_gamma)
    return SchemeParams(p=1.0, gamma=gamma, T=slot_time(gamma, config.L, config.W))


def adaptive_params(config: SystemConfig, k: int) -> SchemeParams:
    """Parameters of the adaptive scheme when ``k`` nodes are backlogged.

    Below the switch point ``k_c`` the scheme behaves like slotted ALOHA at
    the highest feasible rate (p = 1/k, gamma = gamma_max); at and above it,
    everyone transmits and the threshold shrinks as 1/(a*k + b) so that SIC
    can absorb the load.  k = 0 is not a decision point: empty-slot duration
    is the simulator's concern.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k < config.k_c:
        p, gamma = 1.0 / k, config.gamma_max
    else:
        p, gamma = 1.0, 1.0 / (config.a_gamma * k + config.b_gamma)
    return SchemeParams(p=p, gamma=gamma, T=slot_time(gamma, config.L, config.W))


def sum_rate(
    k: int,
    p: float,
    gamma: float,
    epsilon: float,
    table: MhTable,
) -> float:
    """Expected spectral efficiency (bit/s/Hz) with ``k`` contenders.

    ``log2(1+gamma)`` times the mean decoded count, averaged over the
    binomial number of simultaneous transmitters h ~ Bin(k, p).  Requires
    m_h entries for h = 0..k at this gamma; a missing entry raises.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    h = np.arange(k + 1)
    weights = binomial_pmf(h, k, p)
    mh = np.array([table.get(int(i), gamma, epsilon) for i in h])
    return float(np.log2(1.0 + gamma) * np.dot(weights, mh))


def grid_maximize_sum_rate(
    k: int,
    p_grid: np.ndarray,
    gamma_grid: np.ndarray,
    epsilon: float,
    table: MhTable,
) -> tuple[float, float, float]:
    """Exhaustive sum-rate maximization over a (p, gamma) grid.

    Ties break deterministically toward smaller p, then smaller gamma.
    Returns (p_opt, gamma_opt, U_opt).
    """
    p_values = sorted(float(p) for p in np.atleast_1d(p_grid))
    gamma_values = sorted(float(g) for g in np.atleast_1d(gamma_grid))
    if not p_values or not gamma_values:
        raise ValueError("grid must be non-empty")
    best: tuple[float, float, float] | None = None
    for p in p_values:
        for gamma in gamma_values:
            u = sum_rate(k, p, gamma, epsilon, table)
            if best is None or u > best[2]:
                best = (p, gamma, u)
    assert best is not None
    return best


def policy_p_grid(step: float = 0.05) -> np.ndarray:
    """Transmit-probability grid {step, 2*step, ..., 1.0}."""
    count = int(round(1.0 / step))
    return np.arange(1, count + 1) * step


def policy_gamma_grid(gamma_max: float, points: int = 40, low: float = 1e-3) -> np.ndarray:
    """``points`` log-spaced thresholds in (low, gamma_max]."""
    return np.geomspace(low, gamma_max, points + 1)[1:]
