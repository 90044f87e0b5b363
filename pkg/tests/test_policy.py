import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sicra.model import SystemConfig
from sicra.policy import (
    adaptive_params,
    fixed_params,
    grid_maximize_sum_rate,
    policy_gamma_grid,
    policy_p_grid,
    sum_rate,
)
from sicra.sic import MhEntry, MhLookupError, MhTable, quantize_key


def _config(n=50, **kw):
    base = dict(n=n, L=4000, W=1e6, epsilon=0.1, gamma_max=31.0, lam=100.0)
    base.update(kw)
    return SystemConfig(**base)


def _flat_table(gammas, h_max, value=None, epsilon=0.1):
    """Table with hand-set entries: m_h = value(h) for h >= 1 (default m_h = h)."""
    table = MhTable()
    for g in gammas:
        for h in range(h_max + 1):
            v = 0.0 if h == 0 else (float(h) if value is None else value(h))
            table.add(MhEntry(h, quantize_key(g), epsilon, 1, 0, v, 0.0))
    return table


def test_fixed_params_desk_scale():
    params = fixed_params(_config())
    assert params.p == 1.0
    assert params.gamma == pytest.approx(1.0 / 20.28, rel=1e-12)
    assert params.T == pytest.approx(0.05760327311192757, rel=1e-12)


def test_fixed_params_single_node():
    params = fixed_params(_config(n=1))
    assert params.gamma == pytest.approx(1.0 / (0.39 + 0.78), rel=1e-12)


def test_adaptive_params_regimes():
    cfg = _config()
    below = adaptive_params(cfg, 1)
    assert (below.p, below.gamma) == (1.0, 31.0)
    assert adaptive_params(cfg, 5).p == pytest.approx(0.2)
    assert adaptive_params(cfg, 5).gamma == 31.0
    heavy = adaptive_params(cfg, 50)
    assert heavy.p == 1.0
    assert heavy.gamma == pytest.approx(1.0 / 20.28, rel=1e-12)
    with pytest.raises(ValueError):
        adaptive_params(cfg, 0)


def test_adaptive_threshold_monotone_beyond_switch():
    cfg = _config()
    prev = adaptive_params(cfg, cfg.k_c)
    for k in range(cfg.k_c + 1, 80):
        cur = adaptive_params(cfg, k)
        assert cur.gamma < prev.gamma
        assert cur.T > prev.T
        prev = cur


@given(k=st.integers(min_value=1, max_value=500))
def test_adaptive_params_total(k):
    cfg = _config()
    params = adaptive_params(cfg, k)
    assert 0.0 < params.p <= 1.0
    assert 0.0 < params.gamma <= cfg.gamma_max
    assert params.T > 0.0


def test_sum_rate_no_transmissions():
    table = _flat_table([2.0], h_max=3)
    assert sum_rate(3, 0.0, 2.0, 0.1, table) == 0.0


def test_sum_rate_single_node_closed_form():
    table = MhTable()
    table.add(MhEntry(0, 2.0, 0.1, 1, 0, 0.0, 0.0))
    table.add(MhEntry(1, 2.0, 0.1, 1, 0, 0.9, 0.0))
    assert sum_rate(1, 1.0, 2.0, 0.1, table) == pytest.approx(
        math.log2(3.0) * 0.9, rel=1e-12
    )


@settings(max_examples=60, deadline=None)
@given(p=st.floats(min_value=0.0, max_value=1.0), k=st.integers(min_value=1, max_value=12))
def test_sum_rate_binomial_weights_partition(p, k):
    # with m_h = h the weighted sum is the binomial mean k*p, which pins
    # the weights as a proper probability distribution over h = 0..k
    table = _flat_table([1.5], h_max=k)
    assert sum_rate(k, p, 1.5, 0.1, table) == pytest.approx(
        math.log2(2.5) * k * p, abs=1e-9
    )


def test_sum_rate_missing_entry_is_loud():
    table = _flat_table([2.0], h_max=2)
    with pytest.raises(MhLookupError):
        sum_rate(5, 0.5, 2.0, 0.1, table)


def test_grid_single_point():
    table = _flat_table([0.7], h_max=4)
    assert grid_maximize_sum_rate(4, [0.3], [0.7], 0.1, table) == (
        0.3,
        0.7,
        sum_rate(4, 0.3, 0.7, 0.1, table),
    )


def test_grid_single_contender_prefers_max_gamma():
    # m_1 = 1 - eps at every gamma: U = log2(1+gamma) * p * 0.9
    gammas = [0.1, 1.0, 10.0, 31.0]
    table = _flat_table(gammas, h_max=1, value=lambda h: 0.9 * h)
    p_opt, g_opt, _ = grid_maximize_sum_rate(1, [0.25, 0.5, 1.0], gammas, 0.1, table)
    assert (p_opt, g_opt) == (1.0, 31.0)


def test_grid_tie_break_toward_smaller_point():
    # m_h = 0 everywhere: all grid points tie at U = 0
    table = _flat_table([0.5, 1.0], h_max=2, value=lambda h: 0.0)
    p_opt, g_opt, u_opt = grid_maximize_sum_rate(2, [0.2, 1.0], [1.0, 0.5], 0.1, table)
    assert (p_opt, g_opt, u_opt) == (0.2, 0.5, 0.0)


def test_grid_dominates_policy_point():
    cfg = _config(n=8)
    k = 8
    params = adaptive_params(cfg, k)
    gammas = list(policy_gamma_grid(cfg.gamma_max, points=6)) + [params.gamma]
    table = MhTable()
    for g in gammas:
        table.ensure(k, g, cfg.epsilon, samples=4000, seed_base=0)
    _, _, u_opt = grid_maximize_sum_rate(k, policy_p_grid(0.25), gammas, cfg.epsilon, table)
    u_policy = sum_rate(k, params.p, params.gamma, cfg.epsilon, table)
    assert u_opt >= u_policy


def test_grid_requires_points():
    with pytest.raises(ValueError):
        grid_maximize_sum_rate(1, [], [1.0], 0.1, MhTable())


def test_default_grids():
    p = policy_p_grid()
    assert len(p) == 20 and p[0] == pytest.approx(0.05) and p[-1] == pytest.approx(1.0)
    g = policy_gamma_grid(31.0)
    assert len(g) == 40
    assert g[0] > 1e-3 and g[-1] == pytest.approx(31.0)
    assert np.all(np.diff(g) > 0)
