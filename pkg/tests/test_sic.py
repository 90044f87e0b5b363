import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sicra.sic import (
    DecodeOutcome,
    MhEntry,
    MhLookupError,
    MhTable,
    decode_slot,
    entry_seed,
    estimate_mh,
    mh_table,
    quantize_key,
)

from .oracles import m2_quadrature, reduced_chain_reference, sic_chain_reference

RNG = lambda: np.random.default_rng(7)


def test_decode_single_strong_transmitter():
    # G * S0 >= gamma reduces to G >= c = 0.10536 at any gamma
    out = decode_slot([5.0], gamma=2.0, epsilon=0.1, rng=RNG())
    assert out == DecodeOutcome(1, (True,))
    out = decode_slot([0.01], gamma=2.0, epsilon=0.1, rng=RNG())
    assert out == DecodeOutcome(0, (False,))


def test_decode_two_user_hand_example():
    # gamma=1, eps=0.1: S0 = 9.4912; powers (94.91, 0.4746)
    # strongest: 94.91/(1+0.4746) = 64.4 >= 1; weakest: 0.4746/1 < 1
    out = decode_slot([10.0, 0.05], gamma=1.0, epsilon=0.1, rng=RNG())
    assert out.num_decoded == 1
    assert out.decoded_flags == (True, False)


def test_decode_empty_slot_and_domain_errors():
    assert decode_slot([], gamma=1.0, epsilon=0.1).num_decoded == 0
    with pytest.raises(ValueError):
        decode_slot([1.0, -0.5], gamma=1.0, epsilon=0.1)
    with pytest.raises(ValueError):
        decode_slot([1.0], gamma=0.0, epsilon=0.1)


@settings(max_examples=200, deadline=None)
@given(
    gains=st.lists(st.floats(min_value=1e-4, max_value=50.0), min_size=1, max_size=8),
    gamma=st.floats(min_value=1e-3, max_value=31.0),
)
def test_decode_matches_independent_chain_transcription(gains, gamma):
    out = decode_slot(gains, gamma, 0.1, rng=RNG())
    assert out.num_decoded == sic_chain_reference(gains, gamma, 0.1)
    # the reduced-form rule on raw gains is algebraically the same test
    assert out.num_decoded == reduced_chain_reference(gains, gamma, 0.1)


@settings(max_examples=200, deadline=None)
@given(
    gains=st.lists(st.floats(min_value=1e-4, max_value=50.0), min_size=1, max_size=8),
    gamma=st.floats(min_value=1e-3, max_value=31.0),
)
def test_decode_prefix_property(gains, gamma):
    out = decode_slot(gains, gamma, 0.1, rng=RNG())
    flags_by_power = [f for _, f in sorted(zip(gains, out.decoded_flags), reverse=True)]
    assert flags_by_power == sorted(flags_by_power, reverse=True)
    assert out.num_decoded == sum(out.decoded_flags)


@settings(max_examples=100, deadline=None)
@given(
    gains=st.lists(st.floats(min_value=1e-4, max_value=50.0), min_size=1, max_size=8),
    g1=st.floats(min_value=1e-3, max_value=31.0),
    g2=st.floats(min_value=1e-3, max_value=31.0),
)
def test_decode_monotone_in_gamma(gains, g1, g2):
    lo, hi = sorted([g1, g2])
    n_lo = decode_slot(gains, lo, 0.1, rng=RNG()).num_decoded
    n_hi = decode_slot(gains, hi, 0.1, rng=RNG()).num_decoded
    assert n_hi <= n_lo


def test_estimate_mh_zero_transmitters():
    assert estimate_mh(0, 1.0, 0.1) == (0.0, 0.0)


@pytest.mark.parametrize("gamma", [0.05, 1.0, 31.0])
def test_estimate_mh_single_transmitter_closed_form(gamma):
    # m_1 = P(G*S0 >= gamma) = 1 - epsilon exactly
    est, err = estimate_mh(1, gamma, 0.1, samples=200_000, seed=42)
    assert err > 0
    assert abs(est - 0.9) <= 3 * err


def test_estimate_mh_two_user_quadrature_oracle():
    est, err = estimate_mh(2, 31.0, 0.1, samples=400_000, seed=5)
    assert abs(est - m2_quadrature(31.0, 0.1)) <= 3 * err


def test_estimate_mh_deterministic():
    a = estimate_mh(4, 0.3, 0.1, samples=5000, seed=11)
    b = estimate_mh(4, 0.3, 0.1, samples=5000, seed=11)
    c = estimate_mh(4, 0.3, 0.1, samples=5000, seed=12)
    assert a == b
    assert a != c


def test_estimate_mh_domain_errors():
    with pytest.raises(ValueError):
        estimate_mh(-1, 1.0, 0.1)
    with pytest.raises(ValueError):
        estimate_mh(2, 1.0, 0.1, samples=0)


def test_mh_bounded_by_h():
    for h in range(6):
        est, _ = estimate_mh(h, 0.2, 0.1, samples=3000, seed=h)
        assert 0.0 <= est <= h


def test_mh_table_build_and_lookup(tmp_path):
    path = tmp_path / "mh.txt"
    table = mh_table(3, 1.0, 0.1, samples=2000, seed=3, path=path)
    assert len(table) == 4  # h = 0..3
    assert table.get(0, 1.0, 0.1) == 0.0
    m1 = table.get(1, 1.0, 0.1)
    e = table.entry(1, 1.0, 0.1)
    assert abs(m1 - 0.9) <= 3 * e.stderr
    with pytest.raises(MhLookupError):
        table.get(9, 1.0, 0.1)
    with pytest.raises(MhLookupError):
        table.get(1, 2.0, 0.1)


def test_mh_table_persistence_bit_identical(tmp_path):
    path = tmp_path / "mh.txt"
    table = mh_table(4, 0.049310, 0.1, samples=2000, seed=9, path=path)
    reloaded = MhTable.load(path)
    assert len(reloaded) == len(table)
    for e in table.entries():
        r = reloaded.entry(e.h, e.gamma, e.epsilon)
        assert r == e  # exact float round-trip


def test_mh_table_ensure_is_idempotent(tmp_path):
    path = tmp_path / "mh.txt"
    mh_table(3, 2.0, 0.1, samples=1000, seed=1, path=path)
    table = MhTable.load(path)
    assert table.ensure(3, 2.0, 0.1, samples=1000, seed_base=1) == 0
    assert table.ensure(5, 2.0, 0.1, samples=1000, seed_base=1) == 2


def test_quantized_gamma_keys():
    table = MhTable()
    table.add(MhEntry(1, quantize_key(0.0493096646), 0.1, 10, 0, 0.9, 0.01))
    # six significant digits: nearby float hits the same key
    assert table.get(1, 0.04930966, 0.1) == 0.9
    assert quantize_key(0.0493096646) == 0.0493097


def test_entry_seed_stable():
    s1 = entry_seed(0, 3, 0.5, 0.1)
    assert s1 == entry_seed(0, 3, 0.5, 0.1)
    assert s1 != entry_seed(1, 3, 0.5, 0.1)
    assert s1 != entry_seed(0, 4, 0.5, 0.1)


def test_estimate_matches_decode_slot_statistics():
    # the matrix fast path and decode_slot must describe the same receiver
    rng = np.random.default_rng(123)
    gamma, eps, h, n = 0.3, 0.1, 4, 4000
    counts = []
    for _ in range(n):
        counts.append(decode_slot(rng.standard_exponential(h), gamma, eps, rng=rng).num_decoded)
    est, err = estimate_mh(h, gamma, eps, samples=100_000, seed=77)
    scalar_mean = float(np.mean(counts))
    scalar_err = float(np.std(counts, ddof=1) / math.sqrt(n))
    assert abs(est - scalar_mean) <= 3 * math.hypot(err, scalar_err)
