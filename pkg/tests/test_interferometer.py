"""Delay-line routing, pairwise interference law, and stochastic matching."""

import math

import numpy as np
import pytest

from homsim import (
    BeamSplitterConfig,
    EmitterParams,
    InterferometerConfig,
    RoutedPhoton,
    StreamConfig,
    interfere_stream,
    pair_interference_outcome,
    route,
    route_unpaired,
    simulate_emission_stream,
)
from homsim.interferometer import (
    RoutedStream,
    _candidate_pairs,
    coincidence_probability,
    envelope_overlap_ratio,
    match_pairs,
)

PC_EXAMPLE = 0.164839976982180350  # (1 - exp(-0.4))/2, balanced splitter, M=1


def _itf(**kw):
    kw.setdefault("delta_t", 4.6)
    kw.setdefault("bs", BeamSplitterConfig(theta=math.pi / 4, mode_match=1.0))
    kw.setdefault("pol_mode", "parallel")
    return InterferometerConfig(**kw)


def test_route_applies_exact_delay(strong_dephasing, rng):
    stream = simulate_emission_stream(StreamConfig(strong_dephasing, 3e3, rng_seed=4))
    routed = route(stream, _itf(), rng)
    assert len(routed) == len(stream)
    assert np.all(np.diff(routed.arrival_times) >= 0)
    # arrival must be emission plus exactly 0 or exactly delta_t, per photon id;
    # compare with the forward sum so the float op matches bit for bit
    expected = stream.emission_times[routed.photon_ids] + 4.6 * routed.long_arm
    np.testing.assert_array_equal(routed.arrival_times, expected)
    delays = np.empty(len(stream))
    delays[routed.photon_ids] = routed.envelope_delays
    np.testing.assert_array_equal(delays, stream.envelope_delays)


def test_route_arm_fraction_and_polarization(strong_dephasing):
    stream = simulate_emission_stream(StreamConfig(strong_dephasing, 3e4, rng_seed=9))
    cfg = _itf(arm_prob_long=0.3, pol_mode="orthogonal")
    routed = route(stream, cfg, np.random.default_rng(11))
    frac = routed.long_arm.mean()
    assert abs(frac - 0.3) < 3 * math.sqrt(0.3 * 0.7 / len(routed))
    i_long = int(np.flatnonzero(routed.long_arm)[0])
    i_short = int(np.flatnonzero(~routed.long_arm)[0])
    assert routed.photon(i_long).polarization == "V"
    assert routed.photon(i_short).polarization == "H"
    par = route(stream, _itf(arm_prob_long=0.3), np.random.default_rng(11))
    assert par.photon(i_long).polarization == "H"


def test_envelope_overlap_ratio_cases():
    # both detection instants after both arrivals: full overlap
    r = envelope_overlap_ratio(3.0, 2.5, 0.0, 2.0, 1.0)
    assert r <= 1.0
    assert r == pytest.approx(1.0, abs=1e-12)
    # one instant before the later wave packet has started: no overlap
    assert envelope_overlap_ratio(1.5, 3.0, 0.0, 2.0, 1.0) == 0.0
    # both instants before either envelope exists
    assert envelope_overlap_ratio(-1.0, -1.0, 0.0, 2.0, 1.0) == 0.0
    arr = envelope_overlap_ratio(np.array([3.0, 1.5]), np.array([2.5, 3.0]), 0.0, 2.0, 1.0)
    assert arr.shape == (2,)
    assert np.all((arr >= 0) & (arr <= 1))


def test_coincidence_probability_frozen_example(balanced_splitter):
    p = EmitterParams(gamma_spon=1.0, gamma_pure=0.2, w_p=1.0)
    a = RoutedPhoton(0, 0.0, "short", "H", 1.0)
    b = RoutedPhoton(1, 0.0, "long", "H", 0.0)
    pc = coincidence_probability(1.0, 0.0, a, b, p, balanced_splitter)
    assert pc == pytest.approx(PC_EXAMPLE, abs=1e-12)
    # orthogonal polarizations never interfere: classical 50/50 splitting
    b_v = RoutedPhoton(1, 0.0, "long", "V", 0.0)
    base = math.cos(balanced_splitter.theta) ** 4 + math.sin(balanced_splitter.theta) ** 4
    assert coincidence_probability(1.0, 0.0, a, b_v, p, balanced_splitter) == base
    dead = coincidence_probability(-1.0, 0.0, a, b, p, balanced_splitter)
    assert dead == base


def test_coincidence_probability_bounds(rng):
    p = EmitterParams(gamma_spon=0.8, gamma_pure=0.5, w_p=1.0)
    for _ in range(200):
        bs = BeamSplitterConfig(theta=rng.uniform(0, math.pi / 2), mode_match=rng.uniform(0, 1))
        a = RoutedPhoton(0, rng.uniform(0, 5), "short", "H", rng.exponential(1.25))
        b = RoutedPhoton(1, rng.uniform(0, 5), "long", "H", rng.exponential(1.25))
        pc = coincidence_probability(
            a.arrival_time + a.envelope_delay, b.arrival_time + b.envelope_delay, a, b, p, bs
        )
        assert 0.0 <= pc <= 1.0


def test_pair_outcome_structure_and_rate(balanced_splitter):
    p = EmitterParams(gamma_spon=1.0, gamma_pure=0.3, w_p=1.0)
    # identical detection instants on a balanced splitter: perfect suppression
    a0 = RoutedPhoton(0, 0.0, "short", "H", 0.3)
    b0 = RoutedPhoton(1, 0.1, "long", "H", 0.2)
    assert coincidence_probability(0.3, 0.3, a0, b0, p, balanced_splitter) == 0.0
    # distinguishable instants give a rate strictly between 0 and classical
    a = RoutedPhoton(0, 0.0, "short", "H", 0.3)
    b = RoutedPhoton(1, 0.1, "long", "H", 0.6)
    u, v = 0.3, 0.1 + 0.6
    pc = coincidence_probability(u, v, a, b, p, balanced_splitter)
    assert 0.02 < pc < 0.49
    rng = np.random.default_rng(21)
    n, n_coinc = 20000, 0
    for _ in range(n):
        outcome, ((ch_a, t_a), (ch_b, t_b)) = pair_interference_outcome(a, b, p, balanced_splitter, rng)
        assert (t_a, t_b) == (u, v)
        if outcome == "coincidence":
            assert ch_a != ch_b
            n_coinc += 1
        else:
            assert ch_a == ch_b
    assert abs(n_coinc / n - pc) < 3 * math.sqrt(pc * (1 - pc) / n)


def test_route_unpaired_port_probabilities():
    bs = BeamSplitterConfig(theta=0.9, mode_match=1.0)
    c2 = math.cos(0.9) ** 2
    rng = np.random.default_rng(5)
    short = RoutedPhoton(0, 2.0, "short", "H", 0.5)
    longp = RoutedPhoton(1, 2.0, "long", "H", 0.5)
    n = 20000
    hits_short = sum(route_unpaired(short, bs, rng)[0] == 3 for _ in range(n)) / n
    hits_long = sum(route_unpaired(longp, bs, rng)[0] == 3 for _ in range(n)) / n
    se = 3 * math.sqrt(c2 * (1 - c2) / n)
    assert abs(hits_short - c2) < se
    assert abs(hits_long - (1 - c2)) < se
    assert route_unpaired(short, bs, rng)[1] == 2.5


def test_candidate_pairs_weights_and_window():
    p = EmitterParams(gamma_spon=1 / 3.4, gamma_pure=0.2, w_p=1.0)
    bs = BeamSplitterConfig(theta=math.pi / 4, mode_match=0.7)
    routed = RoutedStream(
        arrival_times=np.array([0.0, 0.1]),
        long_arm=np.array([False, True]),
        envelope_delays=np.array([0.5, 0.6]),
        photon_ids=np.array([0, 1]),
        pol_mode="parallel",
    )
    a, b, q = _candidate_pairs(routed, p, bs, window=5.0)
    assert (a.tolist(), b.tolist()) == ([1], [0])
    assert q[0] == pytest.approx(0.7 * math.exp(-2 * 0.2 * 0.2), rel=1e-12)

    # arrival separation beyond the pairing window: no candidates
    far = RoutedStream(
        arrival_times=np.array([0.0, 100.0]),
        long_arm=np.array([False, True]),
        envelope_delays=np.array([0.5, 0.6]),
        photon_ids=np.array([0, 1]),
        pol_mode="parallel",
    )
    a, b, q = _candidate_pairs(far, p, bs, window=5.0)
    assert len(q) == 0

    # second wave packet starts only after the first detection: zero overlap
    stale = RoutedStream(
        arrival_times=np.array([0.0, 5.0]),
        long_arm=np.array([False, True]),
        envelope_delays=np.array([1.0, 1.0]),
        photon_ids=np.array([0, 1]),
        pol_mode="parallel",
    )
    a, b, q = _candidate_pairs(stale, p, bs, window=10.0)
    assert len(q) == 0


def test_match_pairs_unconditional_rates():
    # chains of three photons: pair A (q=0.5) shares its second photon with
    # pair B (q=0.4).  The survival correction must keep the unconditional
    # acceptance of B at 0.4 even though A is resolved first.
    m = 20000
    k = np.arange(m)
    a_idx = np.empty(2 * m, dtype=np.int64)
    b_idx = np.empty(2 * m, dtype=np.int64)
    q = np.empty(2 * m)
    a_idx[0::2], b_idx[0::2], q[0::2] = 3 * k, 3 * k + 1, 0.5
    a_idx[1::2], b_idx[1::2], q[1::2] = 3 * k + 1, 3 * k + 2, 0.4
    a_o, b_o, acc = match_pairs(3 * m, a_idx, b_idx, q, np.random.default_rng(99))
    q_o = np.where(b_o % 3 == 1, 0.5, 0.4)  # recover pair type after reordering
    frac_a = acc[q_o == 0.5].mean()
    frac_b = acc[q_o == 0.4].mean()
    assert abs(frac_a - 0.5) < 3.5 * math.sqrt(0.25 / m)
    assert abs(frac_b - 0.4) < 3.5 * math.sqrt(0.24 / m)


def test_match_pairs_overcommitted_photon():
    # two q=0.9 pairs share a photon; only 1.0 of probability is available.
    # The first pair keeps its 0.9, the second fires whenever possible (the
    # clamp) and lands at 0.1 unconditionally.
    m = 20000
    k = np.arange(m)
    a_idx = np.empty(2 * m, dtype=np.int64)
    b_idx = np.empty(2 * m, dtype=np.int64)
    a_idx[0::2], b_idx[0::2] = 3 * k, 3 * k + 1
    a_idx[1::2], b_idx[1::2] = 3 * k + 1, 3 * k + 2
    q = np.full(2 * m, 0.9)
    a_o, b_o, acc = match_pairs(3 * m, a_idx, b_idx, q, np.random.default_rng(7))
    first = b_o % 3 == 1
    assert abs(acc[first].mean() - 0.9) < 3.5 * math.sqrt(0.09 / m)
    assert abs(acc[~first].mean() - 0.1) < 3.5 * math.sqrt(0.09 / m)


def test_match_pairs_exclusive(rng):
    n = 4000
    a_idx = rng.integers(0, n, 6000)
    b_idx = (a_idx + rng.integers(1, n, 6000)) % n
    q = rng.uniform(0.0, 0.4, 6000)
    a_o, b_o, acc = match_pairs(n, a_idx, b_idx, q, rng)
    used = np.concatenate([a_o[acc], b_o[acc]])
    assert len(np.unique(used)) == len(used)
    assert a_o.shape == b_o.shape == acc.shape


def test_interfere_stream_conserves_and_reproduces(strong_dephasing):
    stream = simulate_emission_stream(StreamConfig(strong_dephasing, 2e4, rng_seed=31))
    for pairing in ("weighted", "greedy", "none"):
        cfg = _itf(pairing=pairing)
        out1 = interfere_stream(stream, cfg, strong_dephasing, np.random.default_rng(7))
        out2 = interfere_stream(stream, cfg, strong_dephasing, np.random.default_rng(7))
        assert len(out1[3]) + len(out1[4]) == len(stream)
        assert np.all(np.diff(out1[3]) >= 0) and np.all(np.diff(out1[4]) >= 0)
        np.testing.assert_array_equal(out1[3], out2[3])
        np.testing.assert_array_equal(out1[4], out2[4])


def test_no_interference_paths_agree(strong_dephasing):
    # orthogonal polarization, M=0 and pairing "none" all skip the pairing
    # stage and must consume identical random draws
    stream = simulate_emission_stream(StreamConfig(strong_dephasing, 2e4, rng_seed=41))
    ref = interfere_stream(stream, _itf(pairing="none"), strong_dephasing, np.random.default_rng(3))
    orth = interfere_stream(stream, _itf(pol_mode="orthogonal"), strong_dephasing, np.random.default_rng(3))
    bs0 = BeamSplitterConfig(theta=math.pi / 4, mode_match=0.0)
    nomatch = interfere_stream(stream, _itf(bs=bs0), strong_dephasing, np.random.default_rng(3))
    for ch in (3, 4):
        np.testing.assert_array_equal(ref[ch], orth[ch])
        np.testing.assert_array_equal(ref[ch], nomatch[ch])


def test_interferometer_config_validation(balanced_splitter):
    with pytest.raises(ValueError):
        _itf(delta_t=-1.0)
    with pytest.raises(ValueError):
        _itf(pol_mode="circular")
    with pytest.raises(ValueError):
        _itf(pairing="quadratic")
    p = EmitterParams(gamma_spon=2.0, gamma_pure=0.0, w_p=1.0)
    assert _itf().resolved_window(p) == pytest.approx(5.0)
    assert _itf(pairing_window=3.0).resolved_window(p) == 3.0
