"""Unbalanced Michelson-style delay line plus recombining beam splitter.

Each photon takes the short or long arm (Bernoulli), acquiring delta_t of
extra delay on the long arm.  At the output splitter, photons from opposite
arms arriving within the envelope overlap can interfere pairwise: with the
right probability the pair bunches into a common output port instead of
routing independently.  The matching scheme below reproduces the pairwise
bunching law while keeping pairings exclusive, see match_pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherence import BeamSplitterConfig, EmitterParams
from .emitter import PhotonStream

# pairs whose bunching probability falls below this are never candidates
Q_MIN = 1e-12


@dataclass(frozen=True)
class InterferometerConfig:
    delta_t: float = 0.0
    bs: BeamSplitterConfig = BeamSplitterConfig()
    pol_mode: str = "parallel"
    arm_prob_long: float = 0.5
    pairing_window: float | None = None  # None: 10/gamma_spon at run time
    pairing: str = "weighted"  # weighted | greedy | none

    def __post_init__(self):
        if self.delta_t < 0:
            raise ValueError("delta_t must be non-negative")
        if self.pol_mode not in ("parallel", "orthogonal"):
            raise ValueError("pol_mode must be 'parallel' or 'orthogonal'")
        if not 0.0 <= self.arm_prob_long <= 1.0:
            raise ValueError("arm_prob_long must lie in [0, 1]")
        if self.pairing_window is not None and not self.pairing_window > 0:
            raise ValueError("pairing_window must be positive")
        if self.pairing not in ("weighted", "greedy", "none"):
            raise ValueError("pairing must be weighted, greedy or none")

    def resolved_window(self, p: EmitterParams):
        return self.pairing_window if self.pairing_window is not None else 10.0 / p.gamma_spon


@dataclass(frozen=True)
class RoutedPhoton:
    photon_id: int
    arrival_time: float
    arm: str  # "short" | "long"
    polarization: str  # "H" | "V"
    envelope_delay: float


@dataclass
class RoutedStream:
    """Photons after the delay line, sorted by arrival time."""

    arrival_times: np.ndarray
    long_arm: np.ndarray  # bool
    envelope_delays: np.ndarray
    photon_ids: np.ndarray
    pol_mode: str

    def __len__(self):
        return len(self.arrival_times)

    def photon(self, i) -> RoutedPhoton:
        lng = bool(self.long_arm[i])
        pol = "V" if (lng and self.pol_mode == "orthogonal") else "H"
        return RoutedPhoton(
            int(self.photon_ids[i]),
            float(self.arrival_times[i]),
            "long" if lng else "short",
            pol,
            float(self.envelope_delays[i]),
        )


def route(stream: PhotonStream, cfg: InterferometerConfig, rng) -> RoutedStream:
    """Send each photon through a random arm; long arm adds exactly delta_t."""
    n = len(stream)
    long_arm = rng.random(n) < cfg.arm_prob_long
    arrival = stream.emission_times + cfg.delta_t * long_arm
    order = np.argsort(arrival, kind="stable")
    return RoutedStream(
        arrival[order],
        long_arm[order],
        stream.envelope_delays[order],
        np.arange(n)[order],
        cfg.pol_mode,
    )


def envelope_amplitude(t, arrival, gamma_spon):
    """Exponential wave-packet amplitude sqrt(gamma) exp(-gamma (t-arr)/2)."""
    t = np.asarray(t, dtype=float)
    live = t >= arrival
    return np.where(live, np.sqrt(gamma_spon) * np.exp(-0.5 * gamma_spon * (t - arrival) * live), 0.0)


def envelope_overlap_ratio(u, v, arr_a, arr_b, gamma_spon):
    """Symmetrized envelope overlap at the two detection instants.

    For equal-width exponential envelopes this is 1 when both instants fall
    inside both envelopes and 0 otherwise.
    """
    big = envelope_amplitude(u, arr_a, gamma_spon) * envelope_amplitude(v, arr_b, gamma_spon)
    swp = envelope_amplitude(v, arr_a, gamma_spon) * envelope_amplitude(u, arr_b, gamma_spon)
    den = big * big + swp * swp
    r = np.where(den > 0, 2.0 * big * swp / np.where(den > 0, den, 1.0), 0.0)
    return np.clip(r, 0.0, 1.0)  # 2ab/(a^2+b^2) can top 1 by an ulp


def coincidence_probability(u, v, a: RoutedPhoton, b: RoutedPhoton, p: EmitterParams, bs: BeamSplitterConfig):
    """Probability that the pair leaves through different output ports."""
    c2 = math.cos(bs.theta) ** 2
    s2 = math.sin(bs.theta) ** 2
    base = c2 * c2 + s2 * s2
    if a.polarization != b.polarization:
        return base
    r = envelope_overlap_ratio(u, v, a.arrival_time, b.arrival_time, p.gamma_spon)
    return base - 2.0 * s2 * c2 * bs.mode_match * r * math.exp(-2.0 * p.gamma_pure * abs(u - v))


def pair_interference_outcome(a: RoutedPhoton, b: RoutedPhoton, p: EmitterParams, bs: BeamSplitterConfig, rng):
    """Resolve one opposite-arm pair at the output splitter.

    Detection instants are the arrival times plus the envelope delays the
    photons already carry.  Returns (outcome, ((ch_a, t_a), (ch_b, t_b)))
    with outcome "coincidence" or "bunch".
    """
    u = a.arrival_time + a.envelope_delay
    v = b.arrival_time + b.envelope_delay
    p_c = coincidence_probability(u, v, a, b, p, bs)
    if rng.random() < p_c:
        if rng.random() < 0.5:
            return "coincidence", ((3, u), (4, v))
        return "coincidence", ((4, u), (3, v))
    ch = 3 if rng.random() < 0.5 else 4
    return "bunch", ((ch, u), (ch, v))


def route_unpaired(photon: RoutedPhoton, bs: BeamSplitterConfig, rng):
    """Detector choice for a photon that interferes with nothing."""
    c2 = math.cos(bs.theta) ** 2
    s2 = math.sin(bs.theta) ** 2
    p3 = c2 if photon.arm == "short" else s2
    ch = 3 if rng.random() < p3 else 4
    return ch, photon.arrival_time + photon.envelope_delay


def match_pairs(n_photons, a_idx, b_idx, q, rng):
    """Exclusive stochastic matching with per-pair target probabilities q.

    Pairs are processed strongest first.  Because a photon consumed by an
    earlier pair is lost to later ones, each pair fires with q divided by
    both photons' survival (1 minus the q already spent on earlier pairs),
    so its unconditional acceptance stays ~q.  Photons whose summed q
    exceeds 1 cannot be fully served; the clamp makes those under-deliver
    slightly rather than distort their neighbours.
    """
    order = np.argsort(-q, kind="stable")
    a_o, b_o, q_o = a_idx[order], b_idx[order], q[order]
    m = len(q_o)
    if m == 0:
        return a_o, b_o, np.zeros(0, dtype=bool)

    # survival prefix sums: for each pair, the q-mass its photons spent on
    # earlier-processed pairs
    flat_ph = np.concatenate([a_o, b_o])
    flat_pos = np.concatenate([np.arange(m), np.arange(m)])
    flat_q = np.concatenate([q_o, q_o])
    so = np.lexsort((flat_pos, flat_ph))
    ph_s, q_s = flat_ph[so], flat_q[so]
    cs = np.cumsum(q_s)
    grp = np.flatnonzero(np.r_[True, ph_s[1:] != ph_s[:-1]])
    base = np.repeat(cs[grp] - q_s[grp], np.diff(np.r_[grp, len(ph_s)]))
    surv = 1.0 - (cs - q_s - base)
    inv = np.empty(len(so), dtype=np.int64)
    inv[so] = np.arange(len(so))
    s_a = surv[inv[:m]]
    s_b = surv[inv[m:]]

    p_fire = np.clip(q_o / np.maximum(s_a * s_b, Q_MIN), 0.0, 1.0)
    fired = rng.random(m) < p_fire
    used = np.zeros(n_photons, dtype=bool)
    accepted = np.zeros(m, dtype=bool)
    for k in np.flatnonzero(fired):
        x, y = a_o[k], b_o[k]
        if used[x] or used[y]:
            continue
        used[x] = used[y] = True
        accepted[k] = True
    return a_o, b_o, accepted


def _candidate_pairs(routed: RoutedStream, p: EmitterParams, bs: BeamSplitterConfig, window, chunk=200_000):
    """All opposite-arm pairs within the arrival window whose bunching
    probability is non-negligible.  Returns (a_idx, b_idx, q)."""
    arrival = routed.arrival_times
    u = arrival + routed.envelope_delays
    idx_long = np.flatnonzero(routed.long_arm)
    idx_short = np.flatnonzero(~routed.long_arm)
    arr_short = arrival[idx_short]
    c2 = math.cos(bs.theta) ** 2
    s2 = math.sin(bs.theta) ** 2
    amp = 2.0 * s2 * c2 / (c2 * c2 + s2 * s2) * bs.mode_match

    out_a, out_b, out_q = [], [], []
    for start in range(0, len(idx_long), chunk):
        il = idx_long[start : start + chunk]
        lo = np.searchsorted(arr_short, arrival[il] - window, side="left")
        hi = np.searchsorted(arr_short, arrival[il] + window, side="right")
        npairs = hi - lo
        total = int(npairs.sum())
        if total == 0:
            continue
        a = np.repeat(il, npairs)
        offs = np.concatenate(([0], np.cumsum(npairs)[:-1]))
        b = idx_short[np.arange(total) - np.repeat(offs, npairs) + np.repeat(lo, npairs)]
        ua, ub = u[a], u[b]
        # overlap ratio for equal envelopes: both detection instants must
        # fall after both arrivals
        overlap = np.minimum(ua, ub) >= np.maximum(arrival[a], arrival[b])
        q = amp * overlap * np.exp(-2.0 * p.gamma_pure * np.abs(ua - ub))
        keep = q > Q_MIN
        out_a.append(a[keep])
        out_b.append(b[keep])
        out_q.append(q[keep])
    if not out_a:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), np.zeros(0)
    return np.concatenate(out_a), np.concatenate(out_b), np.concatenate(out_q)


def interfere_stream(stream: PhotonStream, cfg: InterferometerConfig, p: EmitterParams, rng):
    """Run the full stream through the interferometer.

    Returns {3: times, 4: times}, detection instants per output port, sorted.
    Interference only moves opposite-port pairs to a common port; singles
    rates and totals are preserved.
    """
    routed = route(stream, cfg, rng)
    n = len(routed)
    u = routed.arrival_times + routed.envelope_delays

    c2 = math.cos(cfg.bs.theta) ** 2
    s2 = math.sin(cfg.bs.theta) ** 2
    r = rng.random(n)
    p3 = np.where(routed.long_arm, s2, c2)
    ch = np.where(r < p3, 3, 4).astype(np.int8)

    interfering = (
        cfg.pol_mode == "parallel" and cfg.pairing != "none" and cfg.bs.mode_match > 0 and n > 1
    )
    if interfering:
        window = cfg.resolved_window(p)
        a_idx, b_idx, q = _candidate_pairs(routed, p, cfg.bs, window)
        if cfg.pairing == "weighted":
            a_o, b_o, acc = match_pairs(n, a_idx, b_idx, q, rng)
            coin = rng.random(len(a_o)) < 0.5
            det = np.where(coin, 3, 4).astype(np.int8)
            ch[a_o[acc]] = det[acc]
            ch[b_o[acc]] = det[acc]
        else:
            _greedy_outcomes(routed, a_idx, b_idx, q, ch, rng)

    return {3: np.sort(u[ch == 3]), 4: np.sort(u[ch == 4])}


def _greedy_outcomes(routed, a_idx, b_idx, q, ch, rng):
    """Nearest-arrival exclusive pairing; each matched pair resolved by the
    pairwise coincidence law.  Kept for comparison: exclusive matching by
    arrival proximity alone overweights close pairs and lifts the dip floor.
    """
    arrival = routed.arrival_times
    sep = np.abs(arrival[a_idx] - arrival[b_idx])
    order = np.argsort(sep, kind="stable")
    bunch_draw = rng.random(len(order))
    coin = rng.random(len(order)) < 0.5
    used = np.zeros(len(routed), dtype=bool)
    for pos, k in enumerate(order):
        x, y = a_idx[k], b_idx[k]
        if used[x] or used[y]:
            continue
        used[x] = used[y] = True
        # q holds amp*M*R*exp(-2 gamma_p |du|); bunching excess over the
        # independent-routing baseline uses the same quantity
        if bunch_draw[pos] < q[k]:
            det = 3 if coin[pos] else 4
            ch[x] = det
            ch[y] = det
