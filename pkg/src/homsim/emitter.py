"""Monte Carlo photon stream from a single incoherently pumped emitter.

Emission is a renewal process: each cycle waits Exp(w_p) for re-excitation,
Exp(gamma_vib) for vibronic relaxation (skipped when instantaneous), then
Exp(gamma_spon) for the spontaneous decay that ends the cycle.  The recorded
emission_time is the instant the emitting level is populated, i.e. the origin
of the photon wave packet; the decay draw of the same cycle is kept as
envelope_delay because it both delays the next cycle and locates the photon
inside its exponential envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherence import EmitterParams
from .histogram import CorrelationHistogram, make_bin_edges


@dataclass(frozen=True)
class PhotonEvent:
    """One emitted photon. envelope_delay is its decay-instant offset."""

    photon_id: int
    emission_time: float
    envelope_delay: float


@dataclass(frozen=True)
class StreamConfig:
    emitter: EmitterParams
    duration: float
    rng_seed: int = 0

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")


@dataclass
class PhotonStream:
    """Array-backed photon record; times strictly increasing, in ns."""

    emission_times: np.ndarray
    envelope_delays: np.ndarray
    duration: float

    def __post_init__(self):
        self.emission_times = np.asarray(self.emission_times, dtype=float)
        self.envelope_delays = np.asarray(self.envelope_delays, dtype=float)
        if self.emission_times.shape != self.envelope_delays.shape:
            raise ValueError("times and delays must have equal length")

    def __len__(self):
        return len(self.emission_times)

    def __getitem__(self, i) -> PhotonEvent:
        return PhotonEvent(int(i), float(self.emission_times[i]), float(self.envelope_delays[i]))

    @property
    def mean_rate(self):
        return len(self) / self.duration


def mean_cycle_time(p: EmitterParams):
    """Expected time per emission cycle."""
    vib = 0.0 if math.isinf(p.gamma_vib) else 1.0 / p.gamma_vib
    return 1.0 / p.w_p + vib + 1.0 / p.gamma_spon


def simulate_emission_stream(cfg: StreamConfig) -> PhotonStream:
    """Generate the photon stream for one run.  Bit-identical for equal configs."""
    p = cfg.emitter
    rng = np.random.default_rng(cfg.rng_seed)
    has_vib = not math.isinf(p.gamma_vib)
    mean_wait = mean_cycle_time(p)

    times_parts = []
    eps_parts = []
    t_last = 0.0
    prev_eps = 0.0
    n_block = max(int(cfg.duration / mean_wait * 1.1) + 64, 64)
    while True:
        waits = rng.exponential(1.0 / p.w_p, n_block)
        if has_vib:
            waits += rng.exponential(1.0 / p.gamma_vib, n_block)
        eps = rng.exponential(1.0 / p.gamma_spon, n_block)
        # the decay that ends cycle n delays the start of cycle n+1
        waits[0] += prev_eps
        waits[1:] += eps[:-1]
        t0 = t_last + np.cumsum(waits)
        times_parts.append(t0)
        eps_parts.append(eps)
        t_last = t0[-1]
        prev_eps = eps[-1]
        if t_last >= cfg.duration:
            break
        n_block = max(int((cfg.duration - t_last) / mean_wait * 1.2) + 64, 64)

    times = np.concatenate(times_parts)
    eps = np.concatenate(eps_parts)
    keep = times < cfg.duration
    return PhotonStream(times[keep], eps[keep], cfg.duration)


def empirical_g2(stream: PhotonStream, bin_width: float, max_tau: float) -> CorrelationHistogram:
    """Histogram of ordered emission-time separations, normalized so the
    uncorrelated level is 1 (rate-squared estimate)."""
    times = stream.emission_times
    if len(times) < 2:
        raise ValueError("stream too short for a correlation estimate")
    if np.any(np.diff(times) <= 0):
        raise ValueError("emission times must be strictly increasing")
    edges = make_bin_edges(0.0, max_tau, bin_width)
    counts = pairwise_delay_counts(times, times, edges)
    counts[0] -= len(times)  # drop the self pairs sitting at zero delay
    norm = len(times) ** 2 / stream.duration * bin_width
    hist = CorrelationHistogram(edges, counts)
    hist.normalized = counts / norm
    hist.normalization_constant = norm
    return hist


def pairwise_delay_counts(ts_a, ts_b, edges, chunk=500_000):
    """Counts of t_b - t_a over all pairs, binned by edges.  Both arrays must
    be sorted ascending; work is chunked to bound memory."""
    ts_a = np.asarray(ts_a, dtype=float)
    ts_b = np.asarray(ts_b, dtype=float)
    nbins = len(edges) - 1
    width = edges[1] - edges[0]
    counts = np.zeros(nbins, dtype=np.int64)
    for start in range(0, len(ts_a), chunk):
        a = ts_a[start : start + chunk]
        lo = np.searchsorted(ts_b, a + edges[0], side="left")
        hi = np.searchsorted(ts_b, a + edges[-1], side="left")
        npairs = hi - lo
        total = int(npairs.sum())
        if total == 0:
            continue
        rep_a = np.repeat(a, npairs)
        offs = np.concatenate(([0], np.cumsum(npairs)[:-1]))
        j = np.arange(total) - np.repeat(offs, npairs) + np.repeat(lo, npairs)
        d = ts_b[j] - rep_a
        idx = np.floor((d - edges[0]) / width).astype(np.int64)
        np.clip(idx, 0, nbins - 1, out=idx)
        counts += np.bincount(idx, minlength=nbins)
    return counts
