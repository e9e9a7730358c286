"""End-to-end runs: emission -> interferometer -> detectors -> histogram.

Each replica uses seed + replica_index for the emission stream and
independent substreams (SeedSequence spawn keys) for the optics and the
detector chain, so a run is reproducible bit for bit from its config.
"""

from __future__ import annotations

import numpy as np

from .detection import apply_detector, tac_mca_histogram
from .emitter import StreamConfig, simulate_emission_stream
from .fileio import RunConfig
from .interferometer import interfere_stream


def _stage_rng(seed, stage):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stage,)))


def run_replica(rc: RunConfig, replica_index=0):
    """One replica; returns (stream, detected channel times)."""
    seed = rc.seed + replica_index
    stream = simulate_emission_stream(StreamConfig(rc.emitter, rc.duration, seed))
    channels = interfere_stream(stream, rc.interferometer, rc.emitter, _stage_rng(seed, 1))
    channels = apply_detector(channels, rc.detection, _stage_rng(seed, 2), rc.duration)
    return stream, channels


def run_replicas(rc: RunConfig):
    """All replicas; returns (merged tag channels, merged raw histogram).

    Tag times of replica k are offset by k * duration so the merged list is
    a single coherent timeline; histograms are accumulated per replica.
    """
    hist = None
    tags = {3: [], 4: []}
    for k in range(rc.replicas):
        _, channels = run_replica(rc, k)
        h = tac_mca_histogram(channels, rc.detection)
        hist = h if hist is None else hist.merge(h)
        off = k * rc.duration
        for ch in (3, 4):
            tags[ch].append(channels[ch] + off)
    merged = {ch: np.concatenate(tags[ch]) for ch in (3, 4)}
    return merged, hist
