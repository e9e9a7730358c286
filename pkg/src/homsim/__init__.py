"""Two-photon interference simulator for a single dephasing emitter.

Analytic coherence curves, a Monte Carlo emission/interferometer/detection
pipeline, and the joint fit used to extract dephasing and pump rates from
measured coincidence histograms.
"""

from .analysis import HomFitResult, difference_curve, fit_hom_model, rebin, v0_from_histograms
from .coherence import (
    INSTANTANEOUS,
    BeamSplitterConfig,
    EmitterParams,
    convolve_irf,
    g1,
    g2_34,
    g2_source,
    overlap_sq,
    visibility,
)
from .detection import DetectionConfig, DetectionEvent, apply_detector, normalize, tac_mca_histogram
from .emitter import PhotonEvent, PhotonStream, StreamConfig, empirical_g2, simulate_emission_stream
from .fileio import RunConfig, default_run_config
from .histogram import CorrelationHistogram, make_bin_edges
from .interferometer import (
    InterferometerConfig,
    RoutedPhoton,
    interfere_stream,
    pair_interference_outcome,
    route,
    route_unpaired,
)
from .pipeline import run_replica, run_replicas
from .selftest import run_selftest

__version__ = "0.1.0"

__all__ = [
    "BeamSplitterConfig",
    "CorrelationHistogram",
    "DetectionConfig",
    "DetectionEvent",
    "EmitterParams",
    "HomFitResult",
    "INSTANTANEOUS",
    "InterferometerConfig",
    "PhotonEvent",
    "PhotonStream",
    "RoutedPhoton",
    "RunConfig",
    "StreamConfig",
    "apply_detector",
    "convolve_irf",
    "default_run_config",
    "difference_curve",
    "empirical_g2",
    "fit_hom_model",
    "g1",
    "g2_34",
    "g2_source",
    "interfere_stream",
    "make_bin_edges",
    "normalize",
    "overlap_sq",
    "pair_interference_outcome",
    "rebin",
    "route",
    "route_unpaired",
    "run_replica",
    "run_replicas",
    "run_selftest",
    "simulate_emission_stream",
    "tac_mca_histogram",
    "v0_from_histograms",
    "visibility",
]
