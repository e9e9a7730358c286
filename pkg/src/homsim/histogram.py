"""Shared correlation-histogram container used across the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


def make_bin_edges(tau_min, tau_max, bin_width):
    """Uniform bin edges over [tau_min, tau_max).

    bin_width must divide the range to within one part in 1e6.
    """
    if tau_max <= tau_min:
        raise ValueError("tau_max must exceed tau_min")
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    span = tau_max - tau_min
    n = span / bin_width
    n_round = round(n)
    if n_round < 1 or abs(n - n_round) > 1e-6 * n_round:
        raise ValueError(
            "bin_width %g does not divide range [%g, %g]" % (bin_width, tau_min, tau_max)
        )
    return tau_min + bin_width * np.arange(n_round + 1)


@dataclass
class CorrelationHistogram:
    """Binned start-stop delay counts plus optional normalization state.

    normalized and normalization_constant are filled by detection.normalize;
    norm_region records the |tau| interval used so rebinning can renormalize.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    normalized: np.ndarray | None = None
    normalization_constant: float | None = None
    norm_region: tuple[float, float] | None = None
    truncated: bool = field(default=False, compare=False)

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.bin_edges.ndim != 1 or len(self.bin_edges) < 2:
            raise ValueError("need at least one bin")
        if len(self.counts) != len(self.bin_edges) - 1:
            raise ValueError("counts length does not match bin edges")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def bin_centers(self):
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def bin_width(self):
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def total_counts(self):
        return int(self.counts.sum())

    def same_geometry(self, other):
        return len(self.bin_edges) == len(other.bin_edges) and np.allclose(
            self.bin_edges, other.bin_edges, rtol=0, atol=1e-9
        )

    def merge(self, other):
        """Add counts from a replica histogram with identical geometry.

        Normalization state is discarded; renormalize the merged result.
        """
        if not self.same_geometry(other):
            raise ValueError("histogram geometries differ")
        return CorrelationHistogram(self.bin_edges.copy(), self.counts + other.counts)

    def copy(self):
        return replace(
            self,
            bin_edges=self.bin_edges.copy(),
            counts=self.counts.copy(),
            normalized=None if self.normalized is None else self.normalized.copy(),
        )
