"""Closed-form coherence and correlation curves for a driven two-level emitter.

The emitter model: incoherent pumping at rate w_p into a vibronic level that
relaxes at gamma_vib to the emitting state, spontaneous decay at gamma_spon,
pure dephasing at gamma_pure on the optical transition.  All rates in 1/ns,
delays in ns.  Everything here is deterministic; the Monte Carlo modules are
checked against these curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# conversion between a Gaussian FWHM and its sigma, 2*sqrt(2*ln 2)
FWHM_TO_SIGMA = 2.3548200450309493

# gamma_vib value meaning the vibronic relaxation is treated as instantaneous
INSTANTANEOUS = math.inf


@dataclass(frozen=True)
class EmitterParams:
    """Rates defining the emitter. gamma_vib=INSTANTANEOUS skips that stage."""

    gamma_spon: float
    gamma_pure: float = 0.0
    w_p: float = 1.0
    gamma_vib: float = INSTANTANEOUS

    def __post_init__(self):
        if not self.gamma_spon > 0:
            raise ValueError("gamma_spon must be positive")
        if self.gamma_pure < 0:
            raise ValueError("gamma_pure must be non-negative")
        if not self.w_p > 0:
            raise ValueError("w_p must be positive")
        if not self.gamma_vib > 0:
            raise ValueError("gamma_vib must be positive or INSTANTANEOUS")

    @property
    def gamma_total(self):
        """Optical coherence decay rate, gamma_spon/2 + gamma_pure."""
        return 0.5 * self.gamma_spon + self.gamma_pure

    @property
    def t2(self):
        """Coherence time 1/gamma_total."""
        return 1.0 / self.gamma_total


@dataclass(frozen=True)
class BeamSplitterConfig:
    """Splitting angle and mode overlap of the recombining beam splitter.

    cos(theta)^2 is the transmission; theta = pi/4 is the balanced case.
    mode_match is the spatial overlap factor applied to the interference term.
    """

    theta: float = math.pi / 4
    mode_match: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi / 2:
            raise ValueError("theta must lie in [0, pi/2]")
        if not 0.0 <= self.mode_match <= 1.0:
            raise ValueError("mode_match must lie in [0, 1]")

    @property
    def interference_weight(self):
        """sin^2 cos^2 / (cos^4 + sin^4), the HOM term weight at this angle."""
        c2 = math.cos(self.theta) ** 2
        s2 = math.sin(self.theta) ** 2
        return s2 * c2 / (c2 * c2 + s2 * s2)


def g1(tau, p: EmitterParams):
    """Field autocorrelation |g1(tau)| = exp(-gamma_total |tau|)."""
    tau = np.asarray(tau, dtype=float)
    return np.exp(-p.gamma_total * np.abs(tau))


def g2_source(tau, p: EmitterParams):
    """Source intensity correlation 1 - exp(-(w_p + gamma_spon)|tau|).

    Antibunched at tau = 0 and recovering at the pumping-limited rate.
    """
    tau = np.asarray(tau, dtype=float)
    return 1.0 - np.exp(-(p.w_p + p.gamma_spon) * np.abs(tau))


def g2_34(tau, p: EmitterParams, bs: BeamSplitterConfig, pol: str):
    """Normalized cross-correlation of the two interferometer outputs.

    Valid when the arm delay is long against all correlation times, so the
    two interfering photons are consecutive and uncorrelated with the rest.
    pol is "parallel" (interfering) or "orthogonal" (marker polarizations).
    """
    base = 0.5 * (g2_source(tau, p) + 1.0)
    if pol == "orthogonal":
        return base
    if pol == "parallel":
        return base - bs.interference_weight * bs.mode_match * g1(tau, p) ** 2
    raise ValueError("pol must be 'parallel' or 'orthogonal'")


def overlap_sq(delta_t, p: EmitterParams):
    """Squared wave-packet overlap exp(-2 gamma_total delta_t) of photons
    separated by delta_t >= 0."""
    delta_t = np.asarray(delta_t, dtype=float)
    if np.any(delta_t < 0):
        raise ValueError("delta_t must be non-negative")
    return np.exp(-2.0 * p.gamma_total * delta_t)


def visibility(g2_par_0, g2_orth_0):
    """Two-photon interference visibility (g_orth - g_par)/g_orth at tau = 0."""
    if not g2_orth_0 > 0:
        raise ValueError("g2_orth_0 must be positive")
    return (g2_orth_0 - g2_par_0) / g2_orth_0


def convolve_irf(tau, values, fwhm):
    """Convolve a uniformly sampled curve with a unit-area Gaussian IRF.

    fwhm = 0 returns the curve unchanged.  Otherwise the sampling step must
    be <= fwhm/4; the kernel is truncated at +-5 sigma and edge-padded, which
    preserves the integral of curves flat near the window edges.
    """
    tau = np.asarray(tau, dtype=float)
    values = np.asarray(values, dtype=float)
    if tau.ndim != 1 or tau.shape != values.shape:
        raise ValueError("tau and values must be 1-d arrays of equal length")
    if fwhm < 0:
        raise ValueError("fwhm must be non-negative")
    if fwhm == 0:
        return values.copy()
    if len(tau) < 2:
        raise ValueError("need at least two samples")
    steps = np.diff(tau)
    step = steps[0]
    if step <= 0 or not np.allclose(steps, step, rtol=1e-6, atol=0):
        raise ValueError("tau must be uniformly sampled")
    if step > fwhm / 4 + 1e-12 * fwhm:
        raise ValueError("sampling step must be <= fwhm/4")
    sigma = fwhm / FWHM_TO_SIGMA
    half = int(np.ceil(5.0 * sigma / step))
    x = step * np.arange(-half, half + 1)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    kernel /= kernel.sum()
    padded = np.pad(values, half, mode="edge")
    return np.convolve(padded, kernel, mode="valid")
