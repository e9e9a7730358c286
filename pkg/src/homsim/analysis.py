"""Histogram post-processing: rebinning, difference curves, and the joint
fit of the parallel/orthogonal correlation curves.

The fit forward model is the finite-arm-delay cross-correlation of a
balanced splitter: three copies of the source correlation weighted 1/2,
1/4, 1/4 at delays 0 and +-delta_t, minus the interference kernel on the
parallel curve, convolved with the detection IRF, on top of a flat
background folded in convexly so the asymptote stays at 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .coherence import EmitterParams, convolve_irf, g2_source, visibility
from .detection import DetectionConfig, normalize
from .histogram import CorrelationHistogram

# sub-samples per bin when averaging the model across a histogram bin
FINE = 5

_BOUNDS = {
    "gamma_pure": (0.0, 5.0),
    "w_p": (1e-3, 50.0),
    "contrast": (0.0, 1.0),
    "background": (0.0, 0.45),
}


@dataclass
class HomFitResult:
    gamma_pure_hat: float
    w_p_hat: float
    contrast_hat: float
    background_hat: float
    t2_hat: float
    v0_hat: float
    stderr_gamma_pure: float
    stderr_w_p: float
    stderr_contrast: float
    stderr_background: float
    rss: float
    converged: bool
    n_evaluations: int


def rebin(hist: CorrelationHistogram, factor: int) -> CorrelationHistogram:
    """Merge groups of `factor` adjacent bins.  A trailing partial group is
    dropped (with a warning and truncated flag).  Normalization, when
    present, is recomputed on the coarse bins."""
    if factor < 1 or factor != int(factor):
        raise ValueError("factor must be a positive integer")
    factor = int(factor)
    if factor == 1:
        return hist.copy()
    nbins = len(hist.counts)
    n_groups = nbins // factor
    if n_groups == 0:
        raise ValueError("factor exceeds the number of bins")
    truncated = n_groups * factor != nbins
    if truncated:
        warnings.warn("rebin dropped %d trailing bins" % (nbins - n_groups * factor))
    edges = hist.bin_edges[: n_groups * factor + 1 : factor]
    counts = hist.counts[: n_groups * factor].reshape(n_groups, factor).sum(axis=1)
    out = CorrelationHistogram(edges, counts, truncated=truncated)
    if hist.norm_region is not None:
        out = normalize(out, hist.norm_region)
        out.truncated = truncated
    elif hist.normalization_constant is not None:
        # rate-style normalization scales with the bin width
        out.normalization_constant = hist.normalization_constant * factor
        out.normalized = counts / out.normalization_constant
    return out


@dataclass
class DifferenceCurve:
    tau: np.ndarray
    value: np.ndarray
    sigma: np.ndarray
    defined: np.ndarray  # False where the reference histogram has no counts


def _norm_sigma(hist):
    return np.sqrt(np.maximum(hist.counts, 1)) / hist.normalization_constant


def difference_curve(h_a: CorrelationHistogram, h_b: CorrelationHistogram) -> DifferenceCurve:
    """Per-bin (b - a)/b with propagated Poisson uncertainty.

    With a = parallel and b = orthogonal this is the interference visibility
    curve; with two same-mode runs it is a null consistency check.
    """
    if not h_a.same_geometry(h_b):
        raise ValueError("histogram geometries differ")
    if h_a.normalized is None or h_b.normalized is None:
        raise ValueError("both histograms must be normalized first")
    a, b = h_a.normalized, h_b.normalized
    sa, sb = _norm_sigma(h_a), _norm_sigma(h_b)
    defined = b > 0
    bb = np.where(defined, b, 1.0)
    value = np.where(defined, (b - a) / bb, np.nan)
    var = (a / bb) ** 2 * (sb / bb) ** 2 + (sa / bb) ** 2
    sigma = np.where(defined, np.sqrt(var), np.nan)
    return DifferenceCurve(h_a.bin_centers.copy(), value, sigma, defined)


def v0_from_histograms(h_par, h_orth, window=0.42):
    """Visibility from the mean normalized level within |tau| <= window/2."""
    if h_par.normalized is None or h_orth.normalized is None:
        raise ValueError("both histograms must be normalized first")
    if not h_par.same_geometry(h_orth):
        raise ValueError("histogram geometries differ")
    sel = np.abs(h_par.bin_centers) <= window / 2
    if not np.any(sel):
        raise ValueError("window selects no bins")
    return visibility(h_par.normalized[sel].mean(), h_orth.normalized[sel].mean())


def hom_model_curves(centers, bin_width, gamma_spon, gamma_pure, w_p, contrast, background, delta_t, irf_fwhm):
    """Bin-averaged model for the parallel and orthogonal normalized curves."""
    centers = np.asarray(centers, dtype=float)
    n_sub = FINE
    if irf_fwhm > 0:  # keep the sub-grid fine enough for the IRF kernel
        n_sub = max(FINE, int(np.ceil(4.0 * bin_width / irf_fwhm - 1e-9)))
    step = bin_width / n_sub
    offs = (np.arange(n_sub) - (n_sub - 1) / 2.0) * step
    grid = (centers[:, None] + offs[None, :]).ravel()
    p = EmitterParams(gamma_spon=gamma_spon, gamma_pure=gamma_pure, w_p=w_p)
    base = (
        0.5 * g2_source(grid, p)
        + 0.25 * g2_source(grid - delta_t, p)
        + 0.25 * g2_source(grid + delta_t, p)
    )
    kernel = 0.5 * contrast * np.exp(-(gamma_spon + 2.0 * gamma_pure) * np.abs(grid))
    par = base - kernel
    orth = base
    if irf_fwhm > 0:
        par = convolve_irf(grid, par, irf_fwhm)
        orth = convolve_irf(grid, orth, irf_fwhm)
    par = (1.0 - background) * par + background
    orth = (1.0 - background) * orth + background
    n = len(centers)
    return par.reshape(n, n_sub).mean(axis=1), orth.reshape(n, n_sub).mean(axis=1)


def fit_hom_model(
    h_par: CorrelationHistogram,
    h_orth: CorrelationHistogram,
    gamma_spon: float,
    det: DetectionConfig,
    delta_t: float,
    init=None,
    fit_window=8.0,
    rng_seed=0,
) -> HomFitResult:
    """Joint Poisson-weighted least squares fit of both curves.

    gamma_spon is held fixed; gamma_pure, w_p and the background are shared
    between the curves while the interference contrast enters the parallel
    one only.  Uses Nelder-Mead from the initial point plus three jittered
    restarts; the model assumes a balanced splitter.
    """
    if h_par.normalized is None or h_orth.normalized is None:
        raise ValueError("both histograms must be normalized first")
    if not h_par.same_geometry(h_orth):
        raise ValueError("histogram geometries differ")

    centers = h_par.bin_centers
    sel = np.abs(centers) <= fit_window
    if not np.any(sel):
        raise ValueError("fit window selects no bins")
    c_sel = centers[sel]
    width = h_par.bin_width
    d_par, d_orth = h_par.normalized[sel], h_orth.normalized[sel]
    s_par, s_orth = _norm_sigma(h_par)[sel], _norm_sigma(h_orth)[sel]

    names = ("gamma_pure", "w_p", "contrast", "background")
    lo = np.array([_BOUNDS[k][0] for k in names])
    hi = np.array([_BOUNDS[k][1] for k in names])

    n_eval = [0]

    def objective(x):
        n_eval[0] += 1
        if np.any(x < lo) or np.any(x > hi):
            return 1e12 * (1.0 + float(np.sum(np.maximum(lo - x, 0) + np.maximum(x - hi, 0))))
        m_par, m_orth = hom_model_curves(
            c_sel, width, gamma_spon, x[0], x[1], x[2], x[3], delta_t, det.irf_fwhm_pair
        )
        r = np.concatenate([(d_par - m_par) / s_par, (d_orth - m_orth) / s_orth])
        return float(r @ r)

    if init is None:
        init = (0.3, 0.5, 0.6, 0.08)
    x0 = np.clip(np.asarray(init, dtype=float), lo + 1e-9, hi - 1e-9)
    rng = np.random.default_rng(rng_seed)

    best = None
    converged = False
    for trial in range(4):
        start = x0 if trial == 0 else np.clip(x0 * np.exp(rng.normal(0, 0.15, 4)), lo + 1e-9, hi - 1e-9)
        res = optimize.minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={"maxfev": 10_000, "xatol": 1e-9, "fatol": 1e-10, "adaptive": True},
        )
        if best is None or res.fun < best.fun:
            best = res
        converged = converged or bool(res.success)

    x = best.x
    stderr = _curvature_stderr(objective, x, lo, hi)
    t2_hat = 1.0 / (0.5 * gamma_spon + x[0])

    m_par0, m_orth0 = hom_model_curves(
        np.array([0.0]), width, gamma_spon, x[0], x[1], x[2], x[3], delta_t, det.irf_fwhm_pair
    )
    v0_hat = visibility(float(m_par0[0]), float(m_orth0[0]))

    return HomFitResult(
        gamma_pure_hat=float(x[0]),
        w_p_hat=float(x[1]),
        contrast_hat=float(x[2]),
        background_hat=float(x[3]),
        t2_hat=float(t2_hat),
        v0_hat=float(v0_hat),
        stderr_gamma_pure=stderr[0],
        stderr_w_p=stderr[1],
        stderr_contrast=stderr[2],
        stderr_background=stderr[3],
        rss=float(best.fun),
        converged=converged,
        n_evaluations=n_eval[0],
    )


def _curvature_stderr(objective, x, lo, hi):
    """1-sigma errors from the finite-difference curvature of the weighted rss."""
    n = len(x)
    h = np.maximum(1e-4 * np.abs(x), 1e-6)
    # keep probe points inside the box so the penalty never contaminates H
    h = np.minimum(h, np.maximum((hi - x) / 2.5, 1e-9))
    h = np.minimum(h, np.maximum((x - lo) / 2.5, 1e-9))
    f0 = objective(x)
    hess = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        hess[i, i] = (objective(x + ei) - 2 * f0 + objective(x - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            fpp = objective(x + ei + ej)
            fpm = objective(x + ei - ej)
            fmp = objective(x - ei + ej)
            fmm = objective(x - ei - ej)
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4 * h[i] * h[j])
    try:
        cov = 2.0 * np.linalg.inv(hess)
        diag = np.diag(cov)
        return [float(np.sqrt(d)) if d > 0 else float("nan") for d in diag]
    except np.linalg.LinAlgError:
        return [float("nan")] * n
