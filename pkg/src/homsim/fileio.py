"""Flat key=value run configs and the CSV formats.

All text I/O is LF-terminated, comma-separated with '.' decimals, one header
row per CSV.  Floats are written with repr so a config echoed after a run
parses back to bit-identical parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherence import INSTANTANEOUS, BeamSplitterConfig, EmitterParams
from .detection import DetectionConfig
from .histogram import CorrelationHistogram
from .interferometer import InterferometerConfig


@dataclass(frozen=True)
class RunConfig:
    emitter: EmitterParams
    interferometer: InterferometerConfig
    detection: DetectionConfig
    duration: float
    seed: int = 0
    replicas: int = 1
    norm_region: tuple[float, float] = (12.0, 24.0)

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")


# defaults mirror the experimental configuration; correlation_mode is "full"
# here because at simulation-feasible count rates the single-stop TAC drowns
# in start replacement (use "tac" with low efficiencies for hardware realism)
def default_run_config() -> RunConfig:
    return RunConfig(
        emitter=EmitterParams(gamma_spon=1.0 / 3.4, gamma_pure=0.2, w_p=6.5),
        interferometer=InterferometerConfig(delta_t=4.6, bs=BeamSplitterConfig(theta=math.pi / 4, mode_match=0.7)),
        detection=DetectionConfig(background_fraction=0.05, correlation_mode="full"),
        duration=1.0e6,
        seed=0,
        replicas=1,
    )


_CONFIG_KEYS = (
    "gamma_spon", "gamma_pure", "w_p", "gamma_vib",
    "delta_t", "theta", "mode_match", "pol_mode", "arm_prob_long",
    "pairing_window", "pairing",
    "irf_fwhm_pair", "efficiency_3", "efficiency_4", "dead_time_3", "dead_time_4",
    "background_fraction", "electronic_delay", "tau_min", "tau_max", "bin_width",
    "correlation_mode", "duration", "seed", "replicas", "norm_lo", "norm_hi",
)


def config_to_mapping(rc: RunConfig) -> dict:
    p, itf, det = rc.emitter, rc.interferometer, rc.detection
    return {
        "gamma_spon": repr(p.gamma_spon),
        "gamma_pure": repr(p.gamma_pure),
        "w_p": repr(p.w_p),
        "gamma_vib": "instantaneous" if math.isinf(p.gamma_vib) else repr(p.gamma_vib),
        "delta_t": repr(itf.delta_t),
        "theta": repr(itf.bs.theta),
        "mode_match": repr(itf.bs.mode_match),
        "pol_mode": itf.pol_mode,
        "arm_prob_long": repr(itf.arm_prob_long),
        "pairing_window": "auto" if itf.pairing_window is None else repr(itf.pairing_window),
        "pairing": itf.pairing,
        "irf_fwhm_pair": repr(det.irf_fwhm_pair),
        "efficiency_3": repr(det.efficiency[0]),
        "efficiency_4": repr(det.efficiency[1]),
        "dead_time_3": repr(det.dead_time[0]),
        "dead_time_4": repr(det.dead_time[1]),
        "background_fraction": repr(det.background_fraction),
        "electronic_delay": "auto" if det.electronic_delay is None else repr(det.electronic_delay),
        "tau_min": repr(det.mca_range[0]),
        "tau_max": repr(det.mca_range[1]),
        "bin_width": repr(det.bin_width),
        "correlation_mode": det.correlation_mode,
        "duration": repr(rc.duration),
        "seed": repr(rc.seed),
        "replicas": repr(rc.replicas),
        "norm_lo": repr(rc.norm_region[0]),
        "norm_hi": repr(rc.norm_region[1]),
    }


def format_config(rc: RunConfig) -> str:
    m = config_to_mapping(rc)
    return "".join("%s = %s\n" % (k, m[k]) for k in _CONFIG_KEYS)


def parse_config_text(text: str) -> dict:
    """key = value lines into a raw string mapping; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError("line %d: expected key = value" % lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ValueError("line %d: unknown key %r" % (lineno, key))
        out[key] = val
    return out


def build_run_config(mapping: dict) -> RunConfig:
    """Apply a raw mapping on top of the defaults."""
    base = config_to_mapping(default_run_config())
    for k, v in mapping.items():
        if k not in _CONFIG_KEYS:
            raise ValueError("unknown config key %r" % k)
        base[k] = v

    def fval(key):
        return float(base[key])

    gamma_vib = INSTANTANEOUS if base["gamma_vib"] == "instantaneous" else float(base["gamma_vib"])
    window = None if base["pairing_window"] == "auto" else float(base["pairing_window"])
    e_delay = None if base["electronic_delay"] == "auto" else float(base["electronic_delay"])
    emitter = EmitterParams(
        gamma_spon=fval("gamma_spon"), gamma_pure=fval("gamma_pure"),
        w_p=fval("w_p"), gamma_vib=gamma_vib,
    )
    itf = InterferometerConfig(
        delta_t=fval("delta_t"),
        bs=BeamSplitterConfig(theta=fval("theta"), mode_match=fval("mode_match")),
        pol_mode=base["pol_mode"],
        arm_prob_long=fval("arm_prob_long"),
        pairing_window=window,
        pairing=base["pairing"],
    )
    det = DetectionConfig(
        irf_fwhm_pair=fval("irf_fwhm_pair"),
        efficiency=(fval("efficiency_3"), fval("efficiency_4")),
        dead_time=(fval("dead_time_3"), fval("dead_time_4")),
        background_fraction=fval("background_fraction"),
        electronic_delay=e_delay,
        mca_range=(fval("tau_min"), fval("tau_max")),
        bin_width=fval("bin_width"),
        correlation_mode=base["correlation_mode"],
    )
    return RunConfig(
        emitter=emitter, interferometer=itf, detection=det,
        duration=fval("duration"), seed=int(base["seed"]), replicas=int(base["replicas"]),
        norm_region=(fval("norm_lo"), fval("norm_hi")),
    )


def read_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return build_run_config(parse_config_text(fh.read()))


def write_config(path, rc: RunConfig):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_config(rc))


def write_timetags(path, channels):
    """Merged click list, 'channel,time_ns', sorted by time."""
    ch = np.concatenate([np.full(len(channels[c]), c, dtype=np.int64) for c in (3, 4)])
    t = np.concatenate([np.asarray(channels[c], dtype=float) for c in (3, 4)])
    order = np.argsort(t, kind="stable")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("channel,time_ns\n")
        for c, ti in zip(ch[order], t[order]):
            fh.write("%d,%s\n" % (c, repr(float(ti))))


def read_timetags(path):
    chs, ts = [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "channel,time_ns":
            raise ValueError("unexpected time-tag header %r" % header)
        for line in fh:
            c, t = line.strip().split(",")
            chs.append(int(c))
            ts.append(float(t))
    chs = np.asarray(chs, dtype=np.int64)
    ts = np.asarray(ts, dtype=float)
    return {c: np.sort(ts[chs == c]) for c in (3, 4)}


def write_histogram(path, hist: CorrelationHistogram):
    centers = hist.bin_centers
    norm = hist.normalized
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("tau_ns,counts,normalized\n")
        for i in range(len(centers)):
            nv = "" if norm is None else repr(float(norm[i]))
            fh.write("%s,%d,%s\n" % (repr(float(centers[i])), int(hist.counts[i]), nv))


def read_histogram(path) -> CorrelationHistogram:
    centers, counts, norm = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "tau_ns,counts,normalized":
            raise ValueError("unexpected histogram header %r" % header)
        for line in fh:
            c, n, v = line.strip().split(",")
            centers.append(float(c))
            counts.append(int(n))
            norm.append(float(v) if v else np.nan)
    centers = np.asarray(centers)
    counts = np.asarray(counts, dtype=np.int64)
    if len(centers) < 2:
        raise ValueError("histogram needs at least two bins")
    width = centers[1] - centers[0]
    edges = np.concatenate([centers - width / 2, [centers[-1] + width / 2]])
    hist = CorrelationHistogram(edges, counts)
    norm = np.asarray(norm)
    if not np.all(np.isnan(norm)):
        hist.normalized = norm
        nz = (counts > 0) & ~np.isnan(norm) & (norm != 0)
        if np.any(nz):
            i = int(np.flatnonzero(nz)[0])
            hist.normalization_constant = float(counts[i] / norm[i])
    return hist


def write_difference(path, dc):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("tau_ns,value,sigma\n")
        for i in range(len(dc.tau)):
            fh.write(
                "%s,%s,%s\n"
                % (repr(float(dc.tau[i])), repr(float(dc.value[i])), repr(float(dc.sigma[i])))
            )


def write_emission_csv(path, stream):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("photon_id,emission_time_ns\n")
        for i, t in enumerate(stream.emission_times):
            fh.write("%d,%s\n" % (i, repr(float(t))))


RESULT_KEYS = (
    "gamma_pure_hat_per_ns", "w_p_hat_per_ns", "contrast_hat", "background_hat",
    "t2_hat_ns", "v0_hat",
    "stderr_gamma_pure", "stderr_w_p", "stderr_contrast", "stderr_background",
    "rss", "converged",
)


def write_results(path, fit):
    vals = {
        "gamma_pure_hat_per_ns": repr(fit.gamma_pure_hat),
        "w_p_hat_per_ns": repr(fit.w_p_hat),
        "contrast_hat": repr(fit.contrast_hat),
        "background_hat": repr(fit.background_hat),
        "t2_hat_ns": repr(fit.t2_hat),
        "v0_hat": repr(fit.v0_hat),
        "stderr_gamma_pure": repr(fit.stderr_gamma_pure),
        "stderr_w_p": repr(fit.stderr_w_p),
        "stderr_contrast": repr(fit.stderr_contrast),
        "stderr_background": repr(fit.stderr_background),
        "rss": repr(fit.rss),
        "converged": "true" if fit.converged else "false",
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k in RESULT_KEYS:
            fh.write("%s = %s\n" % (k, vals[k]))
