"""End-to-end pipeline, Monte Carlo sweeps and artifact writing.

Proposed method, per received pulse:

1. GLWD of the received signal with parameters from the selector, rows
   restricted to the radar band and lag windows matched to the pulse;
2. long-line detection of the target ridge in the real part of that image;
3. conversion of the ridge to seconds and Hz, band mask in the STFT domain,
   masked resynthesis;
4. pulse compression, CA-CFAR and suppression metrics.

Seeds: trial ``t`` of sweep point ``p`` with base seed ``b`` uses the noise
seed ``b * 10**6 + p * 10**3 + t``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import linedet, suppress, tfr
from .lct import Grid
from .scenario import ScenarioConfig, delay_to_range, load_config
from .siggen import ComplexSignal, ScenarioSignals, reference_pulse, simulate

METHODS = ("proposed", "energy_baseline", "none")
SUCCESS_TOL_M = 3.0


@dataclass(frozen=True)
class PipelineConfig:
    """Settings of the proposed method.

    ``mask_margin_s`` pads the detected ridge at both ends before the mask is
    built, so STFT frames whose windows straddle the pulse edges keep their
    target energy; by default a quarter of the STFT window.
    """

    band_rows: int = 200
    stft_window: int = 64
    stft_hop: int = 16
    mask_width_bins: float = 7.0
    mask_margin_s: Optional[float] = None
    continuity_lag_cap_samples: int = 8
    binarize_percentile: float = 0.0
    binarize_floor: float = 0.0
    angle_halfwidth_deg: float = 0.3
    n_angles: int = 7
    cfar: suppress.CfarConfig = suppress.CfarConfig()
    baseline: suppress.EnergyBaselineConfig = suppress.EnergyBaselineConfig()
    selector: tfr.SelectorPreferences = tfr.SelectorPreferences()


# ---------------------------------------------------------------------------
# images


def glwd_params(cfg: ScenarioConfig, pipeline: Optional[PipelineConfig] = None) -> tfr.GlwdParams:
    pipeline = PipelineConfig() if pipeline is None else pipeline
    return tfr.select_glwd_params(cfg.waveform.n_quadratic, pipeline.selector)


def band_grid(params: tfr.GlwdParams, bandwidth_hz: float, n_rows: int) -> Grid:
    """Rows covering the radar band [-B/2, B/2] at bin centres."""
    f = (np.arange(n_rows) + 0.5) / n_rows * bandwidth_hz - bandwidth_hz / 2.0
    _, u = tfr.physical_to_glwd(params, np.zeros(n_rows), f)
    if not np.allclose(np.diff(u), u[1] - u[0], rtol=1e-9, atol=0):
        raise ValueError("band rows are not equispaced in u for these parameters")
    if u[1] < u[0]:
        u = u[::-1]
    return Grid(float(u[0]), float(u[1] - u[0]), n_rows)


def detection_image(signal: ComplexSignal, cfg: ScenarioConfig, params: tfr.GlwdParams,
                    pipeline: Optional[PipelineConfig] = None) -> tfr.TfImage:
    """In-band GLWD with pulse-matched lag windows (raw complex values kept)."""
    pipeline = PipelineConfig() if pipeline is None else pipeline
    wf = cfg.waveform
    ug = band_grid(params, wf.bandwidth_hz, pipeline.band_rows)
    cols = tfr.glwd(signal, params, u_grid=Grid(0.0, 1.0, 1), col_step=2).t_axis
    caps = tfr.pulse_matched_lag_caps(params, wf.pulse_width_s, wf.bandwidth_hz, cols, ug.points)
    return tfr.glwd(signal, params, u_grid=ug, col_step=2, lag_caps_s=caps)


def continuity_image(signal: ComplexSignal, cfg: ScenarioConfig, params: tfr.GlwdParams,
                     pipeline: Optional[PipelineConfig] = None) -> tfr.TfImage:
    """In-band GLWD with a short fixed lag window.

    Long lag windows bridge the gaps between jammer slices; a window of a few
    samples keeps each slice's ridge separate, which is what continuity
    scores and the length gate look at.
    """
    pipeline = PipelineConfig() if pipeline is None else pipeline
    wf = cfg.waveform
    ug = band_grid(params, wf.bandwidth_hz, pipeline.band_rows)
    cap = pipeline.continuity_lag_cap_samples / wf.sample_rate_hz
    return tfr.glwd(signal, params, u_grid=ug, col_step=2, lag_cap_s=cap)


def detector_config(image: tfr.TfImage, cfg: ScenarioConfig, params: tfr.GlwdParams,
                    pipeline: Optional[PipelineConfig] = None, **overrides) -> linedet.DetectorConfig:
    """Detector defaults for a pulse, with the slope prior from the ridge theory."""
    pipeline = PipelineConfig() if pipeline is None else pipeline
    slope, _ = tfr.ridge_line_theoretical(params, 0.0)
    slope_bins = slope * (image.dt / params.time_unit_s) / image.du
    kw = dict(slope_bins=slope_bins, binarize_percentile=pipeline.binarize_percentile,
              binarize_floor=pipeline.binarize_floor, angle_halfwidth_deg=pipeline.angle_halfwidth_deg,
              n_angles=pipeline.n_angles)
    kw.update(overrides)
    return linedet.DetectorConfig.for_pulse(image, cfg.waveform.pulse_width_s, **kw)


RIDGE_MODES = ("pulse", "continuity")


def ridge_image(signal: ComplexSignal, cfg: ScenarioConfig, params: tfr.GlwdParams, mode: str = "pulse",
                pipeline: Optional[PipelineConfig] = None):
    """Rasterized image and detector settings for one of the ridge detectors.

    ``pulse`` integrates lags over the whole hypothesised pulse (best in
    noise; it bridges jammer slices). ``continuity`` uses the short lag window
    and median binarization, so gated jammer ridges stay shorter than gamma1.

    Returns ``(image, DetectorConfig)``.
    """
    pipeline = PipelineConfig() if pipeline is None else pipeline
    if mode == "pulse":
        image = tfr.rasterize(detection_image(signal, cfg, params, pipeline), scale="linear", part="real")
        return image, detector_config(image, cfg, params, pipeline)
    if mode == "continuity":
        image = tfr.rasterize(continuity_image(signal, cfg, params, pipeline), scale="linear")
        return image, detector_config(image, cfg, params, pipeline, binarize_percentile=50.0,
                                      binarize_floor=0.05)
    raise ValueError(f"unknown ridge mode {mode!r}; expected one of {RIDGE_MODES}")


def ridge_to_physical(params: tfr.GlwdParams, segment: linedet.LineSegment) -> linedet.LineSegment:
    """GLWD-plane segment (seconds, u) to a (seconds, Hz) segment."""
    t1, f1 = tfr.glwd_to_physical(params, segment.t1, segment.u1)
    t2, f2 = tfr.glwd_to_physical(params, segment.t2, segment.u2)
    if t2 < t1:
        t1, f1, t2, f2 = t2, f2, t1, f1
    return linedet.LineSegment(float(t1), float(f1), float(t2), float(f2), segment.score)


def extend_segment(seg: linedet.LineSegment, margin_s: float) -> linedet.LineSegment:
    k = seg.slope_k
    return linedet.LineSegment(seg.t1 - margin_s, seg.u1 - k * margin_s, seg.t2 + margin_s,
                               seg.u2 + k * margin_s, seg.score)


def ridge_range_m(line: linedet.LineSegment, cfg: ScenarioConfig) -> float:
    """Range implied by a physical ridge: its zero-frequency time is the pulse centre."""
    t_centre = line.t1 - line.u1 / line.slope_k
    return float(delay_to_range(t_centre - cfg.waveform.pulse_width_s / 2.0))


# ---------------------------------------------------------------------------
# single run


@dataclass
class ScenarioResult:
    method: str
    seed: int
    report: Optional[suppress.SuppressionReport]
    detections: list
    success: bool
    ridge_found: bool
    ridge: Optional[linedet.LineSegment] = None  # physical (seconds, Hz)
    before: Optional[suppress.RangeProfile] = None
    after: Optional[suppress.RangeProfile] = None
    output: Optional[ComplexSignal] = None
    signals: Optional[ScenarioSignals] = field(default=None, repr=False)
    image: Optional[tfr.TfImage] = field(default=None, repr=False)


def success_predicate(detections, target_range_m: float, false_ranges_m: Sequence[float],
                      tol_m: float = SUCCESS_TOL_M) -> bool:
    """A detection within tol of the target and none within tol of a false target."""
    ranges = [r for r, _ in detections]
    hit = any(abs(r - target_range_m) <= tol_m for r in ranges)
    clean = not any(abs(r - f) <= tol_m for r in ranges for f in false_ranges_m)
    return bool(hit and clean)


def proposed_filter(received: ComplexSignal, cfg: ScenarioConfig, pipeline: Optional[PipelineConfig] = None,
                    params: Optional[tfr.GlwdParams] = None):
    """Detect the ridge and mask-filter ``received``.

    Returns ``(output, physical_ridge, image)``.

    Raises
    ------
    linedet.NoTargetRidge
    """
    pipeline = PipelineConfig() if pipeline is None else pipeline
    params = glwd_params(cfg, pipeline) if params is None else params
    image, dc = ridge_image(received, cfg, params, "pulse", pipeline)
    seg = linedet.detect_target_ridge(image, dc)
    line = ridge_to_physical(params, seg)
    margin = pipeline.mask_margin_s
    if margin is None:
        margin = pipeline.stft_window / 4.0 / cfg.waveform.sample_rate_hz
    frames = tfr.stft(received, pipeline.stft_window, pipeline.stft_hop)
    mask = suppress.build_mask(extend_segment(line, margin), frames, pipeline.mask_width_bins)
    return suppress.filter_stft(received, mask), line, image


def run_scenario(cfg: ScenarioConfig, method: str = "proposed", seed: Optional[int] = None,
                 pipeline: Optional[PipelineConfig] = None, keep: bool = False) -> ScenarioResult:
    """Simulate one reception and run a suppression method on it.

    A missing target ridge is a failed trial (``ridge_found`` False,
    ``report`` None), not an exception.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    pipeline = PipelineConfig() if pipeline is None else pipeline
    seed = cfg.noise.seed if seed is None else int(seed)
    sig = simulate(cfg, seed)
    ref = reference_pulse(cfg.waveform)
    target = float(delay_to_range(cfg.target.delay_s))
    false = list(cfg.false_target_ranges_m)
    before = suppress.pulse_compress(sig.received, ref)
    line = image = None
    if method == "proposed":
        try:
            out, line, image = proposed_filter(sig.received, cfg, pipeline)
        except linedet.NoTargetRidge:
            return ScenarioResult(method, seed, None, [], False, False, before=before,
                                  signals=sig if keep else None)
    elif method == "energy_baseline":
        out = suppress.baseline_energy_function(sig.received, pipeline.baseline)
    else:
        out = sig.received
    after = suppress.pulse_compress(out, ref)
    dets = suppress.cfar_detect(after, pipeline.cfar)
    near = [r for r, _ in dets if abs(r - target) <= SUCCESS_TOL_M]
    detected = min(near, key=lambda r: abs(r - target)) if near else None
    report = suppress.metrics(before, after, target, false, detected)
    if line is not None:
        report.extra["ridge_range_m"] = ridge_range_m(line, cfg)
    ok = success_predicate(dets, target, false)
    return ScenarioResult(method, seed, report, dets, ok, True, line, before, after,
                          out if keep else None, sig if keep else None, image if keep else None)


def write_run_artifacts(result: ScenarioResult, out_dir, write_images: bool = True) -> List[Path]:
    """Profiles, detections, report and (for the proposed method) the images."""
    from .siggen import write_signal_bin

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    p = out / "profile_before.csv"
    suppress.write_profile_csv(p, result.before)
    paths.append(p)
    if result.after is not None:
        p = out / "profile_after.csv"
        suppress.write_profile_csv(p, result.after)
        paths.append(p)
    p = out / "detections.csv"
    suppress.write_detections_csv(p, result.detections)
    paths.append(p)
    p = out / "report.txt"
    p.write_text(report_text(result))
    paths.append(p)
    if result.output is not None:
        p = out / "filtered.bin"
        write_signal_bin(p, result.output)
        paths.append(p)
    if write_images and result.image is not None:
        p = out / "glwd_detection.pgm"
        side = tfr.write_pgm(p, result.image)
        paths += [p, side]
        if result.ridge is not None:
            p = out / "ridge.csv"
            linedet.write_segments_csv(p, [result.ridge])
            paths.append(p)
    return paths


def report_text(result: ScenarioResult) -> str:
    head = (f"method: {result.method}\nseed: {result.seed}\n"
            f"ridge_found: {str(result.ridge_found).lower()}\nsuccess: {str(result.success).lower()}\n")
    if result.report is None:
        return head + "report: none\n"
    return head + result.report.to_text()


# ---------------------------------------------------------------------------
# sweeps


def trial_seed(base_seed: int, point: int, trial: int) -> int:
    """base * 10**6 + point * 10**3 + trial."""
    if not 0 <= trial < 1000 or not 0 <= point < 1000:
        raise ValueError("point and trial indices must lie in [0, 1000)")
    return int(base_seed) * 1_000_000 + point * 1_000 + trial


@dataclass(frozen=True)
class SweepSpec:
    variable: str = "sjr_db"
    start: float = -10.0
    stop: float = 10.0
    step: float = 2.0
    trials: int = 200
    base_config: str = "table1"
    methods: Sequence[str] = ("proposed",)
    base_seed: int = 1

    def __post_init__(self):
        if self.variable not in ("sjr_db", "snr_db"):
            raise ValueError("variable must be sjr_db or snr_db")
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if self.stop < self.start:
            raise ValueError("stop must be >= start")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")

    @property
    def points(self) -> np.ndarray:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)


@dataclass(frozen=True)
class CurvePoint:
    x: float
    method: str
    sjrif_mean: float
    sjrif_std: float
    slr_mean: float
    slr_std: float
    detection_probability: float
    trials: int
    valid_reports: int


CURVE_FIELDS = ("x", "method", "sjrif_mean", "sjrif_std", "slr_mean", "slr_std",
                "detection_probability", "trials", "valid_reports")


def _trial(args):
    cfg, method, seed, pipeline = args
    r = run_scenario(cfg, method, seed, pipeline)
    rep = r.report
    sjrif = rep.sjrif_db if rep is not None and rep.sjrif_db is not None else math.nan
    slr = rep.slr_db if rep is not None else math.nan
    return sjrif, slr, r.success


def _summarize(x, method, rows) -> CurvePoint:
    sj = np.array([r[0] for r in rows], dtype=float)
    sl = np.array([r[1] for r in rows], dtype=float)
    ok = np.array([r[2] for r in rows], dtype=bool)
    fin = np.isfinite(sj) & np.isfinite(sl)

    def stat(a):
        a = a[np.isfinite(a)]
        return (float(a.mean()), float(a.std())) if a.size else (math.nan, math.nan)

    sm, ss = stat(sj)
    lm, ls = stat(sl)
    return CurvePoint(float(x), method, sm, ss, lm, ls, float(ok.mean()), len(rows), int(fin.sum()))


def resolve_config(name_or_path) -> ScenarioConfig:
    """Load a bundled configuration by name (``table1``) or from a path."""
    from .scenario import bundled_config_path

    p = Path(name_or_path)
    if not p.exists() and p.suffix == "" and p.parent == Path("."):
        p = bundled_config_path(str(name_or_path))
    return load_config(p)


def run_sweep(spec: SweepSpec, pipeline: Optional[PipelineConfig] = None, csv_path=None,
              workers: int = 1) -> List[CurvePoint]:
    """Monte Carlo curves, one row per (x, method), written as they complete.

    With ``workers > 1`` trials of a point run in a process pool; results are
    keyed by trial index before reduction, so the output does not depend on
    the worker count.
    """
    pipeline = PipelineConfig() if pipeline is None else pipeline
    base = resolve_config(spec.base_config)
    out: List[CurvePoint] = []
    fh = None
    if csv_path is not None:
        fh = open(csv_path, "w", newline="")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_FIELDS)
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for pi, x in enumerate(spec.points):
            cfg = base.with_overrides(**{spec.variable: float(x)})
            for method in spec.methods:
                jobs = [(cfg, method, trial_seed(spec.base_seed, pi, t), pipeline) for t in range(spec.trials)]
                rows = list(pool.map(_trial, jobs)) if pool else [_trial(j) for j in jobs]
                cp = _summarize(x, method, rows)
                out.append(cp)
                if fh is not None:
                    w.writerow([_fmt(getattr(cp, f)) for f in CURVE_FIELDS])
                    fh.flush()
    finally:
        if pool is not None:
            pool.shutdown()
        if fh is not None:
            fh.close()
    return out


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_sweep_csv(path) -> List[CurvePoint]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(CurvePoint(float(row["x"]), row["method"], float(row["sjrif_mean"]),
                                  float(row["sjrif_std"]), float(row["slr_mean"]), float(row["slr_std"]),
                                  float(row["detection_probability"]), int(row["trials"]),
                                  int(row["valid_reports"])))
    return out


def summarize_curves(points: Sequence[CurvePoint]) -> str:
    """Plain-text table of curve points, grouped by method."""
    buf = io.StringIO()
    for method in sorted({p.method for p in points}):
        buf.write(f"method: {method}\n")
        buf.write("  x        sjrif_db        slr_db          pd      trials\n")
        for p in sorted((q for q in points if q.method == method), key=lambda q: q.x):
            buf.write(f"  {p.x:<8.3g} {p.sjrif_mean:7.2f} ± {p.sjrif_std:5.2f} "
                      f"{p.slr_mean:7.2f} ± {p.slr_std:5.2f} {p.detection_probability:6.3f} {p.trials:6d}\n")
    return buf.getvalue()
