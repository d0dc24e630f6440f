"""Long-line detection in time-frequency images.

A deterministic accumulator detector finds straight ridges; the line-segment
scoring follows the long-line formulas used for training line detectors:

* a matching loss gated by segment length,
* splitting a long segment into overlapping sub-segments ("SoL"),
* a continuity count over consecutive sub-segments.

Here they act as gates and scores instead of training losses: candidates
shorter than ``gamma1`` are dropped, runs separated by less than ``gamma2``
are merged, and surviving runs are scored by length, continuity and mean
magnitude. Gated (interrupted) ridges such as ISRJ slices break into short
runs and fail the length gate; the target's ridge is continuous.

All detection runs in bin space (column, row); conversion to physical units
happens once, through the image axes, when segments are returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import _backend
from .tfr import TfImage


class NoTargetRidge(RuntimeError):
    """No candidate line survived the length gate."""


@dataclass(frozen=True)
class LineSegment:
    """Straight segment from (t1, u1) to (t2, u2) with a detector score."""

    t1: float
    u1: float
    t2: float
    u2: float
    score: float = 0.0

    def __post_init__(self):
        vals = (self.t1, self.u1, self.t2, self.u2)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("segment endpoints must be finite")
        if not self.t2 > self.t1:
            raise ValueError("segment needs t2 > t1")

    @property
    def slope_k(self) -> float:
        return (self.u2 - self.u1) / (self.t2 - self.t1)

    @property
    def start(self) -> np.ndarray:
        return np.array([self.t1, self.u1])

    @property
    def end(self) -> np.ndarray:
        return np.array([self.t2, self.u2])

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.start + self.end)

    @property
    def length(self) -> float:
        return float(math.hypot(self.t2 - self.t1, self.u2 - self.u1))

    def u_at(self, t):
        return self.u1 + self.slope_k * (np.asarray(t, dtype=float) - self.t1)

    def point_at(self, s: float) -> np.ndarray:
        """Point at fraction ``s`` of the way from start to end."""
        return self.start + s * (self.end - self.start)

    def to_bins(self, image: TfImage) -> "LineSegment":
        return LineSegment(float(image.col_of(self.t1)), float(image.row_of(self.u1)),
                           float(image.col_of(self.t2)), float(image.row_of(self.u2)), self.score)

    def to_physical(self, image: TfImage) -> "LineSegment":
        """Interpret this segment as (column, row) bins and map to image axes."""
        return LineSegment(float(image.t_at(self.t1)), float(image.u_at(self.u1)),
                           float(image.t_at(self.t2)), float(image.u_at(self.u2)), self.score)


@dataclass(frozen=True)
class DetectorConfig:
    """Detector settings; lengths are in image bins.

    Parameters
    ----------
    gamma1 : float
        Minimum run length (bins) for a ridge to count.
    gamma2 : float
        Runs separated by less than this (bins) are merged.
    beta : float
        Overlap ratio of consecutive SoL sub-segments, in [0.25, 0.5].
    mu : float, optional
        SoL base sub-segment length; defaults to gamma1 / 4.
    binarize_percentile : float
        Pixels at or above this percentile of the image vote and count as
        ridge pixels, subject to ``binarize_floor``.
    binarize_floor : float
        Pixels below this fraction of the image peak never count.
    n_angles : int
        Accumulator angle bins over ``angle_range_deg``.
    rho_step : float, optional
        Accumulator offset bin width (bins). By default it equals the
        offset spacing of adjacent pixel lines at the expected slope
        (``|sin theta|`` for shallow lines, ``|cos theta|`` for steep ones),
        so every offset bin collects exactly one line of pixels; without a
        slope prior it is 1.
    slope_bins : float, optional
        Expected ridge slope in rows per column. With it, the accumulator only
        spans ``angle_halfwidth_deg`` around the matching angle.
    angle_halfwidth_deg : float
    max_candidates : int
        Accumulator peaks kept after non-maximum suppression.
    nms_angle_bins, nms_rho_bins : int
        Half-widths of the suppression window around each kept peak.
    """

    gamma1: float = 40.0
    gamma2: float = 3.0
    beta: float = 0.375
    mu: Optional[float] = None
    binarize_percentile: float = 50.0
    binarize_floor: float = 0.05
    n_angles: int = 360
    rho_step: Optional[float] = None
    slope_bins: Optional[float] = None
    angle_halfwidth_deg: float = 5.0
    max_candidates: int = 8
    nms_angle_bins: int = 4
    nms_rho_bins: int = 4

    def __post_init__(self):
        if self.mu is None:
            object.__setattr__(self, "mu", self.gamma1 / 4.0)
        if not self.gamma1 > self.mu > 0:
            raise ValueError("need gamma1 > mu > 0")
        if not 0.25 <= self.beta <= 0.5:
            raise ValueError("beta must lie in [0.25, 0.5]")
        if not self.gamma2 < self.gamma1:
            raise ValueError("need gamma2 < gamma1")
        if not 0 <= self.binarize_percentile < 100:
            raise ValueError("binarize_percentile must lie in [0, 100)")
        if self.rho_step is None:
            step = 1.0
            if self.slope_bins is not None:
                theta = math.atan2(1.0, -self.slope_bins)
                step = max(abs(math.sin(theta)), abs(math.cos(theta)))
            object.__setattr__(self, "rho_step", step)
        if self.n_angles < 1 or self.rho_step <= 0 or self.max_candidates < 1:
            raise ValueError("accumulator resolution must be positive")

    @classmethod
    def for_pulse(cls, image: TfImage, pulse_width_s: float, **kw) -> "DetectorConfig":
        """Defaults scaled to a pulse: gamma1 = 40 % of its column extent."""
        cols = pulse_width_s / image.dt
        return cls(gamma1=0.4 * cols, **kw)


@dataclass
class SegmentSet:
    """Segments sorted by score, highest first."""

    segments: List[LineSegment] = field(default_factory=list)

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __getitem__(self, i):
        return self.segments[i]


# ---------------------------------------------------------------------------
# long-line formulas


def matching_loss(pred: LineSegment, truth: LineSegment, gamma1: float) -> float:
    """Endpoint plus centre L1 mismatch, active only for long predictions.

    ``|p_s - t_s|_1 + |p_e - t_e|_1 + |C(p) - (t_s + t_e)/2|_1`` when the
    predicted segment is longer than gamma1, else 0. The centre map C is the
    predicted segment's midpoint.
    """
    if not pred.length > gamma1:
        return 0.0
    ends = np.abs(pred.start - truth.start).sum() + np.abs(pred.end - truth.end).sum()
    centre = np.abs(pred.midpoint - 0.5 * (truth.start + truth.end)).sum()
    return float(ends + centre)


def sol_count(length: float, mu: float) -> int:
    """Number of SoL sub-segments ``floor(r / (mu/2)) - 1``, at least 1."""
    return max(1, int(math.floor(length / (mu / 2.0) + 1e-9)) - 1)


def sol_split(segment: LineSegment, mu: float, gamma1: float, beta: float = 0.375) -> List[LineSegment]:
    """Split a long segment into overlapping sub-segments.

    Segments no longer than gamma1 come back unsplit. Otherwise
    ``k = floor(r / (mu/2)) - 1`` equal sub-segments are laid out so that each
    starts ``beta`` of a sub-segment length before the previous one ends
    (``s_{i+1} = e_i - beta (e_i - s_i)``) and together they cover the
    parent exactly.
    """
    if mu <= 0:
        raise ValueError("mu must be > 0")
    r = segment.length
    if not r > gamma1:
        return [segment]
    k = sol_count(r, mu)
    frac_len = 1.0 / (k - beta * (k - 1))
    stride = frac_len * (1.0 - beta)
    out = []
    for i in range(k):
        s0 = i * stride
        s1 = 1.0 if i == k - 1 else s0 + frac_len
        p0, p1 = segment.point_at(s0), segment.point_at(s1)
        out.append(LineSegment(p0[0], p0[1], p1[0], p1[1], segment.score))
    return out


def segment_gap(a: LineSegment, b: LineSegment) -> float:
    """Distance from the end of ``a`` to the start of ``b`` (0 if they overlap)."""
    d = a.end - a.start
    step = b.start - a.end
    if np.dot(step, d) <= 0:
        return 0.0
    return float(np.hypot(*step))


def continuity_loss(segments: Sequence[LineSegment], gamma2: float) -> int:
    """Count consecutive pairs whose gap is below gamma2."""
    if len(segments) < 2:
        return 0
    return int(sum(segment_gap(a, b) < gamma2 for a, b in zip(segments[:-1], segments[1:])))


# ---------------------------------------------------------------------------
# accumulator and tracing


def binarize(grid: np.ndarray, config: DetectorConfig) -> np.ndarray:
    """Boolean ridge-pixel map (percentile threshold with a relative floor)."""
    peak = float(grid.max())
    if peak <= 0:
        return np.zeros(grid.shape, dtype=bool)
    thr = max(float(np.percentile(grid, config.binarize_percentile)), config.binarize_floor * peak)
    return grid >= thr if thr > 0 else grid > 0


def _angles(config: DetectorConfig) -> np.ndarray:
    """Normal angles theta (radians) of the accumulator lines."""
    if config.slope_bins is None:
        return -np.pi / 2 + np.pi * np.arange(config.n_angles) / config.n_angles
    # direction (1, s) has normal angle atan2(1, -s) folded to [-pi/2, pi/2)
    centre = math.atan2(1.0, -config.slope_bins)
    if centre >= np.pi / 2:
        centre -= np.pi
    hw = math.radians(config.angle_halfwidth_deg)
    if config.n_angles == 1:
        return np.array([centre])
    return centre + np.linspace(-hw, hw, config.n_angles)


def accumulate(weights: np.ndarray, config: DetectorConfig):
    """Weighted (angle, offset) votes. Returns ``(acc, thetas, rho0)``."""
    thetas = _angles(config)
    nrow, ncol = weights.shape
    diag = math.hypot(nrow, ncol)
    rho0 = -diag
    n_rho = int(math.ceil(2 * diag / config.rho_step)) + 1
    acc = _backend.hough_vote(weights, np.cos(thetas), np.sin(thetas), rho0, config.rho_step, n_rho)
    return acc, thetas, rho0


def _peaks(acc: np.ndarray, config: DetectorConfig):
    """Non-maximum-suppressed accumulator peaks, strongest first."""
    work = acc.copy()
    found = []
    for _ in range(config.max_candidates):
        idx = int(np.argmax(work))
        k, j = divmod(idx, work.shape[1])
        if work[k, j] <= 0:
            break
        found.append((k, j, float(acc[k, j])))
        work[max(0, k - config.nms_angle_bins):k + config.nms_angle_bins + 1,
             max(0, j - config.nms_rho_bins):j + config.nms_rho_bins + 1] = 0
    return found


def line_samples(shape, theta: float, rho: float):
    """Unit-step sample positions of the line ``c cos + r sin = rho`` inside the grid.

    Steps along the dominant axis. Returns ``(cols, rows)`` float arrays,
    ordered by increasing column (increasing row for vertical lines).
    """
    nrow, ncol = shape
    ct, st = math.cos(theta), math.sin(theta)
    if abs(st) >= abs(ct):
        cols = np.arange(ncol, dtype=float)
        rows = (rho - cols * ct) / st
    else:
        rows = np.arange(nrow, dtype=float)
        cols = (rho - rows * st) / ct
        order = np.argsort(cols, kind="stable")
        rows, cols = rows[order], cols[order]
    ok = (rows >= 0) & (rows <= nrow - 1) & (cols >= 0) & (cols <= ncol - 1)
    return cols[ok], rows[ok]


def bilinear(grid: np.ndarray, cols, rows) -> np.ndarray:
    nrow, ncol = grid.shape
    c0 = np.clip(np.floor(cols).astype(int), 0, max(ncol - 2, 0))
    r0 = np.clip(np.floor(rows).astype(int), 0, max(nrow - 2, 0))
    fc = np.clip(cols - c0, 0, 1) if ncol > 1 else np.zeros_like(cols)
    fr = np.clip(rows - r0, 0, 1) if nrow > 1 else np.zeros_like(rows)
    c1 = np.minimum(c0 + 1, ncol - 1)
    r1 = np.minimum(r0 + 1, nrow - 1)
    return ((1 - fr) * ((1 - fc) * grid[r0, c0] + fc * grid[r0, c1])
            + fr * ((1 - fc) * grid[r1, c0] + fc * grid[r1, c1]))


@dataclass
class _Run:
    i0: int  # first sample index
    i1: int  # last sample index (inclusive)
    on_fraction: float


def _sol_runs(on: np.ndarray, step_len: float, config: DetectorConfig) -> List[_Run]:
    """Maximal runs along a sampled line using SoL sub-segment medians.

    The sampled line is split into sub-segments (lengths in bins); a
    sub-segment is "on" when the median of its binary samples is 1, i.e.
    most of its pixels are ridge pixels. The union of consecutive "on"
    sub-segments forms a run; runs closer than gamma2 are merged.
    """
    n = on.size
    if n < 2:
        return []
    total = (n - 1) * step_len
    # split on the arc-length axis only
    flat = LineSegment(0.0, 0.0, total, 0.0)
    subs = sol_split(flat, config.mu, config.gamma1, config.beta) if total > config.gamma1 else [flat]
    spans = []
    for sub in subs:
        a = int(round(sub.t1 / step_len))
        b = int(round(sub.t2 / step_len))
        if np.median(on[a:b + 1]) >= 0.5:
            spans.append([a, b])
    if not spans:
        return []
    merged = [spans[0]]
    for a, b in spans[1:]:
        if (a - merged[-1][1]) * step_len < config.gamma2:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    runs = []
    for a, b in merged:
        # trim to the first and last ridge pixel inside the run
        idx = np.nonzero(on[a:b + 1])[0]
        if idx.size == 0:
            continue
        a2, b2 = a + int(idx[0]), a + int(idx[-1])
        if b2 > a2:
            runs.append(_Run(a2, b2, float(on[a2:b2 + 1].mean())))
    return runs


def _candidate_runs(image: TfImage, config: DetectorConfig):
    grid = image.grid
    if grid.size == 0:
        raise ValueError("empty image")
    mask = binarize(grid, config)
    if not mask.any():
        return []
    acc, thetas, rho0 = accumulate(np.where(mask, grid, 0.0), config)
    out = []
    for k, j, votes in _peaks(acc, config):
        theta, rho = float(thetas[k]), rho0 + j * config.rho_step
        cols, rows = line_samples(grid.shape, theta, rho)
        if cols.size < 2:
            continue
        step_len = float(math.hypot(cols[1] - cols[0], rows[1] - rows[0]))
        on = bilinear(mask.astype(float), cols, rows) >= 0.5
        vals = bilinear(grid, cols, rows)
        for run in _sol_runs(on, step_len, config):
            sl = slice(run.i0, run.i1 + 1)
            out.append(dict(theta=theta, rho=rho, votes=votes, cols=cols[sl], rows=rows[sl],
                            vals=vals[sl], on_fraction=run.on_fraction,
                            length=(run.i1 - run.i0) * step_len))
    return out


def _to_segment(c: dict, score: float) -> LineSegment:
    cols, rows = c["cols"], c["rows"]
    if cols[-1] > cols[0]:
        return LineSegment(float(cols[0]), float(rows[0]), float(cols[-1]), float(rows[-1]), score)
    # vertical run: give it a hair of column extent so t2 > t1 holds
    return LineSegment(float(cols[0]), float(rows[0]), float(cols[0]) + 1e-6, float(rows[-1]), score)


def _dedupe(segs: List[LineSegment], tol: float) -> List[LineSegment]:
    kept: List[LineSegment] = []
    for s in segs:
        if all(max(np.abs(s.start - k.start).max(), np.abs(s.end - k.end).max()) >= tol for k in kept):
            kept.append(s)
    return kept


def candidate_lines(image: TfImage, config: Optional[DetectorConfig] = None) -> SegmentSet:
    """Accumulator peaks traced into maximal runs, in physical axis units.

    Each segment's score is the sum of image values along its run.

    Raises
    ------
    ValueError
        If the image has no pixels.
    """
    config = DetectorConfig() if config is None else config
    cands = _candidate_runs(image, config)
    segs = [_to_segment(c, float(c["vals"].sum())) for c in cands]
    segs.sort(key=lambda s: (-s.score, -s.length, s.u1))
    segs = _dedupe(segs, config.gamma2)
    return SegmentSet([s.to_physical(image) for s in segs])


def run_continuity(vals: np.ndarray, step_len: float, config: DetectorConfig) -> float:
    """Fraction of SoL sub-segments whose median reaches half the run median."""
    total = (vals.size - 1) * step_len
    flat = LineSegment(0.0, 0.0, max(total, 1e-9), 0.0)
    subs = sol_split(flat, config.mu, config.gamma1, config.beta)
    med = float(np.median(vals))
    if med <= 0:
        return 0.0
    meds = [np.median(vals[int(round(s.t1 / step_len)):int(round(s.t2 / step_len)) + 1]) for s in subs]
    return float(np.mean([m >= 0.5 * med for m in meds]))


def score_candidates(image: TfImage, config: Optional[DetectorConfig] = None) -> SegmentSet:
    """Runs longer than gamma1, scored by length x continuity x mean magnitude."""
    config = DetectorConfig() if config is None else config
    scored = []
    for c in _candidate_runs(image, config):
        if not c["length"] > config.gamma1:
            continue
        step_len = c["length"] / max(c["vals"].size - 1, 1)
        cont = run_continuity(c["vals"], step_len, config)
        score = c["length"] * cont * float(c["vals"].mean())
        scored.append(_to_segment(c, score))
    scored.sort(key=lambda s: (-s.score, -s.length, s.u1))
    return SegmentSet([s.to_physical(image) for s in _dedupe(scored, config.gamma2)])


def detect_target_ridge(image: TfImage, config: Optional[DetectorConfig] = None) -> LineSegment:
    """The highest-scoring long continuous ridge.

    Raises
    ------
    ValueError
        If the image has no pixels.
    NoTargetRidge
        If no run is longer than gamma1.
    """
    found = score_candidates(image, config)
    if len(found) == 0:
        raise NoTargetRidge("no candidate line survived the length gate")
    return found[0]


def write_segments_csv(path, segments) -> None:
    """Segment list as CSV ``t1,u1,t2,u2,score``."""
    rows = [(s.t1, s.u1, s.t2, s.u2, s.score) for s in segments]
    data = np.array(rows, dtype=float).reshape(-1, 5)
    np.savetxt(path, data, delimiter=",", header="t1,u1,t2,u2,score", comments="", fmt="%.17g")


def read_segments_csv(path) -> List[LineSegment]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return [LineSegment(*map(float, row)) for row in data]


def overlay(image: TfImage, segments, value: float = 1.0) -> np.ndarray:
    """Debug channel: a grid with the segments drawn at ``value``."""
    out = np.zeros(image.grid.shape)
    for s in segments:
        b = s.to_bins(image)
        n = int(math.ceil(max(abs(b.t2 - b.t1), abs(b.u2 - b.u1)))) + 1
        cc = np.rint(np.linspace(b.t1, b.t2, n)).astype(int)
        rr = np.rint(np.linspace(b.u1, b.u2, n)).astype(int)
        ok = (cc >= 0) & (cc < out.shape[1]) & (rr >= 0) & (rr < out.shape[0])
        out[rr[ok], cc[ok]] = value
    return out
