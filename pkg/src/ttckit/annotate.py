"""Ground-truth labeling: depth from 3D boxes, robust velocity, TTC labels.

Velocity is always fitted on the depth track *before* it is split into
fixed-length sequences, so the fit window may span sequence boundaries.
Labels for accelerating objects are arbitrated across several fit
windows, preferring the one that agrees with an external velocity
reference when available.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boxes import BoundingBox
from .core import (
    DEFAULT_VELOCITY_EPS,
    ttc_from_depth_velocity,
    ttc_interval,
)
from .errors import DomainError, FitFailedError
from .manifest import FrameSample, Sequence, SequenceLabel

MIN_BOX_SIZE_PX = 15.0
DEFAULT_QS = (3, 5, 10)
DEFAULT_SPREAD_THRESHOLD = 0.10

# RANSAC settings: depth noise at ranging-sensor scale is decimeter-level,
# so a 0.5 m inlier band separates it cleanly from multi-meter outliers.
RANSAC_ITERS = 100
RANSAC_INLIER_THRESHOLD = 0.5


def nearest_corner_depth(corners) -> float:
    """Depth of a 3D box: y-coordinate of the corner closest to the origin.

    ``corners`` is an (8, 3) array of (x, y, z) in vehicle coordinates.
    Ties pick the lowest corner index.
    """
    corners = np.asarray(corners, dtype=np.float64)
    if corners.shape != (8, 3):
        raise DomainError(f"expected (8, 3) corners, got {corners.shape}")
    if not np.all(np.isfinite(corners)):
        raise DomainError("corners must be finite")
    spread = corners - corners.mean(axis=0)
    if np.linalg.matrix_rank(spread, tol=1e-9) < 3:
        raise DomainError("degenerate cuboid: corners do not span 3D")
    j = int(np.argmin(np.linalg.norm(corners, axis=1)))
    return float(corners[j, 1])


def cuboid_corners(x_range, y_range, z_range) -> np.ndarray:
    """All 8 corners of an axis-aligned cuboid, lowest-index-first ordering."""
    xs, ys, zs = x_range, y_range, z_range
    return np.array(
        [[x, y, z] for x in xs for y in ys for z in zs], dtype=np.float64
    )


@dataclass
class DepthTrack:
    """Depth history of one track: strictly increasing timestamps."""

    times: np.ndarray
    depths: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=np.float64)
        self.depths = np.asarray(self.depths, dtype=np.float64)
        if self.times.shape != self.depths.shape or self.times.ndim != 1:
            raise DomainError("times and depths must be matching 1-D arrays")
        if len(self.times) and np.any(np.diff(self.times) <= 0):
            raise DomainError("timestamps must be strictly increasing")
        if np.any(self.depths <= 0):
            raise DomainError("depths must be positive")

    def __len__(self) -> int:
        return len(self.times)

    @classmethod
    def from_pairs(cls, pairs) -> "DepthTrack":
        arr = np.asarray(list(pairs), dtype=np.float64)
        if arr.size == 0:
            return cls(np.zeros(0), np.zeros(0))
        return cls(arr[:, 0], arr[:, 1])


def ransac_fit_velocity(
    track: DepthTrack,
    q: int,
    *,
    seed: int = 0,
    n_iters: int = RANSAC_ITERS,
    inlier_threshold: float = RANSAC_INLIER_THRESHOLD,
) -> tuple[float, np.ndarray]:
    """Fit depth = y0 + slope * t over the last q points; return closing rate.

    RANSAC with 2-point minimal samples and a final least-squares refit on
    the consensus set.  The closing rate is -slope (depth shrinking at
    10 m/s means v = +10).  Deterministic for a fixed seed.
    """
    if q < 2:
        raise DomainError(f"window q must be >= 2, got {q}")
    n = len(track)
    if n < 2:
        raise FitFailedError(f"need >= 2 depth points, have {n}")
    t = track.times[-q:]
    y = track.depths[-q:]
    m = len(t)

    def refit(mask: np.ndarray) -> float:
        slope, _ = np.polyfit(t[mask], y[mask], 1)
        return float(slope)

    if m == 2:
        slope = (y[1] - y[0]) / (t[1] - t[0])
        return -float(slope), np.ones(2, dtype=bool)

    rng = np.random.Generator(np.random.PCG64(seed))
    best_mask: np.ndarray | None = None
    best_count = 0
    best_sse = np.inf
    for _ in range(n_iters):
        i, j = rng.choice(m, size=2, replace=False)
        dt = t[j] - t[i]
        slope = (y[j] - y[i]) / dt
        intercept = y[i] - slope * t[i]
        resid = y - (intercept + slope * t)
        mask = np.abs(resid) <= inlier_threshold
        count = int(mask.sum())
        sse = float(np.sum(resid[mask] ** 2))
        if count > best_count or (count == best_count and sse < best_sse):
            best_mask, best_count, best_sse = mask, count, sse
    if best_mask is None or best_count < 2:
        raise FitFailedError("no consensus set with >= 2 inliers")
    return -refit(best_mask), best_mask


@dataclass
class TtcLabel:
    tau_s: float
    q_used: int
    velocity_mps: float
    depth_m: float
    accelerating: bool = False
    manual_checked: bool = False

    @property
    def interval(self):
        return ttc_interval(self.tau_s)


def ttc_label(depth_m: float, velocity_mps: float, q_used: int = 10) -> TtcLabel:
    """TTC label from depth and closing rate, truncated to [-20, 20]."""
    tau = ttc_from_depth_velocity(depth_m, velocity_mps)
    return TtcLabel(tau_s=tau, q_used=q_used, velocity_mps=velocity_mps, depth_m=depth_m)


def arbitrate_multi_q(
    track: DepthTrack,
    reference_v: float | None = None,
    *,
    qs: tuple[int, ...] = DEFAULT_QS,
    spread_threshold: float = DEFAULT_SPREAD_THRESHOLD,
    seed: int = 0,
) -> TtcLabel:
    """Label from several fit windows, arbitrated for accelerating objects.

    All window sizes in ``qs`` are fitted.  If the candidate TTCs agree
    within ``spread_threshold`` (relative), the longest window wins (it is
    the most stable).  Otherwise the object is flagged ``accelerating``
    and the candidate closest to the TTC implied by ``reference_v`` is
    chosen; with no reference, the shortest (most reactive) window wins.
    """
    if len(track) < 3:
        raise FitFailedError(f"track too short for arbitration: {len(track)} points")
    depth = float(track.depths[-1])
    candidates: list[TtcLabel] = []
    for q in qs:
        v, _ = ransac_fit_velocity(track, q, seed=seed)
        candidates.append(ttc_label(depth, v, q_used=q))

    taus = np.array([c.tau_s for c in candidates])
    spread = float(taus.max() - taus.min())
    scale = max(float(np.abs(taus).mean()), 1e-9)
    if spread / scale <= spread_threshold:
        return candidates[-1]

    if reference_v is not None:
        tau_ref = ttc_from_depth_velocity(depth, reference_v)
        pick = int(np.argmin(np.abs(taus - tau_ref)))
    else:
        pick = 0
    chosen = candidates[pick]
    chosen.accelerating = True
    return chosen


@dataclass
class TrackletFrame:
    timestamp_s: float
    box: BoundingBox
    depth_m: float | None = None
    image: np.ndarray | None = None
    image_path: str | None = None


@dataclass
class Tracklet:
    track_id: str
    fps: float
    image_size: tuple[float, float]  # (width, height)
    frames: list[TrackletFrame] = field(default_factory=list)


@dataclass(frozen=True)
class DroppedWindow:
    track_id: str
    window_index: int
    reason: str


def _window_drop_reason(
    frames: list[TrackletFrame], fps: float, image_size: tuple[float, float],
    min_box: float,
) -> str | None:
    dt = 1.0 / fps
    for a, b in zip(frames, frames[1:]):
        if abs((b.timestamp_s - a.timestamp_s) - dt) > 1e-6:
            return "frame_gap"
    for f in frames:
        if f.box.w < min_box or f.box.h < min_box:
            return "box_below_min_size"
        if not f.box.inside_image(*image_size):
            return "truncated_box"
    return None


def build_sequences(
    tracklets: list[Tracklet],
    *,
    length: int = 6,
    fps: float = 10.0,
    min_box: float = MIN_BOX_SIZE_PX,
    reference_v: float | None = None,
    seed: int = 0,
) -> tuple[list[Sequence], list[DroppedWindow]]:
    """Split tracklets into non-overlapping fixed-length windows.

    Windows failing the size/truncation filters are dropped with a
    reason.  When depths are present the window is labeled via
    :func:`arbitrate_multi_q` on the track history up to its last frame.
    """
    sequences: list[Sequence] = []
    dropped: list[DroppedWindow] = []
    for tracklet in sorted(tracklets, key=lambda t: t.track_id):
        n_windows = len(tracklet.frames) // length
        depths_ok = all(f.depth_m is not None for f in tracklet.frames)
        for w in range(n_windows):
            frames = tracklet.frames[w * length : (w + 1) * length]
            reason = _window_drop_reason(frames, fps, tracklet.image_size, min_box)
            if reason is not None:
                dropped.append(DroppedWindow(tracklet.track_id, w, reason))
                continue
            label = None
            if depths_ok:
                end = w * length + length
                history = tracklet.frames[:end]
                track = DepthTrack(
                    np.array([f.timestamp_s for f in history]),
                    np.array([f.depth_m for f in history]),
                )
                raw = arbitrate_multi_q(track, reference_v, seed=seed)
                label = label_to_sequence_label(raw)
            sequences.append(
                Sequence(
                    sequence_id=f"{tracklet.track_id}_w{w:03d}",
                    fps=fps,
                    frames=[
                        FrameSample(
                            timestamp_s=f.timestamp_s,
                            box=f.box,
                            depth_m=f.depth_m,
                            image=f.image,
                            image_path=f.image_path,
                        )
                        for f in frames
                    ],
                    label=label,
                    provenance={"generator": "external", "track_id": tracklet.track_id},
                )
            )
    return sequences, dropped


def label_to_sequence_label(label: TtcLabel) -> SequenceLabel:
    """Convert a fitted label to the manifest schema.

    The 10 Hz scale ratio comes from the *untruncated* depth/velocity
    ratio so it stays exact for constant-velocity tracks; a near-zero
    closing rate means no apparent scale change (alpha = 1).
    """
    if abs(label.velocity_mps) < DEFAULT_VELOCITY_EPS:
        alpha_10 = 1.0
    else:
        tau_raw = label.depth_m / label.velocity_mps
        alpha_10 = tau_raw / (tau_raw + 0.1)
    flags = ["annotated"]
    if label.accelerating:
        flags.append("accelerating")
    if label.manual_checked:
        flags.append("manual_checked")
    return SequenceLabel(
        tau_s=label.tau_s,
        alpha_10hz=alpha_10,
        velocity_mps=label.velocity_mps,
        q_used=label.q_used,
        flags=flags,
        depth_m=label.depth_m,
    )


def annotate_sequence(seq: Sequence, *, seed: int = 0,
                      use_reference_velocity: bool = True) -> SequenceLabel:
    """Re-derive a sequence label from its depth history.

    An existing label's velocity (e.g. an exact generator velocity or an
    external ranging sensor) serves as the arbitration reference for
    accelerating objects when ``use_reference_velocity`` is set.
    """
    if seq.depth_history:
        track = DepthTrack.from_pairs(seq.depth_history)
    else:
        pairs = [
            (f.timestamp_s, f.depth_m) for f in seq.frames if f.depth_m is not None
        ]
        if len(pairs) < 3:
            raise FitFailedError(f"sequence {seq.sequence_id} has no usable depth track")
        track = DepthTrack.from_pairs(pairs)
    reference_v = None
    if use_reference_velocity and seq.label is not None:
        reference_v = seq.label.velocity_mps
    raw = arbitrate_multi_q(track, reference_v, seed=seed)
    new_label = label_to_sequence_label(raw)
    if seq.label is not None and seq.label.alpha_by_gap is not None:
        # keep the generator's exact per-gap ratios for evaluation
        new_label.alpha_by_gap = dict(seq.label.alpha_by_gap)
    return new_label


def rebalance_sample(
    sequences: list[Sequence],
    target: list[tuple[float, float, float]],
    seed: int = 0,
    total: int | None = None,
) -> tuple[list[Sequence], list[str]]:
    """Subsample labeled sequences toward a preset TTC distribution.

    ``target`` is a list of (lo, hi, weight) bins partitioning [-20, 20].
    Sampling is without replacement, per bin, deterministic for a fixed
    seed.  Bins whose quota exceeds availability are underfilled and
    reported in the returned warnings.
    """
    bins = sorted(target, key=lambda b: b[0])
    if not bins or bins[0][0] != -20.0 or bins[-1][1] != 20.0:
        raise DomainError("target bins must cover [-20, 20]")
    for (lo_a, hi_a, _), (lo_b, _, _) in zip(bins, bins[1:]):
        if hi_a != lo_b:
            raise DomainError("target bins must be contiguous")
    weights = np.array([w for _, _, w in bins], dtype=np.float64)
    if weights.sum() <= 0 or np.any(weights < 0):
        raise DomainError("target weights must be non-negative and sum > 0")
    weights /= weights.sum()

    if total is None:
        total = len(sequences)
    # largest-remainder rounding of per-bin quotas
    ideal = weights * total
    quotas = np.floor(ideal).astype(int)
    remainder = total - quotas.sum()
    order = np.argsort(-(ideal - quotas), kind="stable")
    quotas[order[:remainder]] += 1

    members: list[list[int]] = [[] for _ in bins]
    for idx, seq in enumerate(sequences):
        if seq.label is None:
            raise DomainError(f"sequence {seq.sequence_id} is unlabeled")
        tau = min(max(seq.label.tau_s, -20.0), 20.0)
        for b, (lo, hi, _) in enumerate(bins):
            if (lo <= tau < hi) or (tau == 20.0 and hi == 20.0):
                members[b].append(idx)
                break

    rng = np.random.Generator(np.random.PCG64(seed))
    selected: list[int] = []
    warnings: list[str] = []
    for b, (lo, hi, _) in enumerate(bins):
        want = int(quotas[b])
        have = len(members[b])
        take = min(want, have)
        if want > have:
            warnings.append(f"bin [{lo}, {hi}): wanted {want}, only {have} available")
        if take > 0:
            picks = rng.permutation(have)[:take]
            selected.extend(members[b][p] for p in picks)
    selected.sort()
    return [sequences[i] for i in selected], warnings


def uniform_interval_target() -> list[tuple[float, float, float]]:
    """Equal weight on the four TTC intervals."""
    return [(-20.0, 0.0, 0.25), (0.0, 3.0, 0.25), (3.0, 6.0, 0.25), (6.0, 20.0, 0.25)]
