"""The three TTC estimators.

All share one TTC-from-scale contract: predict the scale ratio alpha
between a reference frame (``gap`` frames back) and the target (last)
frame, clamp it into the search range, then convert to TTC and to the
10 Hz-equivalent scale ratio.

* ``detection_ratio_estimate`` -- box-geometry baseline (area ratio).
* ``pixel_mse_estimate`` -- scores every candidate scale by MSE between
  the rescaled reference crop and the target crop, fuses the top-k bins
  with reciprocal-MSE weights.
* ``feature_scale_estimate`` -- scores candidates by pooled cosine
  similarity of grid-sampled feature patches, calibrated by a small
  per-bin linear head, fused with sigmoid weights.

Candidate boxes sit at the reference box center with the *target* box
dims scaled by each alpha bin; an exhaustive (2c+1)^2 integer center
shift absorbs detection misalignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .boxes import BoundingBox, expand_box
from .core import (
    convert_scale_ratio_fps,
    scale_ratio_from_ttc,
    ttc_from_scale_ratio,
)
from .errors import DomainError, ScaleConversionError, SequenceInvalidError
from .features import HandCraftedExtractor
from .manifest import FrameSample, Sequence
from .sampling import (
    bilinear_sample,
    crop_positions,
    crop_resize,
    grid_positions,
    grid_sample_features,
    shift_offsets,
)

_FLAT_PROFILE_TOL = 1e-12


@dataclass(frozen=True)
class ScaleSearchConfig:
    """Scale-search hyperparameters.

    Field defaults are the pixel-space settings; ``feature_defaults()``
    gives the feature-space ones (fewer, coarser bins and a small shift
    radius, with a fixed grid-sample target size).
    """

    alpha_min: float = 0.65
    alpha_max: float = 1.5
    n_bins: int = 125
    top_k: int = 3
    shift_c: int = 3
    expand_cap: float = 1.1
    frame_gap: int = 5
    target_w: int = 50
    target_h: int = 50
    ttc_reference: str = "reference_frame"
    detection_sqrt: bool = True
    multi_reference: bool = False
    eps: float = 1e-12

    def __post_init__(self) -> None:
        if not (0 < self.alpha_min < self.alpha_max):
            raise DomainError(f"bad alpha range [{self.alpha_min}, {self.alpha_max}]")
        if self.n_bins < 2:
            raise DomainError(f"need >= 2 scale bins, got {self.n_bins}")
        if not (1 <= self.top_k <= self.n_bins):
            raise DomainError(f"top_k {self.top_k} outside [1, {self.n_bins}]")
        if self.shift_c < 0:
            raise DomainError(f"shift radius must be >= 0, got {self.shift_c}")
        if self.frame_gap < 1:
            raise DomainError(f"frame gap must be >= 1, got {self.frame_gap}")

    @classmethod
    def pixel_defaults(cls, **overrides) -> "ScaleSearchConfig":
        return cls(**overrides)

    @classmethod
    def feature_defaults(cls, **overrides) -> "ScaleSearchConfig":
        base = dict(n_bins=20, top_k=4, shift_c=1, target_w=50, target_h=50)
        base.update(overrides)
        return cls(**base)

    def bins(self) -> np.ndarray:
        return np.linspace(self.alpha_min, self.alpha_max, self.n_bins)

    @property
    def bin_width(self) -> float:
        return (self.alpha_max - self.alpha_min) / (self.n_bins - 1)

    def with_gap(self, gap: int) -> "ScaleSearchConfig":
        return replace(self, frame_gap=gap)


@dataclass
class SimilarityProfile:
    """Per-bin scores before fusion; lower is better for 'mse' semantics,
    higher for 'logit'."""

    scores: np.ndarray  # (n_bins,)
    semantics: str  # "mse" | "logit"
    best_shift: np.ndarray  # (n_bins, 2) int offsets (dx, dy)


@dataclass
class TtcEstimate:
    alpha_hat: float  # at the evaluation frame gap
    alpha_hat_10hz: float
    tau_hat: float
    profile: SimilarityProfile | None
    estimator: str
    low_confidence: bool = False


def scaled_candidate_boxes(
    b0: BoundingBox, b1: BoundingBox, cfg: ScaleSearchConfig
) -> list[BoundingBox]:
    """Candidate boxes: reference center, target dims scaled by each bin."""
    return [
        BoundingBox(b0.cx, b0.cy, float(a) * b1.w, float(a) * b1.h)
        for a in cfg.bins()
    ]


def _estimate_pair(seq: Sequence, gap: int) -> tuple[FrameSample, FrameSample]:
    target_idx = len(seq.frames) - 1
    ref_idx = target_idx - gap
    if ref_idx < 0:
        raise SequenceInvalidError(
            f"gap {gap} needs {gap + 1} frames, sequence has {len(seq.frames)}"
        )
    ref, tgt = seq.frames[ref_idx], seq.frames[target_idx]
    if ref.box is None or tgt.box is None:
        raise SequenceInvalidError("reference/target frames must carry boxes")
    return ref, tgt


def alpha_to_10hz(alpha: float, effective_fps: float) -> float:
    """Express a scale ratio at the 10 Hz reference rate.

    Falls back to truncating through the TTC representation when the
    direct conversion leaves the valid range (extreme receding ratios).
    """
    try:
        return convert_scale_ratio_fps(alpha, effective_fps, 10.0)
    except ScaleConversionError:
        tau = ttc_from_scale_ratio(alpha, 1.0 / effective_fps, "target_frame")
        return scale_ratio_from_ttc(tau, 0.1, "target_frame")


def _finish(
    alpha_hat: float,
    cfg: ScaleSearchConfig,
    fps: float,
    gap: int,
    profile: SimilarityProfile | None,
    estimator: str,
    low_confidence: bool,
) -> TtcEstimate:
    alpha_hat = float(min(max(alpha_hat, cfg.alpha_min), cfg.alpha_max))
    dt = gap / fps
    tau_hat = ttc_from_scale_ratio(alpha_hat, dt, cfg.ttc_reference)
    alpha_10 = alpha_to_10hz(alpha_hat, fps / gap)
    return TtcEstimate(
        alpha_hat=alpha_hat,
        alpha_hat_10hz=alpha_10,
        tau_hat=tau_hat,
        profile=profile,
        estimator=estimator,
        low_confidence=low_confidence,
    )


def _gray(image: np.ndarray) -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    return img.mean(axis=2) if img.ndim == 3 else img


def _flat(scores: np.ndarray) -> bool:
    return float(scores.max() - scores.min()) <= _FLAT_PROFILE_TOL * max(
        1.0, float(np.abs(scores).max())
    )


# ---------------------------------------------------------------------------
# detection baseline


def detection_ratio_estimate(seq: Sequence, cfg: ScaleSearchConfig) -> TtcEstimate:
    """Scale ratio straight from detection-box areas.

    ``sqrt(area_ref / area_target)`` keeps the result a linear scale
    ratio like the other estimators; set ``detection_sqrt=False`` for the
    raw area ratio reading.
    """
    gap = cfg.frame_gap
    ref, tgt = _estimate_pair(seq, gap)
    if ref.box.area <= 0 or tgt.box.area <= 0:
        raise DomainError("zero-area box")
    ratio = ref.box.area / tgt.box.area
    alpha = math.sqrt(ratio) if cfg.detection_sqrt else ratio
    return _finish(alpha, cfg, seq.fps, gap, None, "detection", False)


# ---------------------------------------------------------------------------
# pixel-space MSE search


def _pixel_mse_scores(
    ref_gray: np.ndarray,
    tgt_crop: np.ndarray,
    center: tuple[float, float],
    b1: BoundingBox,
    cfg: ScaleSearchConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """MSE of every (scale bin, center shift) candidate against the target crop.

    Returns (mse (n_bins, n_offsets), offsets) with offsets lexicographic
    in (dx, dy).  For each bin, all shifted crops come from one augmented
    sampling lattice so the search stays vectorized.
    """
    out_h, out_w = tgt_crop.shape
    c = cfg.shift_c
    side = np.arange(-c, c + 1, dtype=np.float64)
    n_side = 2 * c + 1
    center_box = BoundingBox(center[0], center[1], b1.w, b1.h)
    candidates = scaled_candidate_boxes(center_box, b1, cfg)
    mses = np.empty((cfg.n_bins, n_side * n_side))
    for i, box in enumerate(candidates):
        ys, xs = crop_positions(box, out_w, out_h)
        lattice_x = (side[:, None] + xs[None, :]).reshape(-1)
        lattice_y = (side[:, None] + ys[None, :]).reshape(-1)
        sampled = bilinear_sample(ref_gray, lattice_y[:, None], lattice_x[None, :])
        crops = sampled.reshape(n_side, out_h, n_side, out_w)
        diff = crops - tgt_crop[None, :, None, :]
        per_shift = np.mean(diff * diff, axis=(1, 3))  # (dy_idx, dx_idx)
        mses[i] = per_shift.T.reshape(-1)  # lexicographic (dx, dy)
    return mses, shift_offsets(c)


def _pixel_alpha_at_gap(seq: Sequence, cfg: ScaleSearchConfig, gap: int):
    ref, tgt = _estimate_pair(seq, gap)
    ref_img, tgt_img = ref.load_image(), tgt.load_image()
    h, w = tgt_img.shape[:2]
    b1 = expand_box(tgt.box, cfg.expand_cap, (w, h))
    out_w = max(2, int(round(b1.w)))
    out_h = max(2, int(round(b1.h)))
    tgt_crop = crop_resize(_gray(tgt_img), b1, out_w, out_h)
    mses, offsets = _pixel_mse_scores(
        _gray(ref_img), tgt_crop, (ref.box.cx, ref.box.cy), b1, cfg
    )
    best_off = np.argmin(mses, axis=1)
    best = mses[np.arange(cfg.n_bins), best_off]
    profile = SimilarityProfile(
        scores=best, semantics="mse", best_shift=offsets[best_off]
    )
    order = np.argsort(best, kind="stable")[: cfg.top_k]
    weights = 1.0 / (best[order] + cfg.eps)
    alpha = float(np.sum(weights * cfg.bins()[order]) / np.sum(weights))
    return alpha, profile, _flat(best)


def pixel_mse_estimate(seq: Sequence, cfg: ScaleSearchConfig) -> TtcEstimate:
    """Scale search by pixel MSE, top-k reciprocal-MSE fusion.

    The crop target size follows the (expanded) target box.  Degenerate
    flat profiles (e.g. constant frames) still produce an estimate but
    carry ``low_confidence``.
    """
    gap = cfg.frame_gap
    alpha, profile, flat = _pixel_alpha_at_gap(seq, cfg, gap)
    if not cfg.multi_reference:
        return _finish(alpha, cfg, seq.fps, gap, profile, "pixel_mse", flat)
    return _multi_reference_finish(
        seq, cfg, alpha, profile, flat, "pixel_mse",
        lambda g: _pixel_alpha_at_gap(seq, cfg, g)[0],
    )


def _multi_reference_finish(seq, cfg, alpha_default, profile, flat, name, alpha_fn):
    """Average per-gap estimates in 10 Hz scale-ratio space."""
    alphas_10 = []
    for g in range(1, len(seq.frames)):
        a = alpha_default if g == cfg.frame_gap else alpha_fn(g)
        a = float(min(max(a, cfg.alpha_min), cfg.alpha_max))
        alphas_10.append(alpha_to_10hz(a, seq.fps / g))
    alpha_10 = float(np.mean(alphas_10))
    tau_hat = ttc_from_scale_ratio(alpha_10, 0.1, cfg.ttc_reference)
    return TtcEstimate(
        alpha_hat=float(min(max(alpha_default, cfg.alpha_min), cfg.alpha_max)),
        alpha_hat_10hz=alpha_10,
        tau_hat=tau_hat,
        profile=profile,
        estimator=name,
        low_confidence=flat,
    )


# ---------------------------------------------------------------------------
# feature-space scale classification


def candidate_patch_coords(
    center: tuple[float, float], b1: BoundingBox, cfg: ScaleSearchConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Grid-sample coordinates for every (bin, shift) candidate patch.

    Returns (ys, xs), each (n_bins, n_offsets, out, 1)/(...,1, out), ready
    to broadcast into bilinear sampling.
    """
    offsets = shift_offsets(cfg.shift_c).astype(np.float64)
    ys_list = np.empty((cfg.n_bins, cfg.target_h))
    xs_list = np.empty((cfg.n_bins, cfg.target_w))
    center_box = BoundingBox(center[0], center[1], b1.w, b1.h)
    for i, box in enumerate(scaled_candidate_boxes(center_box, b1, cfg)):
        ys, xs = grid_positions(box, cfg.target_w, cfg.target_h)
        ys_list[i], xs_list[i] = ys, xs
    ys_all = ys_list[:, None, :, None] + offsets[None, :, 1, None, None]
    xs_all = xs_list[:, None, None, :] + offsets[None, :, 0, None, None]
    return ys_all, xs_all


def candidate_grid_patches(
    fmap0: np.ndarray,
    center: tuple[float, float],
    b1: BoundingBox,
    cfg: ScaleSearchConfig,
) -> np.ndarray:
    """All candidate patches from the reference feature map:
    (n_bins, n_offsets, out_h, out_w, C)."""
    ys_all, xs_all = candidate_patch_coords(center, b1, cfg)
    return bilinear_sample(fmap0, ys_all, xs_all)


def target_grid_patch(fmap1: np.ndarray, b1: BoundingBox, cfg: ScaleSearchConfig) -> np.ndarray:
    return grid_sample_features(fmap1, b1, cfg.target_w, cfg.target_h)


def pooled_cosine_scores(patches: np.ndarray, target_patch: np.ndarray) -> np.ndarray:
    """Mean cosine similarity of each candidate patch vs the target patch.

    patches: (n_bins, n_off, H, W, C); target: (H, W, C) -> (n_bins, n_off).
    """
    num = np.einsum("bshwc,hwc->bshw", patches, target_patch)
    n0 = np.einsum("bshwc,bshwc->bshw", patches, patches)
    n1 = np.einsum("hwc,hwc->hw", target_patch, target_patch)
    denom = np.sqrt(n0 * n1[None, None])
    cos = num / np.maximum(denom, 1e-12)
    return cos.mean(axis=(2, 3))


def feature_scores(
    fmap0: np.ndarray,
    fmap1: np.ndarray,
    center: tuple[float, float],
    b1: BoundingBox,
    cfg: ScaleSearchConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Raw (pre-head) similarity scores: (n_bins, n_offsets), plus offsets."""
    patches = candidate_grid_patches(fmap0, center, b1, cfg)
    target = target_grid_patch(fmap1, b1, cfg)
    return pooled_cosine_scores(patches, target), shift_offsets(cfg.shift_c)


def identity_head(n_bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Untrained per-bin head: logits pass the pooled scores through."""
    return np.eye(n_bins), np.zeros(n_bins)


def head_logits(
    scores: np.ndarray, fc_weight: np.ndarray, fc_bias: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-bin max over center shifts, then the linear head.

    The shift search yields each scale's final similarity score; the head
    calibrates the resulting n-vector into logits.  Returns
    (logits (n_bins,), best_shift_idx (n_bins,)).
    """
    n = scores.shape[0]
    if fc_weight.shape != (n, n) or fc_bias.shape != (n,):
        raise DomainError(
            f"head shapes {fc_weight.shape}/{fc_bias.shape} do not match {n} bins"
        )
    best_idx = np.argmax(scores, axis=1)
    final_scores = scores[np.arange(n), best_idx]
    return fc_weight @ final_scores + fc_bias, best_idx


def fuse_logits(logits: np.ndarray, cfg: ScaleSearchConfig) -> float:
    """Top-k sigmoid-weighted mean of the bin alphas."""
    order = np.argsort(-logits, kind="stable")[: cfg.top_k]
    weights = 1.0 / (1.0 + np.exp(-logits[order]))
    return float(np.sum(weights * cfg.bins()[order]) / np.sum(weights))


def _feature_alpha_at_gap(seq, cfg, gap, extractor, fc_weight, fc_bias, fmap_cache):
    ref, tgt = _estimate_pair(seq, gap)
    ref_idx = len(seq.frames) - 1 - gap
    if ref_idx not in fmap_cache:
        fmap_cache[ref_idx] = np.asarray(extractor(ref.load_image()), dtype=np.float64)
    fmap0 = fmap_cache[ref_idx]
    fmap1 = fmap_cache[len(seq.frames) - 1]
    h, w = tgt.load_image().shape[:2]
    b1 = expand_box(tgt.box, cfg.expand_cap, (w, h))
    scores, offsets = feature_scores(fmap0, fmap1, (ref.box.cx, ref.box.cy), b1, cfg)
    logits, best_idx = head_logits(scores, fc_weight, fc_bias)
    profile = SimilarityProfile(
        scores=logits, semantics="logit", best_shift=offsets[best_idx]
    )
    return fuse_logits(logits, cfg), profile, _flat(logits)


def feature_scale_estimate(
    seq: Sequence,
    cfg: ScaleSearchConfig,
    extractor=None,
    fc_weight: np.ndarray | None = None,
    fc_bias: np.ndarray | None = None,
) -> TtcEstimate:
    """Feature-space scale classification with a per-bin linear head.

    With no trained head the identity head is used: logits are the pooled
    cosine scores themselves.
    """
    if extractor is None:
        extractor = HandCraftedExtractor()
    if fc_weight is None or fc_bias is None:
        fc_weight, fc_bias = identity_head(cfg.n_bins)
    fc_weight = np.asarray(fc_weight, dtype=np.float64)
    fc_bias = np.asarray(fc_bias, dtype=np.float64)

    gap = cfg.frame_gap
    tgt = seq.frames[-1]
    fmap_cache = {
        len(seq.frames) - 1: np.asarray(extractor(tgt.load_image()), dtype=np.float64)
    }
    alpha, profile, flat = _feature_alpha_at_gap(
        seq, cfg, gap, extractor, fc_weight, fc_bias, fmap_cache
    )
    if not cfg.multi_reference:
        return _finish(alpha, cfg, seq.fps, gap, profile, "feature_scale", flat)
    return _multi_reference_finish(
        seq, cfg, alpha, profile, flat, "feature_scale",
        lambda g: _feature_alpha_at_gap(
            seq, cfg, g, extractor, fc_weight, fc_bias, fmap_cache
        )[0],
    )


# ---------------------------------------------------------------------------
# estimator registry

ESTIMATOR_NAMES = ("detection", "pixel_mse", "feature_scale")


def make_estimator(name: str, cfg: ScaleSearchConfig, weights: dict | None = None):
    """Build a ``seq -> TtcEstimate`` callable by estimator name."""
    if name == "detection":
        return lambda seq: detection_ratio_estimate(seq, cfg)
    if name == "pixel_mse":
        return lambda seq: pixel_mse_estimate(seq, cfg)
    if name == "feature_scale":
        fc_w = fc_b = None
        extractor = None
        if weights is not None:
            fc_w = weights.get("fc.weight")
            fc_b = weights.get("fc.bias")
            if any(k.startswith("conv1.") for k in weights):
                from .features import ConvStackExtractor

                mid = weights["conv1.weight"].shape[1]
                out_ch = weights["conv3.weight"].shape[1]
                k = int(round(math.sqrt(weights["conv1.weight"].shape[0] / 12)))
                extractor = ConvStackExtractor(mid, out_ch, kernel=k)
                extractor.set_params(weights)
        return lambda seq: feature_scale_estimate(seq, cfg, extractor, fc_w, fc_b)
    raise DomainError(f"unknown estimator {name!r}; choose from {ESTIMATOR_NAMES}")
