"""Synthetic ground-truth generation.

A pinhole camera images a frontal-parallel planar textured quad whose
motion follows a scripted trajectory.  Because size on the image plane
is exactly focal * physical_size / depth, depth ratios give exact scale
ratios and instantaneous closing speed gives exact TTC, so generated
sequences carry analytic labels against which estimators are scored.

Ground-truth scale ratios are defined from depth ratios rather than
measured from rendered pixels; agreement between the two is itself a
test of the renderer.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .boxes import BoundingBox
from .core import DEFAULT_VELOCITY_EPS, ttc_from_depth_velocity
from .errors import DomainError, SequenceInvalidError
from .manifest import FrameSample, Sequence, SequenceLabel
from .scenarios import ScenarioScript, Trajectory, constant_velocity_script, simulate_script


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics; pixels, principal point at (cx, cy)."""

    f: float
    cx: float
    cy: float
    width: int = 1024
    height: int = 576

    def __post_init__(self) -> None:
        if self.f <= 0:
            raise DomainError(f"focal length must be positive, got {self.f}")
        if self.width <= 0 or self.height <= 0:
            raise DomainError("image dims must be positive")

    @classmethod
    def centered(cls, f: float, width: int = 1024, height: int = 576) -> "CameraModel":
        return cls(f=f, cx=width / 2.0, cy=height / 2.0, width=width, height=height)


def project_size(camera: CameraModel, size_m: float, depth_m: float) -> float:
    """Image-plane size (pixels) of a frontal-parallel object: f * S / y."""
    if depth_m <= 0:
        raise DomainError(f"depth must be positive, got {depth_m}")
    if size_m <= 0:
        raise DomainError(f"object size must be positive, got {size_m}")
    return camera.f * size_m / depth_m


@dataclass(eq=False)
class PlanarTarget:
    """A textured planar quad facing the camera."""

    physical_width: float
    physical_height: float
    texture: np.ndarray  # (th, tw, 3), values in [0, 1]
    lateral_offset_x: float = 0.0
    vertical_offset_z: float = 0.0

    def __post_init__(self) -> None:
        if self.physical_width <= 0 or self.physical_height <= 0:
            raise DomainError("physical dims must be positive")
        tex = np.asarray(self.texture, dtype=np.float64)
        if tex.ndim != 3 or tex.shape[2] != 3:
            raise DomainError(f"texture must be (H, W, 3), got {tex.shape}")
        if float(tex.max() - tex.min()) <= 0:
            raise DomainError("texture must be non-constant, else scale is unobservable")
        self.texture = tex


@dataclass(frozen=True)
class NoiseModel:
    """Observation noise: box jitter plus illumination gain/bias."""

    box_center_jitter_px: int = 0
    box_scale_jitter: float = 0.0
    gain_range: tuple[float, float] = (1.0, 1.0)
    bias_range: tuple[float, float] = (0.0, 0.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.box_center_jitter_px < 0 or self.box_scale_jitter < 0:
            raise DomainError("jitter magnitudes must be >= 0")
        if self.gain_range[0] > self.gain_range[1] or self.gain_range[0] <= 0:
            raise DomainError(f"bad gain range {self.gain_range}")
        if self.bias_range[0] > self.bias_range[1]:
            raise DomainError(f"bad bias range {self.bias_range}")


def _frame_noise(noise: NoiseModel | None, rng: np.random.Generator | None):
    """Draw one frame's noise realization in a fixed order."""
    if noise is None or rng is None:
        return 0, 0, 1.0, 1.0, 0.0
    j = noise.box_center_jitter_px
    dx = int(rng.integers(-j, j + 1)) if j > 0 else 0
    dy = int(rng.integers(-j, j + 1)) if j > 0 else 0
    s = 1.0 + (rng.uniform(-noise.box_scale_jitter, noise.box_scale_jitter)
               if noise.box_scale_jitter > 0 else 0.0)
    gain = rng.uniform(*noise.gain_range) if noise.gain_range != (1.0, 1.0) else 1.0
    bias = rng.uniform(*noise.bias_range) if noise.bias_range != (0.0, 0.0) else 0.0
    return dx, dy, s, gain, bias


def render_frame(
    camera: CameraModel,
    target: PlanarTarget,
    depth_m: float,
    lateral_x: float = 0.0,
    *,
    timestamp_s: float = 0.0,
    noise: NoiseModel | None = None,
    rng: np.random.Generator | None = None,
    background: float | np.ndarray = 0.08,
    supersample: int = 3,
) -> FrameSample:
    """Render one frame and its exact projected box.

    The emitted ``exact_box`` is the analytic projection before any
    noise; the observable ``box`` carries the jittered version when a
    noise model is supplied.  Gain/bias act on the whole frame after
    pasting, then values are clamped to [0, 1].

    Each covered pixel averages a ``supersample x supersample`` grid of
    bilinear texture samples over its footprint; plain point sampling
    aliases badly once the texture is minified a few times, which would
    leak a scale-dependent bias into anything matched against the render.
    """
    if depth_m <= 0:
        raise DomainError(f"depth must be positive, got {depth_m}")
    if supersample < 1:
        raise DomainError(f"supersample factor must be >= 1, got {supersample}")
    u = camera.cx + camera.f * (lateral_x + target.lateral_offset_x) / depth_m
    v = camera.cy - camera.f * target.vertical_offset_z / depth_m
    w = project_size(camera, target.physical_width, depth_m)
    h = project_size(camera, target.physical_height, depth_m)
    exact_box = BoundingBox(u, v, w, h)
    too_small = w < 15.0 or h < 15.0
    truncated = not exact_box.inside_image(camera.width, camera.height)

    if np.isscalar(background):
        img = np.full((camera.height, camera.width, 3), float(background))
    else:
        img = np.array(background, dtype=np.float64)
        if img.shape != (camera.height, camera.width, 3):
            raise DomainError(f"background shape {img.shape} does not match camera")

    # Paste over every pixel square overlapping the box (pixel i spans
    # [i, i+1]); edge pixels alpha-blend by their exact coverage so the
    # silhouette moves sub-pixel-smoothly with the projected size.
    x_lo = max(0, int(np.floor(exact_box.x0)))
    x_hi = min(camera.width - 1, int(np.ceil(exact_box.x1)) - 1)
    y_lo = max(0, int(np.floor(exact_box.y0)))
    y_hi = min(camera.height - 1, int(np.ceil(exact_box.y1)) - 1)
    if x_hi >= x_lo and y_hi >= y_lo:
        th, tw = target.texture.shape[:2]
        cols_i = np.arange(x_lo, x_hi + 1)
        rows_i = np.arange(y_lo, y_hi + 1)
        cov_x = np.clip(
            np.minimum(cols_i + 1.0, exact_box.x1) - np.maximum(cols_i, exact_box.x0),
            0.0, 1.0,
        )
        cov_y = np.clip(
            np.minimum(rows_i + 1.0, exact_box.y1) - np.maximum(rows_i, exact_box.y0),
            0.0, 1.0,
        )
        coverage = (cov_y[:, None] * cov_x[None, :])[:, :, None]
        sub = (np.arange(supersample) + 0.5) / supersample  # offsets within a pixel
        cols = (cols_i[:, None] + sub[None, :]).reshape(-1)
        rows = (rows_i[:, None] + sub[None, :]).reshape(-1)
        tx = np.clip((cols - exact_box.x0) / w * tw - 0.5, 0, tw - 1)
        ty = np.clip((rows - exact_box.y0) / h * th - 0.5, 0, th - 1)
        x0i = np.floor(tx).astype(np.intp)
        y0i = np.floor(ty).astype(np.intp)
        x1i = np.minimum(x0i + 1, tw - 1)
        y1i = np.minimum(y0i + 1, th - 1)
        fx = (tx - x0i)[None, :, None]
        fy = (ty - y0i)[:, None, None]
        tex = target.texture
        top = tex[y0i[:, None], x0i[None, :]] * (1 - fx) + tex[y0i[:, None], x1i[None, :]] * fx
        dense = top * (1 - fy) + (
            tex[y1i[:, None], x0i[None, :]] * (1 - fx) + tex[y1i[:, None], x1i[None, :]] * fx
        ) * fy
        n_rows = rows_i.size
        n_cols = cols_i.size
        tex_avg = dense.reshape(n_rows, supersample, n_cols, supersample, 3).mean(axis=(1, 3))
        patch = img[y_lo : y_hi + 1, x_lo : x_hi + 1]
        img[y_lo : y_hi + 1, x_lo : x_hi + 1] = patch + coverage * (tex_avg - patch)

    dx, dy, s, gain, bias = _frame_noise(noise, rng)
    if gain != 1.0 or bias != 0.0:
        img = img * gain + bias
    np.clip(img, 0.0, 1.0, out=img)

    box = BoundingBox(u + dx, v + dy, w * s, h * s) if (dx, dy, s) != (0, 0, 1.0) else exact_box
    return FrameSample(
        timestamp_s=timestamp_s,
        box=box,
        exact_box=exact_box,
        depth_m=depth_m,
        image=img.astype(np.float32),
        too_small=too_small,
        truncated=truncated,
    )


def _sequence_rng(noise: NoiseModel | None, sequence_id: str) -> np.random.Generator | None:
    if noise is None:
        return None
    key = zlib.crc32(sequence_id.encode())
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([noise.seed, key])))


def generate_from_trajectory(
    traj: Trajectory,
    camera: CameraModel,
    target: PlanarTarget,
    noise: NoiseModel | None = None,
    *,
    fps: float = 10.0,
    length: int = 6,
    start_time: float = 0.0,
    sequence_id: str = "seq",
    background: float | np.ndarray = 0.08,
    history_len: int = 12,
    provenance: dict | None = None,
) -> Sequence:
    """Render a labeled sequence from an already-simulated trajectory."""
    dt = 1.0 / fps
    t_last = start_time + (length - 1) * dt
    if start_time < 0:
        raise SequenceInvalidError("start_before_trajectory")
    if t_last > traj.t_end or (traj.contact_time is not None and t_last >= traj.contact_time):
        raise SequenceInvalidError("contact_before_sequence_end")

    rng = _sequence_rng(noise, sequence_id)
    frames = []
    for k in range(length):
        t = start_time + k * dt
        frame = render_frame(
            camera,
            target,
            traj.depth(t),
            traj.lateral(t),
            timestamp_s=t,
            noise=noise,
            rng=rng,
            background=background,
        )
        if frame.truncated:
            raise SequenceInvalidError("truncated_box")
        if frame.too_small:
            raise SequenceInvalidError("box_below_min_size")
        frames.append(frame)

    y_last = traj.depth(t_last)
    v_last = traj.closing_speed(t_last)
    tau = ttc_from_depth_velocity(y_last, v_last)
    alpha_by_gap = {
        g: y_last / traj.depth(t_last - g * dt) for g in range(1, length)
    }
    t_ref10 = t_last - 0.1
    if t_ref10 >= 0:
        alpha_10hz = y_last / traj.depth(t_ref10)
    elif abs(v_last) < DEFAULT_VELOCITY_EPS:
        alpha_10hz = 1.0
    else:
        # constant-velocity extrapolation before trajectory start
        alpha_10hz = y_last / (y_last + v_last * 0.1)

    history = []
    for k in range(history_len - 1, -1, -1):
        t = t_last - k * dt
        if t >= -1e-12:
            history.append((max(t, 0.0), traj.depth(max(t, 0.0))))

    label = SequenceLabel(
        tau_s=tau,
        alpha_10hz=alpha_10hz,
        velocity_mps=v_last,
        q_used=None,
        flags=[],
        alpha_by_gap=alpha_by_gap,
        depth_m=y_last,
    )
    seq = Sequence(
        sequence_id=sequence_id,
        fps=fps,
        frames=frames,
        label=label,
        provenance=provenance or {},
        depth_history=history,
    )
    seq.validate(length)
    return seq


def generate_sequence(
    script: ScenarioScript,
    camera: CameraModel,
    target: PlanarTarget,
    noise: NoiseModel | None = None,
    *,
    fps: float = 10.0,
    length: int = 6,
    start_time: float = 0.0,
    sequence_id: str | None = None,
    background: float | np.ndarray = 0.08,
    history_len: int = 12,
) -> Sequence:
    """Simulate a scenario and render one labeled sequence from it."""
    horizon = start_time + length / fps + 0.5
    traj = simulate_script(script, horizon)
    seq_id = sequence_id or f"script{script.script_id:05d}_t{start_time:.1f}"
    provenance = {
        "generator": "synth",
        "seed": noise.seed if noise is not None else 0,
        "script_id": script.script_id,
        "template": script.template,
        "start_time": start_time,
    }
    return generate_from_trajectory(
        traj,
        camera,
        target,
        noise,
        fps=fps,
        length=length,
        start_time=start_time,
        sequence_id=seq_id,
        background=background,
        history_len=history_len,
        provenance=provenance,
    )


def sequence_for_ttc(
    tau_s: float,
    camera: CameraModel,
    target: PlanarTarget,
    *,
    closing_speed: float = 10.0,
    fps: float = 10.0,
    length: int = 6,
    start_time: float = 0.7,
    noise: NoiseModel | None = None,
    sequence_id: str = "seq",
    background: float | np.ndarray = 0.08,
) -> Sequence:
    """Constant-velocity sequence whose target-frame TTC is exactly tau_s.

    ``closing_speed`` sets the magnitude of the relative velocity; its
    sign is taken from tau_s (negative TTC means receding).
    """
    if tau_s == 0:
        raise DomainError("tau must be nonzero")
    v = abs(closing_speed) * (1.0 if tau_s > 0 else -1.0)
    t_last = start_time + (length - 1) / fps
    y_last = tau_s * v
    y0 = y_last + v * t_last
    if y0 <= 0:
        raise DomainError(f"geometry infeasible: y0 = {y0}")
    script = constant_velocity_script(v * 3.6, 0.0, y0)
    traj = simulate_script(script, start_time + length / fps + 0.5)
    provenance = {
        "generator": "synth",
        "seed": noise.seed if noise is not None else 0,
        "script_id": 0,
        "template": 0,
        "start_time": start_time,
        "tau_requested": tau_s,
    }
    return generate_from_trajectory(
        traj,
        camera,
        target,
        noise,
        fps=fps,
        length=length,
        start_time=start_time,
        sequence_id=sequence_id,
        background=background,
        provenance=provenance,
    )


def noise_texture(
    seed: int, size: int = 64, low: float = 0.2, high: float = 0.95, smooth_passes: int = 2
) -> np.ndarray:
    """Smooth random RGB texture stretched to span [low, high]."""
    rng = np.random.Generator(np.random.PCG64(seed))
    tex = rng.uniform(0.0, 1.0, size=(size, size, 3))
    for _ in range(smooth_passes):
        tex = uniform_filter(tex, size=(3, 3, 1), mode="nearest")
    tex -= tex.min()
    ptp = tex.max()
    if ptp <= 0:  # cannot happen for random input; keep the guard cheap
        tex[...] = 0.5
        tex[0, 0] = 0.0
    else:
        tex /= ptp
    return low + tex * (high - low)


def checker_texture(
    cells: int = 8, cell_px: int = 8, low: float = 0.15, high: float = 0.9
) -> np.ndarray:
    """Checkerboard texture; strong gradients at every cell border."""
    side = cells * cell_px
    ii, jj = np.meshgrid(np.arange(side) // cell_px, np.arange(side) // cell_px, indexing="ij")
    pattern = ((ii + jj) % 2).astype(np.float64)
    return np.repeat((low + pattern * (high - low))[:, :, None], 3, axis=2)
