"""Camera poses on a sphere around the origin, ray generation, trajectories.

Conventions (fixed for the whole project):
  - World frame is right-handed, +Y up.
  - A pose is spherical: azimuth phi (degrees, about +Y, measured from +Z in
    the XZ plane), polar theta (degrees from +Y), radius r.  Camera position
    is (r*sin(theta)*sin(phi), r*cos(theta), r*sin(theta)*cos(phi)).
  - The camera looks at the origin with up hint (0, 1, 0).
  - Camera space is OpenGL-style: +X right, +Y up, -Z forward.  The extrinsic
    is the 4x4 world-from-camera matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

DEFAULT_FOV_DEG = 49.1
DEFAULT_RADIUS = 2.0
BOX_EXTENT = 0.7
# Ray-march bounds hugging the [-extent, extent]^3 box: radius -/+ half diagonal.
BOX_HALF_DIAGONAL = BOX_EXTENT * math.sqrt(3.0)
POLE_EPSILON_DEG = 1.0


class DegeneratePoleError(ValueError):
    """Polar angle at or beyond a pole, where the up hint is degenerate."""


@dataclass(frozen=True)
class CameraPose:
    azimuth_deg: float
    polar_deg: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not (0.0 < self.polar_deg < 180.0):
            raise DegeneratePoleError(
                f"polar angle {self.polar_deg} deg outside (0, 180): up vector degenerates"
            )

    @property
    def position(self) -> np.ndarray:
        phi = math.radians(self.azimuth_deg)
        theta = math.radians(self.polar_deg)
        return self.radius * np.array(
            [math.sin(theta) * math.sin(phi), math.cos(theta), math.sin(theta) * math.cos(phi)]
        )

    @property
    def extrinsic(self) -> np.ndarray:
        """4x4 world-from-camera matrix (columns: right, up, back, position)."""
        eye = self.position
        back = eye / np.linalg.norm(eye)  # camera-space +Z points away from the origin
        up_hint = np.array([0.0, 1.0, 0.0])
        right = np.cross(up_hint, back)
        right = right / np.linalg.norm(right)
        up = np.cross(back, right)
        mat = np.eye(4)
        mat[:3, 0] = right
        mat[:3, 1] = up
        mat[:3, 2] = back
        mat[:3, 3] = eye
        return mat

    def to_dict(self) -> dict:
        return {
            "azimuth_deg": float(self.azimuth_deg),
            "polar_deg": float(self.polar_deg),
            "radius": float(self.radius),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CameraPose":
        return cls(data["azimuth_deg"], data["polar_deg"], data["radius"])


@dataclass(frozen=True)
class Intrinsics:
    fov_deg: float = DEFAULT_FOV_DEG
    resolution: int = 64  # square images, pixels per side

    def __post_init__(self):
        if not (0.0 < self.fov_deg < 180.0):
            raise ValueError(f"fov must be in (0, 180), got {self.fov_deg}")
        if self.resolution < 1:
            raise ValueError(f"resolution must be >= 1, got {self.resolution}")


@dataclass
class RayBundle:
    origins: torch.Tensor  # (H, W, 3)
    directions: torch.Tensor  # (H, W, 3), unit norm
    near: float
    far: float


def pose_from_spherical(azimuth_deg: float, polar_deg: float, radius: float) -> CameraPose:
    return CameraPose(azimuth_deg % 360.0, polar_deg, radius)


def spherical_from_extrinsic(extrinsic: np.ndarray) -> tuple[float, float, float]:
    """Recover (azimuth_deg, polar_deg, radius) from the translation column."""
    pos = np.asarray(extrinsic)[:3, 3]
    radius = float(np.linalg.norm(pos))
    polar = math.degrees(math.acos(np.clip(pos[1] / radius, -1.0, 1.0)))
    azimuth = math.degrees(math.atan2(pos[0], pos[2])) % 360.0
    return azimuth, polar, radius


def default_ray_bounds(radius: float) -> tuple[float, float]:
    return radius - BOX_HALF_DIAGONAL, radius + BOX_HALF_DIAGONAL


def generate_rays(
    pose: CameraPose,
    intr: Intrinsics,
    near: float | None = None,
    far: float | None = None,
    dtype: torch.dtype = torch.float32,
) -> RayBundle:
    """Pinhole rays through every pixel center; pure function of its inputs."""
    res = intr.resolution
    if near is None or far is None:
        lo, hi = default_ray_bounds(pose.radius)
        near = lo if near is None else near
        far = hi if far is None else far
    if not near < far:
        raise ValueError(f"near must be < far, got {near}, {far}")

    tan_half = math.tan(math.radians(intr.fov_deg) / 2.0)
    # Pixel centers; row 0 is the top of the image (+v up in camera space).
    centers = (np.arange(res, dtype=np.float64) + 0.5) / res * 2.0 - 1.0
    u = centers[None, :].repeat(res, axis=0) * tan_half
    v = -centers[:, None].repeat(res, axis=1) * tan_half
    dirs_cam = np.stack([u, v, -np.ones_like(u)], axis=-1)

    ext = pose.extrinsic
    dirs_world = dirs_cam @ ext[:3, :3].T
    dirs_world /= np.linalg.norm(dirs_world, axis=-1, keepdims=True)
    origins = np.broadcast_to(ext[:3, 3], dirs_world.shape).copy()

    return RayBundle(
        origins=torch.from_numpy(origins).to(dtype),
        directions=torch.from_numpy(dirs_world).to(dtype),
        near=float(near),
        far=float(far),
    )


def sample_pose_uniform(rng, radius: float) -> CameraPose:
    """Uniform-on-sphere pose: azimuth uniform, cos(polar) uniform, poles clipped.

    `rng` is an int seed or a numpy Generator (so callers can draw sequences).
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    gen = np.random.default_rng(rng) if isinstance(rng, (int, np.integer)) else rng
    azimuth = float(gen.uniform(0.0, 360.0))
    polar = math.degrees(math.acos(float(gen.uniform(-1.0, 1.0))))
    polar = min(max(polar, POLE_EPSILON_DEG), 180.0 - POLE_EPSILON_DEG)
    return CameraPose(azimuth, polar, radius)


def relative_pose(reference: CameraPose, d_azimuth_deg: float, d_polar_deg: float) -> CameraPose:
    azimuth = (reference.azimuth_deg + d_azimuth_deg) % 360.0
    polar = reference.polar_deg + d_polar_deg
    if not (0.0 < polar < 180.0):
        raise DegeneratePoleError(f"relative polar {polar} deg leaves (0, 180)")
    return CameraPose(azimuth, polar, reference.radius)


def turntable(start: CameraPose, n_frames: int) -> list[CameraPose]:
    """Full 360-degree orbit at fixed polar angle and radius."""
    if n_frames < 1:
        raise ValueError(f"n_frames must be >= 1, got {n_frames}")
    step = 360.0 / n_frames
    return [relative_pose(start, k * step, 0.0) for k in range(n_frames)]
