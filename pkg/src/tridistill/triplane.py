"""Triplane feature grids and the radiance/density decoder.

A triplane is three axis-aligned N x N feature grids (XY, XZ, YZ).  A 3D
point is normalized by the box extent, orthogonally projected onto each
plane, bilinearly interpolated, and the three feature vectors are summed.
Grid nodes sit at normalized coordinates -1 + 2*i/(N-1) (align-corners
convention); points outside the box contribute the zero feature vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .camera import BOX_EXTENT

# Which normalized-point components feed each plane: (XY, XZ, YZ).
_PLANE_AXES = ((0, 1), (0, 2), (1, 2))


@dataclass
class Triplane:
    planes: torch.Tensor  # (3, N, N, C)
    extent: float = BOX_EXTENT

    def __post_init__(self):
        if self.planes.ndim != 4 or self.planes.shape[0] != 3:
            raise ValueError(f"planes must be (3, N, N, C), got {tuple(self.planes.shape)}")
        if self.planes.shape[1] != self.planes.shape[2]:
            raise ValueError("plane grids must be square")
        if self.planes.shape[1] < 4 or self.planes.shape[3] < 4:
            raise ValueError("need N >= 4 and C >= 4")
        if self.extent <= 0:
            raise ValueError(f"extent must be positive, got {self.extent}")
        if not torch.isfinite(self.planes).all():
            raise ValueError("plane features must be finite")

    @property
    def resolution(self) -> int:
        return self.planes.shape[1]

    @property
    def channels(self) -> int:
        return self.planes.shape[3]


@dataclass
class FieldSample:
    """A batch of decoded field values."""

    rgb: torch.Tensor  # (B, 3) in [0, 1]
    sigma: torch.Tensor  # (B,) nonnegative


def sample_features(tp: Triplane, points: torch.Tensor) -> torch.Tensor:
    """Project points onto the three planes, bilinearly interpolate, and sum.

    points: (B, 3) world coordinates.  Returns (B, C); zero vectors outside
    the box.  Linear in the plane values.
    """
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError(f"points must be (B, 3), got {tuple(points.shape)}")
    if not torch.isfinite(points).all():
        raise ValueError("points must be finite")

    p = points / tp.extent  # normalized to [-1, 1]^3 inside the box
    inside = (p.abs() <= 1.0).all(dim=1)

    # grid_sample expects (N_planes, C, H, W) input; height indexes the first
    # plane axis, width the second, so grid = (second, first).
    grids = torch.stack(
        [torch.stack([p[:, b], p[:, a]], dim=-1) for a, b in _PLANE_AXES]
    )  # (3, B, 2)
    sampled = F.grid_sample(
        tp.planes.permute(0, 3, 1, 2),
        grids.unsqueeze(2),  # (3, B, 1, 2)
        mode="bilinear",
        padding_mode="zeros",
        align_corners=True,
    )  # (3, C, B, 1)
    features = sampled.squeeze(-1).sum(dim=0).transpose(0, 1)  # (B, C)
    return features * inside.unsqueeze(1).to(features.dtype)


class FieldDecoder(nn.Module):
    """Small MLP from aggregated plane features to (rgb, sigma).

    rgb is squashed to [0,1] by a logistic; sigma through softplus, so the
    all-zero decoder maps to rgb 0.5 and sigma ln(2).
    """

    def __init__(self, in_features: int = 16, hidden: tuple[int, ...] = (64, 64), seed: int = 0):
        super().__init__()
        self.in_features = in_features
        widths = (in_features, *hidden)
        self.layers = nn.ModuleList(
            nn.Linear(widths[i], widths[i + 1]) for i in range(len(hidden))
        )
        self.head = nn.Linear(widths[-1], 4)
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for layer in [*self.layers, self.head]:
                nn.init.normal_(layer.weight, std=layer.in_features ** -0.5, generator=gen)
                nn.init.zeros_(layer.bias)

    def forward(self, features: torch.Tensor) -> FieldSample:
        h = features
        for layer in self.layers:
            h = F.silu(layer(h))
        out = self.head(h)
        return FieldSample(rgb=torch.sigmoid(out[:, :3]), sigma=F.softplus(out[:, 3]))


def decode(dec: FieldDecoder, features: torch.Tensor) -> FieldSample:
    if not torch.isfinite(features).all():
        raise ValueError("features must be finite")
    return dec(features)


def query_field(tp: Triplane, dec: FieldDecoder, points: torch.Tensor) -> FieldSample:
    """decode(sample_features(...)) with empty space outside the box.

    Out-of-box points yield sigma 0 and rgb (0.5, 0.5, 0.5) exactly.
    """
    features = sample_features(tp, points)
    sample = dec(features)
    inside = (points.abs() <= tp.extent).all(dim=1).to(features.dtype)
    rgb = sample.rgb * inside.unsqueeze(1) + 0.5 * (1.0 - inside.unsqueeze(1))
    sigma = sample.sigma * inside
    return FieldSample(rgb=rgb, sigma=sigma)


def field_fn(tp: Triplane, dec: FieldDecoder):
    """Adapt (triplane, decoder) to the renderer's field callable protocol."""

    def field(points: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        sample = query_field(tp, dec, points)
        return sample.rgb, sample.sigma

    return field
