"""Differentiable volumetric rendering with two-pass hierarchical sampling.

All per-pixel randomness comes from a counter-based hash of (seed, stream,
absolute pixel index, sample index), so renders are pure functions of their
arguments, independent of batching, and a patch render is bit-identical to
the corresponding crop of a full render.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .camera import CameraPose, Intrinsics, generate_rays
from .rng import hash_uniform
from .triplane import FieldDecoder, Triplane, field_fn

DEPTH_ALPHA_FLOOR = 1e-8  # expected-depth guard on empty pixels
RESAMPLE_WEIGHT_FLOOR = 1e-5


@dataclass
class RenderConfig:
    n_coarse: int = 48
    n_fine: int = 48
    background: tuple[float, float, float] = (1.0, 1.0, 1.0)
    raw_resolution: int = 64  # resolution of the raw pass in the training pipeline
    near: float | None = None  # None: pose-derived bounds hugging the content box
    far: float | None = None

    def __post_init__(self):
        if self.n_coarse < 2:
            raise ValueError(f"n_coarse must be >= 2, got {self.n_coarse}")
        if self.n_fine < 0:
            raise ValueError(f"n_fine must be >= 0, got {self.n_fine}")


@dataclass
class RenderOutput:
    rgb: torch.Tensor  # (H, W, 3) in [0, 1]
    alpha: torch.Tensor  # (H, W) in [0, 1]
    depth: torch.Tensor  # (H, W) expected depth, world units


def composite(
    rgbs: torch.Tensor,
    sigmas: torch.Tensor,
    deltas: torch.Tensor,
    background: torch.Tensor | tuple = (1.0, 1.0, 1.0),
    ts: torch.Tensor | None = None,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Classic emission-absorption compositing along rays.

    rgbs: (..., K, 3); sigmas, deltas: (..., K).  alpha_i = 1 - exp(-sigma_i
    * delta_i), transmittance T_i is the product of (1 - alpha_j) for j < i,
    and the pixel is sum(T_i alpha_i c_i) + T_final * background.  `ts`
    (sample depths) defaults to segment midpoints measured from the ray start.
    Returns (rgb (..., 3), alpha (...), depth (...)).
    """
    if (sigmas < 0).any():
        raise ValueError("sigmas must be nonnegative")
    if (deltas <= 0).any():
        raise ValueError("deltas must be positive")
    if ts is None:
        ts = torch.cumsum(deltas, dim=-1) - deltas / 2

    alphas = 1.0 - torch.exp(-sigmas * deltas)  # (..., K)
    keep = torch.cumprod(1.0 - alphas, dim=-1)
    trans = torch.cat([torch.ones_like(keep[..., :1]), keep[..., :-1]], dim=-1)
    weights = trans * alphas
    trans_final = keep[..., -1]

    bg = torch.as_tensor(background, dtype=rgbs.dtype, device=rgbs.device)
    rgb = (weights.unsqueeze(-1) * rgbs).sum(dim=-2) + trans_final.unsqueeze(-1) * bg
    alpha = 1.0 - trans_final
    depth = (weights * ts).sum(dim=-1) / alpha.clamp_min(DEPTH_ALPHA_FLOOR)
    return rgb, alpha, depth


def compositing_weights(sigmas: torch.Tensor, deltas: torch.Tensor) -> torch.Tensor:
    """Per-sample weights T_i * alpha_i (used for importance resampling)."""
    alphas = 1.0 - torch.exp(-sigmas * deltas)
    keep = torch.cumprod(1.0 - alphas, dim=-1)
    trans = torch.cat([torch.ones_like(keep[..., :1]), keep[..., :-1]], dim=-1)
    return trans * alphas


def hierarchical_resample(
    coarse_ts: torch.Tensor,
    coarse_weights: torch.Tensor,
    n_fine: int,
    seed: int,
    stream_ids: np.ndarray | None = None,
) -> torch.Tensor:
    """Inverse-CDF draw of fine depths from the coarse weight distribution.

    Each coarse sample owns a bin centered on it (edges at midpoints, end
    bins extended by half a gap).  Bin mass is its weight plus a uniform
    floor, so all-zero weights degrade to uniform stratified sampling.
    Deterministic given (seed, stream_ids); returns sorted (..., n_fine).
    """
    if (coarse_weights < 0).any():
        raise ValueError("weights must be nonnegative")
    lead = coarse_ts.shape[:-1]
    k = coarse_ts.shape[-1]
    if k < 2:
        raise ValueError("need at least 2 coarse samples")
    ts = coarse_ts.reshape(-1, k)
    weights = coarse_weights.reshape(-1, k)
    rows = ts.shape[0]
    if stream_ids is None:
        stream_ids = np.arange(rows, dtype=np.int64)

    mids = (ts[:, 1:] + ts[:, :-1]) / 2
    first = ts[:, :1] - (ts[:, 1:2] - ts[:, :1]) / 2
    last = ts[:, -1:] + (ts[:, -1:] - ts[:, -2:-1]) / 2
    edges = torch.cat([first, mids, last], dim=1)  # (rows, k+1)

    masses = weights + RESAMPLE_WEIGHT_FLOOR
    cdf = torch.cumsum(masses, dim=1)
    cdf = cdf / cdf[:, -1:]  # last entry exactly 1

    jitter = hash_uniform(seed, "resample", stream_ids.reshape(-1, 1), np.arange(n_fine))
    u = (np.arange(n_fine) + jitter) / n_fine  # stratified in [0, 1)
    u = torch.from_numpy(u).to(dtype=ts.dtype, device=ts.device)

    idx = torch.searchsorted(cdf.detach(), u).clamp_(0, k - 1)
    cdf_pad = torch.cat([torch.zeros_like(cdf[:, :1]), cdf], dim=1)
    lo = torch.gather(cdf_pad, 1, idx)
    span = torch.gather(cdf, 1, idx) - lo
    edge_lo = torch.gather(edges, 1, idx)
    width = torch.gather(edges[:, 1:] - edges[:, :-1], 1, idx)
    fine = edge_lo + (u - lo) / span.clamp_min(1e-12) * width
    fine, _ = torch.sort(fine, dim=1)
    return fine.reshape(*lead, n_fine)


def render_field(
    fieldf,
    pose: CameraPose,
    intr: Intrinsics,
    cfg: RenderConfig,
    seed: int,
    patch: tuple[int, int, int] | None = None,
    dtype: torch.dtype = torch.float32,
) -> RenderOutput:
    """Render any field callable `points (B,3) -> (rgb (B,3), sigma (B,))`.

    `patch` = (row0, col0, size) renders just that crop of the full image,
    bit-identical to slicing a full render.
    """
    res = intr.resolution
    rays = generate_rays(pose, intr, near=cfg.near, far=cfg.far, dtype=dtype)
    origins = rays.origins.reshape(-1, 3)
    dirs = rays.directions.reshape(-1, 3)
    pixel_ids = np.arange(res * res, dtype=np.int64)

    if patch is not None:
        r0, c0, size = patch
        if r0 < 0 or c0 < 0 or r0 + size > res or c0 + size > res:
            raise ValueError(f"patch {patch} outside a {res}x{res} image")
        sel = (np.arange(r0, r0 + size)[:, None] * res + np.arange(c0, c0 + size)).reshape(-1)
        origins, dirs, pixel_ids = origins[sel], dirs[sel], pixel_ids[sel]
        out_hw = (size, size)
    else:
        out_hw = (res, res)

    n_px = origins.shape[0]
    k = cfg.n_coarse
    near, far = rays.near, rays.far
    span = far - near

    jitter = hash_uniform(seed, "coarse", pixel_ids.reshape(-1, 1), np.arange(k))
    ts = near + (np.arange(k) + jitter) / k * span
    ts = torch.from_numpy(ts).to(dtype)

    def query(depths: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        pts = origins.unsqueeze(1) + depths.unsqueeze(-1) * dirs.unsqueeze(1)
        rgb, sigma = fieldf(pts.reshape(-1, 3))
        return rgb.reshape(n_px, -1, 3), sigma.reshape(n_px, -1)

    rgb_c, sigma_c = query(ts)

    if cfg.n_fine > 0:
        deltas_c = torch.cat([ts[:, 1:] - ts[:, :-1], far - ts[:, -1:]], dim=1)
        weights = compositing_weights(sigma_c, deltas_c)
        ts_fine = hierarchical_resample(ts, weights, cfg.n_fine, seed, stream_ids=pixel_ids)
        rgb_f, sigma_f = query(ts_fine)

        ts_all = torch.cat([ts, ts_fine], dim=1)
        order = torch.argsort(ts_all, dim=1)
        ts_all = torch.gather(ts_all, 1, order)
        sigma_all = torch.gather(torch.cat([sigma_c, sigma_f], dim=1), 1, order)
        rgb_all = torch.gather(
            torch.cat([rgb_c, rgb_f], dim=1), 1, order.unsqueeze(-1).expand(-1, -1, 3)
        )
    else:
        ts_all, sigma_all, rgb_all = ts, sigma_c, rgb_c

    deltas = torch.cat([ts_all[:, 1:] - ts_all[:, :-1], far - ts_all[:, -1:]], dim=1)
    deltas = deltas.clamp_min(1e-12)  # guard exact ties / samples past far
    rgb, alpha, depth = composite(rgb_all, sigma_all, deltas, cfg.background, ts=ts_all)
    return RenderOutput(
        rgb=rgb.reshape(*out_hw, 3), alpha=alpha.reshape(out_hw), depth=depth.reshape(out_hw)
    )


def render(
    tp: Triplane,
    dec: FieldDecoder,
    pose: CameraPose,
    intr: Intrinsics,
    cfg: RenderConfig | None = None,
    seed: int = 0,
    dtype: torch.dtype = torch.float32,
) -> RenderOutput:
    """Full-frame render of a triplane field."""
    cfg = cfg or RenderConfig()
    return render_field(field_fn(tp, dec), pose, intr, cfg, seed, dtype=dtype)


def render_patch(
    tp: Triplane,
    dec: FieldDecoder,
    pose: CameraPose,
    intr: Intrinsics,
    patch_origin: tuple[int, int],
    patch_size: int = 64,
    cfg: RenderConfig | None = None,
    seed: int = 0,
    dtype: torch.dtype = torch.float32,
) -> RenderOutput:
    """Render one square patch; equals the same crop of the full render."""
    cfg = cfg or RenderConfig()
    patch = (patch_origin[0], patch_origin[1], patch_size)
    return render_field(field_fn(tp, dec), pose, intr, cfg, seed, patch=patch, dtype=dtype)
