"""PNG image IO and small image helpers shared across modules.

Images are float arrays in [0, 1], stored H x W x C (C = 3 or 4) on disk
as 8-bit PNG. Network code uses channel-first tensors; conversion helpers
live here so the convention is defined once.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import torch
from PIL import Image


def save_png(path, image: np.ndarray) -> None:
    """Save a float [0,1] H x W x {3,4} image as 8-bit PNG."""
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] not in (3, 4):
        raise ValueError(f"expected HxWx3 or HxWx4 image, got shape {img.shape}")
    data = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    mode = "RGBA" if img.shape[2] == 4 else "RGB"
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(data, mode=mode).save(path)


def load_png(path) -> np.ndarray:
    """Load a PNG as float32 [0,1], H x W x C with C preserved (3 or 4)."""
    with Image.open(path) as im:
        if im.mode not in ("RGB", "RGBA"):
            im = im.convert("RGBA")
        arr = np.asarray(im, dtype=np.float32) / 255.0
    return arr


def to_chw(image: np.ndarray) -> torch.Tensor:
    """H x W x C float array -> C x H x W float32 tensor."""
    return torch.from_numpy(np.ascontiguousarray(np.moveaxis(image, -1, 0))).float()


def to_hwc(tensor: torch.Tensor) -> np.ndarray:
    """C x H x W tensor -> H x W x C float32 array."""
    return np.moveaxis(tensor.detach().cpu().numpy(), 0, -1).astype(np.float32)


def downsample_avg(tensor: torch.Tensor, factor: int) -> torch.Tensor:
    """Average-pool the trailing two spatial dims by an integer factor."""
    if factor == 1:
        return tensor
    lead = tensor.shape[:-2]
    h, w = tensor.shape[-2:]
    if h % factor or w % factor:
        raise ValueError(f"spatial dims {h}x{w} not divisible by {factor}")
    x = tensor.reshape(-1, 1, h, w)
    x = torch.nn.functional.avg_pool2d(x, factor)
    return x.reshape(*lead, h // factor, w // factor)


def psnr(a, b, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB between two images/arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)
