"""PNG rendering of attention overlays, contour lines, and heatmaps."""

from __future__ import annotations

import io

import numpy as np
from matplotlib import colormaps
from PIL import Image, ImageDraw

from .saliency import ContourSet, resize_bilinear

OVERLAY_ALPHA = 0.5
HEATMAP_CMAP = "jet"


def _colorize(values: np.ndarray) -> np.ndarray:
    cmap = colormaps[HEATMAP_CMAP]
    rgba = cmap(np.clip(values, 0.0, 1.0))
    return (rgba[..., :3] * 255).astype(np.uint8)


def overlay_png(image: np.ndarray, attention: np.ndarray, contours: ContourSet | None = None,
                alpha: float = OVERLAY_ALPHA) -> bytes:
    """Heatmap blended over the image, with optional contour polylines."""
    img = np.asarray(image)
    att = np.asarray(attention, dtype=np.float64)
    if att.shape != img.shape[:2]:
        att = resize_bilinear(att, img.shape[:2])
    heat = _colorize(att)
    blended = ((1 - alpha) * img.astype(np.float64) + alpha * heat).astype(np.uint8)
    pil = Image.fromarray(blended)
    if contours is not None:
        draw = ImageDraw.Draw(pil)
        for level, paths in zip(contours.level_values, contours.polylines):
            shade = int(80 + 175 * level)
            for path in paths:
                if len(path) >= 2:
                    draw.line([(float(x), float(y)) for x, y in path],
                              fill=(shade, shade, shade), width=1)
    return _png_bytes(pil)


def heatmap_png(values: np.ndarray, scale: int = 16) -> bytes:
    """Standalone heatmap of a small matrix (similarity views)."""
    arr = np.asarray(values, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    norm = (arr - lo) / (hi - lo) if hi > lo else np.zeros_like(arr)
    rgb = _colorize(norm)
    pil = Image.fromarray(rgb).resize(
        (arr.shape[1] * scale, arr.shape[0] * scale), Image.NEAREST
    )
    return _png_bytes(pil)


def image_png(image: np.ndarray) -> bytes:
    return _png_bytes(Image.fromarray(np.asarray(image)))


def _png_bytes(pil: Image.Image) -> bytes:
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()
