"""Post-processing of attention maps.

Threshold masks and ROI filtering, marching-squares contour bands, per-channel
color intensity histograms of the kept region, and pairwise similarity
matrices over a list of attention maps (L1, MSE, SSIM, average hash).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.ndimage as ndi
import torch
import torch.nn.functional as F
from skimage import measure

from .errors import EmptyInputError, ShapeMismatchError, ValidationError

DEFAULT_CONTOUR_LEVELS = (0.2, 0.4, 0.6, 0.8)
DEFAULT_THRESHOLD = 0.5

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2
HASH_SIZE = 8


class Measure(str, Enum):
    L1 = "l1"
    MSE = "mse"
    SSIM = "ssim"
    HASH = "hash"


def _as_map(attention) -> np.ndarray:
    values = getattr(attention, "values", attention)
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"attention map must be 2D, got shape {arr.shape}")
    return arr


def resize_bilinear(arr: np.ndarray, out_hw: tuple[int, int]) -> np.ndarray:
    """Bilinear resampling shared by every map-resizing code path."""
    a = np.asarray(arr, dtype=np.float64)
    if a.shape == tuple(out_hw):
        return a.copy()
    t = torch.from_numpy(a)[None, None]
    out = F.interpolate(t, size=tuple(out_hw), mode="bilinear", align_corners=False)
    return out[0, 0].numpy()


def _clamp_threshold(t: float) -> float:
    if t < 0.0 or t > 1.0:
        warnings.warn(f"threshold {t} outside [0, 1]; clamping", stacklevel=3)
        return min(max(t, 0.0), 1.0)
    return float(t)


def threshold_mask(attention, t: float) -> np.ndarray:
    """Binary H x W mask: 1 where attention >= t."""
    arr = _as_map(attention)
    t = _clamp_threshold(t)
    return (arr >= t).astype(np.uint8)


@dataclass
class ContourSet:
    """Iso-contours per attention level, in (x, y) image pixel coordinates."""

    level_values: list[float]
    polylines: list[list[np.ndarray]]  # per level, list of (n, 2) arrays
    threshold: float

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "levels": [
                {
                    "level": lv,
                    "paths": [[[float(x), float(y)] for x, y in path] for path in paths],
                }
                for lv, paths in zip(self.level_values, self.polylines)
            ],
        }


def contour_bands(attention, levels=DEFAULT_CONTOUR_LEVELS, threshold: float = 0.0) -> ContourSet:
    """Marching-squares iso-contours at each level at or above the threshold.

    Crossing positions are linearly interpolated along cell edges. A level
    that intersects nothing yields an empty path list for that level.
    """
    arr = _as_map(attention)
    levels = [float(lv) for lv in levels]
    if any(not 0.0 < lv <= 1.0 for lv in levels):
        raise ValidationError(f"contour levels must lie in (0, 1], got {levels}")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValidationError(f"contour levels must be strictly ascending, got {levels}")
    threshold = _clamp_threshold(threshold)
    kept = [lv for lv in levels if lv >= threshold]
    polylines = []
    for lv in kept:
        paths = []
        for contour in measure.find_contours(arr, lv):
            # find_contours yields (row, col); emit (x, y) for rendering
            paths.append(np.stack([contour[:, 1], contour[:, 0]], axis=1))
        polylines.append(paths)
    return ContourSet(level_values=kept, polylines=polylines, threshold=threshold)


def polygon_area(path: np.ndarray) -> float:
    """Absolute shoelace area of a closed polyline."""
    x, y = path[:, 0], path[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def roi_filter(image: np.ndarray, attention, t: float) -> np.ndarray:
    """Copy of the image with pixels below the attention threshold set to black."""
    img = np.asarray(image)
    arr = _as_map(attention)
    if img.shape[:2] != arr.shape:
        raise ShapeMismatchError(f"image {img.shape[:2]} vs attention {arr.shape}")
    mask = threshold_mask(arr, t).astype(bool)
    out = img.copy()
    out[~mask] = 0
    return out


@dataclass
class ColorIntensityHistogram:
    """Per-channel 256-bin intensity counts over the kept (ROI) pixels only.

    Removed pixels are excluded outright rather than counted as black, so the
    histogram has no spurious spike at intensity 0.
    """

    bins: np.ndarray  # (3, 256) int64
    kept_pixels: int
    threshold_used: float
    empty_roi: bool = False

    def to_dict(self) -> dict:
        return {
            "bins": self.bins.tolist(),
            "kept_pixels": self.kept_pixels,
            "threshold_used": self.threshold_used,
            "empty_roi": self.empty_roi,
        }


def color_intensity_histogram(image: np.ndarray, mask: np.ndarray, threshold_used: float = DEFAULT_THRESHOLD) -> ColorIntensityHistogram:
    img = np.asarray(image)
    m = np.asarray(mask).astype(bool)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeMismatchError(f"expected an H x W x 3 image, got shape {img.shape}")
    if img.shape[:2] != m.shape:
        raise ShapeMismatchError(f"image {img.shape[:2]} vs mask {m.shape}")
    kept = int(m.sum())
    bins = np.zeros((3, 256), dtype=np.int64)
    if kept:
        pixels = img[m].astype(np.int64)  # (kept, 3)
        for ch in range(3):
            bins[ch] = np.bincount(pixels[:, ch], minlength=256)[:256]
    return ColorIntensityHistogram(
        bins=bins, kept_pixels=kept, threshold_used=float(threshold_used), empty_roi=kept == 0
    )


# --- similarity measures -------------------------------------------------


def similarity_l1(a: np.ndarray, b: np.ndarray) -> float:
    return float(1.0 - np.abs(a - b).mean())


def similarity_mse(a: np.ndarray, b: np.ndarray) -> float:
    return float(1.0 - ((a - b) ** 2).mean())


def similarity_ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Structural similarity with a Gaussian window and dynamic range 1.

    Standard stabilizers c1 = 0.01^2, c2 = 0.03^2; the window is 11 x 11
    (shrunk to the largest odd size that fits small maps). The per-pixel
    map is cropped by the window radius before averaging.
    """
    if a.shape != b.shape:
        raise ShapeMismatchError(f"ssim inputs differ in shape: {a.shape} vs {b.shape}")
    win = min(SSIM_WINDOW, *a.shape)
    if win % 2 == 0:
        win -= 1
    if win < 3:
        raise ValidationError(f"maps of shape {a.shape} are too small for SSIM")
    radius = (win - 1) // 2
    truncate = radius / SSIM_SIGMA
    blur = lambda im: ndi.gaussian_filter(im, SSIM_SIGMA, truncate=truncate)
    ua, ub = blur(a), blur(b)
    uaa, ubb, uab = blur(a * a), blur(b * b), blur(a * b)
    va = uaa - ua * ua
    vb = ubb - ub * ub
    cab = uab - ua * ub
    s = ((2 * ua * ub + SSIM_C1) * (2 * cab + SSIM_C2)) / (
        (ua**2 + ub**2 + SSIM_C1) * (va + vb + SSIM_C2)
    )
    core = s[radius:-radius, radius:-radius] if radius else s
    return float(core.mean())


def average_hash(arr: np.ndarray, hash_size: int = HASH_SIZE) -> np.ndarray:
    """Mean-threshold fingerprint: resample to 8 x 8, bit = pixel > mean."""
    small = resize_bilinear(arr, (hash_size, hash_size))
    return (small > small.mean()).reshape(-1)


def similarity_hash(a: np.ndarray, b: np.ndarray) -> float:
    ha, hb = average_hash(a), average_hash(b)
    hamming = int(np.count_nonzero(ha != hb))
    return float(1.0 - hamming / ha.size)


_MEASURE_FUNCS = {
    Measure.L1: similarity_l1,
    Measure.MSE: similarity_mse,
    Measure.SSIM: similarity_ssim,
    Measure.HASH: similarity_hash,
}


@dataclass
class SimilarityMatrix:
    values: np.ndarray  # (L, L)
    measure: Measure
    result_refs: list[str]

    def to_dict(self) -> dict:
        return {
            "measure": self.measure.value,
            "labels": list(self.result_refs),
            "values": [[float(v) for v in row] for row in self.values],
        }


def similarity_matrix(exp_results, measure: Measure | str = Measure.L1, labels=None) -> SimilarityMatrix:
    """Pairwise similarity of attention maps under the chosen measure.

    Maps of differing shapes are first upsampled to the largest height and
    width present. Every similarity function here is symmetric, so the upper
    triangle is computed once and mirrored; the diagonal is still computed
    honestly through the measure itself.
    """
    measure = Measure(measure)
    if len(exp_results) == 0:
        raise EmptyInputError("similarity_matrix needs at least one attention map")
    maps = [_as_map(r) for r in exp_results]
    target = (max(m.shape[0] for m in maps), max(m.shape[1] for m in maps))
    maps = [resize_bilinear(m, target) if m.shape != target else m for m in maps]
    if any(m.shape != target for m in maps):
        raise ShapeMismatchError("maps still differ in shape after resampling")
    if labels is None:
        labels = []
        for i, r in enumerate(exp_results):
            model_id = getattr(r, "model_id", None)
            labels.append(model_id if model_id else str(i))
    func = _MEASURE_FUNCS[measure]
    n = len(maps)
    values = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i, n):
            v = func(maps[i], maps[j])
            values[i, j] = v
            values[j, i] = v
    return SimilarityMatrix(values=values, measure=measure, result_refs=list(labels))
