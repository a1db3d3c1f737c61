"""Data types shared by the explanation methods."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Method(str, Enum):
    GRAD_CAM = "grad_cam"
    BBMP = "bbmp"
    GRAD_CAM_PP = "grad_cam_pp"
    SMOOTH_GRAD_CAM_PP = "smooth_grad_cam_pp"
    SCORE_CAM = "score_cam"


def params_digest(params: dict) -> str:
    """Stable hash of method hyperparameters (order-independent)."""
    blob = json.dumps(params, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class AttentionMatrix:
    """H x W saliency values in [0, 1]; 0 means no attention.

    Unless the raw map was degenerate (no positive response anywhere), the
    maximum after normalization is exactly 1.
    """

    values: np.ndarray
    image_ref: str = ""
    model_id: str = ""
    method: Method = Method.GRAD_CAM
    target_class: int = -1
    params_digest: str = ""
    degenerate: bool = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass
class ExplanationResult:
    attention: AttentionMatrix
    predicted_class: int
    predicted_confidence: float
    ground_truth_class: int
    correct: bool
    wall_time_ms: float


def normalize_map(raw: np.ndarray) -> tuple[np.ndarray, bool]:
    """(raw - min) / (max - min) when max > min; otherwise an all-zero map
    with the degenerate flag set."""
    raw = np.asarray(raw, dtype=np.float64)
    lo = float(raw.min())
    hi = float(raw.max())
    if hi > lo:
        return (raw - lo) / (hi - lo), False
    return np.zeros_like(raw), True
