"""Class-discriminative visual explanation methods."""

from .bbmp import BbmpConfig, bbmp, bbmp_from_tensor, optimize_mask
from .dispatch import explain
from .gradcam import (
    grad_cam,
    grad_cam_from_tensor,
    grad_cam_pp,
    grad_cam_pp_from_tensor,
    smooth_grad_cam_pp,
    smooth_grad_cam_pp_from_tensor,
)
from .scorecam import score_cam, score_cam_from_tensor
from .types import AttentionMatrix, ExplanationResult, Method, normalize_map, params_digest

__all__ = [
    "AttentionMatrix",
    "BbmpConfig",
    "ExplanationResult",
    "Method",
    "bbmp",
    "bbmp_from_tensor",
    "explain",
    "grad_cam",
    "grad_cam_from_tensor",
    "grad_cam_pp",
    "grad_cam_pp_from_tensor",
    "normalize_map",
    "optimize_mask",
    "params_digest",
    "score_cam",
    "score_cam_from_tensor",
    "smooth_grad_cam_pp",
    "smooth_grad_cam_pp_from_tensor",
]
