"""Score-weighted class activation maps (forward passes only, no gradients)."""

from __future__ import annotations

import torch
import torch.nn.functional as F

from ..registry import LoadedModel
from ._capture import forward_with_activations
from .types import AttentionMatrix, Method, normalize_map, params_digest

DEFAULT_BATCH = 16


def channel_masks(acts: torch.Tensor, out_hw: tuple[int, int]) -> torch.Tensor:
    """Per-channel masks: activation maps upsampled to the input size and
    min-max normalized into [0, 1]. A flat channel yields an all-zero mask."""
    up = F.interpolate(acts[None], size=out_hw, mode="bilinear", align_corners=False)[0]
    k = up.shape[0]
    flat = up.reshape(k, -1)
    lo = flat.min(dim=1).values[:, None, None]
    hi = flat.max(dim=1).values[:, None, None]
    span = hi - lo
    masks = torch.where(span > 0, (up - lo) / torch.where(span > 0, span, torch.ones_like(span)),
                        torch.zeros_like(up))
    return masks


def masked_scores(model: LoadedModel, x: torch.Tensor, masks: torch.Tensor,
                  target_class: int, batch: int = DEFAULT_BATCH) -> torch.Tensor:
    """Target-class softmax score of the input masked by each mask."""
    scores = []
    with torch.no_grad():
        for start in range(0, masks.shape[0], batch):
            chunk = masks[start : start + batch]
            masked = x * chunk[:, None, :, :]
            logits = model.module(masked)
            probs = torch.softmax(logits, dim=1)
            scores.append(probs[:, target_class])
    return torch.cat(scores)


def score_cam_from_tensor(model: LoadedModel, x: torch.Tensor, target_class: int,
                          image_ref: str = "", batch: int = DEFAULT_BATCH) -> AttentionMatrix:
    _, acts = forward_with_activations(model, x, grad=False)
    acts = acts[0]
    out_hw = x.shape[-2:]
    masks = channel_masks(acts, out_hw)
    weights = masked_scores(model, x, masks, target_class, batch)
    raw = F.relu((weights[:, None, None] * acts).sum(dim=0))
    up = F.interpolate(raw[None, None], size=out_hw, mode="bilinear", align_corners=False)
    values, degenerate = normalize_map(up[0, 0].cpu().numpy())
    return AttentionMatrix(
        values=values,
        image_ref=image_ref,
        model_id=model.model_id,
        method=Method.SCORE_CAM,
        target_class=target_class,
        params_digest=params_digest({}),
        degenerate=degenerate,
    )


def score_cam(model: LoadedModel, image, target_class: int, image_ref: str = "",
              batch: int = DEFAULT_BATCH) -> AttentionMatrix:
    """Each channel's weight is the target-class softmax score of the input
    masked by that channel's upsampled, normalized activation map; the map is
    the ReLU of the weighted activation sum."""
    return score_cam_from_tensor(model, model.preprocess(image), target_class, image_ref, batch)
