"""Gradient-weighted class activation maps and their smoothed variant."""

from __future__ import annotations

import torch
import torch.nn.functional as F

from ..registry import LoadedModel
from ._capture import score_and_gradient
from .types import AttentionMatrix, Method, normalize_map, params_digest

DENOM_EPS = 1e-8
DENOM_FLOOR = 1e-7

DEFAULT_N_SAMPLES = 25
DEFAULT_SIGMA_FRACTION = 0.1


def _finish(raw: torch.Tensor, out_hw: tuple[int, int], model: LoadedModel, method: Method,
            image_ref: str, target_class: int, digest: str) -> AttentionMatrix:
    """ReLU'd raw map -> bilinear upsample -> min-max normalize."""
    up = F.interpolate(raw[None, None], size=out_hw, mode="bilinear", align_corners=False)
    values, degenerate = normalize_map(up[0, 0].cpu().numpy())
    return AttentionMatrix(
        values=values,
        image_ref=image_ref,
        model_id=model.model_id,
        method=method,
        target_class=target_class,
        params_digest=digest,
        degenerate=degenerate,
    )


def grad_cam_weights(model: LoadedModel, x: torch.Tensor, target_class: int) -> tuple[torch.Tensor, torch.Tensor]:
    """Channel weights (spatially averaged score gradients) and activations."""
    _, grads, acts = score_and_gradient(model, x, target_class)
    return grads.mean(dim=(1, 2)), acts


def grad_cam_from_tensor(model: LoadedModel, x: torch.Tensor, target_class: int,
                         image_ref: str = "") -> AttentionMatrix:
    with model.grad_lock:
        weights, acts = grad_cam_weights(model, x, target_class)
    raw = F.relu((weights[:, None, None] * acts).sum(dim=0))
    return _finish(raw, x.shape[-2:], model, Method.GRAD_CAM, image_ref, target_class, params_digest({}))


def grad_cam(model: LoadedModel, image, target_class: int, image_ref: str = "") -> AttentionMatrix:
    """Class-discriminative map: ReLU of activation channels weighted by the
    spatial average of the class-score gradient, upsampled and normalized."""
    return grad_cam_from_tensor(model, model.preprocess(image), target_class, image_ref)


def gradcampp_terms(model: LoadedModel, x: torch.Tensor, target_class: int):
    """First-order gradient of the class logit plus its second and third
    power terms, and the activations.

    With the class response taken as exp(logit), the second and third
    derivatives with respect to an activation reduce to exp(logit) times the
    gradient squared and cubed; the exp factor cancels inside the coefficient
    ratio, so the powers are used directly.
    """
    _, grads, acts = score_and_gradient(model, x, target_class)
    return grads, grads * grads, grads * grads * grads, acts


def _combine_pp(g1: torch.Tensor, g2: torch.Tensor, g3: torch.Tensor, acts: torch.Tensor) -> torch.Tensor:
    # denominator per channel: 2*g2 + sum_ab(A_ab * g3); guarded against
    # vanishing on flat activations
    denom = 2.0 * g2 + (acts * g3).sum(dim=(1, 2), keepdim=True)
    denom = denom + DENOM_EPS
    alpha = torch.where(denom < DENOM_FLOOR, torch.zeros_like(denom), g2 / denom)
    weights = (alpha * F.relu(g1)).sum(dim=(1, 2))
    return F.relu((weights[:, None, None] * acts).sum(dim=0))


def grad_cam_pp_from_tensor(model: LoadedModel, x: torch.Tensor, target_class: int,
                            image_ref: str = "") -> AttentionMatrix:
    with model.grad_lock:
        g1, g2, g3, acts = gradcampp_terms(model, x, target_class)
    raw = _combine_pp(g1, g2, g3, acts)
    return _finish(raw, x.shape[-2:], model, Method.GRAD_CAM_PP, image_ref, target_class, params_digest({}))


def grad_cam_pp(model: LoadedModel, image, target_class: int, image_ref: str = "") -> AttentionMatrix:
    """Grad-CAM generalization with pixel-wise coefficients built from
    second- and third-order gradient terms."""
    return grad_cam_pp_from_tensor(model, model.preprocess(image), target_class, image_ref)


def smooth_grad_cam_pp_from_tensor(model: LoadedModel, x: torch.Tensor, target_class: int,
                                   n_samples: int = DEFAULT_N_SAMPLES, sigma: float | None = None,
                                   seed: int = 0, image_ref: str = "") -> AttentionMatrix:
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if sigma is None:
        sigma = DEFAULT_SIGMA_FRACTION * float(x.max() - x.min())
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    gen = torch.Generator().manual_seed(seed)
    sum_g1 = sum_g2 = sum_g3 = None
    with model.grad_lock:
        # activations of the clean input anchor the combination
        _, _, _, clean_acts = gradcampp_terms(model, x, target_class)
        for _ in range(n_samples):
            noise = sigma * torch.randn(x.shape, generator=gen, dtype=x.dtype)
            g1, g2, g3, _ = gradcampp_terms(model, x + noise, target_class)
            sum_g1 = g1 if sum_g1 is None else sum_g1 + g1
            sum_g2 = g2 if sum_g2 is None else sum_g2 + g2
            sum_g3 = g3 if sum_g3 is None else sum_g3 + g3
    raw = _combine_pp(sum_g1 / n_samples, sum_g2 / n_samples, sum_g3 / n_samples, clean_acts)
    digest = params_digest({"n_samples": n_samples, "sigma": sigma, "seed": seed})
    return _finish(raw, x.shape[-2:], model, Method.SMOOTH_GRAD_CAM_PP, image_ref, target_class, digest)


def smooth_grad_cam_pp(model: LoadedModel, image, target_class: int,
                       n_samples: int = DEFAULT_N_SAMPLES, sigma: float | None = None,
                       seed: int = 0, image_ref: str = "") -> AttentionMatrix:
    """Average the gradient terms over Gaussian-noised copies of the input
    before the coefficient combination. Deterministic for a fixed seed; with
    sigma 0 and one sample it reduces bitwise to grad_cam_pp."""
    return smooth_grad_cam_pp_from_tensor(
        model, model.preprocess(image), target_class, n_samples, sigma, seed, image_ref
    )
