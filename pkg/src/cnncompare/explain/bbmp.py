"""Saliency by learned deletion masks.

A low-resolution mask is optimized so that blending the input toward a
perturbed reference wherever the mask is low drives down the target-class
score, under L1 and total-variation regularization that keeps the deleted
region small and smooth. High attention marks the most deletion-sensitive
pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi
import torch
import torch.nn.functional as F

from ..errors import NonFiniteLossError, ValidationError
from ..registry import LoadedModel
from .types import AttentionMatrix, Method, normalize_map, params_digest


@dataclass(frozen=True)
class BbmpConfig:
    iterations: int = 150
    lr: float = 0.1
    l1_coeff: float = 0.01
    tv_coeff: float = 0.2
    tv_beta: float = 3.0
    mask_size: tuple[int, int] = (28, 28)
    perturb: str = "blur"  # blur | mean | zero
    blur_sigma: float = 10.0
    mask_init: float = 0.5

    def to_params(self) -> dict:
        return {
            "iterations": self.iterations,
            "lr": self.lr,
            "l1_coeff": self.l1_coeff,
            "tv_coeff": self.tv_coeff,
            "tv_beta": self.tv_beta,
            "mask_size": list(self.mask_size),
            "perturb": self.perturb,
            "blur_sigma": self.blur_sigma,
            "mask_init": self.mask_init,
        }


def perturb_reference(x: torch.Tensor, mode: str, blur_sigma: float) -> torch.Tensor:
    """The 'deleted' stand-in image: blurred by default, configurable."""
    if mode == "blur":
        arr = x.cpu().numpy()
        blurred = ndi.gaussian_filter(arr, sigma=(0, 0, blur_sigma, blur_sigma))
        return torch.from_numpy(blurred).to(x.dtype)
    if mode == "mean":
        return torch.ones_like(x) * x.mean(dim=(2, 3), keepdim=True)
    if mode == "zero":
        return torch.zeros_like(x)
    raise ValidationError(f"unknown perturbation mode {mode!r}")


def tv_penalty(mask: torch.Tensor, beta: float) -> torch.Tensor:
    row = (mask[1:, :] - mask[:-1, :]).abs().pow(beta).mean()
    col = (mask[:, 1:] - mask[:, :-1]).abs().pow(beta).mean()
    return row + col


def mask_loss(model: LoadedModel, x: torch.Tensor, reference: torch.Tensor,
              mask: torch.Tensor, target_class: int, cfg: BbmpConfig) -> torch.Tensor:
    up = F.interpolate(mask[None, None], size=x.shape[-2:], mode="bilinear", align_corners=False)
    perturbed = x * up + reference * (1.0 - up)
    logits = model.module(perturbed)
    score = torch.softmax(logits, dim=1)[0, target_class]
    return (
        cfg.l1_coeff * (1.0 - mask).abs().mean()
        + cfg.tv_coeff * tv_penalty(mask, cfg.tv_beta)
        + score
    )


def optimize_mask(model: LoadedModel, x: torch.Tensor, target_class: int,
                  cfg: BbmpConfig, reference: torch.Tensor | None = None) -> np.ndarray:
    """Projected gradient descent on the low-resolution mask.

    Each step takes a plain SGD update and clamps the mask back into [0, 1].
    Raises NonFiniteLoss with the failing iteration index if the loss leaves
    the finite range.
    """
    if cfg.iterations < 1:
        raise ValidationError(f"iterations must be >= 1, got {cfg.iterations}")
    if min(cfg.l1_coeff, cfg.tv_coeff) < 0:
        raise ValidationError("regularizer coefficients must be >= 0")
    if reference is None:
        reference = perturb_reference(x, cfg.perturb, cfg.blur_sigma)
    mask = torch.full(cfg.mask_size, cfg.mask_init, dtype=x.dtype, requires_grad=True)
    with model.grad_lock:
        for it in range(cfg.iterations):
            loss = mask_loss(model, x, reference, mask, target_class, cfg)
            if not math.isfinite(float(loss.detach())):
                raise NonFiniteLossError(f"non-finite loss at iteration {it}", iteration=it)
            (grad,) = torch.autograd.grad(loss, mask)
            with torch.no_grad():
                mask = (mask - cfg.lr * grad).clamp_(0.0, 1.0)
            mask.requires_grad_(True)
    return mask.detach().cpu().numpy()


def bbmp_from_tensor(model: LoadedModel, x: torch.Tensor, target_class: int,
                     cfg: BbmpConfig = BbmpConfig(), image_ref: str = "",
                     reference: torch.Tensor | None = None) -> AttentionMatrix:
    mask = optimize_mask(model, x, target_class, cfg, reference)
    up = F.interpolate(
        torch.from_numpy(mask)[None, None].to(x.dtype),
        size=x.shape[-2:], mode="bilinear", align_corners=False,
    )[0, 0].cpu().numpy()
    values, degenerate = normalize_map(1.0 - up)
    return AttentionMatrix(
        values=values,
        image_ref=image_ref,
        model_id=model.model_id,
        method=Method.BBMP,
        target_class=target_class,
        params_digest=params_digest(cfg.to_params()),
        degenerate=degenerate,
    )


def bbmp(model: LoadedModel, image, target_class: int, cfg: BbmpConfig = BbmpConfig(),
         image_ref: str = "") -> AttentionMatrix:
    """Attention is 1 minus the upsampled learned mask, mapped into [0, 1]."""
    return bbmp_from_tensor(model, model.preprocess(image), target_class, cfg, image_ref)
