"""Target-layer activation/gradient capture shared by the CAM methods."""

from __future__ import annotations

import torch

from ..errors import GradientUnavailableError
from ..registry import LoadedModel


class _Hold:
    __slots__ = ("tensor",)

    def __init__(self):
        self.tensor = None


def forward_with_activations(model: LoadedModel, x: torch.Tensor, grad: bool) -> tuple[torch.Tensor, torch.Tensor]:
    """Run a forward pass, returning (logits, target-layer activations).

    With ``grad=True`` the activation tensor stays attached to the graph so
    callers can differentiate the class score with respect to it.
    """
    hold = _Hold()

    def hook(_module, _inputs, output):
        hold.tensor = output

    handle = model.target_layer.register_forward_hook(hook)
    try:
        ctx = torch.enable_grad() if grad else torch.no_grad()
        with ctx:
            logits = model.module(x)
    finally:
        handle.remove()
    if hold.tensor is None:
        raise GradientUnavailableError(
            f"target layer {model.record.target_layer!r} produced no output"
        )
    acts = hold.tensor
    if acts.ndim != 4:
        raise GradientUnavailableError(
            f"target layer output has shape {tuple(acts.shape)}, expected (B, K, h, w)"
        )
    return logits, acts


def score_and_gradient(model: LoadedModel, x: torch.Tensor, target_class: int) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Pre-softmax class score, its gradient w.r.t. the target-layer
    activations, and the (detached) activations, for a single image."""
    logits, acts = forward_with_activations(model, x, grad=True)
    score = logits[0, target_class]
    try:
        (grads,) = torch.autograd.grad(score, acts)
    except RuntimeError as e:
        raise GradientUnavailableError(f"cannot differentiate class score: {e}") from e
    return score.detach(), grads[0].detach(), acts[0].detach()
