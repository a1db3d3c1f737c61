"""Single entry point fanning out to the five explanation methods."""

from __future__ import annotations

import time

import numpy as np

from ..errors import UnknownMethodError
from ..registry import LoadedModel, stable_softmax
from .bbmp import BbmpConfig, bbmp_from_tensor
from .gradcam import (
    grad_cam_from_tensor,
    grad_cam_pp_from_tensor,
    smooth_grad_cam_pp_from_tensor,
)
from .scorecam import score_cam_from_tensor
from .types import ExplanationResult, Method


def explain(method: Method | str, model: LoadedModel, image, target_class: int,
            params: dict | None = None, ground_truth_class: int | None = None,
            image_ref: str = "") -> ExplanationResult:
    """Run one explanation method and bundle prediction facts alongside it.

    ``params`` carries method hyperparameters (ignored keys rejected);
    prediction fields come from a single softmax forward pass on the same
    preprocessed input the method sees.
    """
    try:
        method = Method(method)
    except ValueError as e:
        raise UnknownMethodError(f"unknown explanation method {method!r}",
                                 detail=[m.value for m in Method]) from e
    params = dict(params or {})
    x = model.preprocess(image)

    start = time.perf_counter()
    if method is Method.GRAD_CAM:
        attention = grad_cam_from_tensor(model, x, target_class, image_ref)
    elif method is Method.GRAD_CAM_PP:
        attention = grad_cam_pp_from_tensor(model, x, target_class, image_ref)
    elif method is Method.SMOOTH_GRAD_CAM_PP:
        attention = smooth_grad_cam_pp_from_tensor(
            model, x, target_class,
            n_samples=int(params.pop("n_samples", 25)),
            sigma=params.pop("sigma", None),
            seed=int(params.pop("seed", 0)),
            image_ref=image_ref,
        )
    elif method is Method.SCORE_CAM:
        attention = score_cam_from_tensor(model, x, target_class, image_ref,
                                          batch=int(params.pop("batch", 16)))
    elif method is Method.BBMP:
        if "mask_size" in params:
            params["mask_size"] = tuple(params["mask_size"])
        try:
            cfg = BbmpConfig(**params)
        except TypeError as e:
            raise UnknownMethodError(f"bad bbmp parameters: {e}") from e
        params = {}
        attention = bbmp_from_tensor(model, x, target_class, cfg, image_ref)
    else:  # pragma: no cover - enum is exhaustive
        raise UnknownMethodError(f"unhandled method {method}")
    wall_time_ms = (time.perf_counter() - start) * 1000.0

    if params:
        raise UnknownMethodError(f"unsupported parameters for {method.value}: {sorted(params)}")

    confidences = stable_softmax(model.forward_logits(x)[0].cpu().numpy())
    predicted_class = int(np.argmax(confidences))
    gt = target_class if ground_truth_class is None else int(ground_truth_class)
    return ExplanationResult(
        attention=attention,
        predicted_class=predicted_class,
        predicted_confidence=float(confidences[predicted_class]),
        ground_truth_class=gt,
        correct=predicted_class == gt,
        wall_time_ms=wall_time_ms,
    )
