"""Classifier registry: manifest loading, uniform inference, model stats.

The registry manifest is a JSON array of entries::

    {"model_id": "resnet50", "display_name": "ResNet-50",
     "weights_uri": "weights/resnet50.pt", "target_layer": "layer4.2",
     "input_size": [224, 224],
     "preprocess": {"resize": "bilinear", "mean": [...], "std": [...]}}

``weights_uri`` is either a path to a module serialized with ``torch.save``
or ``torchvision://<name>`` for a pretrained torchvision classifier.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import torch
from PIL import Image

from .errors import (
    DuplicateModelIdError,
    EmptyDatasetError,
    MissingFileError,
    ModelNotLoadedError,
    UndecodableImageError,
    UnresolvableTargetLayerError,
    ValidationError,
)

_RESIZE_MODES = {
    "bilinear": Image.BILINEAR,
    "bicubic": Image.BICUBIC,
    "nearest": Image.NEAREST,
    "lanczos": Image.LANCZOS,
}


@dataclass(frozen=True)
class Preprocess:
    resize: str = "bilinear"
    mean: tuple[float, float, float] = (0.0, 0.0, 0.0)
    std: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.resize not in _RESIZE_MODES:
            raise ValidationError(f"unknown resize mode {self.resize!r}", detail=sorted(_RESIZE_MODES))
        if any(s == 0 for s in self.std):
            raise ValidationError("preprocess std must be non-zero")


@dataclass(frozen=True)
class ModelRecord:
    model_id: str
    display_name: str
    weights_uri: str
    target_layer: str
    input_size: tuple[int, int]  # (height, width)
    preprocess: Preprocess = field(default_factory=Preprocess)
    param_count: int = 0  # filled once weights are loaded

    @classmethod
    def from_dict(cls, d: dict) -> "ModelRecord":
        pp = d.get("preprocess", {})
        h, w = d["input_size"]
        return cls(
            model_id=d["model_id"],
            display_name=d.get("display_name", d["model_id"]),
            weights_uri=d["weights_uri"],
            target_layer=d["target_layer"],
            input_size=(int(h), int(w)),
            preprocess=Preprocess(
                resize=pp.get("resize", "bilinear"),
                mean=tuple(pp.get("mean", (0.0, 0.0, 0.0))),
                std=tuple(pp.get("std", (1.0, 1.0, 1.0))),
            ),
        )


def load_registry(manifest_path: str | Path) -> list[ModelRecord]:
    """Parse the registry manifest. Does not load any weights."""
    path = Path(manifest_path)
    if not path.is_file():
        raise MissingFileError(f"registry manifest not found: {path}")
    entries = json.loads(path.read_text())
    records = []
    seen = set()
    for entry in entries:
        rec = ModelRecord.from_dict(entry)
        if rec.model_id in seen:
            raise DuplicateModelIdError(f"duplicate model_id {rec.model_id!r} in manifest")
        seen.add(rec.model_id)
        records.append(rec)
    return records


def _build_from_uri(uri: str, base_dir: Path | None) -> torch.nn.Module:
    if uri.startswith("torchvision://"):
        name = uri[len("torchvision://") :]
        from torchvision import models as tv_models

        try:
            builder = tv_models.get_model_builder(name)
        except ValueError as e:
            raise MissingFileError(f"unknown torchvision model {name!r}") from e
        return builder(weights="DEFAULT")
    path = Path(uri)
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    if not path.is_file():
        raise MissingFileError(f"weights file not found: {path}")
    obj = torch.load(path, map_location="cpu", weights_only=False)
    if not isinstance(obj, torch.nn.Module):
        raise ValidationError(f"{path} does not contain a serialized torch module")
    return obj


class LoadedModel:
    """A ModelRecord with its weights in memory, ready for inference.

    Immutable after load; ``predict`` is safe from concurrent threads.
    ``grad_lock`` serializes gradient-based explanation calls per model.
    """

    def __init__(self, record: ModelRecord, module: torch.nn.Module):
        module.eval()
        for p in module.parameters():
            p.requires_grad_(True)
        self.module = module
        self.grad_lock = threading.Lock()
        n_params = sum(p.numel() for p in module.parameters() if p.requires_grad)
        try:
            self.target_layer = module.get_submodule(record.target_layer)
        except AttributeError as e:
            raise UnresolvableTargetLayerError(
                f"target layer {record.target_layer!r} not found in model {record.model_id!r}"
            ) from e
        self.record = ModelRecord(
            model_id=record.model_id,
            display_name=record.display_name,
            weights_uri=record.weights_uri,
            target_layer=record.target_layer,
            input_size=record.input_size,
            preprocess=record.preprocess,
            param_count=n_params,
        )

    @classmethod
    def load(cls, record: ModelRecord, base_dir: str | Path | None = None) -> "LoadedModel":
        module = _build_from_uri(record.weights_uri, Path(base_dir) if base_dir else None)
        return cls(record, module)

    @property
    def model_id(self) -> str:
        return self.record.model_id

    def preprocess(self, image) -> torch.Tensor:
        """Decode + resize + normalize into a (1, 3, H, W) float tensor."""
        pil = decode_image(image)
        h, w = self.record.input_size
        mode = _RESIZE_MODES[self.record.preprocess.resize]
        pil = pil.resize((w, h), mode)
        arr = np.asarray(pil, dtype=np.float32) / 255.0
        mean = np.asarray(self.record.preprocess.mean, dtype=np.float32)
        std = np.asarray(self.record.preprocess.std, dtype=np.float32)
        arr = (arr - mean) / std
        x = torch.from_numpy(arr.transpose(2, 0, 1)).unsqueeze(0)
        dtype = next(self.module.parameters()).dtype
        return x.to(dtype)

    def forward_logits(self, x: torch.Tensor) -> torch.Tensor:
        with torch.no_grad():
            return self.module(x)


def decode_image(image) -> Image.Image:
    """Accepts a path, bytes, ndarray, or PIL image; returns RGB PIL image."""
    try:
        if isinstance(image, Image.Image):
            return image.convert("RGB")
        if isinstance(image, (str, Path)):
            with Image.open(image) as im:
                return im.convert("RGB")
        if isinstance(image, (bytes, bytearray)):
            import io

            with Image.open(io.BytesIO(image)) as im:
                return im.convert("RGB")
        if isinstance(image, np.ndarray):
            return Image.fromarray(image).convert("RGB")
    except (OSError, ValueError) as e:
        raise UndecodableImageError(f"cannot decode image: {e}") from e
    raise UndecodableImageError(f"unsupported image input type {type(image)!r}")


def stable_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; large logits must not overflow."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict(model: LoadedModel, image) -> np.ndarray:
    """Softmax confidence vector over the N classes for one image."""
    if not isinstance(model, LoadedModel):
        raise ModelNotLoadedError("predict requires a LoadedModel")
    x = model.preprocess(image)
    logits = model.forward_logits(x)[0].cpu().numpy()
    return stable_softmax(logits)


@dataclass
class BatchPrediction:
    """Confidence matrix over the images that predicted successfully.

    Rows follow dataset order; images that failed to decode are skipped and
    reported in ``failed`` so long runs are resumable rather than aborted.
    """

    matrix: np.ndarray  # (M, N)
    image_refs: list[str]
    failed: list[str]


def batch_predict(model: LoadedModel, dataset: Iterable[tuple[str, object]]) -> BatchPrediction:
    """Run predict over an ordered (image_ref, image) collection."""
    rows = []
    refs = []
    failed = []
    count = 0
    for ref, image in dataset:
        count += 1
        try:
            rows.append(predict(model, image))
            refs.append(ref)
        except UndecodableImageError:
            failed.append(ref)
    if count == 0:
        raise EmptyDatasetError("batch_predict called with an empty dataset")
    matrix = np.vstack(rows) if rows else np.zeros((0, 0))
    return BatchPrediction(matrix=matrix, image_refs=refs, failed=failed)


def complexity(model: LoadedModel) -> int:
    """Total trainable parameter count of the loaded weights."""
    if not isinstance(model, LoadedModel):
        raise ModelNotLoadedError("complexity requires a LoadedModel")
    return model.record.param_count


def load_all(records: Sequence[ModelRecord], base_dir: str | Path | None = None) -> dict[str, LoadedModel]:
    return {rec.model_id: LoadedModel.load(rec, base_dir) for rec in records}
