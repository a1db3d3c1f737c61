"""Exception hierarchy shared across the toolkit.

Every error carries a stable ``code`` string so the HTTP layer can emit
``{code, message, detail}`` payloads without per-endpoint mapping tables.
"""

from __future__ import annotations

from typing import Any


class CompareError(Exception):
    """Base class; ``code`` is a stable machine-readable identifier."""

    code = "error"

    def __init__(self, message: str, detail: Any = None):
        super().__init__(message)
        self.message = message
        self.detail = detail


# model-registry
class MissingFileError(CompareError):
    code = "missing_file"


class DuplicateModelIdError(CompareError):
    code = "duplicate_model_id"


class UnresolvableTargetLayerError(CompareError):
    code = "unresolvable_target_layer"


class UndecodableImageError(CompareError):
    code = "undecodable_image"


class ModelNotLoadedError(CompareError):
    code = "model_not_loaded"


class EmptyDatasetError(CompareError):
    code = "empty_dataset"


# explanation-engine
class GradientUnavailableError(CompareError):
    code = "gradient_unavailable"


class NonFiniteLossError(CompareError):
    code = "non_finite_loss"

    def __init__(self, message: str, iteration: int):
        super().__init__(message, detail={"iteration": iteration})
        self.iteration = iteration


class UnknownMethodError(CompareError):
    code = "unknown_method"


# class-analytics / saliency-analysis
class ShapeMismatchError(CompareError):
    code = "shape_mismatch"


class EmptyClassError(CompareError):
    code = "empty_class"


class InsufficientModelsError(CompareError):
    code = "insufficient_models"


class EmptyInputError(CompareError):
    code = "empty_input"


# artifact-store
class StorageFullError(CompareError):
    code = "storage_full"


class IoFailureError(CompareError):
    code = "io_failure"


# comparison-service
class UnknownModelError(CompareError):
    code = "unknown_model"


class NotPrecomputedError(CompareError):
    code = "not_precomputed"


class ValidationError(CompareError):
    code = "validation_error"


class UnknownTaskError(CompareError):
    code = "unknown_task"


class UnknownColumnError(CompareError):
    code = "unknown_column"


class WrongTaskKindError(CompareError):
    code = "wrong_task_kind"


# batch-cli
class MalformedClassDirError(CompareError):
    code = "malformed_class_dir"
