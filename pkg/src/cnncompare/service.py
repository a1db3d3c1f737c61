"""HTTP API for the three-phase comparison workflow.

Overview endpoints serve precomputed artifacts; task endpoints run
explanation work asynchronously, streaming rows into the task record as they
complete. Every numeric value the API surfaces is read from (or keyed into)
the artifact store, never recomputed ad hoc.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from . import formats, pipeline
from .config import ServiceConfig
from .dataset import DatasetManifest, ingest
from .errors import (
    CompareError,
    InsufficientModelsError,
    MissingFileError,
    NotPrecomputedError,
    UnknownColumnError,
    UnknownModelError,
    UnknownTaskError,
    ValidationError,
    WrongTaskKindError,
)
from .explain import Method, explain, params_digest
from .hierarchy import ClassHierarchy
from .registry import LoadedModel, decode_image, load_registry
from .render import heatmap_png, image_png, overlay_png
from .saliency import (
    DEFAULT_CONTOUR_LEVELS,
    DEFAULT_THRESHOLD,
    Measure,
    color_intensity_histogram,
    contour_bands,
    roi_filter,
    similarity_matrix,
    threshold_mask,
)
from .store import ArtifactKey, ArtifactStore

MAX_MODELS = 13
SORT_COLUMNS = ("class_accuracy", "confidence", "overall_accuracy")

_STATUS_BY_CODE = {
    "unknown_model": 404,
    "unknown_task": 404,
    "missing_file": 404,
    "validation_error": 422,
    "unknown_column": 400,
    "unknown_method": 400,
    "not_precomputed": 409,
    "insufficient_models": 409,
    "wrong_task_kind": 409,
    "empty_class": 409,
    "storage_full": 507,
}


class TaskStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


_ORDER = {TaskStatus.PENDING: 0, TaskStatus.RUNNING: 1, TaskStatus.DONE: 2, TaskStatus.FAILED: 2}


class TaskCreate(BaseModel):
    model_ids: list[str]
    class_ids: list[int]
    method: str
    measure: str = Measure.L1.value
    threshold: float = DEFAULT_THRESHOLD
    image_ref: Optional[str] = None
    target_class: Optional[int] = None
    max_images_per_class: Optional[int] = None
    params: dict = {}


class ThresholdPatch(BaseModel):
    threshold: float


@dataclass
class Task:
    task_id: str
    spec: TaskCreate
    status: TaskStatus = TaskStatus.PENDING
    progress: float = 0.0
    rows: list[dict] = field(default_factory=list)
    total_rows: int = 0
    error: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def transition(self, status: TaskStatus):
        with self.lock:
            if _ORDER[status] < _ORDER[self.status]:
                return  # transitions are monotone
            self.status = status

    def public(self) -> dict:
        with self.lock:
            return {
                "task_id": self.task_id,
                "status": self.status.value,
                "progress": self.progress,
                "row_count": len(self.rows),
                "total_rows": self.total_rows,
                "error": self.error,
                "spec": self.spec.model_dump(),
            }


class AppState:
    """Loaded registry, dataset, store, and live tasks."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.records = {r.model_id: r for r in load_registry(config.registry_path)}
        self.manifest: DatasetManifest = ingest(config.dataset_root)
        self.store = ArtifactStore(config.store_root)
        if config.hierarchy_path:
            self.hierarchy = ClassHierarchy.load(config.hierarchy_path)
        else:
            n = max(self.manifest.class_labels) + 1 if self.manifest.class_labels else 1
            self.hierarchy = ClassHierarchy.flat(n)
        self.weights_base = config.weights_base or str(Path(config.registry_path).parent)
        self.tasks: dict[str, Task] = {}
        self.loaded: dict[str, LoadedModel] = {}
        self._load_lock = threading.Lock()
        self.executor = ThreadPoolExecutor(max_workers=config.task_workers)

    @property
    def ds(self) -> str:
        return self.manifest.dataset_digest

    def model(self, model_id: str) -> LoadedModel:
        if model_id not in self.records:
            raise UnknownModelError(f"model {model_id!r} is not registered")
        with self._load_lock:
            if model_id not in self.loaded:
                self.loaded[model_id] = LoadedModel.load(self.records[model_id], self.weights_base)
            return self.loaded[model_id]

    def artifact_json(self, key: ArtifactKey) -> dict:
        data = self.store.get(key)
        if data is None:
            raise NotPrecomputedError(
                f"artifact {key.token()} missing; run the precompute pipeline first"
            )
        return formats.json_from_bytes(data)

    def accuracy(self, model_id: str) -> dict:
        if model_id not in self.records:
            raise UnknownModelError(f"model {model_id!r} is not registered")
        return self.artifact_json(pipeline.accuracy_key(model_id, self.ds))

    def confidence_rows(self, model_id: str) -> tuple[np.ndarray, dict]:
        matrix = self.store.get(pipeline.confidence_key(model_id, self.ds))
        meta = self.store.get(pipeline.rowmeta_key(model_id, self.ds))
        if matrix is None or meta is None:
            raise NotPrecomputedError(f"confidence artifacts missing for {model_id!r}")
        return (
            formats.matrix_from_bytes(matrix, formats.MAGIC_CONFIDENCE),
            formats.json_from_bytes(meta),
        )

    def task(self, task_id: str) -> Task:
        if task_id not in self.tasks:
            raise UnknownTaskError(f"no task {task_id!r}")
        return self.tasks[task_id]


def _validate_task(spec: TaskCreate, state: AppState) -> None:
    problems = []
    if not 1 <= len(spec.model_ids) <= MAX_MODELS:
        problems.append(f"model_ids must have 1..{MAX_MODELS} entries, got {len(spec.model_ids)}")
    if len(set(spec.model_ids)) != len(spec.model_ids):
        problems.append("model_ids contains duplicates")
    unknown = [m for m in spec.model_ids if m not in state.records]
    if unknown:
        problems.append(f"unknown models: {unknown}")
    if not spec.class_ids:
        problems.append("class_ids must have at least 1 entry")
    known_classes = set(state.manifest.class_labels)
    bad_classes = [c for c in spec.class_ids if c not in known_classes]
    if bad_classes:
        problems.append(f"classes not present in dataset: {bad_classes}")
    if len(spec.model_ids) > 1 and len(spec.class_ids) != 1:
        problems.append("multi-model tasks fix exactly one class")
    try:
        Method(spec.method)
    except ValueError:
        problems.append(f"unknown method {spec.method!r}")
    try:
        Measure(spec.measure)
    except ValueError:
        problems.append(f"unknown measure {spec.measure!r}")
    if not 0.0 <= spec.threshold <= 1.0:
        problems.append(f"threshold must lie in [0, 1], got {spec.threshold}")
    if spec.image_ref is not None:
        cls_of = {i.image_ref: i.class_index for i in state.manifest.images}
        if spec.image_ref not in cls_of:
            problems.append(f"image_ref {spec.image_ref!r} not in dataset")
        elif spec.class_ids and cls_of[spec.image_ref] not in spec.class_ids:
            problems.append(
                f"image_ref {spec.image_ref!r} belongs to class {cls_of[spec.image_ref]}, "
                f"outside the selected classes"
            )
    if problems:
        raise ValidationError("task spec invalid", detail=problems)


def _plan_rows(spec: TaskCreate, state: AppState) -> list[tuple[str, str, int]]:
    """(model_id, image_ref, ground_truth) units, in model-then-image order."""
    units = []
    cls_of = {i.image_ref: i.class_index for i in state.manifest.images}
    if spec.image_ref is not None:
        refs = [spec.image_ref]
    else:
        refs = []
        for c in spec.class_ids:
            class_refs = state.manifest.refs_for_class(c)
            if spec.max_images_per_class:
                class_refs = class_refs[: spec.max_images_per_class]
            refs.extend(class_refs)
    for model_id in spec.model_ids:
        for ref in refs:
            units.append((model_id, ref, cls_of[ref]))
    return units


def _attention_artifacts(state: AppState, model_id: str, image_ref: str, method: Method,
                         params: dict, target: int) -> tuple[str, str]:
    """Attention binary (and its digest) for one row, cached single-flight."""
    digest = params_digest(params)
    att_key = pipeline.attention_key(model_id, state.ds, method, digest, image_ref)

    def produce() -> bytes:
        model = state.model(model_id)
        result = explain(method, model, state.manifest.image_path(image_ref),
                         target, params=dict(params), ground_truth_class=target,
                         image_ref=image_ref)
        return formats.matrix_to_bytes(formats.MAGIC_ATTENTION, result.attention.values)

    state.store.get_or_compute(att_key, produce)
    return att_key.token(), digest


def _derived_artifacts(state: AppState, model_id: str, image_ref: str, method: Method,
                       digest: str, threshold: float, with_cih: bool) -> dict:
    """Overlay, contour JSON, ROI png and CIH at one threshold, from cache."""
    att_bytes = state.store.get(pipeline.attention_key(model_id, state.ds, method, digest, image_ref))
    att = formats.matrix_from_bytes(att_bytes, formats.MAGIC_ATTENTION)
    t_digest = f"{digest}_t{threshold:g}"
    img = np.asarray(
        decode_image(state.manifest.image_path(image_ref)).resize((att.shape[1], att.shape[0]))
    )

    overlay_k = pipeline.overlay_key(model_id, state.ds, method, t_digest, image_ref)
    contour_k = ArtifactKey(kind="contour", model_id=model_id, dataset_digest=state.ds,
                            method=method.value, params_digest=t_digest, image_ref=image_ref)
    roi_k = ArtifactKey(kind="roi", model_id=model_id, dataset_digest=state.ds,
                        method=method.value, params_digest=t_digest, image_ref=image_ref)

    def produce_contours() -> bytes:
        cs = contour_bands(att, DEFAULT_CONTOUR_LEVELS, threshold)
        return formats.json_to_bytes(cs.to_dict())

    def produce_overlay() -> bytes:
        cs = contour_bands(att, DEFAULT_CONTOUR_LEVELS, threshold)
        return overlay_png(img, att, cs)

    def produce_roi() -> bytes:
        return image_png(roi_filter(img, att, threshold))

    state.store.get_or_compute(contour_k, produce_contours)
    state.store.get_or_compute(overlay_k, produce_overlay)
    state.store.get_or_compute(roi_k, produce_roi)
    refs = {
        "attention_ref": pipeline.attention_key(model_id, state.ds, method, digest, image_ref).token(),
        "overlay_ref": overlay_k.token(),
        "contour_ref": contour_k.token(),
        "roi_ref": roi_k.token(),
        "cih_ref": None,
    }
    if with_cih:
        cih_k = ArtifactKey(kind="cih", model_id=model_id, dataset_digest=state.ds,
                            method=method.value, params_digest=t_digest, image_ref=image_ref)

        def produce_cih() -> bytes:
            mask = threshold_mask(att, threshold)
            hist = color_intensity_histogram(img, mask, threshold_used=threshold)
            return formats.json_to_bytes(hist.to_dict())

        state.store.get_or_compute(cih_k, produce_cih)
        refs["cih_ref"] = cih_k.token()
    return refs


def _run_task(state: AppState, task: Task) -> None:
    task.transition(TaskStatus.RUNNING)
    spec = task.spec
    method = Method(spec.method)
    params = pipeline.default_params(method, seed=state.config.seed)
    params.update(spec.params or {})
    single_model = len(spec.model_ids) == 1
    try:
        units = _plan_rows(spec, state)
        with task.lock:
            task.total_rows = len(units)
        for done, (model_id, image_ref, gt) in enumerate(units, start=1):
            target = spec.target_class if spec.target_class is not None else gt
            _token, digest = _attention_artifacts(state, model_id, image_ref, method, params, target)
            refs = _derived_artifacts(state, model_id, image_ref, method, digest,
                                      spec.threshold, with_cih=single_model)
            acc = state.accuracy(model_id)
            conf, meta = state.confidence_rows(model_id)
            row_idx = meta["image_refs"].index(image_ref)
            vec = conf[row_idx]
            predicted = int(np.argmax(vec))
            row = {
                "model_id": model_id,
                "display_name": acc.get("display_name", model_id),
                "image_ref": image_ref,
                "ground_truth_class": gt,
                "ground_truth_label": state.manifest.class_labels.get(gt, str(gt)),
                "predicted_class": predicted,
                "predicted_label": state.manifest.class_labels.get(predicted, str(predicted)),
                "correct": predicted == gt,
                "overall_accuracy": acc["overall"],
                "class_accuracy": acc["per_leaf"][gt],
                "confidence": float(vec[predicted]),
                "target_class": target,
                **refs,
            }
            with task.lock:
                task.rows.append(row)
                task.progress = done / len(units)
        task.transition(TaskStatus.DONE)
    except Exception as e:  # noqa: BLE001 - task failures must land in state
        with task.lock:
            task.error = f"{type(e).__name__}: {e}"
        task.transition(TaskStatus.FAILED)


def _sorted_rows(rows: list[dict], sort_by: str | None, order: str) -> list[dict]:
    rows = sorted(rows, key=lambda r: (r["model_id"], r["image_ref"]))
    if sort_by is None:
        return rows
    if sort_by not in SORT_COLUMNS:
        raise UnknownColumnError(
            f"cannot sort by {sort_by!r}", detail={"sortable": list(SORT_COLUMNS)}
        )
    if order not in ("asc", "desc"):
        raise ValidationError(f"order must be asc or desc, got {order!r}")
    # None sorts last regardless of direction; ties keep (model_id, image_ref)
    missing = [r for r in rows if r[sort_by] is None]
    present = [r for r in rows if r[sort_by] is not None]
    present.sort(key=lambda r: r[sort_by], reverse=order == "desc")
    return present + missing


def _filter_rows(rows: list[dict], needle: str | None) -> list[dict]:
    if not needle:
        return rows
    needle = needle.lower()
    return [
        r for r in rows
        if needle in r["model_id"].lower()
        or needle in r["display_name"].lower()
        or needle in r["ground_truth_label"].lower()
        or needle in r["predicted_label"].lower()
    ]


def _media_type(data: bytes) -> str:
    if data.startswith(b"\x89PNG"):
        return "image/png"
    if data[:1] in (b"{", b"["):
        return "application/json"
    return "application/octet-stream"


def create_app(config: ServiceConfig) -> FastAPI:
    state = AppState(config)
    app = FastAPI(title="cnncompare", version="0.1.0")
    app.state.compare = state

    @app.exception_handler(CompareError)
    async def compare_error_handler(_request: Request, exc: CompareError):
        return JSONResponse(
            status_code=_STATUS_BY_CODE.get(exc.code, 500),
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.get("/models")
    def list_models():
        missing = [
            m for m in state.records
            if not state.store.has(pipeline.accuracy_key(m, state.ds))
        ]
        if missing:
            raise NotPrecomputedError(
                "accuracy reports missing; run precompute", detail={"models": missing}
            )
        out = []
        for model_id, record in state.records.items():
            acc = state.accuracy(model_id)
            out.append({
                "model_id": model_id,
                "display_name": record.display_name,
                "param_count": acc.get("param_count", 0),
                "overall_accuracy": acc["overall"],
                "per_root": acc["per_root"],
            })
        return {"models": out, "root_labels": list(state.hierarchy.root_labels)}

    @app.get("/models/{model_id}/projection")
    def get_projection(model_id: str):
        if model_id not in state.records:
            raise UnknownModelError(f"model {model_id!r} is not registered")
        key = pipeline.projection_key(model_id, state.ds, config.seed, config.perplexity)
        return state.artifact_json(key)

    @app.get("/models/{model_id}/accuracy")
    def get_accuracy(model_id: str):
        payload = state.accuracy(model_id)
        payload["class_labels"] = {
            str(k): v for k, v in state.manifest.class_labels.items()
        }
        return payload

    @app.get("/stats/classes")
    def get_class_stats(k: int = Query(default=None)):
        from .analytics import AccuracyReport, class_accuracy_stats

        k = k if k is not None else config.default_k
        reports = []
        for model_id in state.records:
            if state.store.has(pipeline.accuracy_key(model_id, state.ds)):
                reports.append(AccuracyReport.from_dict(state.accuracy(model_id)))
        if len(reports) < 2:
            raise InsufficientModelsError(
                f"class stats need at least 2 precomputed models, have {len(reports)}"
            )
        stats = class_accuracy_stats(reports, k=k)
        payload = stats.to_dict()
        payload["class_labels"] = {
            str(e["class_id"]): state.manifest.class_labels.get(e["class_id"], "")
            for section in payload.values()
            for e in section
        }
        return payload

    @app.get("/examples")
    def get_examples(model_id: str = Query(default=None)):
        """Per-method example overlays produced by the precompute phase."""
        model_id = model_id or next(iter(state.records), None)
        if model_id not in state.records:
            raise UnknownModelError(f"model {model_id!r} is not registered")
        example_ref = state.manifest.images[0].image_ref
        methods = {}
        for method in Method:
            digest = params_digest(pipeline.default_params(method, seed=config.seed))
            key = pipeline.overlay_key(model_id, state.ds, method, digest, example_ref)
            if state.store.has(key):
                methods[method.value] = key.token()
        return {"model_id": model_id, "image_ref": example_ref, "methods": methods}

    @app.get("/hierarchy")
    def get_hierarchy():
        return state.hierarchy.to_dict()

    @app.get("/dataset/manifest")
    def get_dataset_manifest():
        return state.manifest.to_dict()

    @app.get("/images/{image_ref:path}")
    def get_image(image_ref: str):
        refs = {i.image_ref for i in state.manifest.images}
        if image_ref not in refs:
            raise MissingFileError(f"image {image_ref!r} not in dataset")
        return Response(content=image_png(np.asarray(
            decode_image(state.manifest.image_path(image_ref))
        )), media_type="image/png")

    @app.post("/tasks", status_code=201)
    def create_task(spec: TaskCreate):
        _validate_task(spec, state)
        task = Task(task_id=uuid.uuid4().hex[:12], spec=spec)
        state.tasks[task.task_id] = task
        state.executor.submit(_run_task, state, task)
        return {"task_id": task.task_id, "status": task.status.value}

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str):
        return state.task(task_id).public()

    @app.get("/tasks/{task_id}/results")
    def get_task_results(task_id: str, sort_by: str = None, order: str = "desc",
                         filter: str = None, page: int = 1, page_size: int = None):
        task = state.task(task_id)
        with task.lock:
            rows = [dict(r) for r in task.rows]
        rows = _filter_rows(rows, filter)
        rows = _sorted_rows(rows, sort_by, order)
        page_size = page_size or config.page_size
        start = (page - 1) * page_size
        return {
            "task_id": task_id,
            "status": task.status.value,
            "progress": task.progress,
            "total": len(rows),
            "page": page,
            "page_size": page_size,
            "rows": rows[start : start + page_size],
        }

    @app.get("/tasks/{task_id}/similarity")
    def get_similarity(task_id: str, measure: str = None):
        task = state.task(task_id)
        spec = task.spec
        if len(spec.model_ids) < 2 or spec.image_ref is None:
            raise WrongTaskKindError(
                "similarity requires a multi-model task with a selected image"
            )
        if task.status is not TaskStatus.DONE:
            raise WrongTaskKindError(f"task is {task.status.value}, not done")
        msr = Measure(measure) if measure else Measure(spec.measure)
        method = Method(spec.method)
        params = pipeline.default_params(method, seed=state.config.seed)
        params.update(spec.params or {})
        digest = params_digest(params)
        joined = "+".join(spec.model_ids)
        sim_digest = f"{digest}_{msr.value}"
        sim_key = ArtifactKey(kind="similarity", model_id=joined, dataset_digest=state.ds,
                              method=method.value, params_digest=sim_digest,
                              image_ref=spec.image_ref)
        heat_key = ArtifactKey(kind="similarity", model_id=joined, dataset_digest=state.ds,
                               method=method.value, params_digest=sim_digest + "_png",
                               image_ref=spec.image_ref)

        def produce() -> bytes:
            maps = []
            for model_id in spec.model_ids:
                att_bytes = state.store.get(
                    pipeline.attention_key(model_id, state.ds, method, digest, spec.image_ref)
                )
                if att_bytes is None:
                    raise NotPrecomputedError(f"attention map missing for {model_id!r}")
                maps.append(formats.matrix_from_bytes(att_bytes, formats.MAGIC_ATTENTION))
            sm = similarity_matrix(maps, msr, labels=spec.model_ids)
            return formats.json_to_bytes(sm.to_dict())

        payload = formats.json_from_bytes(state.store.get_or_compute(sim_key, produce))
        state.store.get_or_compute(
            heat_key, lambda: heatmap_png(np.asarray(payload["values"]))
        )
        payload["heatmap_ref"] = heat_key.token()
        return payload

    @app.patch("/tasks/{task_id}/threshold")
    def set_threshold(task_id: str, patch: ThresholdPatch):
        task = state.task(task_id)
        t = patch.threshold
        if not 0.0 <= t <= 1.0:
            raise ValidationError(f"threshold must lie in [0, 1], got {t}")
        method = Method(task.spec.method)
        params = pipeline.default_params(method, seed=state.config.seed)
        params.update(task.spec.params or {})
        digest = params_digest(params)
        single_model = len(task.spec.model_ids) == 1
        with task.lock:
            rows = [dict(r) for r in task.rows]
        updated = []
        for row in rows:
            refs = _derived_artifacts(state, row["model_id"], row["image_ref"], method,
                                      digest, t, with_cih=single_model)
            updated.append({"model_id": row["model_id"], "image_ref": row["image_ref"], **refs})
        with task.lock:
            task.spec.threshold = t
            for row, refs in zip(task.rows, updated):
                row.update({k: v for k, v in refs.items() if k.endswith("_ref")})
        return {"task_id": task_id, "threshold": t, "rows": updated}

    @app.get("/artifacts/{token:path}")
    def get_artifact(token: str):
        path = state.store.resolve_token(token)
        if not path.is_file():
            raise MissingFileError(f"no artifact {token!r}")
        data = path.read_bytes()
        return Response(content=data, media_type=_media_type(data))

    return app


def create_app_from_file(config_path: str | None = None) -> FastAPI:
    return create_app(ServiceConfig.load(config_path))
