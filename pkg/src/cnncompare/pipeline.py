"""Offline precompute: batch predictions and every phase-1 artifact.

All artifacts flow through the store with ``get_or_compute``, so a re-run
against a warm store does no model work and an interrupted run resumes where
it stopped. Key construction lives here and is shared with the service so
both sides address the same cache entries.
"""

from __future__ import annotations

import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import formats
from .analytics import (
    accuracy_report,
    build_distance_matrix,
    project_classes,
)
from .dataset import DatasetManifest
from .errors import CompareError
from .explain import BbmpConfig, Method, explain, params_digest
from .hierarchy import ClassHierarchy
from .registry import LoadedModel, ModelRecord, batch_predict
from .render import overlay_png
from .saliency import DEFAULT_CONTOUR_LEVELS, DEFAULT_THRESHOLD, contour_bands
from .store import ArtifactKey, ArtifactStore

ALL_METHODS = tuple(Method)


def default_params(method: Method, seed: int = 0) -> dict:
    """Resolved hyperparameters per method; drives the cache key digest."""
    method = Method(method)
    if method is Method.SMOOTH_GRAD_CAM_PP:
        return {"n_samples": 25, "sigma": None, "seed": seed}
    if method is Method.SCORE_CAM:
        return {"batch": 16}
    if method is Method.BBMP:
        return BbmpConfig().to_params()
    return {}


# --- key builders ---------------------------------------------------------


def confidence_key(model_id: str, ds: str) -> ArtifactKey:
    return ArtifactKey(kind="confidence", model_id=model_id, dataset_digest=ds)


def rowmeta_key(model_id: str, ds: str) -> ArtifactKey:
    return ArtifactKey(kind="confidence", model_id=model_id, dataset_digest=ds,
                       params_digest="rowmeta")


def distance_key(model_id: str, ds: str) -> ArtifactKey:
    return ArtifactKey(kind="distance", model_id=model_id, dataset_digest=ds)


def distance_meta_key(model_id: str, ds: str) -> ArtifactKey:
    return ArtifactKey(kind="distance", model_id=model_id, dataset_digest=ds,
                       params_digest="classes")


def projection_key(model_id: str, ds: str, seed: int, perplexity: float) -> ArtifactKey:
    return ArtifactKey(kind="projection", model_id=model_id, dataset_digest=ds,
                       params_digest=params_digest({"seed": seed, "perplexity": perplexity}))


def accuracy_key(model_id: str, ds: str) -> ArtifactKey:
    return ArtifactKey(kind="accuracy", model_id=model_id, dataset_digest=ds)


def attention_key(model_id: str, ds: str, method: Method, digest: str, image_ref: str) -> ArtifactKey:
    return ArtifactKey(kind="attention", model_id=model_id, dataset_digest=ds,
                       method=Method(method).value, params_digest=digest, image_ref=image_ref)


def overlay_key(model_id: str, ds: str, method: Method, digest: str, image_ref: str) -> ArtifactKey:
    return ArtifactKey(kind="overlay", model_id=model_id, dataset_digest=ds,
                       method=Method(method).value, params_digest=digest, image_ref=image_ref)


@dataclass
class ArtifactEvent:
    token: str
    status: str  # computed | cached | failed
    seconds: float
    error: str | None = None


@dataclass
class PrecomputeOptions:
    seed: int = 42
    perplexity: float = 30.0
    jobs: int = 1
    models: list[str] | None = None
    methods: tuple[Method, ...] = ALL_METHODS
    example_image: str | None = None  # default: first dataset image


@dataclass
class ModelSummary:
    model_id: str
    ok: bool
    events: list[ArtifactEvent] = field(default_factory=list)
    error: str | None = None


@dataclass
class PrecomputeSummary:
    models: list[ModelSummary]
    failed_images: dict[str, list[str]] = field(default_factory=dict)

    @property
    def all_failed(self) -> bool:
        return bool(self.models) and all(not m.ok for m in self.models)

    @property
    def any_failed(self) -> bool:
        return any(not m.ok for m in self.models)


class Precomputer:
    def __init__(self, manifest: DatasetManifest, store: ArtifactStore,
                 hierarchy: ClassHierarchy, options: PrecomputeOptions | None = None,
                 on_event=None):
        self.manifest = manifest
        self.store = store
        self.hierarchy = hierarchy
        self.options = options or PrecomputeOptions()
        self.on_event = on_event or (lambda event: None)
        self.ds = manifest.dataset_digest

    def _tracked(self, key: ArtifactKey, producer, events: list[ArtifactEvent]) -> bytes:
        cached = self.store.has(key)
        start = time.perf_counter()
        data = self.store.get_or_compute(key, producer)
        event = ArtifactEvent(
            token=key.token(),
            status="cached" if cached else "computed",
            seconds=time.perf_counter() - start,
        )
        events.append(event)
        self.on_event(event)
        return data

    def _confidence(self, model: LoadedModel, events) -> tuple[np.ndarray, dict]:
        ds = self.ds
        meta_holder: dict = {}

        cls_of = {img.image_ref: img.class_index for img in self.manifest.images}

        def produce_matrix() -> bytes:
            images = ((img.image_ref, self.manifest.image_path(img.image_ref))
                      for img in self.manifest.images)
            batch = batch_predict(model, images)
            meta_holder["meta"] = {
                "image_refs": batch.image_refs,
                "img_classes": [cls_of[r] for r in batch.image_refs],
                "failed": batch.failed,
            }
            return formats.matrix_to_bytes(formats.MAGIC_CONFIDENCE, batch.matrix)

        conf_bytes = self._tracked(confidence_key(model.model_id, ds), produce_matrix, events)

        def produce_meta() -> bytes:
            if "meta" not in meta_holder:
                # matrix landed in an earlier interrupted run; rebuild the
                # row mapping (full rows mean no failures, else re-predict)
                matrix = formats.matrix_from_bytes(conf_bytes, formats.MAGIC_CONFIDENCE)
                if matrix.shape[0] == len(self.manifest.images):
                    meta_holder["meta"] = {
                        "image_refs": [i.image_ref for i in self.manifest.images],
                        "img_classes": [i.class_index for i in self.manifest.images],
                        "failed": [],
                    }
                else:
                    produce_matrix()
            return formats.json_to_bytes(meta_holder["meta"])

        meta_bytes = self._tracked(rowmeta_key(model.model_id, ds), produce_meta, events)
        return formats.matrix_from_bytes(conf_bytes, formats.MAGIC_CONFIDENCE), formats.json_from_bytes(meta_bytes)

    def _distance_and_projection(self, model_id: str, conf: np.ndarray, meta: dict, events):
        dist_holder: dict = {}

        def produce_distance() -> bytes:
            dist = build_distance_matrix(meta["img_classes"], conf, model_id=model_id)
            dist_holder["dist"] = dist
            return formats.matrix_to_bytes(formats.MAGIC_DISTANCE, dist.values)

        self._tracked(distance_key(model_id, self.ds), produce_distance, events)

        def produce_distance_meta() -> bytes:
            return formats.json_to_bytes({"class_ids": dist_holder["dist"].class_ids})

        self._tracked(distance_meta_key(model_id, self.ds), produce_distance_meta, events)

        def produce_projection() -> bytes:
            dist = dist_holder.get("dist")
            if dist is None:
                from .analytics import DistanceMatrix

                values = formats.matrix_from_bytes(
                    self.store.get(distance_key(model_id, self.ds)), formats.MAGIC_DISTANCE
                ).astype(np.float64)
                ids = formats.json_from_bytes(
                    self.store.get(distance_meta_key(model_id, self.ds))
                )["class_ids"]
                dist = DistanceMatrix(values=values, class_ids=ids, model_id=model_id)
            proj = project_classes(dist, seed=self.options.seed,
                                   perplexity=self.options.perplexity, hierarchy=self.hierarchy)
            return formats.json_to_bytes(proj.to_dict())

        self._tracked(
            projection_key(model_id, self.ds, self.options.seed, self.options.perplexity),
            produce_projection, events,
        )

    def _accuracy(self, model: LoadedModel, conf: np.ndarray, meta: dict, events):
        def produce() -> bytes:
            report = accuracy_report(meta["img_classes"], conf, self.hierarchy,
                                     model_id=model.model_id)
            payload = report.to_dict()
            payload["display_name"] = model.record.display_name
            payload["param_count"] = model.record.param_count
            return formats.json_to_bytes(payload)

        self._tracked(accuracy_key(model.model_id, self.ds), produce, events)

    def _examples(self, model: LoadedModel, events):
        ref = self.options.example_image or self.manifest.images[0].image_ref
        target = next(i.class_index for i in self.manifest.images if i.image_ref == ref)
        path = self.manifest.image_path(ref)
        for method in self.options.methods:
            params = default_params(method, seed=self.options.seed)
            digest = params_digest(params)
            att_key = attention_key(model.model_id, self.ds, method, digest, ref)

            def produce_attention(method=method, params=params) -> bytes:
                result = explain(method, model, path, target, params=dict(params),
                                 ground_truth_class=target, image_ref=ref)
                return formats.matrix_to_bytes(
                    formats.MAGIC_ATTENTION, result.attention.values
                )

            att_bytes = self._tracked(att_key, produce_attention, events)

            def produce_overlay(att_bytes=att_bytes) -> bytes:
                from .registry import decode_image

                att = formats.matrix_from_bytes(att_bytes, formats.MAGIC_ATTENTION)
                img = np.asarray(decode_image(path).resize(
                    (att.shape[1], att.shape[0])
                ))
                contours = contour_bands(att, DEFAULT_CONTOUR_LEVELS, DEFAULT_THRESHOLD)
                return overlay_png(img, att, contours)

            self._tracked(
                overlay_key(model.model_id, self.ds, method, digest, ref),
                produce_overlay, events,
            )

    def run_model(self, record: ModelRecord, base_dir=None) -> ModelSummary:
        summary = ModelSummary(model_id=record.model_id, ok=True)
        try:
            model = LoadedModel.load(record, base_dir)
            conf, meta = self._confidence(model, summary.events)
            self._distance_and_projection(model.model_id, conf, meta, summary.events)
            self._accuracy(model, conf, meta, summary.events)
            self._examples(model, summary.events)
        except (CompareError, RuntimeError, OSError) as e:
            summary.ok = False
            summary.error = f"{type(e).__name__}: {e}"
            summary.events.append(ArtifactEvent(
                token=f"model/{record.model_id}", status="failed", seconds=0.0,
                error=traceback.format_exc(limit=3),
            ))
            self.on_event(summary.events[-1])
        return summary


def precompute(manifest: DatasetManifest, records: list[ModelRecord], store: ArtifactStore,
               hierarchy: ClassHierarchy, options: PrecomputeOptions | None = None,
               on_event=None, base_dir=None) -> PrecomputeSummary:
    options = options or PrecomputeOptions()
    if options.models:
        wanted = set(options.models)
        records = [r for r in records if r.model_id in wanted]
    pre = Precomputer(manifest, store, hierarchy, options, on_event)
    summaries = []
    if options.jobs > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=options.jobs) as pool:
            futures = [pool.submit(pre.run_model, rec, base_dir) for rec in records]
            summaries = [f.result() for f in futures]
    else:
        summaries = [pre.run_model(rec, base_dir) for rec in records]
    failed_images = {}
    for s in summaries:
        if s.ok:
            meta = store.get(rowmeta_key(s.model_id, manifest.dataset_digest))
            if meta:
                failed = formats.json_from_bytes(meta).get("failed", [])
                if failed:
                    failed_images[s.model_id] = failed
    return PrecomputeSummary(models=summaries, failed_images=failed_images)
