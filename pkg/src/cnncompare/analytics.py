"""Class-level analytics: class distance matrix, 2D projection, accuracies.

The distance between class c and class d starts from the average withheld
confidence: over the images whose ground truth is c, how much confidence the
model did NOT assign to d. Symmetrizing that matrix gives a class
dissimilarity suitable for embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.manifold import TSNE

from .errors import EmptyClassError, InsufficientModelsError, ShapeMismatchError, ValidationError
from .hierarchy import ClassHierarchy

DEFAULT_SEED = 42
DEFAULT_PERPLEXITY = 30.0
TSNE_ITERATIONS = 1000


@dataclass
class DistanceMatrix:
    """Symmetric distances between the populated classes of one model.

    ``class_ids[i]`` is the original class index behind row/column i; classes
    with no images are excluded rather than carrying divide-by-zero rows.
    """

    values: np.ndarray  # (P, P) float64
    class_ids: list[int]
    model_id: str = ""

    @property
    def class_count(self) -> int:
        return len(self.class_ids)


@dataclass
class ClassProjection:
    coords: np.ndarray  # (P, 2)
    class_ids: list[int]
    model_id: str = ""
    seed: int = DEFAULT_SEED
    perplexity: float = DEFAULT_PERPLEXITY
    root_index: list[int] | None = None
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "seed": self.seed,
            "perplexity": self.perplexity,
            "class_ids": list(self.class_ids),
            "coords": [[float(x), float(y)] for x, y in self.coords],
            "root_index": list(self.root_index) if self.root_index is not None else None,
            "degenerate": self.degenerate,
        }


@dataclass
class AccuracyReport:
    """Overall, per-root and per-leaf accuracy plus the underlying counts.

    ``per_leaf[i]`` is None for classes with no images (absent, not zero).
    """

    overall: float
    per_root: list[float | None]
    per_leaf: list[float | None]
    leaf_counts: list[int]
    leaf_correct: list[int]
    model_id: str = ""

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "overall": self.overall,
            "per_root": self.per_root,
            "per_leaf": self.per_leaf,
            "leaf_counts": self.leaf_counts,
            "leaf_correct": self.leaf_correct,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AccuracyReport":
        return cls(
            overall=d["overall"],
            per_root=d["per_root"],
            per_leaf=d["per_leaf"],
            leaf_counts=d["leaf_counts"],
            leaf_correct=d["leaf_correct"],
            model_id=d.get("model_id", ""),
        )


def _check_inputs(img_classes, conf_mat) -> tuple[np.ndarray, np.ndarray]:
    classes = np.asarray(img_classes, dtype=np.int64)
    conf = np.asarray(conf_mat, dtype=np.float64)
    if conf.ndim != 2:
        raise ShapeMismatchError(f"confidence matrix must be 2D, got shape {conf.shape}")
    if classes.ndim != 1 or classes.shape[0] != conf.shape[0]:
        raise ShapeMismatchError(
            f"class list length {classes.shape} does not match matrix rows {conf.shape[0]}"
        )
    n = conf.shape[1]
    if classes.size and (classes.min() < 0 or classes.max() >= n):
        raise ShapeMismatchError(f"class indices must lie in 0..{n - 1}")
    return classes, conf


def build_distance_matrix(img_classes, conf_mat, model_id: str = "") -> DistanceMatrix:
    """Average-withheld-confidence class distances, symmetrized as (D + D^T)/2.

    Pre-symmetrization, entry (c, d) for c != d is the mean over images of
    class c of (1 - confidence assigned to d); the diagonal is zero. Only
    classes that contribute at least one image appear in the result.
    """
    classes, conf = _check_inputs(img_classes, conf_mat)
    if classes.size == 0:
        raise EmptyClassError("no images; cannot build a distance matrix")
    populated = np.unique(classes)
    p = populated.size
    pre = np.zeros((p, p), dtype=np.float64)
    # Per class c the count of images is the same for every compared class d,
    # so the averaged accumulation collapses to 1 - mean confidence.
    for i, c in enumerate(populated):
        rows = conf[classes == c]
        pre[i, :] = 1.0 - rows[:, populated].mean(axis=0)
        pre[i, i] = 0.0
    sym = (pre + pre.T) / 2.0
    return DistanceMatrix(values=sym, class_ids=[int(c) for c in populated], model_id=model_id)


def project_classes(
    dist: DistanceMatrix,
    seed: int = DEFAULT_SEED,
    perplexity: float = DEFAULT_PERPLEXITY,
    hierarchy: ClassHierarchy | None = None,
) -> ClassProjection:
    """t-SNE embedding of the distance matrix into 2D, deterministic per seed."""
    values = np.asarray(dist.values, dtype=np.float64)
    p = values.shape[0]
    if values.shape != (p, p):
        raise ShapeMismatchError(f"distance matrix must be square, got {values.shape}")
    if p < 2:
        raise ValidationError("projection needs at least 2 populated classes")
    off_diag = values[~np.eye(p, dtype=bool)]
    degenerate = bool(off_diag.size) and bool(np.all(off_diag == off_diag.flat[0]))
    eff_perplexity = min(float(perplexity), (p - 1) / 3.0)
    tsne = TSNE(
        n_components=2,
        metric="precomputed",
        init="random",
        random_state=seed,
        perplexity=eff_perplexity,
        max_iter=TSNE_ITERATIONS,
        method="exact" if p <= 512 else "barnes_hut",
    )
    coords = tsne.fit_transform(values)
    root_index = None
    if hierarchy is not None:
        root_index = [hierarchy.root_of[c] for c in dist.class_ids]
    return ClassProjection(
        coords=np.asarray(coords, dtype=np.float64),
        class_ids=list(dist.class_ids),
        model_id=dist.model_id,
        seed=seed,
        perplexity=eff_perplexity,
        root_index=root_index,
        degenerate=degenerate,
    )


def accuracy_report(img_classes, conf_mat, hierarchy: ClassHierarchy, model_id: str = "") -> AccuracyReport:
    """Argmax accuracy aggregated per leaf, per root group, and overall.

    Argmax ties resolve to the lowest class index, so accuracy numbers are
    deterministic. Leaves with no images are reported as absent (None).
    """
    classes, conf = _check_inputs(img_classes, conf_mat)
    n = conf.shape[1]
    if hierarchy.n_leaves != n:
        raise ShapeMismatchError(
            f"hierarchy has {hierarchy.n_leaves} leaves but matrix has {n} classes"
        )
    preds = conf.argmax(axis=1) if classes.size else np.zeros(0, dtype=np.int64)
    counts = np.bincount(classes, minlength=n)
    correct = np.bincount(classes[preds == classes], minlength=n)
    per_leaf: list[float | None] = [
        (correct[i] / counts[i]) if counts[i] else None for i in range(n)
    ]
    per_root: list[float | None] = []
    for r in range(hierarchy.n_roots):
        members = hierarchy.leaves_of_root(r)
        total = int(counts[members].sum())
        per_root.append((int(correct[members].sum()) / total) if total else None)
    overall = float(correct.sum() / counts.sum()) if counts.sum() else 0.0
    return AccuracyReport(
        overall=overall,
        per_root=per_root,
        per_leaf=per_leaf,
        leaf_counts=[int(c) for c in counts],
        leaf_correct=[int(c) for c in correct],
        model_id=model_id,
    )


@dataclass
class ClassStatEntry:
    class_id: int
    spread: float  # max - min accuracy across models
    mean: float
    accuracies: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "range": self.spread,
            "mean": self.mean,
            "accuracies": self.accuracies,
        }


@dataclass
class ClassAccuracyStats:
    diverging: list[ClassStatEntry]
    coherent_top: list[ClassStatEntry]
    coherent_bottom: list[ClassStatEntry]

    def to_dict(self) -> dict:
        return {
            "diverging": [e.to_dict() for e in self.diverging],
            "coherent_top": [e.to_dict() for e in self.coherent_top],
            "coherent_bottom": [e.to_dict() for e in self.coherent_bottom],
        }


def class_accuracy_stats(reports: list[AccuracyReport], k: int = 6) -> ClassAccuracyStats:
    """Rank classes by cross-model accuracy range and by cross-model mean.

    Only classes populated in every report are ranked. ``diverging`` holds the
    k widest accuracy ranges; ``coherent_top``/``coherent_bottom`` hold the k
    best and k worst classes by mean. Ties break on ascending class index.
    """
    if len(reports) < 2:
        raise InsufficientModelsError(f"need at least 2 reports, got {len(reports)}")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    n = len(reports[0].per_leaf)
    if any(len(r.per_leaf) != n for r in reports):
        raise ShapeMismatchError("reports disagree on class count")
    entries = []
    for c in range(n):
        accs = [r.per_leaf[c] for r in reports]
        if any(a is None for a in accs):
            continue
        vals = [float(a) for a in accs]
        entries.append(
            ClassStatEntry(
                class_id=c,
                spread=max(vals) - min(vals),
                mean=sum(vals) / len(vals),
                accuracies={r.model_id: float(r.per_leaf[c]) for r in reports},
            )
        )
    diverging = sorted(entries, key=lambda e: (-e.spread, e.class_id))[:k]
    coherent_top = sorted(entries, key=lambda e: (-e.mean, e.class_id))[:k]
    coherent_bottom = sorted(entries, key=lambda e: (e.mean, e.class_id))[:k]
    return ClassAccuracyStats(diverging, coherent_top, coherent_bottom)
