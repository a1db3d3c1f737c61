"""Dataset ingestion: one subdirectory per leaf class, named <index>_<label>."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyDatasetError, MalformedClassDirError, MissingFileError

_CLASS_DIR = re.compile(r"^(\d+)_(.+)$")
_IMAGE_EXTS = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}


@dataclass(frozen=True)
class DatasetImage:
    image_ref: str  # path relative to the dataset root
    class_index: int


@dataclass
class DatasetManifest:
    root: str
    images: list[DatasetImage]
    class_labels: dict[int, str]
    dataset_digest: str

    @property
    def size(self) -> int:
        return len(self.images)

    def image_path(self, image_ref: str) -> Path:
        return Path(self.root) / image_ref

    def img_classes(self) -> list[int]:
        return [img.class_index for img in self.images]

    def refs_for_class(self, class_index: int) -> list[str]:
        return [img.image_ref for img in self.images if img.class_index == class_index]

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "dataset_digest": self.dataset_digest,
            "class_labels": {str(k): v for k, v in sorted(self.class_labels.items())},
            "images": [{"image_ref": i.image_ref, "class_index": i.class_index} for i in self.images],
        }

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(
            root=d["root"],
            images=[DatasetImage(i["image_ref"], int(i["class_index"])) for i in d["images"]],
            class_labels={int(k): v for k, v in d["class_labels"].items()},
            dataset_digest=d["dataset_digest"],
        )

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        if not path.is_file():
            raise MissingFileError(f"dataset manifest not found: {path}")
        return cls.from_dict(json.loads(path.read_text()))


def ingest(root: str | Path) -> DatasetManifest:
    """Scan a class-per-directory tree into a manifest.

    Ordering is lexicographic over the UTF-8 bytes of the relative path, so
    a re-ingest of an unchanged tree is byte-identical, and the digest keyed
    from (path, content) pairs changes iff the file set or bytes change.
    """
    root = Path(root)
    if not root.is_dir():
        raise MissingFileError(f"dataset root not found: {root}")
    entries: list[tuple[str, int, Path]] = []
    labels: dict[int, str] = {}
    for child in sorted(p for p in root.iterdir() if p.is_dir()):
        m = _CLASS_DIR.match(child.name)
        if not m:
            raise MalformedClassDirError(
                f"class directory {child.name!r} must be named <class_index>_<label>"
            )
        class_index = int(m.group(1))
        labels[class_index] = m.group(2)
        for f in child.rglob("*"):
            if f.is_file() and f.suffix.lower() in _IMAGE_EXTS:
                entries.append((str(f.relative_to(root)), class_index, f))
    if not entries:
        raise EmptyDatasetError(f"no images found under {root}")
    entries.sort(key=lambda e: e[0].encode("utf-8"))
    digest = hashlib.sha256()
    for rel, _cls, path in entries:
        digest.update(rel.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(hashlib.sha256(path.read_bytes()).digest())
    return DatasetManifest(
        root=str(root),
        images=[DatasetImage(rel, cls) for rel, cls, _ in entries],
        class_labels=labels,
        dataset_digest=digest.hexdigest()[:32],
    )
