"""Leaf-class to root-group mapping used for coloring and per-root accuracy."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import MissingFileError, ValidationError


@dataclass(frozen=True)
class ClassHierarchy:
    """N leaf classes partitioned into R root groups.

    leaf_labels[i] names leaf i, root_of[i] is its root index, and
    root_labels[r] names root r.
    """

    leaf_labels: tuple[str, ...]
    root_of: tuple[int, ...]
    root_labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.leaf_labels) != len(self.root_of):
            raise ValidationError(
                f"root_of has {len(self.root_of)} entries for {len(self.leaf_labels)} leaves"
            )
        if len(self.root_labels) < 1:
            raise ValidationError("hierarchy needs at least one root group")
        bad = [r for r in self.root_of if not 0 <= r < len(self.root_labels)]
        if bad:
            raise ValidationError(f"root indices out of range: {sorted(set(bad))}")

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_labels)

    @property
    def n_roots(self) -> int:
        return len(self.root_labels)

    def leaves_of_root(self, root: int) -> list[int]:
        return [i for i, r in enumerate(self.root_of) if r == root]

    def to_dict(self) -> dict:
        return {
            "leaf_labels": list(self.leaf_labels),
            "root_of": list(self.root_of),
            "root_labels": list(self.root_labels),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassHierarchy":
        return cls(
            leaf_labels=tuple(d["leaf_labels"]),
            root_of=tuple(int(r) for r in d["root_of"]),
            root_labels=tuple(d["root_labels"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ClassHierarchy":
        path = Path(path)
        if not path.is_file():
            raise MissingFileError(f"class hierarchy file not found: {path}")
        return cls.from_dict(json.loads(path.read_text()))

    @classmethod
    def flat(cls, n_leaves: int) -> "ClassHierarchy":
        """Single-root fallback when no hierarchy file is supplied."""
        return cls(
            leaf_labels=tuple(f"class_{i}" for i in range(n_leaves)),
            root_of=(0,) * n_leaves,
            root_labels=("all",),
        )
