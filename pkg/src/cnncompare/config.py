"""Service configuration: one JSON file plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import MissingFileError

ENV_PREFIX = "CNNCOMPARE_"


@dataclass
class ServiceConfig:
    registry_path: str
    dataset_root: str
    store_root: str
    hierarchy_path: str | None = None
    weights_base: str | None = None  # base dir for relative weights_uri
    host: str = "127.0.0.1"
    port: int = 8000
    default_k: int = 6
    page_size: int = 20
    task_workers: int = 2
    seed: int = 42
    perplexity: float = 30.0

    @classmethod
    def load(cls, path: str | Path | None = None, env: dict | None = None) -> "ServiceConfig":
        env = os.environ if env is None else env
        data: dict = {}
        if path is not None:
            path = Path(path)
            if not path.is_file():
                raise MissingFileError(f"config file not found: {path}")
            data = json.loads(path.read_text())
        overrides = {
            "registry_path": env.get(ENV_PREFIX + "REGISTRY"),
            "dataset_root": env.get(ENV_PREFIX + "DATASET"),
            "store_root": env.get(ENV_PREFIX + "STORE_ROOT"),
            "hierarchy_path": env.get(ENV_PREFIX + "HIERARCHY"),
            "port": env.get(ENV_PREFIX + "PORT"),
            "host": env.get(ENV_PREFIX + "HOST"),
        }
        for key, value in overrides.items():
            if value is not None:
                data[key] = value
        if "port" in data:
            data["port"] = int(data["port"])
        return cls(**data)
