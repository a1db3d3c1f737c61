"""Shared fixtures: tiny hand-set CNNs and synthetic images."""

from __future__ import annotations

import numpy as np
import pytest
import torch
import torch.nn as nn

from cnncompare.registry import LoadedModel, ModelRecord, Preprocess


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One visible pass/fail line per acceptance criterion."""
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.fspath.basename == "test_acceptance.py":
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        tw = item.config.get_terminal_writer()
        tw.line(f"[acceptance] {item.name}: {status}")


def make_record(model_id: str, target_layer: str, input_size=(16, 16), **kwargs) -> ModelRecord:
    return ModelRecord(
        model_id=model_id,
        display_name=kwargs.get("display_name", model_id),
        weights_uri=kwargs.get("weights_uri", "memory://fixture"),
        target_layer=target_layer,
        input_size=input_size,
        preprocess=kwargs.get("preprocess", Preprocess()),
    )


class FixtureNet(nn.Module):
    """Two conv layers with a flat head; target layer is ``features.2``."""

    def __init__(self, channels: int = 4, n_classes: int = 3, seed: int = 7):
        super().__init__()
        torch.manual_seed(seed)
        self.features = nn.Sequential(
            nn.Conv2d(3, 6, 3, padding=1),
            nn.ReLU(),
            nn.Conv2d(6, channels, 3, padding=1),
        )
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.flatten = nn.Flatten()
        self.classifier = nn.Linear(channels, n_classes)
        with torch.no_grad():
            for p in self.parameters():
                p.copy_(torch.randn_like(p) * 0.5)

    def forward(self, x):
        return self.classifier(self.flatten(self.pool(self.features(x))))


@pytest.fixture
def fixture_model() -> LoadedModel:
    """Double-precision 2-conv CNN for 16x16 inputs, hand-set weights."""
    net = FixtureNet().double()
    return LoadedModel(make_record("fixture", "features.2"), net)


@pytest.fixture
def fixture_image() -> np.ndarray:
    rng = np.random.default_rng(11)
    return (rng.random((16, 16, 3)) * 255).astype(np.uint8)


class TwoRegionNet(nn.Module):
    """Class evidence split into disjoint color channels.

    A 1x1 conv detects red (class 0 evidence) and green (class 1 evidence);
    logits are the spatial means of those detector channels.
    """

    def __init__(self):
        super().__init__()
        self.detect = nn.Conv2d(3, 2, 1, bias=False)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.flatten = nn.Flatten()
        self.head = nn.Linear(2, 2, bias=False)
        with torch.no_grad():
            self.detect.weight.zero_()
            self.detect.weight[0, 0, 0, 0] = 1.0  # channel 0 <- red
            self.detect.weight[1, 1, 0, 0] = 1.0  # channel 1 <- green
            self.head.weight.copy_(torch.eye(2))

    def forward(self, x):
        return self.head(self.flatten(self.pool(self.detect(x))))


@pytest.fixture
def two_region_model() -> LoadedModel:
    return LoadedModel(make_record("two-region", "detect"), TwoRegionNet().double())


class DeepHeadNet(nn.Module):
    """Strided conv into a flatten head; per-position gradients are O(0.1),
    large enough for nested finite differences to resolve."""

    def __init__(self, seed: int = 3):
        super().__init__()
        torch.manual_seed(seed)
        self.features = nn.Sequential(nn.Conv2d(3, 3, 3, stride=2, padding=1))
        self.flatten = nn.Flatten()
        self.head = nn.Sequential(nn.Linear(3 * 16, 8), nn.ReLU(), nn.Linear(8, 3))
        with torch.no_grad():
            for p in self.parameters():
                p.copy_(torch.randn_like(p) * 0.3)

    def forward(self, x):
        return self.head(self.flatten(self.features(x)))


@pytest.fixture
def deep_head_model() -> LoadedModel:
    return LoadedModel(make_record("deep-head", "features.0", input_size=(8, 8)), DeepHeadNet().double())


@pytest.fixture
def two_region_image() -> np.ndarray:
    """Red patch top-left, green patch bottom-right, dark elsewhere."""
    img = np.zeros((16, 16, 3), dtype=np.uint8)
    img[2:6, 2:6, 0] = 255
    img[10:14, 10:14, 1] = 255
    return img


def tensor_image(model: LoadedModel, image: np.ndarray) -> torch.Tensor:
    return model.preprocess(image)


@pytest.fixture(scope="session")
def toy_workspace(tmp_path_factory):
    """Synthetic 10-class dataset, two trained toy models, and a warm store.

    Built once per session; precompute runs through the CLI so its exit
    codes and progress lines are exercised on the way.
    """
    import time

    from click.testing import CliRunner

    from cnncompare.cli import main as cli_main
    from toyworld import build_workspace

    base = tmp_path_factory.mktemp("toyworld")
    t0 = time.perf_counter()
    ws = build_workspace(base)
    ws["train_seconds"] = time.perf_counter() - t0
    runner = CliRunner()
    result = runner.invoke(cli_main, [
        "precompute",
        "--dataset", str(ws["dataset"]),
        "--registry", str(ws["registry"]),
        "--store", str(ws["store"]),
        "--hierarchy", str(ws["hierarchy"]),
        "--jobs", "2",
    ])
    assert result.exit_code == 0, result.output
    ws["precompute_output"] = result.output
    ws["total_seconds"] = time.perf_counter() - t0
    return ws
