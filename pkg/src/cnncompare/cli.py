"""Command-line pipeline: ingest a dataset, warm the artifact store, serve."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import ServiceConfig
from .dataset import ingest as ingest_dataset
from .errors import CompareError
from .hierarchy import ClassHierarchy
from .pipeline import PrecomputeOptions, precompute
from .registry import load_registry
from .store import ArtifactStore

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_TOTAL_FAILURE = 2


@click.group()
def main():
    """Offline pipeline and service for CNN comparison studies."""


@main.command("ingest")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write the manifest JSON here.")
def ingest_cmd(dataset_dir, out_path):
    """Scan a class-per-directory dataset into a manifest."""
    try:
        manifest = ingest_dataset(dataset_dir)
    except CompareError as e:
        click.echo(f"error code={e.code} message={e.message}", err=True)
        sys.exit(EXIT_TOTAL_FAILURE)
    click.echo(f"dataset={dataset_dir} images={manifest.size} "
               f"classes={len(manifest.class_labels)} digest={manifest.dataset_digest}")
    if out_path:
        manifest.save(out_path)
        click.echo(f"manifest={out_path}")
    sys.exit(EXIT_OK)


@main.command("precompute")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--registry", "registry_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_dir", required=True, type=click.Path(file_okay=False))
@click.option("--hierarchy", "hierarchy_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--models", default=None, help="Comma-separated model_id filter.")
@click.option("--jobs", default=1, type=int, show_default=True)
@click.option("--seed", default=42, type=int, show_default=True)
@click.option("--perplexity", default=30.0, type=float, show_default=True)
@click.option("--example-image", default=None, help="image_ref used for method examples.")
@click.option("--methods", default=None, help="Comma-separated explanation methods.")
def precompute_cmd(dataset_dir, registry_path, store_dir, hierarchy_path, models,
                   jobs, seed, perplexity, example_image, methods):
    """Build all phase-1 artifacts for every registered model."""
    from .explain import Method

    try:
        manifest = ingest_dataset(dataset_dir)
        records = load_registry(registry_path)
        if methods:
            [Method(m) for m in methods.split(",")]
    except CompareError as e:
        click.echo(f"error code={e.code} message={e.message}", err=True)
        sys.exit(EXIT_TOTAL_FAILURE)
    except ValueError as e:
        click.echo(f"error code=unknown_method message={e}", err=True)
        sys.exit(EXIT_TOTAL_FAILURE)
    if hierarchy_path:
        hierarchy = ClassHierarchy.load(hierarchy_path)
    else:
        n = max(manifest.class_labels) + 1
        hierarchy = ClassHierarchy.flat(n)
    options = PrecomputeOptions(
        seed=seed,
        perplexity=perplexity,
        jobs=jobs,
        models=models.split(",") if models else None,
        methods=tuple(Method(m) for m in methods.split(",")) if methods else tuple(Method),
        example_image=example_image,
    )
    store = ArtifactStore(store_dir)

    def on_event(event):
        line = f"key={event.token} status={event.status} secs={event.seconds:.3f}"
        click.echo(line)

    summary = precompute(manifest, records, store, hierarchy, options,
                         on_event=on_event, base_dir=Path(registry_path).parent)
    for m in summary.models:
        click.echo(f"model={m.model_id} ok={str(m.ok).lower()}")
        if not m.ok:
            click.echo(f"  error: {m.error}", err=True)
    for model_id, failed in summary.failed_images.items():
        click.echo(f"model={model_id} failed_images={len(failed)}")
    if summary.all_failed:
        sys.exit(EXIT_TOTAL_FAILURE)
    if summary.any_failed or summary.failed_images:
        sys.exit(EXIT_PARTIAL)
    sys.exit(EXIT_OK)


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
def serve_cmd(config_path, host, port):
    """Run the comparison HTTP service."""
    import uvicorn

    from .service import create_app

    config = ServiceConfig.load(config_path)
    if host:
        config.host = host
    if port:
        config.port = port
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port)


if __name__ == "__main__":
    main()
