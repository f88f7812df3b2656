"""Command-line entry point: the pipeline end to end.

Exit codes: 0 success, 1 validation failure, 2 I/O failure. Every run
echoes its resolved configuration to stderr so results can be reproduced.
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import click

from mosaix import kernels
from mosaix.errors import FormatError, MosaixError
from mosaix.model import (
    DatasetManifest,
    EvalConfig,
    MedianRule,
    Metric,
    load_manifest,
    save_manifest,
    validate_manifest,
)
from mosaix.mosaic import MosaicParams, build_mosaic, read_patch_csv, write_mosaic_json
from mosaix.report import render_table, report_from_predictions
from mosaix.retrieval import QueryResult, evaluate_lopo, majority_vote, retrieve
from mosaix.storage import convert_to_barcodes, load_manifest_embeddings
from mosaix.synth import SyntheticCohortSpec, generate_synthetic

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

PREDICTION_HEADER = ["query_wsi_id", "k", "true_label", "predicted_label",
                     "n_candidates", "tie_broken"]


def _echo_config(**kv):
    parts = " ".join(f"{k}={v}" for k, v in kv.items() if v is not None)
    click.echo(f"config: {parts} kernel={kernels.backend()}", err=True)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_valid_manifest(path: str) -> DatasetManifest:
    try:
        manifest = load_manifest(path)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except MosaixError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    violations = validate_manifest(manifest)
    if violations:
        for v in violations:
            click.echo(f"violation: {v}", err=True)
        _fail(EXIT_VALIDATION, f"{path}: manifest has {len(violations)} violation(s)")
    return manifest


def _metric(name: str) -> Metric:
    return Metric(name)


def _threads(ctx) -> int | None:
    return ctx.obj.get("threads")


def _data_dir(ctx) -> str | None:
    return ctx.obj.get("data_dir")


@click.group()
@click.option("--seed", type=int, default=42, show_default=True,
              help="Seed for every stochastic step (subcommands may override).")
@click.option("--threads", type=int, default=None,
              help="Worker threads for evaluation (default: all cores).")
@click.option("--data-dir", type=click.Path(), default=None,
              help="Root for embedding_ref resolution (overrides $MOSAIX_DATA_DIR).")
@click.pass_context
def main(ctx, seed, threads, data_dir):
    """Whole-slide image retrieval: mosaics, median-of-min matching,
    leave-one-patient-out evaluation and reports."""
    ctx.obj = {"seed": seed, "threads": threads, "data_dir": data_dir}


@main.command()
@click.option("--patches", "patches_path", required=True, type=click.Path(),
              help="Per-slide patch table CSV (patch_id,x,y,width,height,f0..).")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output mosaic JSON ({wsi_id: [patch ids]}).")
@click.option("--wsi-id", default=None, help="Slide id for the output (default: CSV stem).")
@click.option("--clusters", type=int, default=9, show_default=True,
              help="Color clusters (k-means k).")
@click.option("--fraction", type=float, default=0.15, show_default=True,
              help="Fraction of each cluster selected into the mosaic.")
@click.option("--min-per-cluster", type=int, default=1, show_default=True,
              help="Minimum patches kept per cluster.")
@click.option("--seed", type=int, default=None, help="Override the global seed.")
@click.pass_context
def mosaic(ctx, patches_path, out_path, wsi_id, clusters, fraction, min_per_cluster, seed):
    """Select a slide's mosaic patches from its patch table."""
    seed = ctx.obj["seed"] if seed is None else seed
    _echo_config(command="mosaic", seed=seed, clusters=clusters, fraction=fraction,
                 min_per_cluster=min_per_cluster)
    wsi_id = wsi_id or Path(patches_path).stem
    try:
        patches = read_patch_csv(patches_path)
        params = MosaicParams(n_clusters=clusters, selection_fraction=fraction,
                              min_per_cluster=min_per_cluster, rng_seed=seed)
        ids = build_mosaic(patches, params)
        write_mosaic_json({wsi_id: ids}, out_path)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except (MosaixError, ValueError) as exc:
        _fail(EXIT_VALIDATION, str(exc))
    click.echo(f"{wsi_id}: selected {len(ids)} of {len(patches)} patches -> {out_path}")


@main.command("convert-barcodes")
@click.option("--in", "in_path", required=True, type=click.Path(), help="Float32 embedding file.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Barcode output file.")
def convert_barcodes(in_path, out_path):
    """Binarize a float embedding file into a barcode file."""
    _echo_config(command="convert-barcodes")
    try:
        convert_to_barcodes(in_path, out_path)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except MosaixError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    click.echo(f"{in_path} -> {out_path}")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(),
              help="Dataset manifest JSON.")
@click.option("--query", "query_id", required=True, help="wsi_id to search for.")
@click.option("--metric", type=click.Choice([m.value for m in Metric]), default="cosine",
              show_default=True, help="Patch distance metric.")
@click.option("--median", "median_rule", type=click.Choice([r.value for r in MedianRule]),
              default="midpoint_average", show_default=True,
              help="Median rule for even patch counts.")
@click.option("--k", type=int, default=5, show_default=True, help="Rows to print.")
@click.pass_context
def search(ctx, manifest_path, query_id, metric, median_rule, k):
    """Rank the corpus against one query slide and print the top rows."""
    _echo_config(command="search", metric=metric, median=median_rule, k=k)
    manifest = _load_valid_manifest(manifest_path)
    config = EvalConfig(metric=_metric(metric), k_values=(k,),
                        median_rule=MedianRule(median_rule))
    try:
        embeddings = load_manifest_embeddings(manifest, manifest_path, _data_dir(ctx))
        by_id = {w.wsi_id: w for w in manifest.wsis}
        if query_id not in by_id:
            _fail(EXIT_VALIDATION, f"query wsi_id {query_id!r} not in manifest")
        corpus = [(w, embeddings[w.wsi_id]) for w in manifest.wsis]
        ranking = retrieve(by_id[query_id], embeddings[query_id], corpus, config)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except MosaixError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    click.echo(f"query {query_id} (true label {by_id[query_id].label})")
    click.echo("rank,wsi_id,patient_id,label,distance")
    for rank, cand in enumerate(ranking.candidates[:k], start=1):
        click.echo(f"{rank},{cand.wsi_id},{cand.patient_id},{cand.label},{cand.distance:.6f}")
    vote = majority_vote(ranking, k)
    click.echo(f"MV@{k} prediction: {vote.predicted_label}"
               + (" (tie broken by rank)" if vote.tie_broken else ""))


def prediction_rows(results: list[QueryResult], k_values: tuple[int, ...]):
    """Flatten evaluation results into prediction CSV rows."""
    for res in results:
        for k in k_values:
            if res.skipped:
                yield [res.wsi_id, k, res.true_label, "", 0, "false"]
            else:
                vote = res.votes[k]
                yield [res.wsi_id, k, res.true_label, vote.predicted_label,
                       res.n_candidates, "true" if vote.tie_broken else "false"]


@main.command("eval")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(),
              help="Dataset manifest JSON.")
@click.option("--metric", type=click.Choice([m.value for m in Metric]), default="cosine",
              show_default=True, help="Patch distance metric.")
@click.option("--median", "median_rule", type=click.Choice([r.value for r in MedianRule]),
              default="midpoint_average", show_default=True,
              help="Median rule for even patch counts.")
@click.option("--ks", default="1,3,5", show_default=True,
              help="Comma-separated k values for MV@k.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Prediction CSV output path.")
@click.pass_context
def eval_cmd(ctx, manifest_path, metric, median_rule, ks, out_path):
    """Leave-one-patient-out evaluation over a whole manifest."""
    try:
        k_values = tuple(int(v) for v in ks.split(","))
        config = EvalConfig(metric=_metric(metric), k_values=k_values,
                            median_rule=MedianRule(median_rule))
    except ValueError as exc:
        _fail(EXIT_VALIDATION, f"bad --ks or config: {exc}")
    _echo_config(command="eval", seed=ctx.obj["seed"], metric=metric, ks=ks,
                 median=median_rule, threads=_threads(ctx) or "auto")
    manifest = _load_valid_manifest(manifest_path)
    try:
        embeddings = load_manifest_embeddings(manifest, manifest_path, _data_dir(ctx))
        results = evaluate_lopo(manifest, embeddings, config, threads=_threads(ctx))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except MosaixError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    try:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(PREDICTION_HEADER)
            writer.writerows(prediction_rows(results, config.k_values))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    skipped = sum(1 for r in results if r.skipped)
    click.echo(f"{manifest.name}: {len(results)} queries "
               f"({skipped} skipped, no candidates) -> {out_path}")


def read_prediction_csv(path: str | Path):
    """Parse a prediction CSV into (wsi_id, k, true, predicted, n_candidates) rows."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PREDICTION_HEADER:
            raise FormatError(f"{path}: prediction CSV header must be "
                              f"{','.join(PREDICTION_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(PREDICTION_HEADER):
                raise FormatError(f"{path}:{lineno}: expected {len(PREDICTION_HEADER)} fields")
            try:
                rows.append((row[0], int(row[1]), row[2], row[3], int(row[4])))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    return rows


@main.command()
@click.option("--predictions", "prediction_paths", required=True, multiple=True,
              type=click.Path(), help="Prediction CSVs, one per backend (repeatable).")
@click.option("--labels", "manifest_path", required=True, type=click.Path(),
              help="Manifest JSON supplying the class set and dataset name.")
@click.option("--backends", default=None,
              help="Comma-separated backend names (default: prediction file stems).")
@click.option("--format", "fmt", type=click.Choice(["markdown", "csv"]), default="markdown",
              show_default=True, help="Output table format.")
@click.option("--decimals", type=int, default=1, show_default=True,
              help="Decimal places for percent cells.")
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Write the table here (default: stdout).")
def report(prediction_paths, manifest_path, backends, fmt, decimals, out_path):
    """Render the backend comparison table from prediction CSVs."""
    _echo_config(command="report", format=fmt, decimals=decimals)
    manifest = _load_valid_manifest(manifest_path)
    names = (backends.split(",") if backends
             else [Path(p).stem for p in prediction_paths])
    if len(names) != len(prediction_paths):
        _fail(EXIT_VALIDATION, f"{len(prediction_paths)} prediction files but "
                               f"{len(names)} backend names")
    try:
        reports = []
        for name, path in zip(names, prediction_paths):
            rows = read_prediction_csv(path)
            reports.append(report_from_predictions(rows, manifest.classes,
                                                   dataset=manifest.name, backend=name))
        table = render_table(reports, format=fmt, decimals=decimals)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except MosaixError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    if out_path:
        try:
            Path(out_path).write_text(table, encoding="utf-8")
        except OSError as exc:
            _fail(EXIT_IO, str(exc))
        click.echo(f"table -> {out_path}")
    else:
        click.echo(table, nl=False)


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Cohort output directory.")
@click.option("--classes", "n_classes", type=int, default=3, show_default=True,
              help="Number of classes.")
@click.option("--patients-per-class", type=int, default=40, show_default=True,
              help="Patients per class.")
@click.option("--wsis-per-patient", type=int, default=1, show_default=True,
              help="Slides per patient.")
@click.option("--patches", "patches_per_mosaic", type=int, default=16, show_default=True,
              help="Mosaic patches per slide.")
@click.option("--dim", type=int, default=64, show_default=True, help="Embedding dimension.")
@click.option("--separation", type=float, default=4.0, show_default=True,
              help="Inter-centroid distance in within-class stds.")
@click.option("--seed", type=int, default=None, help="Override the global seed.")
@click.pass_context
def synth(ctx, out_dir, n_classes, patients_per_class, wsis_per_patient,
          patches_per_mosaic, dim, separation, seed):
    """Generate a synthetic cohort (manifest + embedding files)."""
    seed = ctx.obj["seed"] if seed is None else seed
    _echo_config(command="synth", seed=seed, classes=n_classes,
                 patients_per_class=patients_per_class, wsis_per_patient=wsis_per_patient,
                 patches=patches_per_mosaic, dim=dim, separation=separation)
    try:
        spec = SyntheticCohortSpec(n_classes=n_classes, patients_per_class=patients_per_class,
                                   wsis_per_patient=wsis_per_patient,
                                   patches_per_mosaic=patches_per_mosaic, dim=dim,
                                   class_separation=separation, rng_seed=seed)
        manifest = generate_synthetic(spec, out_dir)
        save_manifest(manifest, Path(out_dir) / "manifest.json")
    except ValueError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    click.echo(f"{manifest.name}: {len(manifest.wsis)} WSIs -> {out_dir}")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(),
              help="Dataset manifest JSON.")
def validate(manifest_path):
    """Validate a manifest; exit 1 listing violations if any."""
    _echo_config(command="validate")
    try:
        manifest = load_manifest(manifest_path)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except MosaixError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    violations = validate_manifest(manifest)
    if violations:
        for v in violations:
            click.echo(f"violation: {v}")
        _fail(EXIT_VALIDATION, f"{manifest.name}: {len(violations)} violation(s)")
    click.echo(f"{manifest.name}: ok ({len(manifest.wsis)} WSIs, "
               f"{len(manifest.classes)} classes)")


if __name__ == "__main__":
    main()
