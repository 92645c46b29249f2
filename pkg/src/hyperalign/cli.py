"""Command-line surface: dataset generation, CSV import, training, evaluation,
grid sweeps, and report pretty-printing.

All commands are deterministic given the same inputs and seed; the only
run-dependent output field is the ``created_at`` stamp in JSON sidecars.
Set the ``HYPERALIGN_LOG`` environment variable (DEBUG/INFO/WARNING/...) to
control log verbosity. Options override config-file values, which override
the built-in defaults.
"""

import functools
import json
import logging
import os
from pathlib import Path

import click

from .alignment import SolverConfig
from .data import (
    SyntheticSpec,
    generate_synthetic,
    import_csv_dataset,
    load_dataset,
    save_dataset,
)
from .estimators import SweepConfig, fit_hyperalignment, save_train_result
from .evaluation import (
    REPORT_CSV_HEADER,
    EvalReport,
    loso_evaluate,
    parse_report_csv,
    reports_to_csv,
)
from .exceptions import HyperalignError
from .experiments import parse_sweep_csv, run_sweep, sweep_to_csv


def _friendly_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except HyperalignError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _load_config(path):
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise click.ClickException(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"config {path} is not valid JSON: {exc}") from exc


def _pick(cli_value, config, path, default):
    """CLI flag beats config file beats default."""
    if cli_value is not None:
        return cli_value
    node = config
    for key in path:
        if not isinstance(node, dict) or key not in node:
            return default
        node = node[key]
    return node


def _int_list(text):
    try:
        return [int(part) for part in str(text).replace(" ", "").split(",") if part]
    except ValueError as exc:
        raise click.ClickException(f"expected a comma-separated integer list: {text}") from exc


def _solver_options(func):
    for option in reversed(
        [
            click.option("--method", default=None, help="Alignment method(s), comma separated."),
            click.option("--k", type=int, default=None, help="Retained components (default min(T, V))."),
            click.option("--ridge", type=float, default=None, help="Whitening ridge."),
            click.option("--floor", type=float, default=None, help="Whitening eigenvalue floor."),
            click.option("--between-weight", type=float, default=None, help="Override the between-class weight."),
            click.option("--max-sweeps", type=int, default=None, help="Training sweep limit."),
            click.option("--tol", type=float, default=None, help="Relative convergence tolerance."),
            click.option("--strategy", type=click.Choice(["template", "pairwise"]), default=None, help="Training sweep strategy."),
            click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file."),
        ]
    ):
        func = option(func)
    return func


def _classifier_option(func):
    return click.option(
        "--classifier-penalty",
        type=float,
        default=None,
        help="Ridge penalty of the built-in classifier.",
    )(func)


def _build_solver(config, mode, k, ridge, floor, between_weight):
    return SolverConfig(
        mode=mode,
        ridge=_pick(ridge, config, ("solver", "ridge"), 0.0),
        floor=_pick(floor, config, ("solver", "floor"), 1e-10),
        k=_pick(k, config, ("solver", "k"), None),
        between_weight=_pick(
            between_weight, config, ("solver", "between_weight"), None
        ),
    )


def _build_sweep(config, max_sweeps, tol, strategy):
    return SweepConfig(
        max_sweeps=_pick(max_sweeps, config, ("sweep", "max_sweeps"), 20),
        tol=_pick(tol, config, ("sweep", "tol"), 1e-4),
        strategy=_pick(strategy, config, ("sweep", "strategy"), "template"),
    )


def _methods(method, config, default=("classical",)):
    raw = _pick(method, config, ("methods",), list(default))
    if isinstance(raw, str):
        raw = [part for part in raw.replace(" ", "").split(",") if part]
    methods = list(raw)
    if not methods:
        raise click.ClickException("no methods requested")
    return methods


@click.group()
def main():
    """Functional alignment toolkit for multi-subject response matrices."""
    level = os.environ.get("HYPERALIGN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


@main.command()
@click.option("--out", required=True, type=click.Path(), help="Output dataset directory.")
@click.option("--subjects", type=int, default=None, help="Number of subjects.")
@click.option("--classes", type=int, default=None, help="Number of stimulus classes.")
@click.option("--t-per-class", type=int, default=None, help="Time points per class.")
@click.option("--voxels", type=int, default=None, help="Number of voxels.")
@click.option("--sigma", type=float, default=None, help="Noise level.")
@click.option("--seed", type=int, default=None, help="Generator seed.")
@click.option("--shared-mixing/--distinct-mixing", default=None, help="Give every subject the same mixing matrix.")
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file.")
@_friendly_errors
def generate(out, subjects, classes, t_per_class, voxels, sigma, seed, shared_mixing, config_path):
    """Write a seeded synthetic dataset to --out."""
    config = _load_config(config_path)
    spec = SyntheticSpec(
        num_subjects=_pick(subjects, config, ("synthetic", "num_subjects"), 4),
        num_classes=_pick(classes, config, ("synthetic", "num_classes"), 2),
        t_per_class=_pick(t_per_class, config, ("synthetic", "t_per_class"), 8),
        v=_pick(voxels, config, ("synthetic", "v"), 32),
        noise_sigma=_pick(sigma, config, ("synthetic", "noise_sigma"), 0.0),
        seed=_pick(seed, config, ("synthetic", "seed"), 0),
        shared_mixing=_pick(shared_mixing, config, ("synthetic", "shared_mixing"), False),
    )
    ds = generate_synthetic(spec)
    manifest = save_dataset(ds, out)
    click.echo(
        f"wrote {spec.num_subjects} subjects, {ds.t}x{ds.v}, "
        f"{spec.num_classes} classes, sigma={spec.noise_sigma} -> {manifest}"
    )


@main.command("import-csv")
@click.argument("csv_files", nargs=-1, required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Output dataset directory.")
@click.option("--labels", "labels_path", type=click.Path(), default=None, help="Labels file, one class id per line.")
@click.option("--ids", default=None, help="Comma-separated subject ids (default: file stems).")
@_friendly_errors
def import_csv(csv_files, out, labels_path, ids):
    """Convert one CSV per subject (rows = time points) into a dataset."""
    subject_ids = [s for s in ids.split(",") if s] if ids else None
    ds = import_csv_dataset(csv_files, subject_ids, labels_path)
    manifest = save_dataset(ds, out)
    click.echo(f"imported {len(ds.subjects)} subjects, {ds.t}x{ds.v} -> {manifest}")


@main.command()
@click.argument("dataset", type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Output directory for maps + template.")
@_solver_options
@_friendly_errors
def align(dataset, out, method, k, ridge, floor, between_weight, max_sweeps, tol, strategy, config_path):
    """Train alignment maps and the shared template on a labeled dataset."""
    config = _load_config(config_path)
    mode = _pick(method, config, ("solver", "mode"), "classical")
    cfg = _build_solver(config, mode, k, ridge, floor, between_weight)
    sweep = _build_sweep(config, max_sweeps, tol, strategy)
    ds = load_dataset(dataset)
    result = fit_hyperalignment(ds, cfg, sweep)
    sidecar = save_train_result(result, out)
    for i, value in enumerate(result.objective_trace, start=1):
        click.echo(f"sweep {i}: mean pairwise ISC = {value:.6f}")
    status = "converged" if result.converged else "not converged"
    click.echo(f"{status} after {result.sweeps} sweeps -> {sidecar}")


@main.command()
@click.argument("dataset", type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Output directory for reports.")
@_solver_options
@_classifier_option
@_friendly_errors
def evaluate(dataset, out, method, k, ridge, floor, between_weight, max_sweeps, tol, strategy, classifier_penalty, config_path):
    """Leave-one-subject-out evaluation; writes one JSON per method plus a CSV."""
    config = _load_config(config_path)
    methods = _methods(method, config)
    cfg = _build_solver(
        config, "classical", k, ridge, floor, between_weight
    )
    sweep = _build_sweep(config, max_sweeps, tol, strategy)
    penalty = _pick(classifier_penalty, config, ("classifier_penalty",), 1.0)
    ds = load_dataset(dataset)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for m in methods:
        report = loso_evaluate(ds, cfg, sweep, method=m, classifier_penalty=penalty)
        reports.append(report)
        (out_dir / f"report_{m}.json").write_text(report.to_json())
        click.echo(
            f"{m}: accuracy {report.accuracy:.2f}% (std {report.accuracy_std:.2f}), "
            f"auc {report.auc:.2f}%, chance {report.chance_pct:.2f}%"
        )
    (out_dir / "report.csv").write_text(reports_to_csv(reports))
    click.echo(f"wrote {out_dir / 'report.csv'}")


@main.command()
@click.argument("dataset", type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Output directory for curves.csv.")
@click.option("--trs", default=None, help="Comma-separated TR counts.")
@click.option("--voxels", default=None, help="Comma-separated voxel counts.")
@click.option("--workers", type=int, default=None, help="Concurrent grid cells.")
@_solver_options
@_classifier_option
@_friendly_errors
def sweep(dataset, out, trs, voxels, workers, method, k, ridge, floor, between_weight, max_sweeps, tol, strategy, classifier_penalty, config_path):
    """Grid sweep over TR counts and ranked-voxel counts."""
    config = _load_config(config_path)
    methods = _methods(method, config)
    tr_grid = _int_list(_pick(trs, config, ("grids", "trs"), ""))
    voxel_grid = _int_list(_pick(voxels, config, ("grids", "voxels"), ""))
    if not tr_grid or not voxel_grid:
        raise click.ClickException("sweep needs --trs and --voxels grids")
    cfg = _build_solver(config, "classical", k, ridge, floor, between_weight)
    sweep_cfg = _build_sweep(config, max_sweeps, tol, strategy)
    penalty = _pick(classifier_penalty, config, ("classifier_penalty",), 1.0)
    n_workers = _pick(workers, config, ("workers",), 1)
    ds = load_dataset(dataset)
    cells = run_sweep(
        ds,
        tr_grid,
        voxel_grid,
        methods,
        cfg,
        sweep_cfg,
        classifier_penalty=penalty,
        workers=n_workers,
    )
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "curves.csv"
    csv_path.write_text(sweep_to_csv(cells))
    for c in cells:
        click.echo(
            f"tr={c.tr} voxels={c.voxels} {c.method}: "
            f"acc {c.mean_acc:.2f}% auc {c.mean_auc:.2f}%"
        )
    click.echo(f"wrote {csv_path}")


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path())
@_friendly_errors
def report(paths):
    """Pretty-print evaluation reports (JSON or CSV) and sweep curves (CSV)."""
    for path in paths:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise click.ClickException(f"cannot read {p}: {exc}") from exc
        if p.suffix == ".csv":
            if text.startswith(REPORT_CSV_HEADER):
                for fold, method, acc, auc in parse_report_csv(text):
                    click.echo(f"held-out {fold} {method}: acc {acc:.2f}% auc {auc:.2f}%")
                continue
            for cell in parse_sweep_csv(text):
                click.echo(
                    f"tr={cell.tr} voxels={cell.voxels} {cell.method}: "
                    f"acc {cell.mean_acc:.2f}% (std {cell.std_acc:.2f}) "
                    f"auc {cell.mean_auc:.2f}%"
                )
            continue
        rep = EvalReport.from_json(text)
        click.echo(
            f"{p}: method={rep.method} accuracy={rep.accuracy:.2f}% "
            f"(std {rep.accuracy_std:.2f}) auc={rep.auc:.2f}% "
            f"chance={rep.chance_pct:.2f}%"
        )
        for fold in rep.per_fold:
            click.echo(
                f"  held-out {fold.held_out_subject_id}: "
                f"acc {fold.accuracy:.2f}% auc {fold.auc:.2f}%"
            )


if __name__ == "__main__":
    main()
