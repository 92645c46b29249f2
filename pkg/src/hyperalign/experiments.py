"""Grid experiments over time-point counts and ranked voxel counts.

Each grid cell truncates the dataset to its first ``tr`` rows (stratified by
class so no class drops out), keeps the top ``voxels`` columns by pooled
variance of the truncated data, and runs the full leave-one-subject-out
evaluation for each requested method.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .alignment import SolverConfig
from .data import LabeledDataset, LabelVector, SubjectData
from .estimators import SweepConfig
from .evaluation import METHODS, loso_evaluate
from .exceptions import InvalidInputError, SchemaError


def stratified_tr_indices(labels: LabelVector, tr_count):
    """Row indices of a class-stratified prefix truncation, in time order.

    Takes the first ``tr_count // num_classes`` rows of every class (the
    remainder goes to the lowest class ids), so every class survives even
    at small counts.
    """
    if tr_count < labels.num_classes:
        raise InvalidInputError(
            f"tr_count={tr_count} is below the class count {labels.num_classes}"
        )
    if tr_count > len(labels):
        raise InvalidInputError(
            f"tr_count={tr_count} exceeds the dataset t={len(labels)}"
        )
    base, extra = divmod(tr_count, labels.num_classes)
    counts = labels.class_counts()
    picked = []
    for c in range(labels.num_classes):
        want = base + (1 if c < extra else 0)
        if want > counts[c]:
            raise InvalidInputError(
                f"class {c} has only {counts[c]} rows, need {want}"
            )
        picked.append(np.flatnonzero(labels.y == c)[:want])
    return np.sort(np.concatenate(picked))


def truncate_trs(ds: LabeledDataset, tr_count) -> LabeledDataset:
    """Class-stratified row truncation. Output is not re-standardized."""
    if ds.labels is None:
        raise InvalidInputError("truncation needs labels")
    rows = stratified_tr_indices(ds.labels, tr_count)
    subjects = tuple(
        SubjectData(s.subject_id, s.x[rows]) for s in ds.subjects
    )
    labels = LabelVector(ds.labels.y[rows], ds.labels.num_classes)
    return LabeledDataset(subjects, labels)


def rank_voxels(ds: LabeledDataset):
    """Voxel order by decreasing variance pooled over all subjects' rows.

    Ties keep their original column order, so the ranking is deterministic.
    """
    pooled = np.vstack(ds.matrices())
    variance = pooled.var(axis=0)
    return np.argsort(-variance, kind="stable")


def select_voxels(ds: LabeledDataset, columns) -> LabeledDataset:
    columns = np.asarray(columns, dtype=np.int64)
    if columns.size == 0 or columns.min() < 0 or columns.max() >= ds.v:
        raise InvalidInputError("voxel selection is empty or out of range")
    subjects = tuple(
        SubjectData(s.subject_id, s.x[:, columns]) for s in ds.subjects
    )
    return LabeledDataset(subjects, ds.labels)


@dataclass
class SweepCell:
    tr: int
    voxels: int
    method: str
    mean_acc: float
    std_acc: float
    mean_auc: float


SWEEP_CSV_HEADER = "tr,voxels,method,mean_acc,std_acc,mean_auc"


def sweep_to_csv(cells):
    lines = [SWEEP_CSV_HEADER]
    for c in cells:
        lines.append(
            f"{c.tr},{c.voxels},{c.method},{c.mean_acc!r},{c.std_acc!r},{c.mean_auc!r}"
        )
    return "\n".join(lines) + "\n"


def parse_sweep_csv(text):
    """Inverse of :func:`sweep_to_csv`; floats round-trip exactly."""
    lines = [line for line in text.strip().splitlines() if line]
    if not lines or lines[0] != SWEEP_CSV_HEADER:
        raise SchemaError("not a sweep CSV (unexpected header)")
    cells = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 6:
            raise SchemaError(f"malformed sweep CSV row: {line!r}")
        tr, voxels, method, acc, std, auc = parts
        cells.append(
            SweepCell(int(tr), int(voxels), method, float(acc), float(std), float(auc))
        )
    return cells


def run_sweep(
    ds: LabeledDataset,
    tr_grid,
    voxel_grid,
    methods,
    cfg: SolverConfig = None,
    sweep: SweepConfig = None,
    classifier_penalty: float = 1.0,
    workers: int = 1,
):
    """Evaluate every ``(tr, voxels, method)`` grid cell.

    Cells may run concurrently (``workers > 1``) but results always come
    back in deterministic grid order: tr-major, then voxels, then method.
    """
    cfg = cfg or SolverConfig()
    sweep = sweep or SweepConfig()
    tr_grid = [int(t) for t in tr_grid]
    voxel_grid = [int(v) for v in voxel_grid]
    methods = list(methods)
    if not tr_grid or not voxel_grid:
        raise InvalidInputError("tr and voxel grids must be non-empty")
    if not methods:
        raise InvalidInputError("methods must be non-empty")
    for m in methods:
        if m not in METHODS:
            raise InvalidInputError(f"unknown method {m!r}")
    if ds.labels is None:
        raise InvalidInputError("sweep needs labels")
    for t in tr_grid:
        if t > ds.t:
            raise InvalidInputError(f"tr grid value {t} exceeds dataset t={ds.t}")
    for v in voxel_grid:
        if v < 1 or v > ds.v:
            raise InvalidInputError(f"voxel grid value {v} is outside [1, {ds.v}]")

    def run_cell(tr, voxels, method):
        sub = truncate_trs(ds, tr)
        order = rank_voxels(sub)
        sub = select_voxels(sub, order[:voxels])
        report = loso_evaluate(
            sub, cfg, sweep, method=method, classifier_penalty=classifier_penalty
        )
        return SweepCell(
            tr=tr,
            voxels=voxels,
            method=method,
            mean_acc=report.accuracy,
            std_acc=report.accuracy_std,
            mean_auc=report.auc,
        )

    grid = [
        (tr, voxels, method)
        for tr in tr_grid
        for voxels in voxel_grid
        for method in methods
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda cell: run_cell(*cell), grid))
    return [run_cell(*cell) for cell in grid]
