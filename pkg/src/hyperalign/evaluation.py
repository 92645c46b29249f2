"""Leave-one-subject-out evaluation of the alignment + classification pipeline."""

import datetime
import json
from dataclasses import asdict, dataclass, replace

import numpy as np

from .alignment import SolverConfig
from .classify import RidgeOneVsRest, accuracy_pct, auc_macro_pct
from .data import LabeledDataset
from .estimators import SweepConfig, align_to_template, fit_hyperalignment
from .exceptions import InvalidInputError, SchemaError

METHODS = ("identity", "classical", "ldha")


@dataclass
class FoldResult:
    held_out_subject_id: str
    accuracy: float
    auc: float


@dataclass
class EvalReport:
    """Per-fold and aggregate classification scores of one method.

    ``accuracy``/``auc`` are fold means in percent; the std fields are
    fold-level standard deviations (population, since the folds are the
    whole leave-one-subject-out family, not a sample).
    """

    method: str
    accuracy: float
    auc: float
    accuracy_std: float
    auc_std: float
    chance_pct: float
    per_fold: list
    config: dict

    def to_dict(self):
        d = asdict(self)
        d["schema"] = "hyperalign.eval_report/1"
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("schema", None)
        d.pop("created_at", None)
        d["per_fold"] = [FoldResult(**f) for f in d["per_fold"]]
        return cls(**d)

    def to_json(self, timestamp=True):
        d = self.to_dict()
        if timestamp:
            d["created_at"] = datetime.datetime.now(
                datetime.timezone.utc
            ).isoformat()
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def csv_rows(self):
        """Long-format rows ``(fold, method, acc, auc)``, fold order preserved."""
        return [
            (f.held_out_subject_id, self.method, f.accuracy, f.auc)
            for f in self.per_fold
        ]


REPORT_CSV_HEADER = "fold,method,acc,auc"


def reports_to_csv(reports):
    lines = [REPORT_CSV_HEADER]
    for report in reports:
        for fold, method, acc, auc in report.csv_rows():
            lines.append(f"{fold},{method},{acc!r},{auc!r}")
    return "\n".join(lines) + "\n"


def parse_report_csv(text):
    """Inverse of :func:`reports_to_csv`; floats round-trip exactly."""
    lines = [line for line in text.strip().splitlines() if line]
    if not lines or lines[0] != REPORT_CSV_HEADER:
        raise SchemaError("not a report CSV (unexpected header)")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 4:
            raise SchemaError(f"malformed report CSV row: {line!r}")
        fold, method, acc, auc = parts
        rows.append((fold, method, float(acc), float(auc)))
    return rows


def _fold_features(ds, held_idx, cfg, sweep, method):
    """Train/test feature matrices for one fold; labels never reach alignment."""
    train_subjects = tuple(
        s for i, s in enumerate(ds.subjects) if i != held_idx
    )
    held = ds.subjects[held_idx]
    if method == "identity":
        train = np.vstack([s.x for s in train_subjects])
        return train, held.x
    result = fit_hyperalignment(
        LabeledDataset(train_subjects, ds.labels), replace(cfg, mode=method), sweep
    )
    train = np.vstack(
        [s.x @ m.r for s, m in zip(train_subjects, result.maps)]
    )
    amap = align_to_template(held.x, result.template, cfg.ridge, cfg.floor)
    return train, held.x @ amap.r


def loso_evaluate(
    ds: LabeledDataset,
    cfg: SolverConfig = None,
    sweep: SweepConfig = None,
    method: str = None,
    classifier_penalty: float = 1.0,
) -> EvalReport:
    """Leave-one-subject-out evaluation.

    For every held-out subject the remaining subjects are aligned and a
    classifier is trained on their stacked mapped rows; the held-out subject
    is then aligned to the learned template without labels and scored
    against the shared label vector. ``method="identity"`` bypasses
    alignment entirely and classifies the standardized voxel data as-is.
    """
    cfg = cfg or SolverConfig()
    sweep = sweep or SweepConfig()
    method = method or cfg.mode
    if method not in METHODS:
        raise InvalidInputError(f"method must be one of {METHODS}, got {method!r}")
    if ds.labels is None:
        raise InvalidInputError("evaluation needs labels")
    if len(ds.subjects) < 3:
        raise InvalidInputError("leave-one-subject-out needs at least 3 subjects")
    ds = ds.standardize()
    y = ds.labels.y
    num_classes = ds.labels.num_classes
    n = len(ds.subjects)

    folds = []
    for held_idx in range(n):
        train_feats, test_feats = _fold_features(ds, held_idx, cfg, sweep, method)
        clf = RidgeOneVsRest(classifier_penalty).fit(
            train_feats, np.tile(y, n - 1), num_classes=num_classes
        )
        scores = clf.decision_function(test_feats)
        pred = np.argmax(scores, axis=1)
        folds.append(
            FoldResult(
                held_out_subject_id=ds.subjects[held_idx].subject_id,
                accuracy=accuracy_pct(y, pred),
                auc=auc_macro_pct(scores, y, num_classes),
            )
        )

    accs = np.array([f.accuracy for f in folds])
    aucs = np.array([f.auc for f in folds])
    return EvalReport(
        method=method,
        accuracy=float(accs.mean()),
        auc=float(aucs.mean()),
        accuracy_std=float(accs.std()),
        auc_std=float(aucs.std()),
        chance_pct=100.0 / num_classes,
        per_fold=folds,
        config={
            "method": method,
            "solver": asdict(cfg),
            "sweep": asdict(sweep),
            "classifier_penalty": classifier_penalty,
            "num_subjects": n,
            "t": ds.t,
            "v": ds.v,
            "num_classes": num_classes,
        },
    )
