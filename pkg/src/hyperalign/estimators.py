"""Multi-subject training sweep, shared template, and test-side alignment.

Training iterates the pairwise solver over subjects until the mapped data
stops moving, then averages the mapped training subjects into a shared
template. Unseen subjects are aligned to that template with the classical
(unsupervised) solver, so no labels are ever consumed at test time.
"""

import datetime
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .alignment import (
    AlignmentMap,
    SolverConfig,
    build_neighborhood,
    mean_pairwise_isc,
    solve_pair,
    solve_to_target,
)
from .data import (
    DatasetIOError,
    LabeledDataset,
    LabelVector,
    SubjectData,
    read_matrix,
    standardize,
    write_matrix,
)
from .exceptions import InvalidInputError, SchemaError
from .validation import as_matrix

SWEEP_STRATEGIES = ("template", "pairwise")


@dataclass(frozen=True)
class SweepConfig:
    """Iteration controls for the training sweep.

    ``template`` re-solves each subject against the re-standardized
    leave-one-out mean of the other subjects' currently mapped data;
    ``pairwise`` runs the literal all-pairs update where the latest pair
    solution wins. Updates apply in subject-index order either way, so runs
    are deterministic.
    """

    max_sweeps: int = 20
    tol: float = 1e-4
    strategy: str = "template"

    def __post_init__(self):
        if self.max_sweeps < 0:
            raise InvalidInputError("max_sweeps must be non-negative")
        if self.tol <= 0.0:
            raise InvalidInputError("tol must be positive")
        if self.strategy not in SWEEP_STRATEGIES:
            raise InvalidInputError(
                f"strategy must be one of {SWEEP_STRATEGIES}, got {self.strategy!r}"
            )


@dataclass(frozen=True)
class Template:
    """Shared ``T x k`` space: the mean of the mapped training subjects."""

    matrix: np.ndarray
    k: int
    source_subject_ids: tuple
    solver_mode: str

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_matrix(self.matrix, "matrix"))
        object.__setattr__(
            self, "source_subject_ids", tuple(self.source_subject_ids)
        )

    @property
    def t(self):
        return self.matrix.shape[0]


@dataclass
class TrainResult:
    """Everything the training sweep produced.

    ``objective_trace`` holds the mean pairwise ISC of the mapped training
    data after each sweep; ``converged`` is False when ``max_sweeps`` ran
    out before the mapped data stabilized.
    """

    maps: list
    template: Template
    sweeps: int
    objective_trace: list
    converged: bool
    subject_ids: tuple
    solver: SolverConfig
    sweep: SweepConfig


def _identity_map(v, k, cfg):
    return AlignmentMap(np.eye(v, k), k, cfg.ridge, cfg.floor, np.zeros(k))


def fit_hyperalignment(
    train: LabeledDataset, cfg: SolverConfig = None, sweep: SweepConfig = None
) -> TrainResult:
    """Iteratively align the training subjects and build the shared template.

    Maps start as identity truncated to ``k`` columns, so sweep zero's
    template is the plain un-aligned average. Each sweep visits subjects in
    index order and applies updates immediately (Gauss-Seidel). Convergence
    is declared when no subject's mapped data moved by more than ``tol``
    relative Frobenius norm.
    """
    cfg = cfg or SolverConfig()
    sweep = sweep or SweepConfig()
    if len(train.subjects) < 2:
        raise InvalidInputError("training needs at least two subjects")
    if train.labels is None:
        raise InvalidInputError("training needs labels")
    ds = train.standardize()
    xs = ds.matrices()
    t, v = ds.t, ds.v
    k = cfg.resolve_k(t, v)
    cfg_k = cfg.with_k(k)
    neighborhood = build_neighborhood(ds.labels) if cfg.mode == "ldha" else None

    n = len(xs)
    maps = [_identity_map(v, k, cfg_k) for _ in range(n)]
    mapped = [x @ m.r for x, m in zip(xs, maps)]
    trace = []
    converged = False
    sweeps_done = 0

    for _ in range(sweep.max_sweeps):
        previous = [m.copy() for m in mapped]
        if sweep.strategy == "template":
            for i in range(n):
                others = [mapped[j] for j in range(n) if j != i]
                target = standardize(sum(others) / len(others))
                map_i = solve_to_target(xs[i], target, neighborhood, cfg_k)
                maps[i] = map_i
                mapped[i] = xs[i] @ map_i.r
        else:
            for i in range(n):
                for j in range(i + 1, n):
                    map_i, map_j = solve_pair(xs[i], xs[j], neighborhood, cfg_k)
                    maps[i], maps[j] = map_i, map_j
                    mapped[i] = xs[i] @ map_i.r
                    mapped[j] = xs[j] @ map_j.r
        sweeps_done += 1
        trace.append(mean_pairwise_isc(mapped))
        moved = max(
            np.linalg.norm(cur - prev)
            / max(np.linalg.norm(cur), np.finfo(np.float64).tiny)
            for cur, prev in zip(mapped, previous)
        )
        if moved <= sweep.tol:
            converged = True
            break

    template = Template(
        sum(mapped) / n, k, ds.subject_ids, cfg.mode
    )
    return TrainResult(
        maps=maps,
        template=template,
        sweeps=sweeps_done,
        objective_trace=trace,
        converged=converged,
        subject_ids=ds.subject_ids,
        solver=cfg_k,
        sweep=sweep,
    )


def align_to_template(x, template: Template, ridge=0.0, floor=1e-10) -> AlignmentMap:
    """Classical alignment of one subject to a shared template.

    The template is re-standardized column-wise before solving (averaging
    destroys unit column norms) and keeps its own coordinates, so data
    mapped by the returned map is directly comparable with data mapped
    during training. By construction this consumes no labels.
    """
    a = as_matrix(x, "x")
    if a.shape[0] != template.t:
        raise InvalidInputError(
            f"subject has t={a.shape[0]}, template has t={template.t}"
        )
    cfg = SolverConfig(mode="classical", ridge=ridge, floor=floor, k=template.k)
    return solve_to_target(a, standardize(template.matrix), None, cfg)


class Hyperalignment(BaseEstimator):
    """Functional alignment of multi-subject response matrices.

    Fits one linear map per training subject so that mapped responses agree
    across subjects, optionally supervised by class labels (``mode="ldha"``)
    which pools same-class time points and down-weights cross-class pairs.

    Parameters
    ----------
    mode : {"classical", "ldha"}, default="classical"
        Cross-covariance flavor used while training.
    k : int or None, default=None
        Retained components per map; None means ``min(T, V)``.
    ridge : float, default=0.0
        Eigenvalue shift applied before whitening the voxel covariances.
    floor : float, default=1e-10
        Lower clamp on shifted eigenvalues (keeps whitening bounded on
        rank-deficient data).
    between_weight : float or None, default=None
        Override for the between-class weight in supervised mode; None uses
        the neighborhood nonzero count over ``T**2``.
    max_sweeps : int, default=20
    tol : float, default=1e-4
        Relative movement of mapped data below which training stops.
    strategy : {"template", "pairwise"}, default="template"

    Attributes
    ----------
    maps_ : list of AlignmentMap, one per training subject.
    template_ : Template, the shared space (mean of mapped training data).
    objective_trace_ : list of float, mean pairwise ISC after each sweep.
    n_sweeps_ : int
    converged_ : bool
    subject_ids_ : tuple of str

    Examples
    --------
    >>> est = Hyperalignment(mode="ldha", k=3)
    >>> est.fit([x0, x1, x2], y)                      # doctest: +SKIP
    >>> mapped_new = est.transform(x_new)             # doctest: +SKIP
    """

    def __init__(
        self,
        mode="classical",
        k=None,
        ridge=0.0,
        floor=1e-10,
        between_weight=None,
        max_sweeps=20,
        tol=1e-4,
        strategy="template",
    ):
        self.mode = mode
        self.k = k
        self.ridge = ridge
        self.floor = floor
        self.between_weight = between_weight
        self.max_sweeps = max_sweeps
        self.tol = tol
        self.strategy = strategy

    def _solver_config(self):
        return SolverConfig(
            mode=self.mode,
            ridge=self.ridge,
            floor=self.floor,
            k=self.k,
            between_weight=self.between_weight,
        )

    def _sweep_config(self):
        return SweepConfig(
            max_sweeps=self.max_sweeps, tol=self.tol, strategy=self.strategy
        )

    @staticmethod
    def _as_dataset(X, y):
        if isinstance(X, LabeledDataset):
            return X
        subjects = tuple(
            SubjectData(f"sub-{i:02d}", as_matrix(x, f"X[{i}]"))
            for i, x in enumerate(X)
        )
        labels = None if y is None else LabelVector.from_ids(y)
        return LabeledDataset(subjects, labels)

    def fit(self, X, y=None):
        """Fit per-subject maps.

        Parameters
        ----------
        X : LabeledDataset or sequence of (T, V) arrays.
        y : array of int class ids, length T. Ignored when ``X`` already
            carries labels.
        """
        result = fit_hyperalignment(
            self._as_dataset(X, y), self._solver_config(), self._sweep_config()
        )
        self.maps_ = result.maps
        self.template_ = result.template
        self.objective_trace_ = result.objective_trace
        self.n_sweeps_ = result.sweeps
        self.converged_ = result.converged
        self.subject_ids_ = result.subject_ids
        return self

    def transform(self, X):
        """Map one new ``(T, V)`` subject into the shared space, label-free."""
        if not hasattr(self, "template_"):
            raise InvalidInputError("estimator is not fitted")
        x = standardize(as_matrix(X, "X"))
        amap = align_to_template(x, self.template_, self.ridge, self.floor)
        return x @ amap.r

    def fit_transform(self, X, y=None):
        """Fit, then return the mapped training subjects (not re-alignments)."""
        self.fit(X, y)
        ds = self._as_dataset(X, y).standardize()
        return [x @ m.r for x, m in zip(ds.matrices(), self.maps_)]


# ---------------------------------------------------------------------------
# serialization

_SIDECAR = "train_result.json"


def save_train_result(result: TrainResult, dir_path) -> Path:
    """Write template + per-subject maps as binary containers with a JSON sidecar."""
    out = Path(dir_path)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "template.hamat", result.template.matrix)
    map_files = {}
    for sid, amap in zip(result.subject_ids, result.maps):
        fname = f"map_{sid}.hamat"
        write_matrix(out / fname, amap.r)
        map_files[sid] = fname
    sidecar = {
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "solver": asdict(result.solver),
        "sweep": asdict(result.sweep),
        "sweeps": result.sweeps,
        "converged": result.converged,
        "objective_trace": [float(v) for v in result.objective_trace],
        "subject_ids": list(result.subject_ids),
        "template": {
            "file": "template.hamat",
            "k": result.template.k,
            "solver_mode": result.template.solver_mode,
            "source_subject_ids": list(result.template.source_subject_ids),
        },
        "maps": [
            {
                "subject_id": sid,
                "file": map_files[sid],
                "canonical_corrs": [float(c) for c in amap.canonical_corrs],
            }
            for sid, amap in zip(result.subject_ids, result.maps)
        ],
    }
    path = out / _SIDECAR
    try:
        path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise DatasetIOError(f"cannot write sidecar: {exc}") from exc
    return path


def load_train_result(dir_path) -> TrainResult:
    base = Path(dir_path)
    try:
        sidecar = json.loads((base / _SIDECAR).read_text())
    except OSError as exc:
        raise DatasetIOError(f"cannot read sidecar in {base}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"sidecar in {base} is not valid JSON: {exc}") from exc
    solver = SolverConfig(**sidecar["solver"])
    sweep = SweepConfig(**sidecar["sweep"])
    tmpl_info = sidecar["template"]
    template = Template(
        read_matrix(base / tmpl_info["file"]),
        tmpl_info["k"],
        tuple(tmpl_info["source_subject_ids"]),
        tmpl_info["solver_mode"],
    )
    maps = []
    for entry in sidecar["maps"]:
        maps.append(
            AlignmentMap(
                read_matrix(base / entry["file"]),
                solver.k,
                solver.ridge,
                solver.floor,
                np.asarray(entry["canonical_corrs"], dtype=np.float64),
            )
        )
    return TrainResult(
        maps=maps,
        template=template,
        sweeps=sidecar["sweeps"],
        objective_trace=list(sidecar["objective_trace"]),
        converged=sidecar["converged"],
        subject_ids=tuple(sidecar["subject_ids"]),
        solver=solver,
        sweep=sweep,
    )
