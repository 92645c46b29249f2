"""Functional alignment of multi-subject response matrices.

Classical hyperalignment (multi-set CCA) and its supervised variant that
pools same-class time points, with an end-to-end classification pipeline:
iterative training sweep, shared template, label-free test-side alignment,
and leave-one-subject-out evaluation.
"""

from .alignment import (
    AlignmentMap,
    NeighborhoodMatrix,
    PairCovariances,
    SolverConfig,
    build_neighborhood,
    isc,
    mean_pairwise_isc,
    pair_covariances,
    solve_pair,
    solve_to_target,
)
from .classify import RidgeOneVsRest, accuracy_pct, auc_macro_pct
from .data import (
    LabeledDataset,
    LabelVector,
    SubjectData,
    SyntheticSpec,
    generate_synthetic,
    import_csv_dataset,
    load_dataset,
    save_dataset,
    standardize,
)
from .estimators import (
    Hyperalignment,
    SweepConfig,
    Template,
    TrainResult,
    align_to_template,
    fit_hyperalignment,
    load_train_result,
    save_train_result,
)
from .evaluation import EvalReport, FoldResult, loso_evaluate
from .exceptions import (
    DatasetIOError,
    HyperalignError,
    InvalidInputError,
    NumericalError,
    SchemaError,
)
from .experiments import SweepCell, rank_voxels, run_sweep, select_voxels, truncate_trs
from .linalg import SvdResult, inv_sqrt_psd, svd, sym_eig, symmetrize

__version__ = "0.1.0"

__all__ = [
    "AlignmentMap",
    "DatasetIOError",
    "EvalReport",
    "FoldResult",
    "Hyperalignment",
    "HyperalignError",
    "InvalidInputError",
    "LabeledDataset",
    "LabelVector",
    "NeighborhoodMatrix",
    "NumericalError",
    "PairCovariances",
    "RidgeOneVsRest",
    "SchemaError",
    "SolverConfig",
    "SubjectData",
    "SvdResult",
    "SweepCell",
    "SweepConfig",
    "SyntheticSpec",
    "Template",
    "TrainResult",
    "accuracy_pct",
    "align_to_template",
    "auc_macro_pct",
    "build_neighborhood",
    "fit_hyperalignment",
    "generate_synthetic",
    "import_csv_dataset",
    "inv_sqrt_psd",
    "isc",
    "load_dataset",
    "load_train_result",
    "loso_evaluate",
    "mean_pairwise_isc",
    "pair_covariances",
    "rank_voxels",
    "run_sweep",
    "save_dataset",
    "save_train_result",
    "select_voxels",
    "solve_pair",
    "solve_to_target",
    "standardize",
    "svd",
    "sym_eig",
    "symmetrize",
    "truncate_trs",
]
