"""Subject response matrices, labels, dataset IO, and the synthetic generator.

A dataset is a set of per-subject ``T x V`` matrices (time points by voxels)
that share a common row-synchronized stimulus, plus one label vector of
length ``T`` for labeled (training) data.

On disk a dataset is a directory with a JSON manifest and one binary
container per subject:

* ``manifest.json``: ``{"subjects": [{"id", "file"}, ...], "labels_file"?,
  "t", "v"}``
* matrix container: 8-byte magic ``HAMATRX1``, then two little-endian u64
  values (rows, cols), then row-major little-endian float64 entries
* labels file: one integer class id per line, length ``T``

The binary container round-trips bit-exactly, which the regression tests
rely on. CSV is supported as an import convenience only.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DatasetIOError, InvalidInputError, SchemaError
from .validation import as_label_array, as_matrix

MATRIX_MAGIC = b"HAMATRX1"
_HEADER = struct.Struct("<QQ")


def standardize(x):
    """Center each column and scale it to unit Euclidean norm.

    Constant columns (dead voxels) become all-zero instead of raising; they
    then contribute nothing to correlation sums. Requires at least two rows.
    """
    a = as_matrix(x, "x")
    if a.shape[0] < 2:
        raise InvalidInputError("standardize needs at least 2 rows")
    centered = a - a.mean(axis=0)
    norms = np.linalg.norm(centered, axis=0)
    # Columns whose centered norm is at rounding level are treated as constant.
    cutoff = 1e-12 * max(1.0, float(np.abs(a).max()))
    dead = norms <= cutoff
    centered[:, dead] = 0.0
    norms[dead] = 1.0
    return centered / norms


def is_standardized(x, atol=1e-9):
    """True if every column has zero mean and unit norm (or is all-zero)."""
    a = as_matrix(x, "x")
    if np.abs(a.mean(axis=0)).max(initial=0.0) > atol:
        return False
    norms = np.linalg.norm(a, axis=0)
    return bool(np.all((np.abs(norms - 1.0) <= atol) | (norms <= atol)))


@dataclass(frozen=True)
class SubjectData:
    """One subject's ``T x V`` response matrix plus identity metadata."""

    subject_id: str
    x: np.ndarray
    standardized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "x", as_matrix(self.x, "x"))

    @property
    def t(self):
        return self.x.shape[0]

    @property
    def v(self):
        return self.x.shape[1]

    def standardize(self) -> "SubjectData":
        if self.standardized:
            return self
        return SubjectData(self.subject_id, standardize(self.x), standardized=True)


@dataclass(frozen=True)
class LabelVector:
    """Integer class ids for the ``T`` synchronized time points."""

    y: np.ndarray
    num_classes: int

    def __post_init__(self):
        y = as_label_array(self.y)
        if self.num_classes < 1:
            raise InvalidInputError("num_classes must be positive")
        if y.min() < 0 or y.max() >= self.num_classes:
            raise InvalidInputError("class ids must lie in [0, num_classes)")
        present = np.unique(y)
        if present.size != self.num_classes:
            raise InvalidInputError("every class id must appear at least once")
        object.__setattr__(self, "y", y)

    @classmethod
    def from_ids(cls, ids) -> "LabelVector":
        y = as_label_array(ids)
        if y.min() < 0:
            raise InvalidInputError("class ids must be non-negative")
        return cls(y, int(y.max()) + 1)

    def __len__(self):
        return self.y.shape[0]

    def class_counts(self):
        return np.bincount(self.y, minlength=self.num_classes)


@dataclass(frozen=True)
class LabeledDataset:
    """Ordered subjects sharing one time-synchronized label vector.

    ``labels`` is ``None`` for unlabeled (test-side) collections. Instances
    are treated as immutable after construction.
    """

    subjects: tuple
    labels: LabelVector | None = None

    def __post_init__(self):
        subjects = tuple(self.subjects)
        if not subjects:
            raise InvalidInputError("a dataset needs at least one subject")
        t, v = subjects[0].x.shape
        for s in subjects:
            if s.x.shape != (t, v):
                raise SchemaError(
                    f"subject {s.subject_id!r} has shape {s.x.shape}, expected {(t, v)}"
                )
        if self.labels is not None and len(self.labels) != t:
            raise SchemaError(
                f"labels have length {len(self.labels)}, expected t={t}"
            )
        object.__setattr__(self, "subjects", subjects)

    @property
    def t(self):
        return self.subjects[0].t

    @property
    def v(self):
        return self.subjects[0].v

    @property
    def subject_ids(self):
        return tuple(s.subject_id for s in self.subjects)

    def matrices(self):
        return [s.x for s in self.subjects]

    def standardize(self) -> "LabeledDataset":
        return LabeledDataset(
            tuple(s.standardize() for s in self.subjects), self.labels
        )


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the seeded synthetic multi-subject generator.

    ``shared_mixing`` gives every subject the same orthogonal mixing matrix,
    which makes subjects identical when ``noise_sigma`` is zero (useful as a
    no-alignment-needed baseline).
    """

    num_subjects: int
    num_classes: int
    t_per_class: int
    v: int
    noise_sigma: float = 0.0
    seed: int = 0
    shared_mixing: bool = False

    def __post_init__(self):
        for name in ("num_subjects", "num_classes", "t_per_class", "v"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be a positive integer")
        if self.noise_sigma < 0.0:
            raise InvalidInputError("noise_sigma must be non-negative")
        if self.seed < 0:
            raise InvalidInputError("seed must be non-negative")
        if self.t > self.v:
            raise InvalidInputError(
                f"t = t_per_class * num_classes = {self.t} must not exceed v = {self.v}"
            )

    @property
    def t(self):
        return self.num_classes * self.t_per_class


def random_orthogonal(dim, rng):
    """Orthogonal matrix from the QR of a Gaussian draw, sign-fixed."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.where(np.diag(r) < 0.0, -1.0, 1.0)


def generate_synthetic(spec: SyntheticSpec) -> LabeledDataset:
    """Deterministic multi-subject dataset with a known linear un-mixing.

    One latent pattern of length ``v`` is drawn per class; subject ``i``'s
    row for time ``t`` is the pattern of class ``y_t`` mixed through a
    per-subject random orthogonal matrix, plus Gaussian noise scaled by
    ``noise_sigma``. Rows are grouped by class (all class-0 rows first) and
    each subject is column-standardized. With zero noise an exact linear
    un-mixing exists, so alignment is fully recoverable.
    """
    rng = np.random.default_rng(spec.seed)
    latents = rng.standard_normal((spec.num_classes, spec.v))
    y = np.repeat(np.arange(spec.num_classes, dtype=np.int64), spec.t_per_class)
    mixing = None
    subjects = []
    for i in range(spec.num_subjects):
        if mixing is None or not spec.shared_mixing:
            mixing = random_orthogonal(spec.v, rng)
        raw = latents[y] @ mixing
        if spec.noise_sigma > 0.0:
            raw = raw + spec.noise_sigma * rng.standard_normal(raw.shape)
        subjects.append(
            SubjectData(f"sub-{i:02d}", standardize(raw), standardized=True)
        )
    return LabeledDataset(tuple(subjects), LabelVector(y, spec.num_classes))


# ---------------------------------------------------------------------------
# binary container + manifest IO


def write_matrix(path, a):
    a = np.ascontiguousarray(np.asarray(a, dtype="<f8"))
    if a.ndim != 2:
        raise InvalidInputError(f"matrix must be 2-D, got shape {a.shape}")
    try:
        with open(path, "wb") as fh:
            fh.write(MATRIX_MAGIC)
            fh.write(_HEADER.pack(a.shape[0], a.shape[1]))
            fh.write(a.tobytes())
    except OSError as exc:
        raise DatasetIOError(f"cannot write matrix file {path}: {exc}") from exc


def read_matrix(path):
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise DatasetIOError(f"cannot read matrix file {path}: {exc}") from exc
    if len(blob) < len(MATRIX_MAGIC) + _HEADER.size or blob[:8] != MATRIX_MAGIC:
        raise SchemaError(f"{path} is not a matrix container (bad header)")
    rows, cols = _HEADER.unpack_from(blob, len(MATRIX_MAGIC))
    offset = len(MATRIX_MAGIC) + _HEADER.size
    if len(blob) != offset + rows * cols * 8:
        raise SchemaError(f"{path} is truncated or padded")
    data = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=offset)
    return data.astype(np.float64).reshape(rows, cols)


def _labels_to_text(labels: LabelVector) -> str:
    return "".join(f"{v}\n" for v in labels.y.tolist())


def read_labels_file(path) -> LabelVector:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DatasetIOError(f"cannot read labels file {path}: {exc}") from exc
    try:
        ids = [int(line) for line in text.split()]
    except ValueError as exc:
        raise SchemaError(f"labels file {path} must hold one integer per line") from exc
    if not ids:
        raise SchemaError(f"labels file {path} is empty")
    try:
        return LabelVector.from_ids(ids)
    except InvalidInputError as exc:
        raise SchemaError(f"labels file {path}: {exc}") from exc


def save_dataset(ds: LabeledDataset, dir_path) -> Path:
    """Write one container per subject plus the manifest; returns the manifest path."""
    out = Path(dir_path)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for s in ds.subjects:
        fname = f"{s.subject_id}.hamat"
        write_matrix(out / fname, s.x)
        entries.append({"id": s.subject_id, "file": fname})
    manifest = {"subjects": entries, "t": ds.t, "v": ds.v}
    if ds.labels is not None:
        labels_name = "labels.txt"
        try:
            (out / labels_name).write_text(_labels_to_text(ds.labels))
        except OSError as exc:
            raise DatasetIOError(f"cannot write labels file: {exc}") from exc
        manifest["labels_file"] = labels_name
    manifest_path = out / "manifest.json"
    try:
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise DatasetIOError(f"cannot write manifest: {exc}") from exc
    return manifest_path


def load_dataset(path) -> LabeledDataset:
    """Load a dataset from a manifest path or a directory containing one."""
    p = Path(path)
    manifest_path = p / "manifest.json" if p.is_dir() else p
    try:
        text = manifest_path.read_text()
    except OSError as exc:
        raise DatasetIOError(f"cannot read manifest {manifest_path}: {exc}") from exc
    try:
        manifest = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc
    for key in ("subjects", "t", "v"):
        if key not in manifest:
            raise SchemaError(f"manifest {manifest_path} lacks required key {key!r}")
    t, v = int(manifest["t"]), int(manifest["v"])
    base = manifest_path.parent
    subjects = []
    for entry in manifest["subjects"]:
        if "id" not in entry or "file" not in entry:
            raise SchemaError("every subject entry needs 'id' and 'file'")
        x = read_matrix(base / entry["file"])
        if x.shape != (t, v):
            raise SchemaError(
                f"subject {entry['id']!r} has shape {x.shape}, manifest says {(t, v)}"
            )
        subjects.append(SubjectData(entry["id"], x))
    labels = None
    if manifest.get("labels_file"):
        labels = read_labels_file(base / manifest["labels_file"])
        if len(labels) != t:
            raise SchemaError(f"labels have length {len(labels)}, expected t={t}")
    return LabeledDataset(tuple(subjects), labels)


def read_csv_matrix(path):
    """Plain numeric CSV, rows = time points."""
    try:
        a = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except OSError as exc:
        raise DatasetIOError(f"cannot read CSV {path}: {exc}") from exc
    except ValueError as exc:
        raise SchemaError(f"CSV {path} is not a numeric matrix: {exc}") from exc
    return as_matrix(a, "csv matrix")


def import_csv_dataset(csv_paths, subject_ids=None, labels_path=None) -> LabeledDataset:
    """Build a dataset from one CSV per subject (import convenience)."""
    paths = [Path(p) for p in csv_paths]
    if not paths:
        raise InvalidInputError("need at least one CSV file")
    if subject_ids is None:
        subject_ids = [p.stem for p in paths]
    if len(subject_ids) != len(paths):
        raise InvalidInputError("subject_ids must match the number of CSV files")
    subjects = tuple(
        SubjectData(sid, read_csv_matrix(p)) for sid, p in zip(subject_ids, paths)
    )
    labels = read_labels_file(labels_path) if labels_path else None
    return LabeledDataset(subjects, labels)
