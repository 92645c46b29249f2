import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperalign import (
    DatasetIOError,
    InvalidInputError,
    LabeledDataset,
    LabelVector,
    SchemaError,
    SubjectData,
    SyntheticSpec,
    generate_synthetic,
    import_csv_dataset,
    isc,
    load_dataset,
    save_dataset,
    standardize,
)
from hyperalign.data import is_standardized, read_matrix, write_matrix


class TestStandardize:
    def test_zero_mean_column_scales_to_unit_norm(self):
        out = standardize(np.array([[1.0], [-1.0]]))
        assert np.allclose(out[:, 0], [1 / np.sqrt(2), -1 / np.sqrt(2)])

    def test_constant_column_becomes_zero(self):
        out = standardize(np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]))
        assert np.array_equal(out[:, 0], np.zeros(3))

    def test_hand_arithmetic(self):
        out = standardize(np.array([[0.0], [1.0], [2.0]]))
        assert np.allclose(out[:, 0], np.array([-1.0, 0.0, 1.0]) / np.sqrt(2))

    def test_result_is_standardized(self):
        rng = np.random.default_rng(0)
        out = standardize(rng.standard_normal((7, 5)) * 10 + 3)
        assert is_standardized(out)

    @settings(max_examples=50, deadline=None)
    @given(
        st.integers(min_value=2, max_value=6),
        st.integers(min_value=1, max_value=5),
        st.integers(min_value=0, max_value=2**31),
    )
    def test_idempotent(self, t, v, seed):
        x = np.random.default_rng(seed).standard_normal((t, v)) * 5
        once = standardize(x)
        assert np.abs(standardize(once) - once).max() <= 1e-12

    def test_self_isc_is_one(self):
        rng = np.random.default_rng(1)
        x = standardize(rng.standard_normal((9, 6)))
        assert isc(x, x) == pytest.approx(1.0, abs=1e-9)

    def test_rejects_short_and_non_finite(self):
        with pytest.raises(InvalidInputError):
            standardize(np.ones((1, 3)))
        with pytest.raises(InvalidInputError):
            standardize(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestTypes:
    def test_label_vector_validates_range_and_coverage(self):
        LabelVector(np.array([0, 1, 1, 0]), 2)
        with pytest.raises(InvalidInputError):
            LabelVector(np.array([0, 2]), 2)
        with pytest.raises(InvalidInputError):
            LabelVector(np.array([0, 0]), 2)  # class 1 never appears

    def test_label_vector_from_ids(self):
        labels = LabelVector.from_ids([1, 0, 2, 1])
        assert labels.num_classes == 3
        assert np.array_equal(labels.class_counts(), [1, 2, 1])

    def test_dataset_rejects_shape_mismatch(self):
        a = SubjectData("a", np.zeros((4, 3)))
        b = SubjectData("b", np.zeros((5, 3)))
        with pytest.raises(SchemaError):
            LabeledDataset((a, b))

    def test_dataset_rejects_label_length_mismatch(self):
        a = SubjectData("a", np.zeros((4, 3)))
        with pytest.raises(SchemaError):
            LabeledDataset((a,), LabelVector(np.array([0, 1, 0]), 2))

    def test_subject_rejects_non_finite(self):
        with pytest.raises(InvalidInputError):
            SubjectData("a", np.array([[np.inf, 0.0]]))


class TestMatrixContainer:
    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((5, 7))
        write_matrix(tmp_path / "m.hamat", a)
        assert np.array_equal(read_matrix(tmp_path / "m.hamat"), a)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.hamat"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
        with pytest.raises(SchemaError):
            read_matrix(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "m.hamat"
        write_matrix(path, np.ones((3, 3)))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(SchemaError):
            read_matrix(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetIOError):
            read_matrix(tmp_path / "nope.hamat")


class TestDatasetIO:
    def _dataset(self, t=4, v=6, subjects=2, labels=True):
        rng = np.random.default_rng(3)
        subs = tuple(
            SubjectData(f"s{i}", rng.standard_normal((t, v))) for i in range(subjects)
        )
        lab = LabelVector(np.arange(t) % 2, 2) if labels else None
        return LabeledDataset(subs, lab)

    def test_round_trip(self, tmp_path):
        ds = self._dataset()
        save_dataset(ds, tmp_path / "ds")
        loaded = load_dataset(tmp_path / "ds")
        assert loaded.subject_ids == ds.subject_ids
        for orig, back in zip(ds.subjects, loaded.subjects):
            assert np.array_equal(orig.x, back.x)
        assert np.array_equal(loaded.labels.y, ds.labels.y)
        assert loaded.labels.num_classes == ds.labels.num_classes

    def test_unlabeled_round_trip(self, tmp_path):
        ds = self._dataset(labels=False)
        save_dataset(ds, tmp_path / "ds")
        assert load_dataset(tmp_path / "ds").labels is None

    def test_mixed_t_across_subjects(self, tmp_path):
        out = tmp_path / "ds"
        out.mkdir()
        write_matrix(out / "a.hamat", np.zeros((4, 6)))
        write_matrix(out / "b.hamat", np.zeros((5, 6)))
        manifest = {
            "subjects": [{"id": "a", "file": "a.hamat"}, {"id": "b", "file": "b.hamat"}],
            "t": 4,
            "v": 6,
        }
        (out / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(SchemaError):
            load_dataset(out)

    def test_label_length_mismatch(self, tmp_path):
        ds = self._dataset(t=4)
        save_dataset(ds, tmp_path / "ds")
        (tmp_path / "ds" / "labels.txt").write_text("0\n1\n0\n")
        with pytest.raises(SchemaError):
            load_dataset(tmp_path / "ds")

    def test_manifest_must_be_json(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("{nope")
        with pytest.raises(SchemaError):
            load_dataset(path)

    def test_csv_import_matches_direct_load(self, tmp_path):
        rng = np.random.default_rng(4)
        mats = [rng.standard_normal((4, 3)) for _ in range(2)]
        paths = []
        for i, m in enumerate(mats):
            p = tmp_path / f"s{i}.csv"
            np.savetxt(p, m, delimiter=",")
            paths.append(p)
        labels_path = tmp_path / "labels.txt"
        labels_path.write_text("0\n1\n0\n1\n")
        ds = import_csv_dataset(paths, labels_path=labels_path)
        assert ds.subject_ids == ("s0", "s1")
        for m, s in zip(mats, ds.subjects):
            assert np.allclose(s.x, m, atol=1e-12)
        assert np.array_equal(ds.labels.y, [0, 1, 0, 1])


class TestSyntheticGenerator:
    def test_deterministic_in_seed(self):
        spec = SyntheticSpec(3, 2, 4, 16, noise_sigma=0.7, seed=42)
        first = generate_synthetic(spec)
        second = generate_synthetic(spec)
        for a, b in zip(first.subjects, second.subjects):
            assert np.array_equal(a.x, b.x)

    def test_different_seed_differs(self):
        a = generate_synthetic(SyntheticSpec(2, 2, 3, 8, seed=0))
        b = generate_synthetic(SyntheticSpec(2, 2, 3, 8, seed=1))
        assert not np.allclose(a.subjects[0].x, b.subjects[0].x)

    def test_shared_mixing_gives_identical_subjects(self):
        ds = generate_synthetic(SyntheticSpec(2, 3, 4, 20, seed=5, shared_mixing=True))
        assert np.array_equal(ds.subjects[0].x, ds.subjects[1].x)

    def test_single_class_standardizes_to_zero(self):
        # one class, no noise: every row is identical, so every column is constant
        ds = generate_synthetic(SyntheticSpec(2, 1, 4, 8, seed=6))
        assert np.array_equal(ds.subjects[0].x, np.zeros((4, 8)))

    def test_class_blocked_labels(self):
        ds = generate_synthetic(SyntheticSpec(2, 3, 2, 9, seed=7))
        assert np.array_equal(ds.labels.y, [0, 0, 1, 1, 2, 2])

    def test_outputs_are_standardized(self):
        ds = generate_synthetic(SyntheticSpec(2, 2, 5, 12, noise_sigma=1.0, seed=8))
        for s in ds.subjects:
            assert s.standardized
            assert is_standardized(s.x)

    def test_exact_unmixing_exists(self):
        # the construction contract: subjects differ only by an orthogonal
        # mixing, so rotating one subject's raw data onto the other's frame
        # reproduces it exactly
        from hyperalign.data import random_orthogonal

        rng = np.random.default_rng(9)
        latents = rng.standard_normal((3, 12))
        y = np.repeat(np.arange(3), 2)
        q1, q2 = random_orthogonal(12, rng), random_orthogonal(12, rng)
        raw1, raw2 = latents[y] @ q1, latents[y] @ q2
        remixed = standardize(raw1 @ (q1.T @ q2))
        assert isc(remixed, standardize(raw2)) == pytest.approx(1.0, abs=1e-9)

    def test_rejects_t_exceeding_v(self):
        with pytest.raises(InvalidInputError):
            SyntheticSpec(2, 4, 3, 10)

    def test_rejects_negative_noise(self):
        with pytest.raises(InvalidInputError):
            SyntheticSpec(2, 2, 2, 8, noise_sigma=-0.1)
