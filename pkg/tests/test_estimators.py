import json

import numpy as np
import pytest

from hyperalign import (
    Hyperalignment,
    InvalidInputError,
    LabeledDataset,
    SolverConfig,
    SweepConfig,
    SyntheticSpec,
    Template,
    align_to_template,
    fit_hyperalignment,
    generate_synthetic,
    isc,
    load_train_result,
    save_train_result,
    standardize,
    solve_pair,
)


def noiseless(subjects=4, classes=3, t_per_class=4, v=16, seed=12, **kw):
    return generate_synthetic(
        SyntheticSpec(subjects, classes, t_per_class, v, seed=seed, **kw)
    )


class TestFit:
    def test_identical_subjects_converge_fast(self):
        ds = noiseless(subjects=2, seed=11, shared_mixing=True)
        res = fit_hyperalignment(ds, SolverConfig(k=2), SweepConfig())
        assert res.converged
        assert res.sweeps <= 2
        assert res.objective_trace[-1] >= 1.0 - 1e-9

    def test_noiseless_recovery(self):
        res = fit_hyperalignment(noiseless(), SolverConfig(mode="ldha", k=2), SweepConfig())
        assert res.objective_trace[-1] >= 0.99

    def test_trace_non_decreasing_on_noiseless_data(self):
        res = fit_hyperalignment(noiseless(), SolverConfig(k=2), SweepConfig())
        trace = np.array(res.objective_trace)
        assert np.all(np.diff(trace) >= -1e-6)

    def test_noisy_trace_improves(self):
        ds = generate_synthetic(SyntheticSpec(4, 3, 4, 16, noise_sigma=1.0, seed=13))
        res = fit_hyperalignment(ds, SolverConfig(k=2), SweepConfig())
        assert res.objective_trace[-1] > res.objective_trace[0]

    def test_zero_sweeps_keeps_initialization(self):
        ds = noiseless()
        res = fit_hyperalignment(ds, SolverConfig(k=2), SweepConfig(max_sweeps=0))
        assert res.sweeps == 0
        assert res.objective_trace == []
        assert not res.converged
        assert np.array_equal(res.maps[0].r, np.eye(16, 2))
        expected = sum(s.x[:, :2] for s in ds.standardize().subjects) / 4
        assert np.allclose(res.template.matrix, expected, atol=1e-12)

    def test_template_is_mean_of_mapped(self):
        ds = noiseless()
        res = fit_hyperalignment(ds, SolverConfig(mode="ldha", k=2), SweepConfig())
        std = ds.standardize()
        recomputed = sum(
            s.x @ m.r for s, m in zip(std.subjects, res.maps)
        ) / len(res.maps)
        assert np.abs(recomputed - res.template.matrix).max() <= 1e-10

    def test_subject_order_does_not_matter_at_isc_level(self):
        ds = noiseless()
        reversed_ds = LabeledDataset(tuple(reversed(ds.subjects)), ds.labels)
        final = [
            fit_hyperalignment(d, SolverConfig(mode="ldha", k=2), SweepConfig())
            .objective_trace[-1]
            for d in (ds, reversed_ds)
        ]
        assert abs(final[0] - final[1]) <= 1e-4

    def test_pairwise_strategy_on_identical_subjects(self):
        ds = noiseless(subjects=3, seed=21, shared_mixing=True)
        res = fit_hyperalignment(
            ds, SolverConfig(k=2), SweepConfig(strategy="pairwise")
        )
        assert res.objective_trace[-1] >= 1.0 - 1e-9

    def test_pairwise_strategy_supervised(self):
        ds = noiseless(subjects=3, seed=22, shared_mixing=True)
        res = fit_hyperalignment(
            ds, SolverConfig(mode="ldha", k=2), SweepConfig(strategy="pairwise")
        )
        assert res.objective_trace[-1] >= 1.0 - 1e-9
        assert res.template.solver_mode == "ldha"

    def test_objective_trace_length_equals_sweeps(self):
        res = fit_hyperalignment(noiseless(), SolverConfig(k=2), SweepConfig(max_sweeps=3, tol=1e-12))
        assert len(res.objective_trace) == res.sweeps == 3
        assert not res.converged

    def test_preconditions(self):
        ds = noiseless()
        single = LabeledDataset(ds.subjects[:1], ds.labels)
        with pytest.raises(InvalidInputError):
            fit_hyperalignment(single, SolverConfig(), SweepConfig())
        unlabeled = LabeledDataset(ds.subjects, None)
        with pytest.raises(InvalidInputError):
            fit_hyperalignment(unlabeled, SolverConfig(), SweepConfig())
        with pytest.raises(InvalidInputError):
            SweepConfig(strategy="zigzag")


class TestAlignToTemplate:
    def test_self_template(self):
        rng = np.random.default_rng(30)
        x = standardize(rng.standard_normal((12, 6)))
        map_self, _ = solve_pair(x, x)
        template = Template(x @ map_self.r, map_self.k, ("s0",), "classical")
        amap = align_to_template(x, template)
        mapped = standardize(x @ amap.r)
        assert isc(mapped, standardize(template.matrix)) >= 1.0 - 1e-6

    def test_held_out_noiseless_subject(self):
        ds = noiseless(subjects=5, seed=31)
        train = LabeledDataset(ds.subjects[:4], ds.labels)
        res = fit_hyperalignment(train, SolverConfig(mode="ldha", k=2), SweepConfig())
        held = ds.standardize().subjects[4].x
        amap = align_to_template(held, res.template)
        aligned = standardize(held @ amap.r)
        assert isc(aligned, standardize(res.template.matrix)) >= 0.99

    def test_time_mismatch(self):
        template = Template(np.zeros((10, 2)), 2, ("s0",), "classical")
        with pytest.raises(InvalidInputError):
            align_to_template(np.zeros((8, 4)), template)


class TestEstimatorApi:
    def test_fit_transform_pipeline(self):
        ds = noiseless(subjects=5, seed=32)
        mats = ds.matrices()
        est = Hyperalignment(mode="ldha", k=2, max_sweeps=20)
        mapped = est.fit_transform(mats[:4], ds.labels.y)
        assert len(mapped) == 4
        assert mapped[0].shape == (12, 2)
        assert est.converged_
        assert est.n_sweeps_ == len(est.objective_trace_)
        out = est.transform(mats[4])
        assert out.shape == (12, 2)
        assert isc(standardize(out), standardize(est.template_.matrix)) >= 0.99

    def test_accepts_dataset_directly(self):
        ds = noiseless()
        est = Hyperalignment(k=2).fit(ds)
        assert len(est.maps_) == 4

    def test_get_params_round_trip(self):
        est = Hyperalignment(mode="ldha", k=3, ridge=0.5)
        params = est.get_params()
        assert params["mode"] == "ldha" and params["k"] == 3
        rebuilt = Hyperalignment(**params)
        assert rebuilt.get_params() == params
        est.set_params(k=5)
        assert est.k == 5

    def test_sklearn_clone(self):
        from sklearn.base import clone

        est = Hyperalignment(mode="ldha", k=2, max_sweeps=5)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_transform_before_fit(self):
        with pytest.raises(InvalidInputError):
            Hyperalignment().transform(np.zeros((4, 4)))

    def test_ldha_requires_labels(self):
        mats = noiseless().matrices()
        with pytest.raises(InvalidInputError):
            Hyperalignment(mode="ldha").fit(mats, None)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        ds = noiseless()
        res = fit_hyperalignment(ds, SolverConfig(mode="ldha", k=2), SweepConfig())
        save_train_result(res, tmp_path / "run")
        back = load_train_result(tmp_path / "run")
        assert np.array_equal(back.template.matrix, res.template.matrix)
        assert back.template.source_subject_ids == res.template.source_subject_ids
        assert back.subject_ids == res.subject_ids
        assert back.sweeps == res.sweeps
        assert back.converged == res.converged
        assert back.objective_trace == pytest.approx(res.objective_trace)
        assert back.solver == res.solver
        assert back.sweep == res.sweep
        for orig, loaded in zip(res.maps, back.maps):
            assert np.array_equal(orig.r, loaded.r)
            assert np.allclose(orig.canonical_corrs, loaded.canonical_corrs)

    def test_sidecar_stable_except_timestamp(self, tmp_path):
        ds = noiseless()
        res = fit_hyperalignment(ds, SolverConfig(k=2), SweepConfig())
        save_train_result(res, tmp_path / "a")
        save_train_result(res, tmp_path / "b")
        first = json.loads((tmp_path / "a" / "train_result.json").read_text())
        second = json.loads((tmp_path / "b" / "train_result.json").read_text())
        first.pop("created_at")
        second.pop("created_at")
        assert first == second
