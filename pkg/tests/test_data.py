import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from snmqd.data import (
    MANIFEST,
    SINUSOID,
    Dataset,
    DatasetFormatError,
    Stats,
    load_csv,
    make_trials,
    make_validation_folds,
    standardize,
    synth_sinusoid,
    to_full_scope,
    write_csv,
)
from snmqd.metrics import IntervalBatch


class TestLoadCsv:
    def test_small_file(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("1,2,3\n4,5,6\n7.5,-8,9e-1\n")
        ds = load_csv(p)
        assert (ds.n, ds.d) == (3, 2)
        np.testing.assert_array_equal(ds.X, [[1, 2], [4, 5], [7.5, -8]])
        np.testing.assert_array_equal(ds.y, [3, 6, 0.9])
        assert ds.source == str(p)

    def test_header(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("a,b,y\n1,2,3\n")
        assert load_csv(p, has_header=True).n == 1
        with pytest.raises(DatasetFormatError):
            load_csv(p)

    def test_nan_cell_named(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("1,2,3\n4,NaN,6\n")
        with pytest.raises(DatasetFormatError, match=r"t.csv:2, column 2"):
            load_csv(p)

    def test_text_cell(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("1,2,3\n4,abc,6\n")
        with pytest.raises(DatasetFormatError, match="abc"):
            load_csv(p)

    def test_ragged(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("1,2,3\n4,5\n")
        with pytest.raises(DatasetFormatError, match=":2"):
            load_csv(p)

    def test_empty(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("")
        with pytest.raises(DatasetFormatError):
            load_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_csv(tmp_path / "nope.csv")

    def test_manifest_shape(self, tmp_path, rng):
        p = tmp_path / "yacht.csv"
        write_csv(Dataset(rng.normal(size=(308, 6)), rng.normal(size=308)), p)
        ds = load_csv(p, expected="yacht")
        assert (ds.n, ds.d) == MANIFEST["yacht"][:2] == (308, 6)
        assert ds.name == "yacht"
        with pytest.raises(DatasetFormatError, match="506x13"):
            load_csv(p, expected="boston")

    def test_whitespace_delimited(self, tmp_path):
        p = tmp_path / "raw.data"
        p.write_text(" 1  2   3\n4 5 6\n\n")
        assert load_csv(p, delimiter=None).n == 2

    @given(arrays(float, st.tuples(st.integers(1, 12), st.integers(2, 5)), elements=st.floats(-1e6, 1e6)))
    def test_write_read_round_trip(self, table):
        import tempfile
        from pathlib import Path

        ds = Dataset(table[:, :-1], table[:, -1])
        with tempfile.TemporaryDirectory() as d:
            p = Path(d) / "rt.csv"
            write_csv(ds, p, header=True)
            back = load_csv(p, has_header=True)
        np.testing.assert_array_equal(back.X, ds.X)
        np.testing.assert_array_equal(back.y, ds.y)


class TestDataset:
    def test_validation(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 2)), np.zeros(2))
        with pytest.raises(ValueError):
            Dataset(np.array([[np.inf]]), np.zeros(1))
        with pytest.raises(ValueError):
            Dataset(np.zeros((0, 2)), np.zeros(0))

    def test_one_dimensional_inputs(self):
        assert Dataset(np.arange(4.0), np.arange(4.0)).d == 1


class TestStandardize:
    def test_train_scope_moments(self, rng):
        ds = Dataset(rng.normal(5, 3, (200, 4)), rng.normal(-2, 7, 200))
        idx = np.arange(150)
        X, y, stats = standardize(ds, "train_stats", idx)
        np.testing.assert_allclose(X[idx].mean(axis=0), 0, atol=1e-10)
        np.testing.assert_allclose(X[idx].std(axis=0), 1, atol=1e-10)
        np.testing.assert_allclose(y[idx].mean(), 0, atol=1e-10)
        np.testing.assert_allclose(y[idx].std(), 1, atol=1e-10)
        assert not np.allclose(X[150:].mean(axis=0), 0, atol=1e-10)

    def test_full_scope(self, rng):
        ds = Dataset(rng.normal(size=(50, 2)), rng.normal(size=50))
        X, y, _ = standardize(ds, "full_stats")
        np.testing.assert_allclose(y.std(), 1, atol=1e-12)

    def test_already_standard(self, rng):
        X = rng.normal(size=(100, 3))
        X = (X - X.mean(0)) / X.std(0)
        y = rng.normal(size=100)
        y = (y - y.mean()) / y.std()
        Z, w, _ = standardize(Dataset(X, y), "full_stats")
        np.testing.assert_allclose(Z, X, atol=1e-12)
        np.testing.assert_allclose(w, y, atol=1e-12)

    @given(arrays(float, st.tuples(st.integers(2, 30), st.integers(1, 4)), elements=st.floats(-1e4, 1e4)))
    def test_inverse_round_trip(self, X):
        stats = Stats.of(X, X[:, 0])
        np.testing.assert_allclose(stats.inverse_X(stats.transform_X(X)), X, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(X).max()))

    def test_constant_column_warns(self, rng, caplog):
        X = np.column_stack([rng.normal(size=20), np.full(20, 3.0)])
        with caplog.at_level(logging.WARNING):
            stats = Stats.of(X, rng.normal(size=20))
        assert stats.x_std[1] == 1.0
        assert "clamped" in caplog.text

    def test_bad_scope(self, rng):
        ds = Dataset(rng.normal(size=(5, 1)), rng.normal(size=5))
        with pytest.raises(ValueError):
            standardize(ds, "test_stats")
        with pytest.raises(ValueError):
            standardize(ds, "train_stats")

    def test_two_scope_conversion(self, rng):
        # destandardise with train stats then restandardise with full stats
        ds = Dataset(rng.normal(size=(300, 2)), rng.normal(4, 2.5, 300))
        idx = np.arange(200)
        _, y_tr, train_stats = standardize(ds, "train_stats", idx)
        _, y_full, full_stats = standardize(ds, "full_stats")
        np.testing.assert_allclose(to_full_scope(y_tr, train_stats, full_stats), y_full, atol=1e-12)
        b = IntervalBatch(y_tr - 1, y_tr, y_tr + 1)
        conv = to_full_scope(b, train_stats, full_stats)
        np.testing.assert_allclose(conv.point, y_full, atol=1e-12)
        np.testing.assert_allclose(conv.upper - conv.lower, 2 * train_stats.y_std / full_stats.y_std)

    def test_stats_dict_round_trip(self, rng):
        s = Stats.of(rng.normal(size=(10, 3)), rng.normal(size=10))
        back = Stats.from_dict(s.to_dict())
        np.testing.assert_array_equal(back.x_mean, s.x_mean)
        assert back.y_std == s.y_std


class TestTrials:
    def test_ten_rows(self):
        for t in make_trials(10, 5, 0.1, 0):
            assert t.test.size == 1 and t.train.size == 9

    def test_disjoint_exhaustive(self):
        for t in make_trials(123, 20, 0.1, 7):
            assert np.intersect1d(t.train, t.test).size == 0
            np.testing.assert_array_equal(np.union1d(t.train, t.test), np.arange(123))

    def test_deterministic(self):
        a, b = make_trials(50, 3, 0.1, 4), make_trials(50, 3, 0.1, 4)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.test, y.test)
            assert x.seed == y.seed

    def test_trials_differ(self):
        tests = {tuple(t.test) for t in make_trials(308, 20, 0.1, 0)}
        assert len(tests) == 20

    @pytest.mark.parametrize("args", [(10, 0, 0.1), (10, 2, 0.0), (10, 2, 1.0), (2, 1, 0.1)])
    def test_degenerate(self, args):
        with pytest.raises(ValueError):
            make_trials(*args)


class TestFolds:
    def test_sizes_and_union(self):
        train = np.arange(3, 103)
        folds = make_validation_folds(train, 5, 0.1, seed=1)
        assert len(folds) == 5
        for fit_idx, val_idx in folds:
            assert val_idx.size == 10
            np.testing.assert_array_equal(np.union1d(fit_idx, val_idx), train)
            assert np.intersect1d(fit_idx, val_idx).size == 0

    def test_reproducible(self):
        a = make_validation_folds(np.arange(40), seed=3)
        b = make_validation_folds(np.arange(40), seed=3)
        for (fa, va), (fb, vb) in zip(a, b):
            np.testing.assert_array_equal(va, vb)

    def test_too_small(self):
        with pytest.raises(ValueError):
            make_validation_folds(np.arange(3))


class TestSinusoid:
    def test_seed_determinism(self):
        a, b = synth_sinusoid(100, seed=2), synth_sinusoid(100, seed=2)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)
        assert not np.array_equal(a.y, synth_sinusoid(100, seed=3).y)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            synth_sinusoid(0)

    def test_domain_and_sparsity(self):
        ds = synth_sinusoid(20000, seed=0)
        x = ds.X[:, 0]
        assert np.all(np.abs(x) <= SINUSOID.half_width)
        centre = np.mean(np.abs(x) < 1)
        edge = np.mean(np.abs(x) > 3)
        assert centre > 2 * edge

    def test_noise_grows_outward(self):
        ds = synth_sinusoid(20000, seed=1)
        x = ds.X[:, 0]
        resid = ds.y - np.sin(x)
        inner = resid[np.abs(x) < 1].std()
        outer = resid[np.abs(x) > 3].std()
        assert outer > 2 * inner
        # documented generator: std = base + growth x^2
        np.testing.assert_allclose(inner, np.sqrt(np.mean((SINUSOID.base_noise + SINUSOID.noise_growth * x[np.abs(x) < 1] ** 2) ** 2)), rtol=0.05)
