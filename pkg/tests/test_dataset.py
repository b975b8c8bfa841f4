import numpy as np
import pytest

from coxmix.dataset import (
    DatasetError, SurvivalDataset, event_quantiles, k_fold_split, load_csv,
    standardize,
)


def write_csv(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def make_ds(n=10, d=2, seed=0):
    rng = np.random.default_rng(seed)
    return SurvivalDataset(
        features=rng.normal(size=(n, d)),
        times=rng.exponential(1.0, size=n),
        events=(rng.random(n) < 0.7).astype(int),
        feature_names=tuple(f"x{i}" for i in range(d)),
    )


class TestLoadCsv:
    def test_basic_load(self, tmp_path):
        path = write_csv(tmp_path, "age,bp,time,event\n50,120,3.5,1\n61,140,2.0,0\n")
        ds = load_csv(path, "time", "event")
        assert ds.feature_names == ("age", "bp")
        np.testing.assert_allclose(ds.features, [[50, 120], [61, 140]])
        np.testing.assert_allclose(ds.times, [3.5, 2.0])
        np.testing.assert_array_equal(ds.events, [1, 0])
        assert ds.groups is None

    def test_group_column(self, tmp_path):
        path = write_csv(tmp_path, "x,time,event,sex\n1,2,1,f\n2,3,0,m\n")
        ds = load_csv(path, "time", "event", group_col="sex")
        assert ds.feature_names == ("x",)
        assert list(ds.groups) == ["f", "m"]

    def test_drop_columns(self, tmp_path):
        path = write_csv(tmp_path, "id,x,time,event\nA,1,2,1\nB,2,3,0\n")
        ds = load_csv(path, "time", "event", drop_columns=("id",))
        assert ds.feature_names == ("x",)

    def test_missing_value_names_row(self, tmp_path):
        path = write_csv(tmp_path, "x,time,event\n1,2,1\n,3,0\n")
        with pytest.raises(DatasetError, match="row 3"):
            load_csv(path, "time", "event")

    def test_drop_missing(self, tmp_path):
        path = write_csv(tmp_path, "x,time,event\n1,2,1\n,3,0\n4,5,1\n")
        ds = load_csv(path, "time", "event", drop_missing=True)
        assert len(ds) == 2

    def test_bad_event_value(self, tmp_path):
        path = write_csv(tmp_path, "x,time,event\n1,2,2\n")
        with pytest.raises(DatasetError, match="row 2"):
            load_csv(path, "time", "event")

    def test_negative_time(self, tmp_path):
        path = write_csv(tmp_path, "x,time,event\n1,-2,1\n")
        with pytest.raises(DatasetError, match="negative time"):
            load_csv(path, "time", "event")

    def test_missing_required_column(self, tmp_path):
        path = write_csv(tmp_path, "x,time\n1,2\n")
        with pytest.raises(DatasetError, match="event"):
            load_csv(path, "time", "event")

    def test_ragged_row(self, tmp_path):
        path = write_csv(tmp_path, "x,time,event\n1,2\n")
        with pytest.raises(DatasetError, match="row 2"):
            load_csv(path, "time", "event")


class TestStandardize:
    def test_two_point_column(self):
        ds = SurvivalDataset(
            features=np.array([[1.0], [3.0]]), times=np.array([1.0, 2.0]),
            events=np.array([1, 1]), feature_names=("x",))
        out, (mean, std) = standardize(ds)
        # sample (N-1) standard deviation of [1, 3] is sqrt(2)
        np.testing.assert_allclose(mean, [2.0])
        np.testing.assert_allclose(std, [np.sqrt(2.0)])
        np.testing.assert_allclose(out.features[:, 0], [-1 / np.sqrt(2), 1 / np.sqrt(2)])

    def test_zero_mean_unit_sd(self):
        ds = make_ds(n=200, d=3, seed=1)
        out, _ = standardize(ds)
        np.testing.assert_allclose(out.features.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(out.features.std(axis=0, ddof=1), 1, atol=1e-12)

    def test_constant_column(self):
        ds = SurvivalDataset(
            features=np.array([[5.0], [5.0], [5.0]]), times=np.ones(3),
            events=np.ones(3, dtype=int), feature_names=("x",))
        out, (mean, std) = standardize(ds)
        np.testing.assert_allclose(out.features, 0.0)
        np.testing.assert_allclose(std, [1.0])

    def test_reuse_stats_on_holdout(self):
        train = make_ds(n=50, seed=2)
        test = make_ds(n=20, seed=3)
        _, stats = standardize(train)
        out, stats2 = standardize(test, stats=stats)
        np.testing.assert_allclose(out.features, (test.features - stats[0]) / stats[1])
        np.testing.assert_array_equal(stats2[0], stats[0])


class TestEventQuantiles:
    def test_nearest_rank(self):
        ds = SurvivalDataset(
            features=np.zeros((100, 1)),
            times=np.arange(1.0, 101.0),
            events=np.ones(100, dtype=int),
            feature_names=("x",))
        assert event_quantiles(ds, [0.5]) == [50.0]
        assert event_quantiles(ds, [0.25, 0.75]) == [25.0, 75.0]

    def test_ignores_censored(self):
        ds = SurvivalDataset(
            features=np.zeros((4, 1)),
            times=np.array([1.0, 2.0, 100.0, 200.0]),
            events=np.array([1, 1, 0, 0]),
            feature_names=("x",))
        assert event_quantiles(ds, [0.9]) == [2.0]

    def test_no_events_raises(self):
        ds = SurvivalDataset(
            features=np.zeros((2, 1)), times=np.ones(2),
            events=np.zeros(2, dtype=int), feature_names=("x",))
        with pytest.raises(DatasetError):
            event_quantiles(ds, [0.5])


class TestKFold:
    def test_partition_and_balance(self):
        ds = make_ds(n=103)
        split = k_fold_split(ds, 5, seed=7)
        sizes = [len(split.test_idx(f)) for f in range(5)]
        assert sum(sizes) == 103
        assert max(sizes) - min(sizes) <= 1
        all_test = np.concatenate([split.test_idx(f) for f in range(5)])
        assert sorted(all_test.tolist()) == list(range(103))
        for f in range(5):
            assert not set(split.test_idx(f)) & set(split.train_idx(f))

    def test_deterministic(self):
        ds = make_ds(n=40)
        a = k_fold_split(ds, 4, seed=1)
        b = k_fold_split(ds, 4, seed=1)
        np.testing.assert_array_equal(a.fold_assignments, b.fold_assignments)
        c = k_fold_split(ds, 4, seed=2)
        assert np.any(a.fold_assignments != c.fold_assignments)

    def test_k_bounds(self):
        ds = make_ds(n=5)
        with pytest.raises(DatasetError):
            k_fold_split(ds, 1, seed=0)
        with pytest.raises(DatasetError):
            k_fold_split(ds, 6, seed=0)


class TestSurvivalDataset:
    def test_subset(self):
        ds = make_ds(n=10)
        sub = ds.subset([2, 5, 7])
        assert len(sub) == 3
        np.testing.assert_allclose(sub.times, ds.times[[2, 5, 7]])

    def test_validation(self):
        with pytest.raises(DatasetError):
            SurvivalDataset(features=np.zeros((2, 1)), times=np.array([1.0, -1.0]),
                            events=np.array([1, 0]), feature_names=("x",))
        with pytest.raises(DatasetError):
            SurvivalDataset(features=np.zeros((2, 1)), times=np.ones(2),
                            events=np.array([1, 2]), feature_names=("x",))
