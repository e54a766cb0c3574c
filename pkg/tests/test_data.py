import math

import numpy as np
import pytest

from combu.data import (
    TabularDataset,
    csv_read,
    csv_write,
    fit_preprocessor,
    gen_ar,
    gen_bs,
    gen_gs,
    gen_ns,
    make_classification,
    split_and_fit,
    bs_call_price,
    vortex_speed,
)
from combu.errors import ParameterError, SchemaError
from combu.rng import Rng

N = 800  # per-generator row count for unit checks (acceptance uses 5000)


# independent straight-line re-implementations of each target formula

def oracle_gs(row) -> float:
    xs = row[:8]
    mean = sum(xs) / 8.0
    std = math.sqrt(sum((v - mean) ** 2 for v in xs) / 7.0)
    v = row[8]
    return math.exp(-0.5 * ((v - mean) / std) ** 2) / (std * math.sqrt(2.0 * math.pi))


def oracle_ar(row) -> float:
    n_exp, temp, ea, a = row
    return a * temp**n_exp * math.exp(-ea / (8.314 * temp))


def oracle_ns(row) -> float:
    a, r, x, y, z = row
    vx = 2.0 * (-r * y + x * z)
    vy = 2.0 * (r * x + y * z)
    vz = r * r - x * x - y * y + z * z
    return a / (r * r + x * x + y * y + z * z) ** 2 * math.sqrt(vx * vx + vy * vy + vz * vz)


def oracle_bs(row) -> float:
    sigma, tau, s, k, r = row
    srt = sigma * math.sqrt(tau)
    d1 = (math.log(s / k) + (r + 0.5 * sigma * sigma) * tau) / srt
    d2 = d1 - srt
    cdf = lambda v: 0.5 * math.erfc(-v / math.sqrt(2.0))
    call = cdf(d1) * s - cdf(d2) * k * math.exp(-r * tau)
    return k * math.exp(-r * tau) - s + call


def rows_of(ds: TabularDataset) -> np.ndarray:
    return np.column_stack(ds.feature_cols)


class TestGeneratorTargets:
    @pytest.mark.parametrize(
        "gen,oracle",
        [(gen_gs, oracle_gs), (gen_ar, oracle_ar), (gen_ns, oracle_ns), (gen_bs, oracle_bs)],
        ids=["gs", "ar", "ns", "bs"],
    )
    def test_targets_match_independent_formula(self, gen, oracle):
        ds = gen(N, Rng(5))
        rows = rows_of(ds)
        want = np.array([oracle(rows[i]) for i in range(ds.n)])
        np.testing.assert_allclose(ds.target, want, rtol=1e-12)

    def test_generators_are_seed_reproducible(self):
        for gen in (gen_gs, gen_ar, gen_ns, gen_bs):
            a = gen(50, Rng(9))
            b = gen(50, Rng(9))
            np.testing.assert_array_equal(rows_of(a), rows_of(b))
            np.testing.assert_array_equal(a.target, b.target)


class TestGS:
    def test_column_distributions(self):
        ds = gen_gs(10_000, Rng(1))
        rows = rows_of(ds)
        assert abs(rows[:, :8].mean()) < 0.5  # centered like the mu ~ N(0, 10) draw
        assert np.all(ds.target > 0.0)

    def test_target_below_density_peak(self):
        ds = gen_gs(N, Rng(2))
        rows = rows_of(ds)
        for i in range(ds.n):
            xs = rows[i, :8]
            std = float(np.std(xs, ddof=1))
            assert ds.target[i] <= 1.0 / (std * math.sqrt(2.0 * math.pi)) + 1e-15


class TestAR:
    def test_feature_ranges(self):
        ds = gen_ar(N, Rng(3))
        cols = dict(zip(ds.feature_names, ds.feature_cols))
        n_col = cols["n"]
        assert np.all(n_col == np.round(n_col))
        assert set(np.unique(n_col)) <= set(float(v) for v in range(11))
        assert np.all((cols["T"] >= 1.0) & (cols["T"] <= 11.0))
        assert np.all((cols["A"] > 0.0) & (cols["A"] < 10.0))
        assert np.all(ds.target > 0.0)

    def test_unit_factors(self):
        assert oracle_ar([0.0, 7.3, 0.0, 1.0]) == 1.0
        np.testing.assert_allclose(oracle_ar([1.0, 1.0, 8.314, 1.0]), math.exp(-1.0), rtol=1e-15)


class TestNS:
    def test_ranges_and_positivity(self):
        ds = gen_ns(N, Rng(4))
        cols = dict(zip(ds.feature_names, ds.feature_cols))
        for name in ("r", "x", "y", "z"):
            assert np.all((cols[name] >= 1e-3) & (cols[name] < 1e2))
        assert np.all(ds.target >= 0.0)

    def test_origin_reduces_to_inverse_square(self):
        for a, r in ((1.0, 2.0), (0.3, 0.07), (0.9, 55.0)):
            np.testing.assert_allclose(vortex_speed(a, r, 0.0, 0.0, 0.0), a / r**2, rtol=1e-15)

    def test_zero_amplitude(self):
        assert vortex_speed(0.0, 1.0, 2.0, 3.0, 4.0) == 0.0


class TestBS:
    def test_parity_identity_bitwise(self):
        ds = gen_bs(N, Rng(6))
        rows = rows_of(ds)
        for i in range(ds.n):
            sigma, tau, s, k, r = rows[i]
            call = bs_call_price(s, k, r, sigma, tau)
            intrinsic = k * math.exp(-r * tau) - s
            assert ds.target[i] == intrinsic + call

    def test_strike_shares_spot_exponent(self):
        ds = gen_bs(N, Rng(7))
        cols = dict(zip(ds.feature_names, ds.feature_cols))
        ratio = cols["K"] / cols["S"]
        assert np.all((ratio > 0.1 - 1e-12) & (ratio < 10.0 + 1e-12))

    def test_call_respects_no_arbitrage_floor(self):
        ds = gen_bs(N, Rng(8))
        rows = rows_of(ds)
        for i in range(ds.n):
            sigma, tau, s, k, r = rows[i]
            call = bs_call_price(s, k, r, sigma, tau)
            assert call >= max(0.0, s - k * math.exp(-r * tau)) - 1e-9

    def test_call_approaches_spot_for_huge_volatility(self):
        for s, k, r in ((100.0, 70.0, 0.05), (5.0, 40.0, 0.01)):
            call = bs_call_price(s, k, r, sigma=50.0, tau=1.0)  # sigma*sqrt(tau) = 50 > 40
            assert abs(call - s) <= 1e-6 * s


class TestMakeClassification:
    def test_median_split(self):
        ds = TabularDataset(
            feature_names=["f"],
            feature_cols=[np.array([0.0, 0.0, 0.0, 0.0])],
            target=np.array([1.0, 2.0, 3.0, 4.0]),
        )
        out = make_classification(ds, 2)
        np.testing.assert_array_equal(out.target, [0, 0, 1, 1])
        assert out.n_classes == 2 and out.task == "classification"

    def test_constant_target_rejected(self):
        ds = TabularDataset(
            feature_names=["f"],
            feature_cols=[np.zeros(4)],
            target=np.full(4, 2.5),
        )
        with pytest.raises(ParameterError):
            make_classification(ds, 2)

    def test_equal_frequency_on_continuous_target(self):
        ds = gen_ar(5000, Rng(10))
        out = make_classification(ds, 5)
        counts = np.bincount(out.target, minlength=5)
        assert counts.min() >= 999 and counts.max() <= 1001

    def test_edges_recorded(self):
        ds = gen_ar(200, Rng(11))
        out = make_classification(ds, 4)
        assert len(out.meta["bin_edges"]) == 3


class TestSplitAndFit:
    def test_shapes_and_scaling(self):
        ds = gen_gs(5000, Rng(12))
        train, test, prep = split_and_fit(ds, 0.2, Rng(13))
        assert train.n == 4000 and test.n == 1000
        np.testing.assert_allclose(train.X.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(train.X.std(axis=0), 1.0, atol=1e-9)
        np.testing.assert_allclose(train.y.mean(), 0.0, atol=1e-9)
        np.testing.assert_allclose(train.y.std(), 1.0, atol=1e-9)

    def test_transform_is_frozen(self):
        ds = gen_ar(500, Rng(14))
        _, _, prep = split_and_fit(ds, 0.2, Rng(15))
        a = prep.transform(ds)
        b = prep.transform(ds)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)

    def test_constant_column_passes_through(self):
        ds = TabularDataset(
            feature_names=["c", "v"],
            feature_cols=[np.full(10, 7.0), np.arange(10.0)],
            target=np.arange(10.0),
        )
        prep = fit_preprocessor(ds)
        out = prep.transform(ds)
        np.testing.assert_array_equal(out.X[:, 0], np.full(10, 7.0))

    def test_one_hot_encoding(self):
        ds = TabularDataset(
            feature_names=["color", "v"],
            feature_cols=[np.array(["red", "blue", "red"], dtype=object), np.array([1.0, 2.0, 3.0])],
            target=np.array([0.0, 1.0, 2.0]),
        )
        prep = fit_preprocessor(ds)
        out = prep.transform(ds)
        assert out.feature_names[:2] == ["color=blue", "color=red"]
        np.testing.assert_array_equal(out.X[:, 0], [0.0, 1.0, 0.0])
        np.testing.assert_array_equal(out.X[:, 1], [1.0, 0.0, 1.0])

    def test_unseen_category_rejected(self):
        train = TabularDataset(
            feature_names=["c"],
            feature_cols=[np.array(["a", "b"], dtype=object)],
            target=np.array([0.0, 1.0]),
        )
        other = TabularDataset(
            feature_names=["c"],
            feature_cols=[np.array(["z"], dtype=object)],
            target=np.array([0.0]),
        )
        prep = fit_preprocessor(train)
        with pytest.raises(SchemaError):
            prep.transform(other)

    def test_bad_fraction_rejected(self):
        ds = gen_ar(50, Rng(16))
        for bad in (0.0, 1.0, -0.5):
            with pytest.raises(ParameterError):
                split_and_fit(ds, bad, Rng(0))


class TestCsv:
    def test_round_trip(self, tmp_path):
        ds = gen_bs(120, Rng(17))
        path = tmp_path / "bs.csv"
        csv_write(ds, path)
        back = csv_read(path)
        assert back.feature_names == ds.feature_names
        assert back.n == ds.n
        np.testing.assert_allclose(np.column_stack(back.feature_cols), rows_of(ds), rtol=1e-15)
        np.testing.assert_allclose(back.target, ds.target, rtol=1e-15)

    def test_row_count(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,target\n1,2\n3,4\n5,6\n")
        assert csv_read(path).n == 3

    def test_missing_target_column(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(SchemaError):
            csv_read(path)

    def test_missing_value_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,target\n1,\n")
        with pytest.raises(SchemaError):
            csv_read(path)

    def test_unparseable_cell_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,target\nfoo,2\n")
        with pytest.raises(SchemaError):
            csv_read(path)

    def test_categorical_columns_stay_strings(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("c,v,target\nred,1.5,2\nblue,2.5,3\n")
        ds = csv_read(path, categorical=("c",))
        assert ds.is_categorical(0) and not ds.is_categorical(1)

    def test_classification_csv(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,target\n0.5,0\n0.7,2\n0.1,1\n")
        ds = csv_read(path, task="classification")
        assert ds.n_classes == 3
        assert ds.target.dtype == np.int64
