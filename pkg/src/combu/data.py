"""Synthetic formula datasets, preprocessing, and CSV ingestion.

Four generators produce regression tables from closed-form targets:

* gs: the Gaussian density evaluated at a fresh draw, with the density's
  parameters taken from the realized sample mean and sample standard
  deviation (divisor n-1) of eight feature draws.
* ar: reaction-rate law k = A * T**n * exp(-Ea / (R*T)) with R = 8.314.
* ns: speed of a steady 3-D vortex velocity field at a point.
* bs: European put price from the call price and the discount identity
  P = K*exp(-r*tau) - S + C.

A classification variant bins the regression target into equal-frequency
classes (edges computed on the full generated target).  Preprocessing fits
standard scaling on the training split only; categorical columns are
one-hot encoded with categories taken from the training split.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, SchemaError, ShapeError
from .rng import Discrete, ExpScaled, IntUniform, Normal, Rng, Uniform, sample

GAS_CONSTANT = 8.314
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass
class TabularDataset:
    feature_names: list
    feature_cols: list  # one array per column; float64, or strings when categorical
    target: np.ndarray
    task: str = "regression"
    n_classes: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.feature_names) != len(self.feature_cols):
            raise ShapeError("one name per feature column required")
        n = len(self.target)
        for name, col in zip(self.feature_names, self.feature_cols):
            if len(col) != n:
                raise ShapeError(f"column {name!r} has {len(col)} rows, target has {n}")
            if isinstance(col, np.ndarray) and col.dtype.kind == "f" and not np.isfinite(col).all():
                raise ParameterError(f"column {name!r} contains NaN/Inf")
        if self.task == "regression":
            if not np.isfinite(np.asarray(self.target, dtype=np.float64)).all():
                raise ParameterError("target contains NaN/Inf")
        elif self.task == "classification":
            if self.n_classes is None or self.n_classes < 2:
                raise ParameterError("classification needs n_classes >= 2")
            t = np.asarray(self.target)
            if len(t) and (t.min() < 0 or t.max() >= self.n_classes):
                raise ParameterError("class index out of range")
        else:
            raise ParameterError(f"unknown task {self.task!r}")

    @property
    def n(self) -> int:
        return len(self.target)

    def is_categorical(self, i: int) -> bool:
        col = self.feature_cols[i]
        return not (isinstance(col, np.ndarray) and col.dtype.kind == "f")


def _check_n(n: int):
    if n < 1:
        raise ParameterError(f"need n >= 1 rows, got {n}")


def gauss_pdf(v: float, mean: float, std: float) -> float:
    z = (v - mean) / std
    return math.exp(-0.5 * z * z) / (std * _SQRT_2PI)


def gen_gs(n: int, rng: Rng) -> TabularDataset:
    """Eight draws from a random normal, a ninth draw from their empirical
    distribution, and that draw's density value as the target."""
    _check_n(n)
    rows = np.empty((n, 9))
    target = np.empty(n)
    for i in range(n):
        while True:
            mu = sample(Normal(0.0, 10.0), rng)
            sigma = sample(Uniform(1.0, 6.0), rng)
            xs = np.array([sample(Normal(mu, sigma), rng) for _ in range(8)])
            xbar = float(np.mean(xs))
            sx = float(np.std(xs, ddof=1))
            if sx > 0.0:  # all-equal draws would make the density degenerate
                break
        v = sample(Normal(xbar, sx), rng)
        rows[i, :8] = xs
        rows[i, 8] = v
        target[i] = gauss_pdf(v, xbar, sx)
    names = [f"x{j + 1}" for j in range(8)] + ["v"]
    return TabularDataset(
        feature_names=names,
        feature_cols=[rows[:, j].copy() for j in range(9)],
        target=target,
        meta={"generator": "gs", "seed": rng.seed, "n": n},
    )


def arrhenius_rate(n_exp: float, temp: float, ea: float, a: float) -> float:
    return a * temp**n_exp * math.exp(-ea / (GAS_CONSTANT * temp))


def gen_ar(n: int, rng: Rng) -> TabularDataset:
    _check_n(n)
    cols = {name: np.empty(n) for name in ("n", "T", "Ea", "A")}
    target = np.empty(n)
    for i in range(n):
        n_exp = sample(IntUniform(0, 10), rng)
        temp = sample(Uniform(1.0, 11.0), rng)
        ea = sample(Uniform(0.0, 100.0), rng)
        a = sample(ExpScaled(Uniform(0.0, 1.0), IntUniform(-2, 1)), rng)
        cols["n"][i] = n_exp
        cols["T"][i] = temp
        cols["Ea"][i] = ea
        cols["A"][i] = a
        target[i] = arrhenius_rate(n_exp, temp, ea, a)
    return TabularDataset(
        feature_names=list(cols),
        feature_cols=list(cols.values()),
        target=target,
        meta={"generator": "ar", "seed": rng.seed, "n": n},
    )


def vortex_speed(a: float, r: float, x: float, y: float, z: float) -> float:
    ux = 2.0 * (-r * y + x * z)
    uy = 2.0 * (r * x + y * z)
    uz = r * r - x * x - y * y + z * z
    denom = (r * r + x * x + y * y + z * z) ** 2
    return a / denom * math.sqrt(ux * ux + uy * uy + uz * uz)


def gen_ns(n: int, rng: Rng) -> TabularDataset:
    _check_n(n)
    coord = ExpScaled(
        Uniform(1.0, 10.0),
        Discrete((-3.0, -2.0, -1.0, 0.0, 1.0), (0.1, 0.2, 0.4, 0.2, 0.1)),
    )
    cols = {name: np.empty(n) for name in ("A", "r", "x", "y", "z")}
    target = np.empty(n)
    for i in range(n):
        a = sample(Uniform(0.0, 1.0), rng)
        r, x, y, z = (sample(coord, rng) for _ in range(4))
        for name, v in zip(cols, (a, r, x, y, z)):
            cols[name][i] = v
        target[i] = vortex_speed(a, r, x, y, z)
    return TabularDataset(
        feature_names=list(cols),
        feature_cols=list(cols.values()),
        target=target,
        meta={"generator": "ns", "seed": rng.seed, "n": n},
    )


def norm_cdf(x: float) -> float:
    # erfc keeps the tails accurate where 1 + erf would cancel
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def bs_call_price(s: float, k: float, r: float, sigma: float, tau: float) -> float:
    srt = sigma * math.sqrt(tau)
    d1 = (math.log(s / k) + (r + 0.5 * sigma * sigma) * tau) / srt
    d2 = d1 - srt
    return norm_cdf(d1) * s - norm_cdf(d2) * k * math.exp(-r * tau)


def bs_put_price(s: float, k: float, r: float, sigma: float, tau: float) -> float:
    return k * math.exp(-r * tau) - s + bs_call_price(s, k, r, sigma, tau)


def gen_bs(n: int, rng: Rng) -> TabularDataset:
    """Put prices; the strike shares the spot's sampled decimal exponent."""
    _check_n(n)
    cols = {name: np.empty(n) for name in ("sigma", "T_minus_t", "S", "K", "r")}
    target = np.empty(n)
    for i in range(n):
        while True:
            sigma = sample(Uniform(0.0, 100.0), rng)
            if sigma != 0.0:  # sigma*sqrt(tau) divides the d1/d2 terms
                break
        tau = sample(ExpScaled(IntUniform(1, 9), IntUniform(1, 3)), rng)
        a_s = sample(Uniform(1.0, 10.0), rng)
        b_shared = sample(IntUniform(0, 4), rng)
        s = a_s * 10.0**b_shared
        a_k = sample(Uniform(1.0, 10.0), rng)
        k = a_k * 10.0**b_shared
        r = sample(Uniform(0.0, 0.1), rng)
        for name, v in zip(cols, (sigma, tau, s, k, r)):
            cols[name][i] = v
        target[i] = bs_put_price(s, k, r, sigma, tau)
    return TabularDataset(
        feature_names=list(cols),
        feature_cols=list(cols.values()),
        target=target,
        meta={"generator": "bs", "seed": rng.seed, "n": n},
    )


GENERATORS = {"gs": gen_gs, "ar": gen_ar, "ns": gen_ns, "bs": gen_bs}


def make_classification(ds: TabularDataset, n_bins: int = 5) -> TabularDataset:
    """Equal-frequency binning of a regression target into class indices."""
    if ds.task != "regression":
        raise ParameterError("can only bin a regression dataset")
    if n_bins < 2:
        raise ParameterError(f"need at least 2 bins, got {n_bins}")
    target = np.asarray(ds.target, dtype=np.float64)
    if np.unique(target).size < n_bins:
        raise ParameterError(f"fewer than {n_bins} distinct target values")
    edges = np.quantile(target, [i / n_bins for i in range(1, n_bins)])
    classes = np.searchsorted(edges, target, side="right").astype(np.int64)
    meta = dict(ds.meta)
    meta["bin_edges"] = [float(e) for e in edges]
    return TabularDataset(
        feature_names=list(ds.feature_names),
        feature_cols=list(ds.feature_cols),
        target=classes,
        task="classification",
        n_classes=n_bins,
        meta=meta,
    )


def subset(ds: TabularDataset, idx: np.ndarray) -> TabularDataset:
    return TabularDataset(
        feature_names=list(ds.feature_names),
        feature_cols=[np.asarray(c)[idx] for c in ds.feature_cols],
        target=np.asarray(ds.target)[idx],
        task=ds.task,
        n_classes=ds.n_classes,
        meta=dict(ds.meta),
    )


@dataclass
class SplitData:
    """Model-ready matrix form of one split."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list
    task: str
    n_classes: int | None = None

    @property
    def n(self) -> int:
        return len(self.X)


@dataclass
class ColumnStats:
    name: str
    kind: str  # "numeric" or "categorical"
    mean: float = 0.0
    std: float = 1.0
    scaled: bool = True
    categories: tuple = ()


@dataclass
class Preprocessor:
    """Scaling/encoding stats frozen on the training split."""

    columns: list
    task: str
    n_classes: int | None
    target_mean: float = 0.0
    target_std: float = 1.0
    target_scaled: bool = False
    bin_edges: list | None = None

    def feature_names_out(self) -> list:
        names = []
        for c in self.columns:
            if c.kind == "numeric":
                names.append(c.name)
            else:
                names.extend(f"{c.name}={cat}" for cat in c.categories)
        return names

    def transform(self, ds: TabularDataset) -> SplitData:
        if list(ds.feature_names) != [c.name for c in self.columns]:
            raise SchemaError("dataset columns do not match the fitted preprocessor")
        blocks = []
        for i, stats in enumerate(self.columns):
            col = ds.feature_cols[i]
            if stats.kind == "numeric":
                col = np.asarray(col, dtype=np.float64)
                blocks.append(((col - stats.mean) / stats.std if stats.scaled else col)[:, None])
            else:
                onehot = np.zeros((ds.n, len(stats.categories)))
                lookup = {cat: j for j, cat in enumerate(stats.categories)}
                for row, value in enumerate(col):
                    if str(value) not in lookup:
                        raise SchemaError(
                            f"column {stats.name!r}: category {value!r} not seen in training data"
                        )
                    onehot[row, lookup[str(value)]] = 1.0
                blocks.append(onehot)
        X = np.hstack(blocks) if blocks else np.zeros((ds.n, 0))
        if ds.task == "regression":
            y = np.asarray(ds.target, dtype=np.float64)
            if self.target_scaled:
                y = (y - self.target_mean) / self.target_std
        else:
            y = np.asarray(ds.target, dtype=np.int64)
        return SplitData(
            X=X, y=y, feature_names=self.feature_names_out(), task=ds.task, n_classes=ds.n_classes
        )


def fit_preprocessor(train: TabularDataset) -> Preprocessor:
    columns = []
    for i, name in enumerate(train.feature_names):
        if train.is_categorical(i):
            cats = tuple(sorted({str(v) for v in train.feature_cols[i]}))
            columns.append(ColumnStats(name=name, kind="categorical", categories=cats))
        else:
            col = np.asarray(train.feature_cols[i], dtype=np.float64)
            std = float(col.std())  # population std; constant columns pass through
            if std > 0.0:
                columns.append(ColumnStats(name=name, kind="numeric", mean=float(col.mean()), std=std))
            else:
                columns.append(ColumnStats(name=name, kind="numeric", scaled=False))
    prep = Preprocessor(
        columns=columns,
        task=train.task,
        n_classes=train.n_classes,
        bin_edges=train.meta.get("bin_edges"),
    )
    if train.task == "regression":
        y = np.asarray(train.target, dtype=np.float64)
        std = float(y.std())
        if std > 0.0:
            prep.target_mean = float(y.mean())
            prep.target_std = std
            prep.target_scaled = True
    return prep


def split_and_fit(ds: TabularDataset, test_fraction: float = 0.2, rng: Rng | None = None):
    """Random 4:1 row split by default, stats fit on the training rows only.

    Returns (train, test, preprocessor) with both splits transformed.
    """
    if rng is None:
        raise ParameterError("split_and_fit needs an Rng")
    if not (0.0 < test_fraction < 1.0):
        raise ParameterError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n_test = int(round(ds.n * test_fraction))
    if n_test < 1 or n_test >= ds.n:
        raise ParameterError(f"split of {ds.n} rows at {test_fraction} leaves an empty side")
    perm = rng.permutation(ds.n)
    test_raw = subset(ds, perm[:n_test])
    train_raw = subset(ds, perm[n_test:])
    prep = fit_preprocessor(train_raw)
    return prep.transform(train_raw), prep.transform(test_raw), prep


def _format(v: float) -> str:
    return f"{v:.17g}"


def csv_write(ds: TabularDataset, path, target_name: str = "target") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + [target_name])
        for i in range(ds.n):
            row = []
            for j in range(len(ds.feature_cols)):
                v = ds.feature_cols[j][i]
                row.append(str(v) if ds.is_categorical(j) else _format(float(v)))
            if ds.task == "classification":
                row.append(str(int(ds.target[i])))
            else:
                row.append(_format(float(ds.target[i])))
            writer.writerow(row)


def csv_read(
    path,
    target_column: str = "target",
    categorical=(),
    task: str = "regression",
    n_classes: int | None = None,
) -> TabularDataset:
    """Parse a headered CSV; numeric cells must be valid 64-bit floats.

    Missing values are an explicit error; declared categorical columns stay
    strings until one-hot encoding.
    """
    categorical = set(categorical)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if target_column not in header:
            raise SchemaError(f"{path}: no target column {target_column!r} in header")
        t_idx = header.index(target_column)
        feature_names = [h for i, h in enumerate(header) if i != t_idx]
        raw = {name: [] for name in header}
        for rownum, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(f"{path}: row {rownum} has {len(row)} cells, expected {len(header)}")
            for name, cell in zip(header, row):
                if cell == "":
                    raise SchemaError(f"{path}: row {rownum} column {name!r}: missing value")
                raw[name].append(cell)

    def parse_numeric(name):
        out = np.empty(len(raw[name]))
        for i, cell in enumerate(raw[name]):
            try:
                out[i] = float(cell)
            except ValueError:
                raise SchemaError(
                    f"{path}: row {i + 2} column {name!r}: cannot parse {cell!r}"
                ) from None
        return out

    cols = []
    for name in feature_names:
        if name in categorical:
            cols.append(np.array(raw[name], dtype=object))
        else:
            cols.append(parse_numeric(name))
    if task == "classification":
        target = parse_numeric(target_column).astype(np.int64)
        if n_classes is None:
            n_classes = int(target.max()) + 1 if len(target) else 2
    else:
        target = parse_numeric(target_column)
    return TabularDataset(
        feature_names=feature_names,
        feature_cols=cols,
        target=target,
        task=task,
        n_classes=n_classes,
        meta={"path": str(path)},
    )
