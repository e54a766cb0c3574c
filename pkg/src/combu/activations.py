"""Closed-form activation functions and per-dimension mixtures.

Each activation is a small frozen object with an elementwise forward and an
analytic derivative.  At non-differentiable points (x = 0 for the rectified
families) the derivative returns the right-hand limit.

A mixture assigns one activation to each dimension of a layer.  The
assignment is drawn once, up front, from fixed ratios: per-kind dimension
counts come from banker's rounding of ratio*D followed by a correction loop
(the first kind absorbs a positive remainder; a negative remainder is
removed from kinds in order, clamped at zero), then each kind draws its
dimensions without replacement from the still-unassigned index set.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import ParameterError, ShapeError
from .rng import Rng

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    p = x >= 0
    out[p] = 1.0 / (1.0 + np.exp(-x[p]))
    e = np.exp(x[~p])
    out[~p] = e / (1.0 + e)
    return out


class Activation:
    """Base class; subclasses implement ``_f`` and ``_df`` on 1-d+ arrays."""

    name = "?"

    def __call__(self, x):
        arr = np.asarray(x, dtype=np.float64)
        out = self._f(np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def grad(self, x):
        arr = np.asarray(x, dtype=np.float64)
        out = self._df(np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def key(self) -> str:
        """Compact parseable string form, e.g. ``"elu:1.0"``."""
        return self.name

    def __repr__(self):
        return self.key()


@dataclass(frozen=True, repr=False)
class Sigmoid(Activation):
    name = "sigmoid"

    def _f(self, x):
        return _sigmoid(x)

    def _df(self, x):
        s = _sigmoid(x)
        return s * (1.0 - s)


@dataclass(frozen=True, repr=False)
class ReLU(Activation):
    name = "relu"

    def _f(self, x):
        return np.maximum(x, 0.0)

    def _df(self, x):
        return (x >= 0.0).astype(np.float64)


@dataclass(frozen=True, repr=False)
class SoftPlus(Activation):
    name = "softplus"

    def _f(self, x):
        return np.logaddexp(0.0, x)

    def _df(self, x):
        return _sigmoid(x)


@dataclass(frozen=True, repr=False)
class Tanh(Activation):
    name = "tanh"

    def _f(self, x):
        return np.tanh(x)

    def _df(self, x):
        t = np.tanh(x)
        return 1.0 - t * t


@dataclass(frozen=True, repr=False)
class LReLU(Activation):
    name = "lrelu"
    a: float = 0.01

    def __post_init__(self):
        if not (0.0 <= self.a <= 1.0):
            raise ParameterError(f"LReLU slope must be in [0, 1], got {self.a}")

    def _f(self, x):
        return np.where(x >= 0.0, x, self.a * x)

    def _df(self, x):
        return np.where(x >= 0.0, 1.0, self.a)

    def key(self):
        return f"lrelu:{self.a!r}"


@dataclass(frozen=True, repr=False)
class ELU(Activation):
    name = "elu"
    alpha: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ParameterError(f"ELU alpha must be in [0, 1], got {self.alpha}")

    def _f(self, x):
        out = x.copy()
        n = x < 0.0
        out[n] = self.alpha * np.expm1(x[n])
        return out

    def _df(self, x):
        out = np.ones_like(x)
        n = x < 0.0
        out[n] = self.alpha * np.exp(x[n])
        return out

    def key(self):
        return f"elu:{self.alpha!r}"


@dataclass(frozen=True, repr=False)
class SELU(Activation):
    # self-normalizing constants; lam is constrained > 1, alpha > 0
    name = "selu"
    lam: float = 1.0507009873554805
    alpha: float = 1.6732632423543772

    def __post_init__(self):
        if not (self.lam > 1.0):
            raise ParameterError(f"SELU lambda must be > 1, got {self.lam}")
        if not (self.alpha > 0.0):
            raise ParameterError(f"SELU alpha must be > 0, got {self.alpha}")

    def _f(self, x):
        out = x.copy()
        n = x < 0.0
        out[n] = self.alpha * np.expm1(x[n])
        return self.lam * out

    def _df(self, x):
        out = np.ones_like(x)
        n = x < 0.0
        out[n] = self.alpha * np.exp(x[n])
        return self.lam * out

    def key(self):
        return f"selu:{self.lam!r},{self.alpha!r}"


@dataclass(frozen=True, repr=False)
class Swish(Activation):
    name = "swish"
    beta: float = 1.0

    def __post_init__(self):
        if not (self.beta >= 0.0):
            raise ParameterError(f"Swish beta must be >= 0, got {self.beta}")

    def _f(self, x):
        return x * _sigmoid(self.beta * x)

    def _df(self, x):
        s = _sigmoid(self.beta * x)
        return s * (1.0 + self.beta * x * (1.0 - s))

    def key(self):
        return f"swish:{self.beta!r}"


@dataclass(frozen=True, repr=False)
class NLReLU(Activation):
    """Natural-log rectified unit: ln(beta * max(0, x) + 1)."""

    name = "nlrelu"
    beta: float = 1.0

    def __post_init__(self):
        if not (self.beta > 0.0):
            raise ParameterError(f"NLReLU beta must be > 0, got {self.beta}")

    def _f(self, x):
        return np.log1p(self.beta * np.maximum(x, 0.0))

    def _df(self, x):
        return np.where(x >= 0.0, self.beta / (self.beta * np.maximum(x, 0.0) + 1.0), 0.0)

    def key(self):
        return f"nlrelu:{self.beta!r}"


@dataclass(frozen=True, repr=False)
class GELU(Activation):
    """x * Phi(x) with the exact Gaussian CDF (erf), no tanh approximation."""

    name = "gelu"

    def _f(self, x):
        return x * 0.5 * (1.0 + erf(x / _SQRT2))

    def _df(self, x):
        cdf = 0.5 * (1.0 + erf(x / _SQRT2))
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        return cdf + x * pdf


KINDS = {
    cls.name: cls
    for cls in (Sigmoid, ReLU, SoftPlus, Tanh, LReLU, ELU, SELU, Swish, NLReLU, GELU)
}


def act_eval(act: Activation, x):
    return act(x)


def act_grad(act: Activation, x):
    return act.grad(x)


def parse_activation(key: str) -> Activation:
    """Inverse of :meth:`Activation.key`."""
    name, _, params = key.partition(":")
    if name not in KINDS:
        raise ParameterError(f"unknown activation {key!r}")
    cls = KINDS[name]
    if not params:
        return cls()
    try:
        args = [float(p) for p in params.split(",")]
    except ValueError:
        raise ParameterError(f"bad activation parameters in {key!r}") from None
    return cls(*args)


class Assignment:
    """One activation per dimension of a width-D layer."""

    __slots__ = ("kinds", "index", "_groups")

    def __init__(self, kinds, index):
        self.kinds = tuple(kinds)
        idx = np.asarray(index, dtype=np.int64)
        if idx.ndim != 1:
            raise ShapeError(f"assignment index must be 1-d, got shape {idx.shape}")
        if len(idx) and (idx.min() < 0 or idx.max() >= len(self.kinds)):
            raise ParameterError("assignment index out of range")
        idx.setflags(write=False)
        self.index = idx
        self._groups = tuple(
            (act, np.flatnonzero(idx == k))
            for k, act in enumerate(self.kinds)
            if (idx == k).any()
        )

    @property
    def dim(self) -> int:
        return len(self.index)

    @classmethod
    def uniform(cls, act: Activation, dim: int) -> "Assignment":
        return cls((act,), np.zeros(dim, dtype=np.int64))

    @classmethod
    def from_acts(cls, acts) -> "Assignment":
        kinds = []
        index = []
        for a in acts:
            if a not in kinds:
                kinds.append(a)
            index.append(kinds.index(a))
        return cls(tuple(kinds), np.asarray(index, dtype=np.int64))

    def acts(self) -> list:
        return [self.kinds[i] for i in self.index]

    def apply(self, z: np.ndarray) -> np.ndarray:
        """Activate the last axis of z dimension by dimension."""
        if z.shape[-1] != self.dim:
            raise ShapeError(f"expected last axis {self.dim}, got {z.shape}")
        if len(self.kinds) == 1:
            return self.kinds[0]._f(z)
        out = np.empty_like(z)
        for act, idx in self._groups:
            out[..., idx] = act._f(z[..., idx])
        return out

    def grad(self, z: np.ndarray) -> np.ndarray:
        if z.shape[-1] != self.dim:
            raise ShapeError(f"expected last axis {self.dim}, got {z.shape}")
        if len(self.kinds) == 1:
            return self.kinds[0]._df(z)
        out = np.empty_like(z)
        for act, idx in self._groups:
            out[..., idx] = act._df(z[..., idx])
        return out

    def keys(self) -> list[str]:
        return [self.kinds[i].key() for i in self.index]

    @classmethod
    def from_keys(cls, keys) -> "Assignment":
        return cls.from_acts([parse_activation(k) for k in keys])

    def __eq__(self, other):
        return (
            isinstance(other, Assignment)
            and self.kinds == other.kinds
            and np.array_equal(self.index, other.index)
        )


def _normalize_ratios(ratios) -> tuple:
    """Accept a dict or pair sequence; preserve insertion order of kinds."""
    pairs = tuple(ratios.items()) if isinstance(ratios, dict) else tuple(ratios)
    if not pairs:
        raise ParameterError("mixture needs at least one activation")
    for act, frac in pairs:
        if not isinstance(act, Activation):
            raise ParameterError(f"ratio key must be an Activation, got {act!r}")
        if not (0.0 <= frac <= 1.0):
            raise ParameterError(f"ratio for {act.key()} must be in [0, 1], got {frac}")
    total = sum(frac for _, frac in pairs)
    if abs(total - 1.0) > 1e-9:
        raise ParameterError(f"ratios must sum to 1, got {total!r}")
    return pairs


def dim_counts(ratios, dim: int) -> list[int]:
    """Per-kind dimension counts for a width-``dim`` layer."""
    if dim <= 0:
        raise ParameterError(f"dim must be positive, got {dim}")
    pairs = _normalize_ratios(ratios)
    counts = [round(frac * dim) for _, frac in pairs]
    diff = dim - sum(counts)
    for k in range(len(counts)):
        if diff == 0:
            break
        if diff > 0:
            counts[k] += diff
            diff = 0
        else:
            change = min(counts[k], -diff)
            counts[k] -= change
            diff += change
    return counts


def assign_dims(ratios, dim: int, rng: Rng) -> Assignment:
    """Realize a mixture's masks: each kind draws its dimensions in turn."""
    pairs = _normalize_ratios(ratios)
    counts = dim_counts(pairs, dim)
    index = np.full(dim, -1, dtype=np.int64)
    remaining = np.arange(dim)
    for k, count in enumerate(counts):
        chosen = rng.choice_no_replace(remaining, count)
        index[chosen] = k
        remaining = remaining[~np.isin(remaining, chosen)]
    return Assignment(tuple(act for act, _ in pairs), index)


@dataclass(frozen=True)
class CombUSpec:
    """A realized activation mixture: ratios plus per-dimension masks."""

    ratios: tuple
    dim: int
    assignment: Assignment
    seed: int

    def __post_init__(self):
        pairs = _normalize_ratios(self.ratios)
        object.__setattr__(self, "ratios", pairs)
        if self.assignment.dim != self.dim:
            raise ShapeError(f"assignment covers {self.assignment.dim} dims, expected {self.dim}")
        if self.assignment.kinds != tuple(act for act, _ in pairs):
            raise ParameterError("assignment kinds do not match ratio kinds")
        expected = dim_counts(pairs, self.dim)
        actual = [int((self.assignment.index == k).sum()) for k in range(len(pairs))]
        if actual != expected:
            raise ParameterError(f"per-kind counts {actual} do not match expected {expected}")

    def counts(self) -> list[int]:
        return [int((self.assignment.index == k).sum()) for k in range(len(self.ratios))]

    def to_json(self) -> str:
        return json.dumps(
            {
                "ratios": {act.key(): frac for act, frac in self.ratios},
                "dim": self.dim,
                "assignment": self.assignment.keys(),
                "seed": self.seed,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CombUSpec":
        d = json.loads(text)
        ratios = tuple((parse_activation(k), v) for k, v in d["ratios"].items())
        kinds = tuple(act for act, _ in ratios)
        key_to_idx = {act.key(): i for i, act in enumerate(kinds)}
        try:
            index = [key_to_idx[k] for k in d["assignment"]]
        except KeyError as exc:
            raise ParameterError(f"assignment names a kind missing from ratios: {exc}") from None
        return cls(
            ratios=ratios,
            dim=d["dim"],
            assignment=Assignment(kinds, index),
            seed=d["seed"],
        )


def make_combu(ratios, dim: int, seed: int) -> CombUSpec:
    """Build a mixture whose assignment is fully determined by ``seed``."""
    pairs = _normalize_ratios(ratios)
    assignment = assign_dims(pairs, dim, Rng(seed))
    return CombUSpec(ratios=pairs, dim=dim, assignment=assignment, seed=seed)


def default_ratios() -> tuple:
    """The default mixture: half ReLU, a quarter each ELU(1) and NLReLU(1)."""
    return ((ReLU(), 0.5), (ELU(1.0), 0.25), (NLReLU(1.0), 0.25))


def default_combu(dim: int, rng: Rng) -> CombUSpec:
    return make_combu(default_ratios(), dim, seed=rng.next_seed())


def combu_forward(spec: CombUSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != spec.dim:
        raise ShapeError(f"input has {x.shape[-1]} dims, mixture expects {spec.dim}")
    return spec.assignment.apply(x)
