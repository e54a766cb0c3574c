"""Training loop: Adam, mini-batch SGD, and the standard MLP builders.

The two stock model sizes are a small MLP (3 affine layers, 128 hidden
units) and a large one (6 affine layers, 256 hidden units); internal
activations follow the chosen scheme and the final layer is bare.
"""

import math
from dataclasses import dataclass

import numpy as np

from .activations import (
    Activation,
    Assignment,
    KINDS,
    default_ratios,
    make_combu,
    parse_activation,
)
from .errors import ParameterError, TrainingDiverged
from .network import LayeredNetwork, Layer, backward, forward, loss, loss_grad
from .rng import Rng


@dataclass
class TrainConfig:
    batch_size: int = 500
    learning_rate: float = 5e-4
    epochs: int = 200
    dropout_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ParameterError(f"epochs must be >= 0, got {self.epochs}")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ParameterError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.learning_rate <= 0.0:
            raise ParameterError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ParameterError("Adam betas must lie in [0, 1)")


class AdamState:
    """First/second moment accumulators, one pair per parameter tensor."""

    def __init__(self, params):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0


def net_params(net: LayeredNetwork) -> list:
    params = []
    for layer in net.layers:
        params.append(layer.weights)
        params.append(layer.bias)
    return params


def adam_step(params, grads, state: AdamState, config: TrainConfig):
    """One bias-corrected Adam update, in place."""
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        mhat = m / c1
        vhat = v / c2
        np.sqrt(vhat, out=vhat)
        vhat += config.eps
        mhat /= vhat
        mhat *= config.learning_rate
        p -= mhat
    return params


def train(net: LayeredNetwork, data, config: TrainConfig, rng: Rng | None = None):
    """Mini-batch training; returns (net, mean loss per epoch).

    Rows are reshuffled every epoch from the run's stream; the trailing
    incomplete batch is kept.  Raises :class:`TrainingDiverged` on a
    non-finite epoch loss.
    """
    X, y = np.asarray(data.X, dtype=np.float64), np.asarray(data.y)
    n = len(X)
    if n == 0:
        raise ParameterError("dataset is empty")
    if data.task == "regression" and y.ndim == 1:
        y = y.reshape(n, 1)  # match the (batch, out_dim) network output
    if rng is None:
        rng = Rng(config.seed)
    params = net_params(net)
    state = AdamState(params)
    curve = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            out, tape = forward(
                net, X[idx], train_mode=True, rng=rng, dropout=config.dropout_rate
            )
            total += loss(out, y[idx], data.task) * len(idx)
            grads = backward(net, tape, loss_grad(out, y[idx], data.task))
            flat = [g for pair in grads for g in pair]
            adam_step(params, flat, state, config)
        epoch_loss = total / n
        if not math.isfinite(epoch_loss):
            raise TrainingDiverged(epoch)
        curve.append(epoch_loss)
    return net, curve


def predict(net: LayeredNetwork, X, task: str) -> np.ndarray:
    out, _ = forward(net, np.asarray(X, dtype=np.float64))
    if task == "classification":
        return np.argmax(out, axis=-1)
    return out[:, 0] if out.ndim == 2 and out.shape[1] == 1 else out


@dataclass(frozen=True)
class Scheme:
    """Activation scheme for a model: one uniform kind, or a mixture."""

    name: str
    act: Activation | None = None
    ratios: tuple | None = None

    def __post_init__(self):
        if (self.act is None) == (self.ratios is None):
            raise ParameterError("scheme needs exactly one of act or ratios")

    def assignment(self, dim: int, rng: Rng) -> Assignment:
        if self.act is not None:
            return Assignment.uniform(self.act, dim)
        return make_combu(self.ratios, dim, seed=rng.next_seed()).assignment


SCHEME_NAMES = ("sigmoid", "relu", "softplus", "tanh", "lrelu", "elu", "selu", "swish", "nlrelu", "gelu", "combu")

# the seven schemes compared by the benchmark protocol
BENCH_SCHEMES = ("relu", "elu", "selu", "swish", "nlrelu", "gelu", "combu")


def parse_scheme(spec) -> Scheme:
    """Accept "relu", "combu", an activation key like "elu:0.5", or a dict
    {"name": ..., "ratios": {activation key: fraction}}."""
    if isinstance(spec, Scheme):
        return spec
    if isinstance(spec, dict):
        ratios = tuple((parse_activation(k), v) for k, v in spec["ratios"].items())
        return Scheme(name=spec.get("name", "mixture"), ratios=ratios)
    if not isinstance(spec, str):
        raise ParameterError(f"cannot parse scheme from {spec!r}")
    if spec == "combu":
        return Scheme(name="combu", ratios=default_ratios())
    name = spec.partition(":")[0]
    if name not in KINDS:
        raise ParameterError(f"unknown scheme {spec!r}")
    return Scheme(name=spec, act=parse_activation(spec))


MODEL_SIZES = {"small": (3, 128), "large": (6, 256)}


def build_mlp(
    input_dim: int,
    output_dim: int,
    size: str,
    scheme: Scheme,
    rng: Rng,
    head: str = "identity",
) -> LayeredNetwork:
    """Stock MLP: ``small`` is 3 layers x 128 hidden, ``large`` 6 x 256.

    Weights start uniform in [-s, s] with s = sqrt(6 / (fan_in + fan_out));
    biases start at zero.
    """
    if input_dim < 1 or output_dim < 1:
        raise ParameterError("input_dim and output_dim must be >= 1")
    if size not in MODEL_SIZES:
        raise ParameterError(f"size must be one of {tuple(MODEL_SIZES)}, got {size!r}")
    n_layers, hidden = MODEL_SIZES[size]
    dims = [input_dim] + [hidden] * (n_layers - 1) + [output_dim]
    layers = []
    for l in range(n_layers):
        fan_in, fan_out = dims[l], dims[l + 1]
        s = math.sqrt(6.0 / (fan_in + fan_out))
        weights = rng.uniform(-s, s, size=(fan_out, fan_in))
        bias = np.zeros(fan_out)
        activation = scheme.assignment(fan_out, rng) if l < n_layers - 1 else None
        layers.append(Layer(weights=weights, bias=bias, activation=activation))
    return LayeredNetwork(input_dim=input_dim, layers=layers, head=head)
