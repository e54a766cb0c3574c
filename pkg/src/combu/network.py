"""Dense layered networks with per-dimension activations.

A network is a list of affine layers; every layer except the last applies an
:class:`~combu.activations.Assignment` to its pre-activations.  The final
layer is always bare, with the task head (identity or softmax) applied
outside the layer stack.  The same structure is produced by the trainer's
builders and by the expression compiler.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .activations import Assignment
from .errors import ParameterError, ShapeError
from .rng import Rng

HEADS = ("identity", "softmax")


@dataclass
class Layer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)
    activation: Assignment | None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ShapeError("layer needs a weight matrix and a bias vector")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} does not match {self.weights.shape[0]} outputs"
            )
        if self.activation is not None and self.activation.dim != self.weights.shape[0]:
            raise ShapeError("activation assignment width does not match layer output")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class LayeredNetwork:
    input_dim: int
    layers: list
    head: str = "identity"

    def __post_init__(self):
        if self.head not in HEADS:
            raise ParameterError(f"head must be one of {HEADS}, got {self.head!r}")
        if not self.layers:
            raise ParameterError("network needs at least one layer")
        prev = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.in_dim != prev:
                raise ShapeError(f"layer {i} expects {layer.in_dim} inputs, gets {prev}")
            prev = layer.out_dim
        if self.layers[-1].activation is not None:
            raise ParameterError("final layer must not carry an internal activation")

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim


@dataclass
class Tape:
    """Intermediate values recorded by a forward pass, consumed by backward."""

    layer_inputs: list = field(default_factory=list)  # post-activation input to each layer
    preacts: list = field(default_factory=list)  # pre-activation of each layer
    drop_scales: list = field(default_factory=list)  # multiplicative dropout factor or None
    logits: np.ndarray | None = None


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(
    net: LayeredNetwork,
    x,
    train_mode: bool = False,
    rng: Rng | None = None,
    dropout: float = 0.0,
):
    """Run the network; returns (head output, tape).

    Inverted dropout is applied after each internal activation when
    ``train_mode`` is set: surviving units are scaled by 1/(1-p) so that
    evaluation needs no rescaling.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = np.atleast_2d(x)
    if a.shape[1] != net.input_dim:
        raise ShapeError(f"input has {a.shape[1]} features, network expects {net.input_dim}")
    if train_mode and dropout > 0.0 and rng is None:
        raise ParameterError("training-mode dropout needs an Rng")

    tape = Tape()
    for layer in net.layers:
        tape.layer_inputs.append(a)
        z = a @ layer.weights.T + layer.bias
        tape.preacts.append(z)
        if layer.activation is None:
            a = z
            tape.drop_scales.append(None)
            continue
        a = layer.activation.apply(z)
        if train_mode and dropout > 0.0:
            keep = rng.random(z.shape) >= dropout
            scale = keep / (1.0 - dropout)
            a = a * scale
            tape.drop_scales.append(scale)
        else:
            tape.drop_scales.append(None)
    tape.logits = a
    out = softmax(a) if net.head == "softmax" else a
    return (out[0] if single else out), tape


def backward(net: LayeredNetwork, tape: Tape, dlogits: np.ndarray) -> list:
    """Gradients of the loss w.r.t. every weight and bias.

    ``dlogits`` is the loss gradient w.r.t. the final layer's (pre-head)
    output.  Returns one (dW, db) pair per layer.
    """
    grads = [None] * len(net.layers)
    delta = np.atleast_2d(dlogits)
    for l in range(len(net.layers) - 1, -1, -1):
        a_in = tape.layer_inputs[l]
        grads[l] = (delta.T @ a_in, delta.sum(axis=0))
        if l == 0:
            break
        da = delta @ net.layers[l].weights
        scale = tape.drop_scales[l - 1]
        if scale is not None:
            da = da * scale
        act = net.layers[l - 1].activation
        delta = da * act.grad(tape.preacts[l - 1]) if act is not None else da
    return grads


def mse(output, target) -> float:
    output = np.asarray(output, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if output.shape != target.shape:
        raise ShapeError(f"output {output.shape} vs target {target.shape}")
    d = output - target
    return float(np.mean(d * d))


def cross_entropy(probs, classes) -> float:
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    classes = np.atleast_1d(np.asarray(classes))
    if classes.shape[0] != probs.shape[0]:
        raise ShapeError("one class index per row required")
    if classes.min() < 0 or classes.max() >= probs.shape[1]:
        raise ParameterError("class index out of range")
    picked = probs[np.arange(len(classes)), classes.astype(np.int64)]
    with np.errstate(divide="ignore"):
        return float(np.mean(-np.log(picked)))


def loss(output, target, task: str) -> float:
    if task == "regression":
        return mse(output, target)
    if task == "classification":
        return cross_entropy(output, target)
    raise ParameterError(f"unknown task {task!r}")


def loss_grad(output, target, task: str) -> np.ndarray:
    """Gradient w.r.t. the final layer's pre-head output.

    For the softmax head this is the usual probs-minus-onehot form, so
    ``output`` is the head output in both tasks.
    """
    if task == "regression":
        output = np.asarray(output, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        if output.shape != target.shape:
            raise ShapeError(f"output {output.shape} vs target {target.shape}")
        return 2.0 * (output - target) / output.size
    if task == "classification":
        probs = np.atleast_2d(np.asarray(output, dtype=np.float64))
        classes = np.atleast_1d(np.asarray(target)).astype(np.int64)
        if classes.min() < 0 or classes.max() >= probs.shape[1]:
            raise ParameterError("class index out of range")
        g = probs.copy()
        g[np.arange(len(classes)), classes] -= 1.0
        return g / probs.shape[0]
    raise ParameterError(f"unknown task {task!r}")


def network_to_dict(net: LayeredNetwork) -> dict:
    return {
        "input_dim": net.input_dim,
        "head": net.head,
        "layers": [
            {
                "W": layer.weights.tolist(),
                "b": layer.bias.tolist(),
                "activation": None if layer.activation is None else layer.activation.keys(),
            }
            for layer in net.layers
        ],
    }


def network_from_dict(d: dict) -> LayeredNetwork:
    layers = [
        Layer(
            weights=np.array(entry["W"], dtype=np.float64),
            bias=np.array(entry["b"], dtype=np.float64),
            activation=None
            if entry["activation"] is None
            else Assignment.from_keys(entry["activation"]),
        )
        for entry in d["layers"]
    ]
    return LayeredNetwork(input_dim=d["input_dim"], layers=layers, head=d["head"])


def save_network(net: LayeredNetwork, path) -> None:
    with open(path, "w") as fh:
        json.dump(network_to_dict(net), fh, sort_keys=True)


def load_network(path) -> LayeredNetwork:
    with open(path) as fh:
        return network_from_dict(json.load(fh))
