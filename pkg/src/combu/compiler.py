"""Compile expression trees into exact network weights.

Three fixed-weight fragments do all the work on a bounded domain:

* exp: with pre-activations x - M on an (ELU, ReLU) pair,
  exp(M)*E(x-M) - exp(M)*R(x-M) + exp(M) equals exp(x) for x <= M and
  saturates to exp(M) above.
* log: with pre-activation x/delta - 1 on an NLReLU dimension,
  N(x/delta - 1) + ln(delta) equals ln(x) for x >= delta.
* identity: the (R(z), R(-z)) pair recombined with weights (1, -1)
  reproduces z exactly for every real z; chains of it carry values
  across layers.

Composition lays inner fragments side by side (unused input weights zero),
pads shallower ones to equal depth with identity chains, and folds the
outer fragment's first affine map through the inners' linear readouts.
Power products lower to exp of a coefficient-weighted sum of logs, so a
compiled network only ever uses ReLU, ELU(1), and NLReLU(1) internally.

Every fragment's constants (M, delta) come from per-node interval analysis,
which keeps exp(M) small for nested expressions instead of inheriting one
global input bound.
"""

import math
from dataclasses import dataclass

import numpy as np

from .activations import Assignment, ELU, NLReLU, ReLU
from .errors import ConditioningError, ParameterError, ShapeError
from .expr import (
    Const,
    Exp,
    LinComb,
    Log,
    PowerProduct,
    SumOfProducts,
    Var,
    evaluate,
    infer_bounds,
    num_vars,
)
from .network import Layer, LayeredNetwork, forward
from .rng import Rng

_R = ReLU()
_E = ELU(1.0)
_N = NLReLU(1.0)

MAX_EXP_ARG = 700.0  # beyond this exp overflows float64


@dataclass
class Gadget:
    """A network fragment: activated hidden layers plus a linear readout."""

    input_dim: int
    layers: list  # (weights (out, in), bias (out,), kinds tuple) per hidden layer
    out_w: np.ndarray  # (n_out, last hidden width, or input_dim when no layers)
    out_b: np.ndarray

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def n_out(self) -> int:
        return self.out_w.shape[0]


def linear_gadget(out_w, out_b) -> Gadget:
    out_w = np.atleast_2d(np.asarray(out_w, dtype=np.float64))
    out_b = np.atleast_1d(np.asarray(out_b, dtype=np.float64))
    return Gadget(input_dim=out_w.shape[1], layers=[], out_w=out_w, out_b=out_b)


def var_gadget(index: int, input_dim: int) -> Gadget:
    w = np.zeros((1, input_dim))
    w[0, index] = 1.0
    return linear_gadget(w, [0.0])


def const_gadget(value: float, input_dim: int) -> Gadget:
    return linear_gadget(np.zeros((1, input_dim)), [float(value)])


def exp_gadget(m: float) -> Gadget:
    """Computes exp(x) for inputs x <= m; saturates to exp(m) above."""
    if m > MAX_EXP_ARG:
        raise ConditioningError(f"exp({m}) overflows a 64-bit float")
    em = math.exp(m)
    return Gadget(
        input_dim=1,
        layers=[(np.array([[1.0], [1.0]]), np.array([-m, -m]), (_E, _R))],
        out_w=np.array([[em, -em]]),
        out_b=np.array([em]),
    )


def log_gadget(delta: float) -> Gadget:
    """Computes ln(x) for inputs x >= delta > 0."""
    if delta <= 0.0:
        raise ParameterError(f"log gadget needs delta > 0, got {delta}")
    return Gadget(
        input_dim=1,
        layers=[(np.array([[1.0 / delta]]), np.array([-1.0]), (_N,))],
        out_w=np.array([[1.0]]),
        out_b=np.array([math.log(delta)]),
    )


def identity_gadget() -> Gadget:
    """Carries its input across one activated layer exactly."""
    return Gadget(
        input_dim=1,
        layers=[(np.array([[1.0], [-1.0]]), np.zeros(2), (_R, _R))],
        out_w=np.array([[1.0, -1.0]]),
        out_b=np.zeros(1),
    )


def pad_gadget(g: Gadget, depth: int) -> Gadget:
    """Append identity stages until the gadget has the requested depth.

    Each stage turns the m readout values f into the 2m activated values
    (R(f), R(-f)) and reads them back with weights (1, -1), which is exact
    for all reals.
    """
    if depth < g.depth:
        raise ParameterError(f"cannot pad depth {g.depth} down to {depth}")
    layers = list(g.layers)
    out_w, out_b = g.out_w, g.out_b
    for _ in range(depth - g.depth):
        m = out_w.shape[0]
        layers.append(
            (
                np.vstack([out_w, -out_w]),
                np.concatenate([out_b, -out_b]),
                (_R,) * (2 * m),
            )
        )
        new_w = np.zeros((m, 2 * m))
        new_w[np.arange(m), np.arange(m)] = 1.0
        new_w[np.arange(m), m + np.arange(m)] = -1.0
        out_w, out_b = new_w, np.zeros(m)
    return Gadget(input_dim=g.input_dim, layers=layers, out_w=out_w, out_b=out_b)


def _block_diag(blocks) -> np.ndarray:
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r : r + b.shape[0], c : c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def stack_gadgets(gadgets) -> Gadget:
    """Lay equal-depth gadgets side by side over a shared input.

    The first hidden layer stacks weight rows over the same input columns;
    deeper layers and the readout are block-diagonal, so each fragment's
    dims never see another fragment's values (its weights there are zero).
    """
    gadgets = list(gadgets)
    if not gadgets:
        raise ParameterError("nothing to stack")
    if len({g.input_dim for g in gadgets}) != 1:
        raise ShapeError("stacked gadgets must share the input dimension")
    if len({g.depth for g in gadgets}) != 1:
        raise ShapeError("stacked gadgets must share the depth; pad first")
    if len(gadgets) == 1:
        return gadgets[0]
    depth = gadgets[0].depth
    layers = []
    for l in range(depth):
        ws = [g.layers[l][0] for g in gadgets]
        w = np.vstack(ws) if l == 0 else _block_diag(ws)
        b = np.concatenate([g.layers[l][1] for g in gadgets])
        kinds = tuple(k for g in gadgets for k in g.layers[l][2])
        layers.append((w, b, kinds))
    if depth == 0:
        out_w = np.vstack([g.out_w for g in gadgets])
    else:
        out_w = _block_diag([g.out_w for g in gadgets])
    out_b = np.concatenate([g.out_b for g in gadgets])
    return Gadget(input_dim=gadgets[0].input_dim, layers=layers, out_w=out_w, out_b=out_b)


def compose_gadgets(outer: Gadget, inners) -> Gadget:
    """Feed the inner fragments' outputs into the outer fragment.

    Inners are padded to equal depth and stacked; because the stacked
    readout is linear and the outer's first pre-activation is affine, the
    seam folds into a single affine map.
    """
    inners = list(inners)
    total = sum(g.n_out for g in inners)
    if total != outer.input_dim:
        raise ShapeError(f"outer expects {outer.input_dim} inputs, inners supply {total}")
    depth = max(g.depth for g in inners)
    st = stack_gadgets([pad_gadget(g, depth) for g in inners])
    if outer.layers:
        w0, b0, kinds0 = outer.layers[0]
        merged = (w0 @ st.out_w, w0 @ st.out_b + b0, kinds0)
        return Gadget(
            input_dim=st.input_dim,
            layers=st.layers + [merged] + list(outer.layers[1:]),
            out_w=outer.out_w,
            out_b=outer.out_b,
        )
    return Gadget(
        input_dim=st.input_dim,
        layers=st.layers,
        out_w=outer.out_w @ st.out_w,
        out_b=outer.out_w @ st.out_b + outer.out_b,
    )


def to_network(g: Gadget) -> LayeredNetwork:
    layers = [
        Layer(weights=w, bias=b, activation=Assignment.from_acts(kinds))
        for w, b, kinds in g.layers
    ]
    layers.append(Layer(weights=g.out_w, bias=g.out_b, activation=None))
    return LayeredNetwork(input_dim=g.input_dim, layers=layers, head="identity")


def compose(outer: Gadget, inners) -> LayeredNetwork:
    return to_network(compose_gadgets(outer, inners))


def run_gadget(g: Gadget, x) -> np.ndarray:
    out, _ = forward(to_network(g), x)
    return out


# ---------------------------------------------------------------------------
# compilation

def lower(node):
    """Rewrite power products as exp of weighted sums of logs."""
    if isinstance(node, (Var, Const)):
        return node
    if isinstance(node, Exp):
        return Exp(lower(node.child))
    if isinstance(node, Log):
        return Log(lower(node.child))
    if isinstance(node, LinComb):
        return LinComb(node.coeffs, tuple(lower(t) for t in node.terms), node.bias)
    if isinstance(node, PowerProduct):
        coeffs, logs = [], []
        for p, c in zip(node.exponents, node.children):
            if p == 0.0:  # x**0 contributes nothing to the log-space sum
                continue
            coeffs.append(p)
            logs.append(Log(lower(c)))
        if not logs:
            return Const(1.0)
        if len(logs) == 1 and coeffs[0] == 1.0:
            return lower(node.children[node.exponents.index(1.0)])
        return Exp(LinComb(tuple(coeffs), tuple(logs)))
    if isinstance(node, SumOfProducts):
        return LinComb(node.coeffs, tuple(lower(p) for p in node.products))
    raise ParameterError(f"unknown node {node!r}")


def compile_ast(node, input_bounds) -> LayeredNetwork:
    """Full pipeline: bounds, per-node gadgets, composition, linear readout.

    The result evaluates the tree exactly (up to float rounding) on the
    declared box and uses only ReLU/ELU(1)/NLReLU(1) internally.
    """
    input_bounds = list(input_bounds)
    if num_vars(node) > len(input_bounds):
        raise ParameterError(
            f"expression uses {num_vars(node)} variables, bounds given for {len(input_bounds)}"
        )
    dim = max(len(input_bounds), 1)
    core = lower(node)
    bounds = infer_bounds(core, input_bounds)

    def build(n) -> Gadget:
        if isinstance(n, Var):
            return var_gadget(n.index, dim)
        if isinstance(n, Const):
            return const_gadget(n.value, dim)
        if isinstance(n, LinComb):
            if not n.terms:
                return const_gadget(n.bias, dim)
            outer = linear_gadget(np.array([list(n.coeffs)]), [n.bias])
            return compose_gadgets(outer, [build(t) for t in n.terms])
        if isinstance(n, Exp):
            m = bounds[n.child].hi
            return compose_gadgets(exp_gadget(m), [build(n.child)])
        if isinstance(n, Log):
            return compose_gadgets(log_gadget(bounds[n.child].delta), [build(n.child)])
        raise ParameterError(f"unexpected node after lowering: {n!r}")

    return to_network(build(core))


def verify(net: LayeredNetwork, node, input_bounds, n_samples: int, rng: Rng) -> float:
    """Max relative error of the network against the direct interpreter.

    Points are drawn uniformly from the box; where a variable carries a
    non-zero minimum magnitude, draws inside (0, delta) are rejected.
    Absolute error is used where the true value is below 1e-8.
    """
    input_bounds = list(input_bounds)
    X = np.empty((n_samples, len(input_bounds)))
    for j, b in enumerate(input_bounds):
        col = rng.uniform(b.lo, b.hi, size=n_samples)
        if b.min_abs > 0.0:
            bad = (np.abs(col) < b.min_abs) & (col != 0.0)
            while bad.any():
                col[bad] = rng.uniform(b.lo, b.hi, size=int(bad.sum()))
                bad = (np.abs(col) < b.min_abs) & (col != 0.0)
        X[:, j] = col
    out, _ = forward(net, X)
    preds = out[:, 0]
    worst = 0.0
    for i in range(n_samples):
        truth = evaluate(node, X[i])
        err = abs(preds[i] - truth)
        if abs(truth) >= 1e-8:
            err /= abs(truth)
        worst = max(worst, err)
    return worst
