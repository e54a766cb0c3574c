"""Thin shape-checked wrappers over dense float64 arrays.

Storage is plain numpy (row-major, 64-bit floats); these helpers exist so
that dimension mismatches fail loudly with a :class:`ShapeError` instead of
broadcasting silently.
"""

import numpy as np

from .errors import ShapeError


def as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"expected a vector, got shape {v.shape}")
    return v


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {m.shape}")
    return np.ascontiguousarray(m)


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def affine(x, w, b) -> np.ndarray:
    """x @ w + b for a single vector x and weight matrix w of shape (in, out)."""
    x = as_vector(x)
    w = as_matrix(w)
    b = as_vector(b)
    if x.shape[0] != w.shape[0] or w.shape[1] != b.shape[0]:
        raise ShapeError(f"affine shapes do not chain: x{x.shape}, w{w.shape}, b{b.shape}")
    return x @ w + b
