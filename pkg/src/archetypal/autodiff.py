"""Reverse-mode automatic differentiation on dense float64 arrays.

The graph is built as operations run: each :class:`Var` keeps its value and,
for every input, a vector-Jacobian callback. :func:`backward` walks the
graph once in reverse topological order and accumulates gradients. Only
scalar outputs can be differentiated; every loss reduces to a scalar first.

The op set is intentionally small: what a feedforward encoder/decoder pair
with softmax heads, Gaussian reparametrization, and log-density arithmetic
actually uses.
"""

from __future__ import annotations

import numpy as np


class Var:
    """A node in the computation graph.

    Attributes
    ----------
    value : ndarray
        The computed value.
    parents : tuple of (Var, callable)
        Each callable maps the output gradient to this input's gradient
        contribution.
    grad : ndarray or None
        Populated by :func:`backward`, same shape as ``value``.
    """

    __slots__ = ("value", "parents", "grad")

    def __init__(self, value, parents=()):
        self.value = np.asarray(value, dtype=np.float64)
        self.parents = parents
        self.grad = None

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(shape={self.value.shape})"


def _as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    g = np.asarray(g)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def add(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    return Var(
        a.value + b.value,
        (
            (a, lambda g: _unbroadcast(g, a.value.shape)),
            (b, lambda g: _unbroadcast(g, b.value.shape)),
        ),
    )


def sub(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    return Var(
        a.value - b.value,
        (
            (a, lambda g: _unbroadcast(g, a.value.shape)),
            (b, lambda g: _unbroadcast(-g, b.value.shape)),
        ),
    )


def mul(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    return Var(
        a.value * b.value,
        (
            (a, lambda g: _unbroadcast(g * b.value, a.value.shape)),
            (b, lambda g: _unbroadcast(g * a.value, b.value.shape)),
        ),
    )


def neg(a) -> Var:
    a = _as_var(a)
    return Var(-a.value, ((a, lambda g: -g),))


def scale(a, c: float) -> Var:
    """Multiply by a python constant (no gradient for the constant)."""
    a = _as_var(a)
    c = float(c)
    return Var(a.value * c, ((a, lambda g: g * c),))


def matmul(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    if a.value.shape[1] != b.value.shape[0]:
        raise ValueError(
            f"cannot multiply shapes {a.value.shape} and {b.value.shape}"
        )
    return Var(
        a.value @ b.value,
        (
            (a, lambda g: g @ b.value.T),
            (b, lambda g: a.value.T @ g),
        ),
    )


def transpose(a) -> Var:
    a = _as_var(a)
    return Var(a.value.T.copy(), ((a, lambda g: g.T),))


def relu(a) -> Var:
    a = _as_var(a)
    mask = a.value > 0.0
    return Var(np.where(mask, a.value, 0.0), ((a, lambda g: g * mask),))


def exp(a) -> Var:
    a = _as_var(a)
    out = np.exp(a.value)
    return Var(out, ((a, lambda g: g * out),))


def log(a) -> Var:
    a = _as_var(a)
    if np.any(a.value <= 0.0):
        raise ValueError("log of a non-positive value")
    return Var(np.log(a.value), ((a, lambda g: g / a.value),))


def square(a) -> Var:
    a = _as_var(a)
    return Var(a.value * a.value, ((a, lambda g: g * (2.0 * a.value)),))


def clamp(a, low: float, high: float) -> Var:
    """Clip values to [low, high]; gradient passes only strictly inside."""
    a = _as_var(a)
    inside = (a.value > low) & (a.value < high)
    return Var(np.clip(a.value, low, high), ((a, lambda g: g * inside),))


def softmax(a, axis: int = 1) -> Var:
    """Softmax along one axis of a 2-D array, max-shifted for stability."""
    a = _as_var(a)
    if a.value.ndim != 2:
        raise ValueError("softmax expects a 2-D array")
    z = a.value - a.value.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        return out * (g - inner)

    return Var(out, ((a, vjp),))


def logsumexp(a, axis: int = 1) -> Var:
    """log(sum(exp(.))) along one axis of a 2-D array, keeping the axis."""
    a = _as_var(a)
    if a.value.ndim != 2:
        raise ValueError("logsumexp expects a 2-D array")
    zmax = a.value.max(axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a.value - zmax), axis=axis, keepdims=True)) + zmax
    soft = np.exp(a.value - out)
    return Var(out, ((a, lambda g: g * soft),))


def sum_all(a) -> Var:
    a = _as_var(a)
    shape = a.value.shape
    return Var(
        np.asarray(a.value.sum()),
        ((a, lambda g: np.broadcast_to(np.asarray(g), shape).copy()),),
    )


def sum_axis(a, axis: int) -> Var:
    """Sum along one axis of a 2-D array, keeping the axis as length 1."""
    a = _as_var(a)
    if a.value.ndim != 2:
        raise ValueError("sum_axis expects a 2-D array")
    shape = a.value.shape
    return Var(
        a.value.sum(axis=axis, keepdims=True),
        ((a, lambda g: np.broadcast_to(g, shape).copy()),),
    )


def affine(x, w, b) -> Var:
    """x @ w + b with b broadcast over rows."""
    return add(matmul(x, w), b)


def reparam_sample(mu, sigma, eps) -> Var:
    """mu + sigma * eps for a fixed noise array eps.

    Gradients flow to mu unchanged and to sigma scaled by eps; eps itself
    is constant.
    """
    mu, sigma = _as_var(mu), _as_var(sigma)
    eps = np.asarray(eps, dtype=np.float64)
    if mu.value.shape != sigma.value.shape or mu.value.shape != eps.shape:
        raise ValueError(
            f"reparam shapes differ: mu {mu.value.shape}, "
            f"sigma {sigma.value.shape}, eps {eps.shape}"
        )
    return add(mu, mul(sigma, Var(eps)))


def backward(out: Var) -> None:
    """Populate ``grad`` on every node reachable from the scalar ``out``.

    Raises
    ------
    ValueError
        If ``out`` is not a scalar (size 1).
    """
    if out.value.size != 1:
        raise ValueError(f"backward needs a scalar output, got shape {out.value.shape}")

    order: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(out, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))

    for node in order:
        node.grad = np.zeros_like(node.value)
    out.grad = np.ones_like(out.value)

    for node in reversed(order):
        g = node.grad
        for parent, vjp in node.parents:
            parent.grad = parent.grad + np.asarray(vjp(g), dtype=np.float64).reshape(
                parent.value.shape
            )
