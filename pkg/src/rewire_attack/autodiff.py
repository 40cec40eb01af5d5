"""A small tape-free reverse-mode autodiff over numpy arrays.

Each ``Var`` remembers its parents and a closure that pushes its gradient to
them.  ``backward`` walks the graph in reverse topological order.  Only the
handful of ops the GCN models need are provided.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class Var:
    __slots__ = ("value", "grad", "parents", "_push", "const")

    def __init__(self, value, parents: Sequence["Var"] = (), push: Callable | None = None,
                 const: bool = False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.parents = tuple(parents)
        self._push = push
        self.const = const

    @property
    def shape(self):
        return self.value.shape

    def _accumulate(self, g: np.ndarray) -> None:
        if self.const:
            return
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad += g

    def backward(self) -> None:
        """Back-propagate from this (scalar) node."""
        order: list[Var] = []
        seen: set[int] = set()
        stack: list[tuple[Var, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node._push is not None and node.grad is not None:
                node._push(node.grad)

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return scale(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


def param(value) -> Var:
    return Var(value)


def const(value) -> Var:
    return Var(value, const=True)


def _wrap(x) -> Var:
    return x if isinstance(x, Var) else Var(x, const=True)


def matmul(a, b) -> Var:
    a, b = _wrap(a), _wrap(b)
    out = Var(a.value @ b.value, (a, b))

    def push(g):
        if not a.const:
            a._accumulate(g @ b.value.T)
        if not b.const:
            if a.value.ndim == 1:
                b._accumulate(np.outer(a.value, g))
            else:
                b._accumulate(a.value.T @ g)

    out._push = push
    return out


def add(a, b) -> Var:
    """Elementwise sum; a 1-d ``b`` broadcasts over the rows of a 2-d ``a``."""
    a, b = _wrap(a), _wrap(b)
    out = Var(a.value + b.value, (a, b))

    def push(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(g, b.shape))

    out._push = push
    return out


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def scale(a, c: float) -> Var:
    a = _wrap(a)
    out = Var(a.value * c, (a,))
    out._push = lambda g: a._accumulate(g * c)
    return out


def relu(a) -> Var:
    a = _wrap(a)
    mask = a.value > 0
    out = Var(np.where(mask, a.value, 0.0), (a,))
    out._push = lambda g: a._accumulate(g * mask)
    return out


def max_pool(a) -> Var:
    """Column-wise max over rows; the gradient goes to the first maximizing row."""
    a = _wrap(a)
    idx = np.argmax(a.value, axis=0)
    cols = np.arange(a.shape[1])
    out = Var(a.value[idx, cols], (a,))

    def push(g):
        full = np.zeros_like(a.value)
        full[idx, cols] = g
        a._accumulate(full)

    out._push = push
    return out


def take_rows(a, idx) -> Var:
    a = _wrap(a)
    idx = np.asarray(idx, dtype=np.intp)
    out = Var(a.value[idx], (a,))

    def push(g):
        full = np.zeros_like(a.value)
        np.add.at(full, idx, g)
        a._accumulate(full)

    out._push = push
    return out


def repeat_row(a, count: int) -> Var:
    """Stack a 1-d vector ``count`` times into a matrix."""
    a = _wrap(a)
    out = Var(np.broadcast_to(a.value, (count,) + a.shape).copy(), (a,))
    out._push = lambda g: a._accumulate(g.sum(axis=0))
    return out


def concat(parts: Sequence, axis: int = -1) -> Var:
    parts = [_wrap(p) for p in parts]
    sizes = [p.shape[axis] for p in parts]
    out = Var(np.concatenate([p.value for p in parts], axis=axis), parts)

    def push(g):
        start = 0
        for p, size in zip(parts, sizes):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(start, start + size)
            p._accumulate(g[tuple(sl)])
            start += size

    out._push = push
    return out


def reshape(a, shape) -> Var:
    a = _wrap(a)
    out = Var(a.value.reshape(shape), (a,))
    out._push = lambda g: a._accumulate(g.reshape(a.shape))
    return out


def log_softmax(a, mask=None) -> Var:
    """Log-softmax of a 1-d score vector; masked-out entries get log-probability -inf."""
    a = _wrap(a)
    x = a.value
    if mask is None:
        mask = np.ones(x.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("log_softmax with every entry masked")
    shifted = np.where(mask, x - np.max(x[mask]), -np.inf)
    logz = np.log(np.sum(np.exp(shifted[mask])))
    logp = shifted - logz
    probs = np.where(mask, np.exp(logp), 0.0)
    out = Var(logp, (a,))

    def push(g):
        g = np.where(mask, g, 0.0)
        a._accumulate(g - probs * np.sum(g))

    out._push = push
    return out


def pick(a, index: int) -> Var:
    a = _wrap(a)
    out = Var(a.value[index], (a,))

    def push(g):
        full = np.zeros_like(a.value)
        full[index] = g
        a._accumulate(full)

    out._push = push
    return out


def total(parts: Sequence) -> Var:
    """Sum of scalar Vars."""
    parts = [_wrap(p) for p in parts]
    out = Var(sum(float(p.value) for p in parts), parts)

    def push(g):
        for p in parts:
            p._accumulate(g)

    out._push = push
    return out
