"""Building blocks shared by the victim classifier and the attack policy."""
from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .graph import Graph


def normalized_adjacency(g: Graph, self_loops: bool = False) -> np.ndarray:
    """``D^-1/2 A D^-1/2``; rows and columns of zero-degree nodes are zero."""
    a = np.array(g.adjacency)
    if self_loops:
        a = a + np.eye(g.num_nodes)
    deg = a.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    return inv_sqrt[:, None] * a * inv_sqrt[None, :]


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def gcn_stack(a_hat: np.ndarray, x: np.ndarray, weights: list) -> ad.Var:
    """Stacked ``ReLU(A_hat F W)`` layers starting from ``F = x``."""
    a = ad.const(a_hat)
    f = ad.const(x)
    for w in weights:
        f = ad.relu(a @ (f @ w))
    return f


def mlp(x, weights: list, biases: list) -> ad.Var:
    """Dense layers with ReLU between them and a linear final layer."""
    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        h = ad.add(ad.matmul(h, w), b)
        if i < last:
            h = ad.relu(h)
    return h


def mlp_numpy(x: np.ndarray, weights: list, biases: list) -> np.ndarray:
    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        h = h @ w + b
        if i < last:
            h = np.maximum(h, 0.0)
    return h


def gcn_numpy(a_hat: np.ndarray, x: np.ndarray, weights: list) -> np.ndarray:
    f = x
    for w in weights:
        f = np.maximum(a_hat @ (f @ w), 0.0)
    return f
