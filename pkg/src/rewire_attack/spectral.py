"""Laplacian spectra, first-order eigenvalue perturbation, and spectral graph measures."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidInputError
from .graph import Graph, RewiringAction, connected_components
from .kernel import EigenDecomposition, as_matrix, sym_eig

ZERO_EIG = 1e-8


def laplacian(g: Graph) -> np.ndarray:
    a = g.adjacency
    return np.diag(a.sum(axis=1)) - a


def laplacian_eig(g: Graph) -> EigenDecomposition:
    return sym_eig(laplacian(g))


def first_order_shift(decomp: EigenDecomposition, delta) -> np.ndarray:
    """Predicted eigenvalue changes ``x_i^T delta x_i`` for every eigenpair."""
    d = as_matrix(delta)
    x = decomp.eigenvectors
    if d.shape != (x.shape[0], x.shape[0]):
        raise InvalidInputError(f"perturbation shape {d.shape} does not match {x.shape}")
    return np.einsum("ji,jk,ki->i", x, d, x)


def rewiring_delta_matrix(a: RewiringAction, n: int) -> np.ndarray:
    """Change in the Laplacian caused by one rewiring on an ``n``-node graph."""
    if max(a.as_tuple()) >= n:
        raise InvalidInputError(f"{a} out of range for {n} nodes")
    d = np.zeros((n, n))
    d[a.fir, a.sec] = d[a.sec, a.fir] = 1.0
    d[a.fir, a.thi] = d[a.thi, a.fir] = -1.0
    d[a.sec, a.sec] = -1.0
    d[a.thi, a.thi] = 1.0
    return d


def rewiring_eig_delta(decomp: EigenDecomposition, a: RewiringAction) -> np.ndarray:
    """Closed-form first-order eigenvalue shifts for a single rewiring."""
    x = decomp.eigenvectors
    if max(a.as_tuple()) >= x.shape[0]:
        raise InvalidInputError(f"{a} out of range for {x.shape[0]} nodes")
    xf, xs, xt = x[a.fir], x[a.sec], x[a.thi]
    return (2.0 * xf - xt - xs) * (xs - xt)


def algebraic_connectivity(g: Graph) -> float:
    if g.num_nodes < 2:
        raise InvalidInputError("algebraic connectivity needs at least two nodes")
    return float(laplacian_eig(g).eigenvalues[1])


def effective_graph_resistance(g: Graph, decomp: EigenDecomposition | None = None) -> float:
    """Sum of pairwise effective resistances, ``|V| * sum_{i>=2} 1/lambda_i``."""
    if g.num_nodes < 1 or connected_components(g).count != 1:
        raise DomainError("effective graph resistance is infinite on a disconnected graph")
    if g.num_nodes == 1:
        return 0.0
    lam = (decomp or laplacian_eig(g)).eigenvalues
    return float(g.num_nodes * np.sum(1.0 / lam[1:]))


def eigenvalue_change_ratio(g_orig: Graph, g_att: Graph) -> np.ndarray:
    """Per-index ``|lam_orig - lam_att| / lam_orig``; NaN where ``lam_orig <= 1e-8``."""
    if g_orig.num_nodes != g_att.num_nodes:
        raise InvalidInputError("graphs differ in node count")
    lo = laplacian_eig(g_orig).eigenvalues
    la = laplacian_eig(g_att).eigenvalues
    return change_ratio_from_spectra(lo, la)


def change_ratio_from_spectra(lo: np.ndarray, la: np.ndarray) -> np.ndarray:
    out = np.full(lo.shape, np.nan)
    ok = lo > ZERO_EIG
    out[ok] = np.abs(lo[ok] - la[ok]) / lo[ok]
    return out


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    algebraic_connectivity: float
    effective_resistance: float
    num_zero_eigenvalues: int
    predicted_shift: np.ndarray | None = None


def spectral_report(g: Graph, action: RewiringAction | None = None) -> SpectralReport:
    """Spectrum summary; ``effective_resistance`` is ``inf`` for disconnected graphs."""
    dec = laplacian_eig(g)
    lam = dec.eigenvalues
    try:
        res = effective_graph_resistance(g, dec)
    except DomainError:
        res = float("inf")
    return SpectralReport(
        eigenvalues=lam,
        eigenvectors=dec.eigenvectors,
        algebraic_connectivity=float(lam[1]) if len(lam) > 1 else 0.0,
        effective_resistance=res,
        num_zero_eigenvalues=int(np.sum(np.abs(lam) < ZERO_EIG)),
        predicted_shift=None if action is None else rewiring_eig_delta(dec, action),
    )
