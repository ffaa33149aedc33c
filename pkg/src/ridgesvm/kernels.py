"""Kernel evaluation, ridge-augmented Gram assembly, and decision values.

The ridge parameter lives on the diagonal of the training Gram matrix only:
a test point never receives it, while a training index picks up the ridge
self-term through its own multiplier.  Keeping that distinction straight is
what makes the weight-error-curve prediction exact on unbounded support
vectors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import distance

from .errors import DimensionMismatch

KERNEL_FAMILIES = ("linear", "polynomial", "rbf")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, its parameters, and the ridge added to Gram diagonals.

    ``degree``/``offset`` apply to the polynomial family, ``sigma`` to rbf.
    """

    family: str = "rbf"
    degree: int = 3
    offset: float = 1.0
    sigma: float = 1.0
    ridge: float = 0.0

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "polynomial" and self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")
        if self.family == "rbf" and self.sigma <= 0:
            raise ValueError("rbf sigma must be > 0")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")


def kernel_matrix(xa, xb, spec: KernelSpec) -> np.ndarray:
    """Kernel values between the rows of ``xa`` and ``xb`` (no ridge)."""
    a = np.atleast_2d(np.asarray(xa, dtype=float))
    b = np.atleast_2d(np.asarray(xb, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(
            f"feature dimensions differ: {a.shape[1]} vs {b.shape[1]}"
        )
    if spec.family == "linear":
        return a @ b.T
    if spec.family == "polynomial":
        return (a @ b.T + spec.offset) ** spec.degree
    sq = distance.cdist(a, b, metric="sqeuclidean")
    return np.exp(-sq / (2.0 * spec.sigma**2))


def kernel_eval(a, b, spec: KernelSpec) -> float:
    """Single kernel evaluation; symmetric in its arguments."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimensionMismatch(f"vector lengths differ: {a.shape} vs {b.shape}")
    return float(kernel_matrix(a[None, :], b[None, :], spec)[0, 0])


def q_matrix(x, labels, spec: KernelSpec) -> np.ndarray:
    """Label-signed ridge Gram matrix: Q[i,j] = y_i y_j (K_ij + ridge*[i==j])."""
    y = np.asarray(labels, dtype=float).ravel()
    k = kernel_matrix(x, x, spec)
    if spec.ridge:
        k = k + spec.ridge * np.eye(k.shape[0])
    return np.outer(y, y) * k


def q_matrix_svr(x, spec: KernelSpec) -> np.ndarray:
    """Ridge Gram matrix K + ridge*I for regression."""
    k = kernel_matrix(x, x, spec)
    if spec.ridge:
        k = k + spec.ridge * np.eye(k.shape[0])
    return k


def gram_block(xa, xb, spec: KernelSpec, ids_a=None, ids_b=None) -> np.ndarray:
    """Cross block of the ridge Gram matrix.

    The ridge contributes wherever a row and a column refer to the *same*
    stored sample, which the optional id arrays identify.  Distinct samples
    with identical features stay unridged off the diagonal.
    """
    k = kernel_matrix(xa, xb, spec)
    if spec.ridge and ids_a is not None and ids_b is not None:
        same = np.equal.outer(np.asarray(ids_a), np.asarray(ids_b))
        if same.any():
            k = k + spec.ridge * same
    return k


def q_block(xa, ya, xb, yb, spec: KernelSpec, ids_a=None, ids_b=None) -> np.ndarray:
    """Label-signed cross block y_a y_b^T * (K + ridge on id matches)."""
    k = gram_block(xa, xb, spec, ids_a, ids_b)
    return np.outer(np.asarray(ya, dtype=float), np.asarray(yb, dtype=float)) * k


def decision_profile(xq, x_model, coefficients, bias, spec: KernelSpec) -> np.ndarray:
    """Raw decision values sum_j c_j K(x, x_j) + b for query rows ``xq``."""
    if len(coefficients) == 0:
        base = np.atleast_2d(np.asarray(xq, dtype=float)).shape[0]
        return np.full(base, float(bias))
    return kernel_matrix(xq, x_model, spec) @ np.asarray(coefficients) + bias


def decision_values(xq, state, spec: KernelSpec) -> np.ndarray:
    """Test-point decision values of a trained state (no ridge self-term)."""
    return decision_profile(xq, state.X, state.dual_coefficients, state.b, spec)


def decision_value(x, state, spec: KernelSpec) -> float:
    """Test-point decision value at a single query point."""
    return float(decision_values(np.asarray(x, dtype=float)[None, :], state, spec)[0])


def training_decision_values(state, spec: KernelSpec) -> np.ndarray:
    """Decision values at the stored training points.

    Each training index additionally receives the ridge self-term through
    its own signed multiplier, so these values are consistent with the
    diagonal of the ridge Gram matrix.
    """
    coeffs = np.asarray(state.dual_coefficients, dtype=float)
    if state.n == 0:
        return np.zeros(0)
    values = kernel_matrix(state.X, state.X, spec) @ coeffs + state.b
    if spec.ridge:
        values = values + spec.ridge * coeffs
    return values
