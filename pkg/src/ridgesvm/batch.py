"""Reference batch dual solvers for ridge SVM and ridge SVR.

Sequential two-variable coordinate ascent on the dual, selecting the
maximal-violating pair at every step.  The solvers bootstrap initial model
states, provide the correctness oracle for the online engines, and act as
the full-retraining arm in benchmarks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, model
from .errors import NoConvergence, SingleClassInput

_BOX_EPS = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    """Convergence tolerance and an iteration budget for the pair solver.

    ``max_passes`` is measured in multiples of the variable count; ``seed``
    is reserved for stochastic pair-selection schemes (the default
    maximal-violating-pair rule is deterministic and ignores it).
    """

    kkt_tolerance: float = 1e-6
    max_passes: int = 10000
    seed: int = 0

    def __post_init__(self):
        if self.kkt_tolerance <= 0:
            raise ValueError("kkt_tolerance must be > 0")


def _pair_ascent_svm(gram, y, C, tol, max_iter):
    """Maximal-violating-pair updates for the signed box-constrained dual.

    Returns (alpha, grad, gap) with grad_i = sum_j Q_ij alpha_j - 1.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    signed = np.zeros(n)  # y_i * alpha_i
    grad = np.full(n, -1.0)
    gap = np.inf
    pos = y > 0
    for _ in range(max_iter):
        vals = -y * grad
        up = (pos & (alpha < C - _BOX_EPS)) | (~pos & (alpha > _BOX_EPS))
        low = (pos & (alpha > _BOX_EPS)) | (~pos & (alpha < C - _BOX_EPS))
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.argmax(np.where(up, vals, -np.inf)))
        j = int(np.argmin(np.where(low, vals, np.inf)))
        gap = vals[i] - vals[j]
        if gap <= tol:
            break
        quad = gram[i, i] + gram[j, j] - 2.0 * gram[i, j]
        delta = gap / quad if quad > _BOX_EPS else np.inf
        delta = min(
            delta,
            (C - alpha[i]) if pos[i] else alpha[i],
            alpha[j] if pos[j] else (C - alpha[j]),
        )
        alpha[i] += y[i] * delta
        alpha[j] -= y[j] * delta
        signed[i] += delta
        signed[j] -= delta
        grad += y * (delta * (gram[:, i] - gram[:, j]))
    return alpha, grad, gap


def _pair_ascent_svr(gram, targets, C, epsilon, tol, max_iter):
    """Pair updates on theta directly, honoring the tube-term kink at zero.

    Returns (theta, resid, gap_pair) with resid_i = sum_j Q_ij theta_j - y_i.
    """
    n = targets.shape[0]
    theta = np.zeros(n)
    resid = -targets.astype(float).copy()
    gap = np.inf
    for _ in range(max_iter):
        up_sub = np.where(theta >= 0, epsilon, -epsilon)
        dn_sub = np.where(theta <= 0, epsilon, -epsilon)
        vals_up = -(resid + up_sub)
        vals_dn = resid - dn_sub
        can_up = theta < C - _BOX_EPS
        can_dn = theta > -C + _BOX_EPS
        if not can_up.any() or not can_dn.any():
            gap = 0.0
            break
        i = int(np.argmax(np.where(can_up, vals_up, -np.inf)))
        j = int(np.argmax(np.where(can_dn, vals_dn, -np.inf)))
        gap = vals_up[i] + vals_dn[j]
        if gap <= tol:
            break
        quad = gram[i, i] + gram[j, j] - 2.0 * gram[i, j]
        delta = gap / quad if quad > _BOX_EPS else np.inf
        delta = min(delta, C - theta[i], theta[j] + C)
        # the |theta| term changes slope at zero: stop there and re-select
        if theta[i] < 0:
            delta = min(delta, -theta[i])
        if theta[j] > 0:
            delta = min(delta, theta[j])
        theta[i] += delta
        theta[j] -= delta
        resid += delta * (gram[:, i] - gram[:, j])
    return theta, resid, gap


def train_svm_batch(samples, spec, hyper, config: SolverConfig | None = None) -> model.SvmState:
    """Train a ridge SVM from scratch; the returned state satisfies the
    optimality regions at the configured tolerance."""
    config = config or SolverConfig()
    samples = list(samples)
    if len(samples) < 2:
        raise SingleClassInput("need at least two samples spanning both classes")
    y = np.array([s.target for s in samples], dtype=float)
    if not ((y > 0).any() and (y < 0).any()):
        raise SingleClassInput("training data contains a single class")

    state = model.SvmState(samples)
    gram = kernels.q_matrix_svr(state.X, spec)  # K + ridge*I; labels enter via y
    max_iter = config.max_passes * max(len(samples), 1)
    alpha, grad, gap = _pair_ascent_svm(gram, y, hyper.C, config.kkt_tolerance, max_iter)
    if gap > config.kkt_tolerance:
        raise NoConvergence(
            f"pair solver stopped with optimality gap {gap:.3e}", worst_gap=gap
        )

    vals = -y * grad
    interior = (alpha > model.BOUND_TOL) & (alpha < hyper.C - model.BOUND_TOL)
    if interior.any():
        b = float(np.mean(vals[interior]))
    else:
        up = ((y > 0) & (alpha < hyper.C - _BOX_EPS)) | ((y < 0) & (alpha > _BOX_EPS))
        low = ((y > 0) & (alpha > _BOX_EPS)) | ((y < 0) & (alpha < hyper.C - _BOX_EPS))
        hi = np.max(vals[up]) if up.any() else 0.0
        lo = np.min(vals[low]) if low.any() else 0.0
        b = float(0.5 * (hi + lo))

    state.alpha = alpha
    state.b = b
    state.margins = grad + y * b
    state.partition = model.classify_regions_svm(alpha, state.margins, hyper.C)
    model.refresh_cached_inverse(state, spec)
    return state


def train_svr_batch(samples, spec, hyper, config: SolverConfig | None = None) -> model.SvrState:
    """Train a ridge SVR from scratch over theta with box [-C, C]."""
    config = config or SolverConfig()
    samples = list(samples)
    if len(samples) < 2:
        raise NoConvergence("need at least two samples")
    targets = np.array([s.target for s in samples], dtype=float)

    state = model.SvrState(samples)
    gram = kernels.q_matrix_svr(state.X, spec)
    max_iter = config.max_passes * max(len(samples), 1)
    theta, resid, gap = _pair_ascent_svr(
        gram, targets, hyper.C, hyper.epsilon, config.kkt_tolerance, max_iter
    )
    if gap > config.kkt_tolerance:
        raise NoConvergence(
            f"pair solver stopped with optimality gap {gap:.3e}", worst_gap=gap
        )

    interior = (np.abs(theta) > model.BOUND_TOL) & (np.abs(theta) < hyper.C - model.BOUND_TOL)
    if interior.any():
        b = float(np.mean(-resid[interior] - hyper.epsilon * np.sign(theta[interior])))
    else:
        up_sub = np.where(theta >= 0, hyper.epsilon, -hyper.epsilon)
        dn_sub = np.where(theta <= 0, hyper.epsilon, -hyper.epsilon)
        vals_up = -(resid + up_sub)
        vals_dn = resid - dn_sub
        can_up = theta < hyper.C - _BOX_EPS
        can_dn = theta > -hyper.C + _BOX_EPS
        hi = np.max(vals_up[can_up]) if can_up.any() else 0.0
        lo = np.max(vals_dn[can_dn]) if can_dn.any() else 0.0
        b = float(0.5 * (hi - lo))

    state.theta = theta
    state.b = b
    state.outputs = resid + b
    state.partition = model.classify_regions_svr(
        theta, state.outputs, hyper.C, hyper.epsilon
    )
    model.refresh_cached_inverse(state, spec)
    return state
