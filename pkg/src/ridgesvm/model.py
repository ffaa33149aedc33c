"""Model state containers, optimality-region bookkeeping, and validation.

Samples are partitioned by their multiplier and margin/tube status into

* ``S`` -- unbounded support vectors (multiplier strictly inside its box,
  active margin/tube condition),
* ``B`` -- bounded support vectors (multiplier saturated at the box bound),
* ``O`` -- non-support vectors (zero multiplier, strictly satisfied
  constraint).

Two tolerance tiers separate numerical noise from logic errors: region
membership is judged at ``REGION_TOL``; an interior multiplier whose active
condition misses by more than ``HARD_TOL`` signals a broken equilibrium.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, linalg
from .errors import EmptyS, InconsistentState, UnknownId

REGION_TOL = 1e-6
HARD_TOL = 1e-3
BOUND_TOL = 1e-9
BALANCE_TOL = 1e-9

REGION_S = "S"
REGION_B = "B"
REGION_O = "O"


@dataclass(frozen=True)
class Sample:
    """A feature vector plus target with a stable identifier."""

    id: int
    features: np.ndarray
    target: float


@dataclass(frozen=True)
class Hyperparams:
    """Penalty C (> 0) and tube half-width epsilon (>= 0, regression only)."""

    C: float
    epsilon: float = 0.0

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be > 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


@dataclass
class UpdateBatch:
    """Samples to add and identifiers to remove, applied atomically."""

    add: list = field(default_factory=list)
    remove: list = field(default_factory=list)

    def is_empty(self) -> bool:
        return not self.add and not self.remove


@dataclass
class Violation:
    """One invariant breach found by :func:`validate`."""

    kind: str
    index: int | None
    magnitude: float
    detail: str


class _StateBase:
    """Shared sample bookkeeping for the two model states."""

    def __init__(self, samples):
        self.samples = list(samples)
        if self.samples:
            self.X = np.array([s.features for s in self.samples], dtype=float)
        else:
            self.X = np.zeros((0, 0))
        self.ids = np.array([s.id for s in self.samples], dtype=int)
        self.partition = np.full(len(self.samples), REGION_O, dtype="<U1")
        self.cached_inverse: linalg.BorderedInverse | None = None

    @property
    def n(self) -> int:
        return len(self.samples)

    def rows_of(self, sample_ids) -> np.ndarray:
        lookup = {sid: row for row, sid in enumerate(self.ids)}
        rows = []
        for sid in sample_ids:
            if sid not in lookup:
                raise UnknownId(f"sample id {sid} not in model")
            rows.append(lookup[sid])
        return np.array(rows, dtype=int)

    def region_rows(self, tag) -> np.ndarray:
        return np.flatnonzero(self.partition == tag)

    def _keep(self, rows_to_drop) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n), np.asarray(rows_to_drop, dtype=int))

    @property
    def s_rows(self) -> np.ndarray:
        return self.region_rows(REGION_S)

    @property
    def b_rows(self) -> np.ndarray:
        return self.region_rows(REGION_B)

    @property
    def o_rows(self) -> np.ndarray:
        return self.region_rows(REGION_O)


class SvmState(_StateBase):
    """Classification state: multipliers, bias, margins, and partition."""

    def __init__(self, samples, alpha=None, b=0.0):
        super().__init__(samples)
        self.y = np.array([s.target for s in self.samples], dtype=float)
        self.alpha = (
            np.zeros(self.n) if alpha is None else np.asarray(alpha, dtype=float).copy()
        )
        self.b = float(b)
        self.margins = np.zeros(self.n)

    @property
    def dual_coefficients(self) -> np.ndarray:
        return self.y * self.alpha

    def delete_rows(self, rows) -> None:
        keep = self._keep(rows)
        self.samples = [self.samples[i] for i in keep]
        self.X = self.X[keep]
        self.ids = self.ids[keep]
        self.partition = self.partition[keep]
        self.y = self.y[keep]
        self.alpha = self.alpha[keep]
        self.margins = self.margins[keep]

    def append_samples(self, samples, alpha, tags) -> None:
        samples = list(samples)
        if not samples:
            return
        x_new = np.array([s.features for s in samples], dtype=float)
        self.X = x_new if self.n == 0 else np.vstack([self.X, x_new])
        self.samples.extend(samples)
        self.ids = np.concatenate([self.ids, [s.id for s in samples]])
        self.y = np.concatenate([self.y, [s.target for s in samples]])
        self.alpha = np.concatenate([self.alpha, alpha])
        self.margins = np.concatenate([self.margins, np.zeros(len(samples))])
        self.partition = np.concatenate([self.partition, tags])

    def copy(self) -> "SvmState":
        out = SvmState.__new__(SvmState)
        out.samples = list(self.samples)
        out.X = self.X.copy()
        out.ids = self.ids.copy()
        out.partition = self.partition.copy()
        out.cached_inverse = self.cached_inverse
        out.y = self.y.copy()
        out.alpha = self.alpha.copy()
        out.b = self.b
        out.margins = self.margins.copy()
        return out


class SvrState(_StateBase):
    """Regression state: signed multipliers theta, bias, tube residuals."""

    def __init__(self, samples, theta=None, b=0.0):
        super().__init__(samples)
        self.targets = np.array([s.target for s in self.samples], dtype=float)
        self.theta = (
            np.zeros(self.n) if theta is None else np.asarray(theta, dtype=float).copy()
        )
        self.b = float(b)
        self.outputs = np.zeros(self.n)

    @property
    def dual_coefficients(self) -> np.ndarray:
        return self.theta

    def delete_rows(self, rows) -> None:
        keep = self._keep(rows)
        self.samples = [self.samples[i] for i in keep]
        self.X = self.X[keep]
        self.ids = self.ids[keep]
        self.partition = self.partition[keep]
        self.targets = self.targets[keep]
        self.theta = self.theta[keep]
        self.outputs = self.outputs[keep]

    def append_samples(self, samples, theta, tags) -> None:
        samples = list(samples)
        if not samples:
            return
        x_new = np.array([s.features for s in samples], dtype=float)
        self.X = x_new if self.n == 0 else np.vstack([self.X, x_new])
        self.samples.extend(samples)
        self.ids = np.concatenate([self.ids, [s.id for s in samples]])
        self.targets = np.concatenate([self.targets, [s.target for s in samples]])
        self.theta = np.concatenate([self.theta, theta])
        self.outputs = np.concatenate([self.outputs, np.zeros(len(samples))])
        self.partition = np.concatenate([self.partition, tags])

    def copy(self) -> "SvrState":
        out = SvrState.__new__(SvrState)
        out.samples = list(self.samples)
        out.X = self.X.copy()
        out.ids = self.ids.copy()
        out.partition = self.partition.copy()
        out.cached_inverse = self.cached_inverse
        out.targets = self.targets.copy()
        out.theta = self.theta.copy()
        out.b = self.b
        out.outputs = self.outputs.copy()
        return out


def compute_margins_svm(state: SvmState, spec) -> np.ndarray:
    """Margin residuals y_i f_i - 1 over the full ridge Gram matrix."""
    if state.n == 0:
        return np.zeros(0)
    return state.y * kernels.training_decision_values(state, spec) - 1.0


def compute_outputs_svr(state: SvrState, spec) -> np.ndarray:
    """Tube residuals f_i - y_i, ridge self-term included."""
    if state.n == 0:
        return np.zeros(0)
    return kernels.training_decision_values(state, spec) - state.targets


def classify_regions_svm(alpha, margins, C, strict: bool = True) -> np.ndarray:
    """Region tags from multipliers and margins.

    Exact boundary ties (multiplier at a bound, margin within tolerance)
    resolve toward ``S``.  With ``strict`` an interior multiplier whose
    margin misses zero by more than ``HARD_TOL`` raises
    :class:`InconsistentState`.
    """
    alpha = np.asarray(alpha, dtype=float)
    margins = np.asarray(margins, dtype=float)
    tags = np.full(alpha.shape[0], REGION_O, dtype="<U1")
    at_zero = alpha <= BOUND_TOL
    at_c = alpha >= C - BOUND_TOL
    interior = ~at_zero & ~at_c
    if strict:
        bad = interior & (np.abs(margins) > HARD_TOL)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise InconsistentState(
                f"interior multiplier at row {row} has margin {margins[row]:.3e}"
            )
    tags[interior] = REGION_S
    on_margin = np.abs(margins) <= REGION_TOL
    tags[at_zero & on_margin] = REGION_S
    tags[at_c & on_margin] = REGION_S
    tags[at_zero & ~on_margin] = REGION_O
    tags[at_c & ~on_margin & ~interior] = REGION_B
    return tags


def classify_regions_svr(theta, outputs, C, epsilon, strict: bool = True) -> np.ndarray:
    """Region tags for regression from theta and tube residuals."""
    theta = np.asarray(theta, dtype=float)
    outputs = np.asarray(outputs, dtype=float)
    slack = np.abs(outputs) - epsilon
    tags = np.full(theta.shape[0], REGION_O, dtype="<U1")
    at_zero = np.abs(theta) <= BOUND_TOL
    at_c = np.abs(theta) >= C - BOUND_TOL
    interior = ~at_zero & ~at_c
    if strict:
        bad = interior & (np.abs(slack) > HARD_TOL)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise InconsistentState(
                f"interior theta at row {row} has tube slack {slack[row]:.3e}"
            )
    tags[interior] = REGION_S
    on_edge = np.abs(slack) <= REGION_TOL
    tags[at_zero & on_edge] = REGION_S
    tags[at_c & on_edge] = REGION_S
    tags[at_zero & ~on_edge] = REGION_O
    tags[at_c & ~on_edge & ~interior] = REGION_B
    return tags


def _border_vector(state) -> np.ndarray:
    if isinstance(state, SvmState):
        return state.y[state.s_rows]
    return np.ones(state.s_rows.size)


def refresh_cached_inverse(state, spec) -> None:
    """Recompute the bordered inverse over the current ``S`` set."""
    s = state.s_rows
    if s.size == 0:
        state.cached_inverse = None
        return
    xs = state.X[s]
    ids = state.ids[s]
    if isinstance(state, SvmState):
        ys = state.y[s]
        q_s = kernels.q_block(xs, ys, xs, ys, spec, ids, ids)
    else:
        q_s = kernels.gram_block(xs, xs, spec, ids, ids)
    state.cached_inverse = linalg.bordered_inverse(q_s, _border_vector(state))


def ensure_cached_inverse(state, spec) -> linalg.BorderedInverse:
    s = state.s_rows
    if s.size == 0:
        raise EmptyS("no unbounded support vectors")
    if state.cached_inverse is None or state.cached_inverse.order != s.size:
        refresh_cached_inverse(state, spec)
    return state.cached_inverse


def shrink_cached_inverse(state, leaving_rows) -> None:
    """Drop members of ``S`` from the cached bordered inverse in place.

    ``leaving_rows`` are state rows currently tagged ``S``; the caller
    retags them afterwards.  Falls back to a deferred full rebuild when no
    usable cache exists.
    """
    s = list(state.s_rows)
    leaving = sorted(int(r) for r in leaving_rows)
    if not leaving:
        return
    cache = state.cached_inverse
    if cache is None or cache.order != len(s) or len(leaving) == len(s):
        state.cached_inverse = None
        return
    positions = [s.index(r) + 1 for r in leaving]  # +1: border row leads
    inv = linalg.inverse_shrink(cache.inv, positions)
    inv = 0.5 * (inv + inv.T)
    state.cached_inverse = linalg.BorderedInverse(
        z=float(inv[0, 0]), order=len(s) - len(leaving), inv=inv
    )


def grow_cached_inverse(state, spec, join_rows) -> None:
    """Admit freshly tagged ``S`` rows into the cached bordered inverse.

    The grown block lands at the bottom-right corner; a final symmetric
    permutation restores ascending row order so the cache always mirrors
    ``state.s_rows``.
    """
    joins = sorted(int(r) for r in join_rows)
    if not joins:
        return
    s = list(state.s_rows)
    old = [r for r in s if r not in set(joins)]
    cache = state.cached_inverse
    if cache is None or cache.order != len(old):
        refresh_cached_inverse(state, spec)
        return
    xj = state.X[joins]
    ids_j = state.ids[joins]
    if isinstance(state, SvmState):
        yj = state.y[joins]
        border_vals = yj
        corner = kernels.q_block(xj, yj, xj, yj, spec, ids_j, ids_j)
        if old:
            cross_body = kernels.q_block(
                state.X[old], state.y[old], xj, yj, spec, state.ids[old], ids_j
            )
        else:
            cross_body = np.zeros((0, len(joins)))
    else:
        border_vals = np.ones(len(joins))
        corner = kernels.gram_block(xj, xj, spec, ids_j, ids_j)
        if old:
            cross_body = kernels.gram_block(
                state.X[old], xj, spec, state.ids[old], ids_j
            )
        else:
            cross_body = np.zeros((0, len(joins)))
    cross = np.vstack([border_vals[None, :], cross_body])
    inv = linalg.inverse_grow(cache.inv, cross, corner)
    grown_order = old + joins
    if grown_order != s:
        rank = {row: k for k, row in enumerate(grown_order)}
        perm = np.concatenate(([0], [1 + rank[row] for row in s]))
        inv = inv[np.ix_(perm, perm)]
    inv = 0.5 * (inv + inv.T)
    state.cached_inverse = linalg.BorderedInverse(
        z=float(inv[0, 0]), order=len(s), inv=inv
    )


def validate(state, spec=None, C=None, epsilon=None, tol=REGION_TOL, ignore_rows=()):
    """Check every state invariant; returns a list of :class:`Violation`.

    An empty list means the state is consistent at the given tolerance.
    ``C``/``epsilon`` enable the box and region checks; passing ``spec``
    additionally verifies the cached margins against a fresh recomputation.
    ``ignore_rows`` exempts rows that are legitimately in transit.
    """
    report: list[Violation] = []
    is_svm = isinstance(state, SvmState)
    mult = state.alpha if is_svm else state.theta
    resid = state.margins if is_svm else state.outputs
    ignore = set(int(r) for r in ignore_rows)

    # multiplier balance (orthogonal-hyperplane equality)
    weights = state.y if is_svm else np.ones(state.n)
    balance = float(weights @ mult) if state.n else 0.0
    if abs(balance) > BALANCE_TOL:
        report.append(
            Violation(
                "balance", None, abs(balance),
                f"multiplier balance (orthogonal-hyperplane) off by {balance:.3e}",
            )
        )

    if C is not None:
        lo = -C if not is_svm else 0.0
        for row in range(state.n):
            if row in ignore:
                continue
            v = mult[row]
            if v < lo - BOUND_TOL or v > C + BOUND_TOL:
                report.append(
                    Violation(
                        "box", row, max(lo - v, v - C),
                        f"multiplier {v:.6g} outside [{lo}, {C}]",
                    )
                )

    # region-tag consistency against stored residuals
    if C is not None:
        eps = 0.0 if is_svm else float(epsilon if epsilon is not None else 0.0)
        for row in range(state.n):
            if row in ignore:
                continue
            tag = state.partition[row]
            v = mult[row]
            g = resid[row] if is_svm else abs(resid[row]) - eps
            if tag == REGION_S:
                if abs(g) > tol:
                    report.append(
                        Violation("region:S", row, abs(g),
                                  f"S member residual {g:.3e}"))
            elif tag == REGION_B:
                sat = abs(abs(v) - C) <= BOUND_TOL if not is_svm else abs(v - C) <= BOUND_TOL
                if not sat:
                    report.append(
                        Violation("region:B", row, abs(abs(v) - C),
                                  f"B member multiplier {v:.6g} not at bound"))
                if is_svm and g > tol:
                    report.append(
                        Violation("region:B", row, g,
                                  f"B member margin {g:.3e} > 0"))
                if not is_svm and g < -tol:
                    report.append(
                        Violation("region:B", row, -g,
                                  f"B member tube slack {g:.3e} < 0"))
            else:
                if abs(v) > BOUND_TOL:
                    report.append(
                        Violation("region:O", row, abs(v),
                                  f"O member multiplier {v:.6g} nonzero"))
                if is_svm and g < -tol:
                    report.append(
                        Violation("region:O", row, -g,
                                  f"O member margin {g:.3e} < 0"))
                if not is_svm and g > tol:
                    report.append(
                        Violation("region:O", row, g,
                                  f"O member tube slack {g:.3e} > 0"))
            # saturated/active regression multipliers must oppose the error
            if not is_svm and tag in (REGION_S, REGION_B):
                if abs(v) > BOUND_TOL and abs(resid[row]) > tol:
                    if v * resid[row] > 0:
                        report.append(
                            Violation("sign", row, abs(v * resid[row]),
                                      f"theta {v:.4g} and residual "
                                      f"{resid[row]:.4g} share a sign"))

    if spec is not None and state.n:
        fresh = compute_margins_svm(state, spec) if is_svm else compute_outputs_svr(state, spec)
        drift = float(np.max(np.abs(fresh - resid)))
        if drift > tol:
            report.append(
                Violation("residual-cache", None, drift,
                          f"cached residuals drifted by {drift:.3e}"))
    return report
