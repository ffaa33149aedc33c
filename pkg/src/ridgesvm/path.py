"""Step-size path following: the bookkeeping comparator for both engines.

Arriving multipliers are driven linearly toward the penalty bound and
leaving ones toward zero; after every membership event the remaining path
is re-solved and *all* samples are scanned for the smallest step that
reaches a margin/tube crossing or a box bound.  That per-event full scan
is the cost the one-shot engines avoid, so this module favours clarity
and faithfulness over shortcuts: it exists to be raced against.

A single arrival with no removals reproduces the classic one-instance
incremental trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import batch as batch_solver
from . import kernels, model
from .errors import EmptyS, InconsistentEvent, StalledPath
from .model import REGION_B, REGION_O, REGION_S, SvmState

_DIR_TOL = 1e-12
_EVENT_TOL = 1e-12


@dataclass
class PathEvent:
    """One membership event on the path: what fired, for whom, at which step."""

    kind: str
    sample_id: int | None
    eta: float
    row: int | None = None
    bound: float | None = None


@dataclass
class Directions:
    """Per-unit-step movement of the bias, S members, arrivals, removals."""

    db: float
    dalpha_s: np.ndarray
    d_add: np.ndarray
    d_rem: np.ndarray


@dataclass
class PathState:
    """Progress bookkeeping for one add/remove path."""

    drive_rows: np.ndarray
    removal_rows: np.ndarray
    cumulative_eta: float = 0.0
    events: list = field(default_factory=list)
    stalled_steps: int = 0

    def advance(self, eta: float) -> None:
        self.cumulative_eta += (1.0 - self.cumulative_eta) * eta


def _is_svm(state) -> bool:
    return isinstance(state, SvmState)


def _multipliers(state) -> np.ndarray:
    return state.alpha if _is_svm(state) else state.theta


def _residuals(state) -> np.ndarray:
    return state.margins if _is_svm(state) else state.outputs


class _Columns:
    """Per-path cache of signed ridge-Gram columns against all rows."""

    def __init__(self, state, spec):
        self.state = state
        self.spec = spec
        self.svm = _is_svm(state)
        self.cols: dict[int, np.ndarray] = {}

    def block(self, rows) -> np.ndarray:
        rows = [int(r) for r in rows]
        missing = [r for r in rows if r not in self.cols]
        if missing:
            st = self.state
            if self.svm:
                fresh = kernels.q_block(
                    st.X, st.y, st.X[missing], st.y[missing], self.spec,
                    st.ids, st.ids[missing],
                )
            else:
                fresh = kernels.gram_block(
                    st.X, st.X[missing], self.spec, st.ids, st.ids[missing]
                )
            for k, r in enumerate(missing):
                self.cols[r] = fresh[:, k]
        if not rows:
            return np.zeros((self.state.n, 0))
        return np.column_stack([self.cols[r] for r in rows])


def _drive_targets(state, path: PathState, hyper) -> np.ndarray:
    """Bound each driven arrival heads for: C, or the signed corner for SVR."""
    if _is_svm(state):
        return np.full(path.drive_rows.size, hyper.C)
    # regression arrivals move toward the corner opposite their error sign
    resid = state.outputs[path.drive_rows]
    return np.where(resid > 0, -hyper.C, hyper.C)


def _direction(state, spec, path: PathState, hyper, columns: _Columns) -> Directions:
    """Per-unit-step directions for one path segment.

    Arrivals move by (target - current), removals by (-current); the
    bordered solve gives the unbounded-set response that keeps the
    equilibrium exact along the segment.
    """
    s_rows = state.s_rows
    if s_rows.size == 0:
        raise EmptyS("path following needs a nonempty unbounded set")
    inv = model.ensure_cached_inverse(state, spec)

    mult = _multipliers(state)
    d_add = _drive_targets(state, path, hyper) - mult[path.drive_rows]
    d_rem = -mult[path.removal_rows]

    weights = state.y if _is_svm(state) else np.ones(state.n)
    rhs_top = float(weights[path.drive_rows] @ d_add + weights[path.removal_rows] @ d_rem)
    rhs_body = np.zeros(s_rows.size)
    if path.drive_rows.size:
        rhs_body += columns.block(path.drive_rows)[s_rows] @ d_add
    if path.removal_rows.size:
        rhs_body += columns.block(path.removal_rows)[s_rows] @ d_rem
    sol = -inv.inv @ np.concatenate(([rhs_top], rhs_body))
    return Directions(db=float(sol[0]), dalpha_s=sol[1:], d_add=d_add, d_rem=d_rem)


def direction_svm(state, spec, path: PathState, hyper) -> Directions:
    """Segment directions for classification paths."""
    return _direction(state, spec, path, hyper, _Columns(state, spec))


def direction_svr(state, spec, path: PathState, hyper) -> Directions:
    """Segment directions for regression paths."""
    return _direction(state, spec, path, hyper, _Columns(state, spec))


def sensitivity_phi(state, spec, path: PathState, directions: Directions,
                    columns: _Columns | None = None) -> np.ndarray:
    """Per-unit-step derivative of every sample's residual.

    For classification this is d(y_i f_i)/d eta, for regression
    d(f_i - y_i)/d eta; unbounded members come out at zero because the
    directions solve pins them.
    """
    columns = columns or _Columns(state, spec)
    weights = state.y if _is_svm(state) else np.ones(state.n)
    phi = weights * directions.db
    s_rows = state.s_rows
    if s_rows.size:
        phi = phi + columns.block(s_rows) @ directions.dalpha_s
    if path.drive_rows.size:
        phi = phi + columns.block(path.drive_rows) @ directions.d_add
    if path.removal_rows.size:
        phi = phi + columns.block(path.removal_rows) @ directions.d_rem
    return phi


def _candidate_events(state, phi, directions, path: PathState, hyper):
    """All margin/tube crossings and box hits reachable this segment.

    Yields (eta, sample_id, kind, row, bound).  Transit rows (driven
    arrivals, removals) are excluded from the B/O scans; removals generate
    no events of their own.
    """
    svm = _is_svm(state)
    C, eps = hyper.C, hyper.epsilon
    mult = _multipliers(state)
    resid = _residuals(state)
    in_transit = set(int(r) for r in path.drive_rows) | set(
        int(r) for r in path.removal_rows
    )
    out = []

    for t in state.b_rows:
        if int(t) in in_transit:
            continue
        if svm:
            if phi[t] > _DIR_TOL and resid[t] < 0:
                out.append((-resid[t] / phi[t], int(state.ids[t]), "release", int(t), None))
        else:
            if mult[t] < 0 and phi[t] < -_DIR_TOL and resid[t] > eps:
                out.append(((eps - resid[t]) / phi[t], int(state.ids[t]), "release", int(t), None))
            elif mult[t] > 0 and phi[t] > _DIR_TOL and resid[t] < -eps:
                out.append(((-eps - resid[t]) / phi[t], int(state.ids[t]), "release", int(t), None))

    for o in state.o_rows:
        if int(o) in in_transit:
            continue
        if svm:
            if phi[o] < -_DIR_TOL and resid[o] > 0:
                out.append((-resid[o] / phi[o], int(state.ids[o]), "release", int(o), None))
        else:
            if phi[o] > _DIR_TOL and resid[o] < eps:
                out.append(((eps - resid[o]) / phi[o], int(state.ids[o]), "release", int(o), None))
            if phi[o] < -_DIR_TOL and resid[o] > -eps:
                out.append(((-eps - resid[o]) / phi[o], int(state.ids[o]), "release", int(o), None))

    for k, d in enumerate(path.drive_rows):
        d = int(d)
        if svm:
            if resid[d] < 0 and phi[d] > _DIR_TOL:
                out.append((-resid[d] / phi[d], int(state.ids[d]), "capture", d, None))
        else:
            if resid[d] > eps and phi[d] < -_DIR_TOL:
                out.append(((eps - resid[d]) / phi[d], int(state.ids[d]), "capture", d, None))
            elif resid[d] < -eps and phi[d] > _DIR_TOL:
                out.append(((-eps - resid[d]) / phi[d], int(state.ids[d]), "capture", d, None))

    s_rows = state.s_rows
    if svm:
        lo = np.zeros(s_rows.size)
        hi = np.full(s_rows.size, C)
    elif eps > 0:
        side_up = resid[s_rows] > 0  # pinned to the upper edge: theta <= 0
        lo = np.where(side_up, -C, 0.0)
        hi = np.where(side_up, 0.0, C)
    else:
        lo = np.full(s_rows.size, -C)
        hi = np.full(s_rows.size, C)
    for k, s in enumerate(s_rows):
        d = directions.dalpha_s[k]
        s = int(s)
        if d > _DIR_TOL:
            out.append(((hi[k] - mult[s]) / d, int(state.ids[s]), "box", s, float(hi[k])))
        elif d < -_DIR_TOL:
            out.append(((lo[k] - mult[s]) / d, int(state.ids[s]), "box", s, float(lo[k])))
    return out


def step_select(state, phi, directions, remaining, path: PathState, hyper):
    """Smallest step before any membership event, capped at ``remaining``.

    Returns (eta, event); the event is ``end`` when the cap wins.  Ties are
    broken toward the lowest sample id.  Steps that repeatedly select
    zero-length events trip :class:`StalledPath` at the caller.
    """
    if not 0.0 < remaining <= 1.0:
        raise ValueError("remaining must lie in (0, 1]")
    reachable = [
        (max(eta, 0.0), sid, kind, row, bound)
        for eta, sid, kind, row, bound in _candidate_events(
            state, phi, directions, path, hyper
        )
        if eta < remaining - _EVENT_TOL
    ]
    if not reachable:
        return remaining, PathEvent(kind="end", sample_id=None, eta=remaining)
    first = min(e[0] for e in reachable)
    # degenerate simultaneous events resolve toward the lowest sample id
    eta, sid, kind, row, bound = min(
        (e for e in reachable if e[0] <= first + _EVENT_TOL), key=lambda e: e[1]
    )
    return eta, PathEvent(kind=kind, sample_id=sid, eta=eta, row=row, bound=bound)


def migrate(state, spec, path: PathState, event: PathEvent) -> None:
    """Apply one membership event and refresh the cached bordered inverse."""
    row = event.row
    if event.kind == "end":
        return
    if row is None:
        raise InconsistentEvent("event carries no row")
    if event.kind == "box":
        if state.partition[row] != REGION_S:
            raise InconsistentEvent(f"box event on non-S row {row}")
        mult = _multipliers(state)
        mult[row] = event.bound
        model.shrink_cached_inverse(state, [row])  # while still tagged S
        state.partition[row] = REGION_O if event.bound == 0.0 else REGION_B
    elif event.kind == "release":
        if state.partition[row] == REGION_S:
            raise InconsistentEvent(f"release event on S row {row}")
        state.partition[row] = REGION_S
        model.grow_cached_inverse(state, spec, [row])
    elif event.kind == "capture":
        mask = path.drive_rows != row
        if mask.all():
            raise InconsistentEvent(f"capture event on non-driven row {row}")
        path.drive_rows = path.drive_rows[mask]
        state.partition[row] = REGION_S
        model.grow_cached_inverse(state, spec, [row])
    else:
        raise InconsistentEvent(f"unknown event kind {event.kind!r}")
    path.events.append(event)


def _apply_step(state, phi, directions, path: PathState, eta: float) -> None:
    mult = _multipliers(state)
    s_rows = state.s_rows
    if s_rows.size:
        mult[s_rows] += eta * directions.dalpha_s
    if path.drive_rows.size:
        mult[path.drive_rows] += eta * directions.d_add
    if path.removal_rows.size:
        mult[path.removal_rows] += eta * directions.d_rem
    state.b += eta * directions.db
    resid = _residuals(state)
    resid += eta * phi


def _finalize(work, path: PathState, spec, hyper):
    """Pin transit rows to their targets, drop removals, retag, validate."""
    mult = _multipliers(work)
    if path.drive_rows.size:
        mult[path.drive_rows] = _drive_targets(work, path, hyper)
    if path.removal_rows.size:
        work.delete_rows(path.removal_rows)
    if _is_svm(work):
        work.partition = model.classify_regions_svm(work.alpha, work.margins, hyper.C)
    else:
        work.partition = model.classify_regions_svr(
            work.theta, work.outputs, hyper.C, hyper.epsilon
        )
    model.refresh_cached_inverse(work, spec)
    return work


def _path_update(state, batch: model.UpdateBatch, spec, hyper):
    svm = _is_svm(state)
    if svm:
        from .online_svm import _check_batch, rebuild_empty_S
        rebuild = rebuild_empty_S
    else:
        from .online_svr import _check_batch, rebuild_empty_S_svr
        rebuild = rebuild_empty_S_svr
    _check_batch(state, batch)
    if batch.is_empty():
        return state.copy()
    work = state.copy()

    if work.n == 0:
        return rebuild(work, batch.add, spec, hyper)

    remove_rows = work.rows_of(batch.remove)
    s_leavers = [int(r) for r in remove_rows if work.partition[r] == REGION_S]
    if s_leavers:
        model.shrink_cached_inverse(work, s_leavers)
        work.partition[s_leavers] = REGION_O
    if work.s_rows.size == 0:
        work.delete_rows(remove_rows)
        return rebuild(work, batch.add, spec, hyper)

    add_samples = list(batch.add)
    removal_rows = np.array([int(r) for r in remove_rows], dtype=int)

    if add_samples:
        x_d = np.array([s.features for s in add_samples], dtype=float)
        f_d = kernels.decision_values(x_d, work, spec)
        zeros = np.zeros(len(add_samples))
        tags = np.full(len(add_samples), REGION_O, dtype="<U1")
        work.append_samples(add_samples, zeros, tags)
        first = work.n - len(add_samples)
        if svm:
            y_d = np.array([s.target for s in add_samples], dtype=float)
            resid_new = y_d * f_d - 1.0
            work.margins[first:] = resid_new
            driven = resid_new < -_DIR_TOL  # only margin violators move
        else:
            t_d = np.array([s.target for s in add_samples], dtype=float)
            resid_new = f_d - t_d
            work.outputs[first:] = resid_new
            driven = np.abs(resid_new) > hyper.epsilon + _DIR_TOL
        drive_rows = np.flatnonzero(driven) + first
    else:
        drive_rows = np.zeros(0, dtype=int)

    path = PathState(drive_rows=drive_rows, removal_rows=removal_rows)
    columns = _Columns(work, spec)
    max_events = 100 * (work.n + len(add_samples) + removal_rows.size)
    stall_budget = work.n + len(add_samples) + removal_rows.size + 10

    for _ in range(max_events):
        try:
            directions = _direction(work, spec, path, hyper, columns)
        except EmptyS:
            # no unbounded set left mid-path: fall back to a fresh solve
            work.delete_rows(path.removal_rows)
            if svm:
                return batch_solver.train_svm_batch(work.samples, spec, hyper)
            return batch_solver.train_svr_batch(work.samples, spec, hyper)
        phi = sensitivity_phi(work, spec, path, directions, columns)
        eta, event = step_select(work, phi, directions, 1.0, path, hyper)
        if eta > 0.0:
            _apply_step(work, phi, directions, path, eta)
            path.advance(eta)
            path.stalled_steps = 0
        else:
            path.stalled_steps += 1
            if path.stalled_steps > stall_budget:
                raise StalledPath(
                    f"{path.stalled_steps} zero-length events in a row"
                )
        if event.kind == "end":
            return _finalize(work, path, spec, hyper)
        migrate(work, spec, path, event)
    raise StalledPath(f"path exceeded {max_events} events")


def path_update_svm(state, batch: model.UpdateBatch, spec, hyper):
    """Apply one add/remove batch via path following; returns a new state."""
    return _path_update(state, batch, spec, hyper)


def path_update_svr(state, batch: model.UpdateBatch, spec, hyper):
    """Regression path following; returns a new state."""
    return _path_update(state, batch, spec, hyper)
