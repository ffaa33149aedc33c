"""Streaming updates for regression on a noisy sine.

Same shape as the classification walk-through, with the tube semantics:
arrivals inside the epsilon-tube cost nothing (their multiplier is zero by
construction), arrivals outside it get a multiplier read off the tube-edge
ramp, and removals hand their weight back through one bordered solve.
"""
import numpy as np

from ridgesvm import (
    Hyperparams,
    KernelSpec,
    Sample,
    UpdateBatch,
    data,
    decision_value,
    decision_values,
    train_svr_batch,
    update_multi_svr,
)

spec = KernelSpec(family="rbf", sigma=1.0, ridge=0.5)
hyper = Hyperparams(C=1.0, epsilon=0.2)

samples = data.noisy_sine(200, seed=9)
state = train_svr_batch(samples, spec, hyper)
grid = np.linspace(0, 2 * np.pi, 40)[:, None]
before = decision_values(grid, state, spec)
print(f"base model: |S|={state.s_rows.size} |B|={state.b_rows.size} "
      f"|O|={state.o_rows.size}")

# an arrival lying exactly on the current curve is swallowed by the tube
x_new = np.array([2.5])
on_curve = Sample(id=50_000, features=x_new, target=decision_value(x_new, state, spec))
state = update_multi_svr(state, UpdateBatch(add=[on_curve]), spec, hyper)
drift = np.abs(decision_values(grid, state, spec) - before).max()
row = state.rows_of([50_000])[0]
print(f"\nin-tube arrival: theta={state.theta[row]:.1f}, region "
      f"{str(state.partition[row])!r}, curve moved by {drift:.2e}")

# an arrival far outside the tube lands on a ramp and reshapes the fit
outlier = Sample(id=50_001, features=np.array([4.0]), target=2.0)
state = update_multi_svr(state, UpdateBatch(add=[outlier]), spec, hyper)
row = state.rows_of([50_001])[0]
print(f"outlier arrival: theta={state.theta[row]:+.4f}, region "
      f"{str(state.partition[row])!r}")

# removing it again restores the old curve
state = update_multi_svr(state, UpdateBatch(remove=[50_001]), spec, hyper)
drift = np.abs(decision_values(grid, state, spec) - before).max()
print(f"after removing it: curve within {drift:.2e} of the original")

# ten mixed rounds against the retrain oracle
pool = data.noisy_sine(60, seed=10, start_id=60_000)
current = [s for s in samples] + [on_curve]
rng = np.random.default_rng(11)
worst = 0.0
cursor = 0
for _ in range(10):
    adds = pool[cursor:cursor + 6]
    cursor += 6
    removals = [int(i) for i in rng.choice([s.id for s in current], 2, replace=False)]
    state = update_multi_svr(state, UpdateBatch(add=adds, remove=removals), spec, hyper)
    current = [s for s in current if s.id not in set(removals)] + list(adds)
    oracle = train_svr_batch(current, spec, hyper)
    gap = np.abs(decision_values(grid, state, spec)
                 - decision_values(grid, oracle, spec)).max()
    worst = max(worst, gap)
print(f"\nten +6/-2 rounds: worst gap to a from-scratch retrain {worst:.2e}")
