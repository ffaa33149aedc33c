"""Streaming updates for classification, checked against retraining.

A base ridge SVM absorbs ten +6/-2 rounds through the one-shot engine.
After every round the model is compared with a from-scratch retrain on the
same sample set: the decision surfaces must agree, which is the property
that makes the timing comparison meaningful in the first place.
"""
import time

import numpy as np

from ridgesvm import (
    Hyperparams,
    KernelSpec,
    RoundSchedule,
    data,
    decision_values,
    schedule_rounds,
    train_svm_batch,
    update_multi_svm,
    validate,
)

spec = KernelSpec(family="rbf", sigma=1.0, ridge=0.5)
hyper = Hyperparams(C=1.0)

samples = data.two_gaussians(200, seed=5)
pool = data.two_gaussians(60, seed=6, start_id=10_000)
batches = schedule_rounds(pool, [s.id for s in samples],
                          RoundSchedule(rounds=10, add_per_round=6,
                                        remove_per_round=2, seed=7))

state = train_svm_batch(samples, spec, hyper)
current = list(samples)
grid = np.column_stack([np.linspace(-3.5, 3.5, 30), np.linspace(-3.5, 3.5, 30)])

print("round  |S|  online[s]  retrain[s]  surface gap  KKT clean")
online_total = retrain_total = 0.0
for rnd, upd in enumerate(batches, start=1):
    t0 = time.perf_counter()
    state = update_multi_svm(state, upd, spec, hyper)
    online = time.perf_counter() - t0

    gone = set(upd.remove)
    current = [s for s in current if s.id not in gone] + list(upd.add)
    t0 = time.perf_counter()
    oracle = train_svm_batch(current, spec, hyper)
    retrain = time.perf_counter() - t0

    gap = np.abs(decision_values(grid, state, spec)
                 - decision_values(grid, oracle, spec)).max()
    clean = validate(state, spec=spec, C=hyper.C) == []
    online_total += online
    retrain_total += retrain
    print(f"{rnd:5d} {state.s_rows.size:4d} {online:10.4f} {retrain:11.4f} "
          f"{gap:12.2e}  {clean}")

print(f"\ncumulative: online {online_total:.3f}s vs retrain {retrain_total:.3f}s "
      f"({retrain_total / online_total:.1f}x)")
