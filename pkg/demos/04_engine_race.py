"""Racing the three arms with the benchmark harness.

`run_bench` replays one seeded add/remove schedule through the one-shot
engine, the step-size path follower, and full retraining, timing only the
update work.  Every round cross-checks the three decision surfaces before
the timings are reported.
"""
from ridgesvm import Hyperparams, KernelSpec, RoundSchedule, SplitPlan, data, run_bench
from ridgesvm.bench import format_table
from ridgesvm.data import apply_standardizer, fit_standardizer, split

samples = data.two_gaussians(600, seed=13)
train, pool, test = split(samples, SplitPlan(seed=14))
stats = fit_standardizer(train)
train = apply_standardizer(train, stats)
pool = apply_standardizer(pool, stats)
test = apply_standardizer(test, stats)

report = run_bench(
    "classification",
    train, pool, test,
    KernelSpec(family="rbf", sigma=1.0, ridge=0.5),
    Hyperparams(C=1.0),
    RoundSchedule(rounds=5, add_per_round=8, remove_per_round=3, seed=15),
)

print(format_table(report))
