"""The weight-error curve of a ridge support vector model.

Plotting each sample's multiplier against its (test-form) output reveals
the structure this library exploits: with a ridge on the Gram diagonal,
the unbounded support vectors fall on a straight ramp of slope -1/ridge
instead of stacking vertically at the margin.  Because the ramp is a
function, a brand-new sample's multiplier can be read off it directly --
no step sizes, no per-sample iteration.
"""
import numpy as np

from ridgesvm import (
    Hyperparams,
    KernelSpec,
    data,
    decision_values,
    train_svm_batch,
    train_svr_batch,
)

RIDGE = 0.5

print("=== classification ===")
spec = KernelSpec(family="rbf", sigma=1.0, ridge=RIDGE)
state = train_svm_batch(data.two_gaussians(200, seed=0), spec, Hyperparams(C=1.0))
print(f"trained 200 samples: |S|={state.s_rows.size} "
      f"|B|={state.b_rows.size} |O|={state.o_rows.size}")

s = state.s_rows
f_test = decision_values(state.X[s], state, spec)
margins = state.y[s] * f_test

slope, intercept = np.polyfit(margins, state.alpha[s], 1)
print(f"ramp fit over the {s.size} unbounded SVs: "
      f"alpha = {slope:+.4f} * (y*f) {intercept:+.4f}")
print(f"expected slope -1/ridge = {-1 / RIDGE:+.4f}")
print("sampled points on the ramp (y*f -> alpha):")
for k in np.linspace(0, s.size - 1, 5).astype(int):
    print(f"  {margins[k]:+.4f} -> {state.alpha[s][k]:.4f}")

print("\n=== regression ===")
hyper = Hyperparams(C=1.0, epsilon=0.2)
svr = train_svr_batch(data.noisy_sine(300, seed=1, noise=0.3), spec, hyper)
s = svr.s_rows
errors = decision_values(svr.X[s], svr, spec) - svr.targets[s]
theta = svr.theta[s]
print(f"|S|={s.size}; two ramps, one per tube edge, both slope -1/ridge")
for name, side in (("upper edge (theta < 0)", theta < 0),
                   ("lower edge (theta > 0)", theta > 0)):
    coeffs = np.polyfit(errors[side], theta[side], 1)
    crossing = -coeffs[1] / coeffs[0]
    print(f"  {name}: slope {coeffs[0]:+.4f}, zero crossing at error "
          f"{crossing:+.4f} (tube edge at {np.sign(crossing) * hyper.epsilon:+.1f})")
print(f"crossing separation ~= 2*epsilon = {2 * hyper.epsilon}")
