import numpy as np
import pytest

from ridgesvm import batch, kernels, model
from ridgesvm.batch import SolverConfig
from ridgesvm.errors import SingleClassInput
from ridgesvm.kernels import KernelSpec
from ridgesvm.model import Hyperparams, Sample


def make_samples(X, y, start_id=0):
    return [
        Sample(start_id + i, np.atleast_1d(np.asarray(x, dtype=float)), float(t))
        for i, (x, t) in enumerate(zip(X, y))
    ]


def gaussian_blobs(n, seed, spread=1.0):
    rng = np.random.default_rng(seed)
    half = n // 2
    xp = rng.normal(loc=(1.0, 1.0), scale=spread, size=(half, 2))
    xn = rng.normal(loc=(-1.0, -1.0), scale=spread, size=(n - half, 2))
    X = np.vstack([xp, xn])
    y = np.concatenate([np.ones(half), -np.ones(n - half)])
    order = rng.permutation(n)
    return make_samples(X[order], y[order])


def noisy_sine(n, seed, noise=0.25):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 2 * np.pi, n)
    y = np.sin(x) + noise * rng.standard_normal(n)
    return make_samples(x[:, None], y)


class TestTrainSvmBatch:
    def test_two_point_closed_form(self):
        # dual reduces to 2a - 2.5a^2 -> a = 0.4
        samples = make_samples([[1.0], [-1.0]], [1.0, -1.0])
        spec = KernelSpec(family="linear", ridge=0.5)
        state = batch.train_svm_batch(samples, spec, Hyperparams(C=1.0))
        assert np.allclose(state.alpha, [0.4, 0.4], atol=1e-9)
        assert state.b == pytest.approx(0.0, abs=1e-9)
        assert list(state.partition) == ["S", "S"]

    def test_two_point_box_clamped(self):
        # unconstrained optimum 0.4 exceeds C = 0.3
        samples = make_samples([[1.0], [-1.0]], [1.0, -1.0])
        spec = KernelSpec(family="linear", ridge=0.5)
        state = batch.train_svm_batch(samples, spec, Hyperparams(C=0.3))
        assert np.allclose(state.alpha, [0.3, 0.3], atol=1e-9)
        assert state.b == pytest.approx(0.0, abs=1e-9)
        assert list(state.partition) == ["B", "B"]

    def test_symmetric_pairs(self):
        samples = make_samples(
            [[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [-1.0, 0.0]],
            [1.0, 1.0, -1.0, -1.0],
        )
        spec = KernelSpec(family="rbf", sigma=1.0, ridge=0.5)
        state = batch.train_svm_batch(samples, spec, Hyperparams(C=1.0))
        assert state.b == pytest.approx(0.0, abs=1e-9)
        assert state.alpha[0] == pytest.approx(state.alpha[2], abs=1e-9)

    def test_single_class_rejected(self):
        samples = make_samples([[1.0], [2.0]], [1.0, 1.0])
        with pytest.raises(SingleClassInput):
            batch.train_svm_batch(samples, KernelSpec(family="linear"), Hyperparams(C=1.0))

    def test_validate_clean_on_random_instances(self):
        spec = KernelSpec(family="rbf", sigma=1.0, ridge=0.5)
        hyper = Hyperparams(C=1.0)
        for seed in (0, 1, 2):
            samples = gaussian_blobs(120, seed)
            state = batch.train_svm_batch(samples, spec, hyper)
            report = model.validate(state, spec=spec, C=hyper.C)
            assert report == []

    def test_dual_objective_beats_random_feasible(self):
        spec = KernelSpec(family="rbf", sigma=1.0, ridge=0.5)
        hyper = Hyperparams(C=1.0)
        samples = gaussian_blobs(40, 5)
        state = batch.train_svm_batch(samples, spec, hyper)
        gram = kernels.q_matrix(state.X, state.y, spec)

        def dual(alpha):
            return alpha.sum() - 0.5 * alpha @ gram @ alpha

        best = dual(state.alpha)
        rng = np.random.default_rng(17)
        for _ in range(1000):
            cand = rng.uniform(0, hyper.C, len(samples))
            # project onto the equality constraint along the label direction
            cand -= state.y * (state.y @ cand) / len(samples)
            cand = np.clip(cand, 0, hyper.C)
            cand -= state.y * (state.y @ cand) / len(samples)
            cand = np.clip(cand, 0, hyper.C)
            if abs(state.y @ cand) > 1e-9:
                continue
            assert dual(cand) <= best + 1e-9

    def test_deterministic(self):
        spec = KernelSpec(family="rbf", sigma=1.0, ridge=0.5)
        hyper = Hyperparams(C=1.0)
        samples = gaussian_blobs(60, 9)
        s1 = batch.train_svm_batch(samples, spec, hyper, SolverConfig(seed=4))
        s2 = batch.train_svm_batch(samples, spec, hyper, SolverConfig(seed=4))
        assert np.array_equal(s1.alpha, s2.alpha)
        assert s1.b == s2.b


class TestTrainSvrBatch:
    def test_constant_targets_inside_tube(self):
        samples = make_samples([[0.0], [1.0], [2.0]], [3.0, 3.0, 3.0])
        spec = KernelSpec(family="rbf", sigma=1.0, ridge=0.5)
        state = batch.train_svr_batch(samples, spec, Hyperparams(C=1.0, epsilon=0.1))
        assert np.allclose(state.theta, 0.0)
        assert state.b == pytest.approx(3.0)
        assert list(state.partition) == ["O", "O", "O"]

    def test_two_point_hand_reduction(self):
        # theta = (t, -t) reduces the dual to 2.5 t^2 - 2t -> t = 0.4
        samples = make_samples([[1.0], [-1.0]], [1.0, -1.0])
        spec = KernelSpec(family="linear", ridge=0.5)
        state = batch.train_svr_batch(samples, spec, Hyperparams(C=1.0, epsilon=0.0))
        assert np.allclose(state.theta, [0.4, -0.4], atol=1e-9)
        assert state.b == pytest.approx(0.0, abs=1e-9)
        # tube residuals vanish on the active set when epsilon = 0
        assert np.allclose(state.outputs, 0.0, atol=1e-8)

    def test_wide_tube_swallows_data(self):
        samples = make_samples([[0.0], [1.0], [2.0]], [0.0, 0.1, -0.1])
        spec = KernelSpec(family="rbf", sigma=1.0, ridge=0.5)
        state = batch.train_svr_batch(samples, spec, Hyperparams(C=1.0, epsilon=5.0))
        assert np.allclose(state.theta, 0.0)

    def test_validate_clean_on_sine(self):
        spec = KernelSpec(family="rbf", sigma=1.0, ridge=0.5)
        hyper = Hyperparams(C=1.0, epsilon=0.2)
        for seed in (0, 3):
            samples = noisy_sine(100, seed)
            state = batch.train_svr_batch(samples, spec, hyper)
            report = model.validate(state, spec=spec, C=hyper.C, epsilon=hyper.epsilon)
            assert report == []

    def test_balance(self):
        samples = noisy_sine(50, 7)
        spec = KernelSpec(family="rbf", sigma=1.0, ridge=0.5)
        state = batch.train_svr_batch(samples, spec, Hyperparams(C=1.0, epsilon=0.1))
        assert abs(state.theta.sum()) <= 1e-9

    def test_deterministic(self):
        samples = noisy_sine(60, 11)
        spec = KernelSpec(family="rbf", sigma=1.0, ridge=0.5)
        hyper = Hyperparams(C=1.0, epsilon=0.2)
        s1 = batch.train_svr_batch(samples, spec, hyper)
        s2 = batch.train_svr_batch(samples, spec, hyper)
        assert np.array_equal(s1.theta, s2.theta)
        assert s1.b == s2.b
