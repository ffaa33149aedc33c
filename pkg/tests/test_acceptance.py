"""Acceptance suite: one test per criterion, one printed verdict per test.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  The oracle-equivalence instances are shared module-wide (each is
run twice so the determinism criterion can compare bytes).
"""
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest

from ridgesvm import batch, data, kernels, linalg, model
from ridgesvm.data import RoundSchedule, SplitPlan, apply_standardizer, fit_standardizer, save_model, schedule_rounds, split
from ridgesvm.kernels import KernelSpec
from ridgesvm.model import Hyperparams, UpdateBatch
from ridgesvm.online_svm import update_multi_svm
from ridgesvm.online_svr import update_multi_svr
from ridgesvm.path import path_update_svm, path_update_svr

RBF1 = KernelSpec(family="rbf", sigma=1.0, ridge=0.5)
SVM_HYPER = Hyperparams(C=1.0)
SVR_HYPER = Hyperparams(C=1.0, epsilon=0.2)

ORACLE_TOL = 1e-3
ENGINE_TOL = 1e-6
REGION_TOL = 1e-6


@contextmanager
def criterion(num, title):
    try:
        yield
    except BaseException:
        print(f"\n[FAIL] criterion {num}: {title}")
        raise
    print(f"\n[PASS] criterion {num}: {title}")


def _model_bytes(state, spec, hyper, tmpdir, tag):
    path = os.path.join(tmpdir, f"{tag}.json")
    save_model(state, path, spec, hyper)
    with open(path, "rb") as fh:
        return fh.read()


def _run_svm_rounds(tmpdir, replica):
    samples = data.two_gaussians(200, seed=11)
    pool = data.two_gaussians(60, seed=12, start_id=10_000)
    schedule = RoundSchedule(rounds=10, add_per_round=6, remove_per_round=2, seed=13)
    batches = schedule_rounds(pool, [s.id for s in samples], schedule)
    gx, gy = np.meshgrid(np.linspace(-3.5, 3.5, 10), np.linspace(-3.5, 3.5, 5))
    grid = np.column_stack([gx.ravel(), gy.ravel()])

    online = batch.train_svm_batch(samples, RBF1, SVM_HYPER)
    follower = online
    current = list(samples)
    rounds = []
    for rnd, upd in enumerate(batches, start=1):
        online = update_multi_svm(online, upd, RBF1, SVM_HYPER)
        follower = path_update_svm(follower, upd, RBF1, SVM_HYPER)
        gone = set(upd.remove)
        current = [s for s in current if s.id not in gone] + list(upd.add)
        oracle = batch.train_svm_batch(current, RBF1, SVM_HYPER)

        f_online = kernels.decision_values(grid, online, RBF1)
        f_batch = kernels.decision_values(grid, oracle, RBF1)
        f_follow = kernels.decision_values(grid, follower, RBF1)

        tag_online = {int(i): t for i, t in zip(online.ids, online.partition)}
        tag_oracle = {int(i): t for i, t in zip(oracle.ids, oracle.partition)}
        g_online = {int(i): g for i, g in zip(online.ids, online.margins)}
        g_oracle = {int(i): g for i, g in zip(oracle.ids, oracle.margins)}
        disagreements = [
            (sid, abs(g_online[sid]), abs(g_oracle[sid]))
            for sid in tag_oracle
            if tag_online[sid] != tag_oracle[sid]
        ]
        rounds.append({
            "oracle_gap": float(np.max(np.abs(f_online - f_batch))),
            "engine_gap": float(np.max(np.abs(f_online - f_follow))),
            "tag_disagreements": disagreements,
            "online_report": model.validate(online, spec=RBF1, C=SVM_HYPER.C),
            "follower_report": model.validate(follower, spec=RBF1, C=SVM_HYPER.C),
            "online_bytes": _model_bytes(online, RBF1, SVM_HYPER, tmpdir,
                                         f"svm-{replica}-{rnd}-online"),
            "follower_bytes": _model_bytes(follower, RBF1, SVM_HYPER, tmpdir,
                                           f"svm-{replica}-{rnd}-follower"),
        })
    return rounds


def _run_svr_rounds(tmpdir, replica):
    samples = data.noisy_sine(200, seed=21)
    pool = data.noisy_sine(60, seed=22, start_id=20_000)
    schedule = RoundSchedule(rounds=10, add_per_round=6, remove_per_round=2, seed=23)
    batches = schedule_rounds(pool, [s.id for s in samples], schedule)
    grid = np.linspace(0.0, 2.0 * np.pi, 50)[:, None]

    online = batch.train_svr_batch(samples, RBF1, SVR_HYPER)
    follower = online
    current = list(samples)
    rounds = []
    for rnd, upd in enumerate(batches, start=1):
        online = update_multi_svr(online, upd, RBF1, SVR_HYPER)
        follower = path_update_svr(follower, upd, RBF1, SVR_HYPER)
        gone = set(upd.remove)
        current = [s for s in current if s.id not in gone] + list(upd.add)
        oracle = batch.train_svr_batch(current, RBF1, SVR_HYPER)

        f_online = kernels.decision_values(grid, online, RBF1)
        f_batch = kernels.decision_values(grid, oracle, RBF1)
        f_follow = kernels.decision_values(grid, follower, RBF1)
        rounds.append({
            "oracle_gap": float(np.max(np.abs(f_online - f_batch))),
            "engine_gap": float(np.max(np.abs(f_online - f_follow))),
            "online_report": model.validate(online, spec=RBF1, C=SVR_HYPER.C,
                                            epsilon=SVR_HYPER.epsilon),
            "follower_report": model.validate(follower, spec=RBF1, C=SVR_HYPER.C,
                                              epsilon=SVR_HYPER.epsilon),
            "online_bytes": _model_bytes(online, RBF1, SVR_HYPER, tmpdir,
                                         f"svr-{replica}-{rnd}-online"),
            "follower_bytes": _model_bytes(follower, RBF1, SVR_HYPER, tmpdir,
                                           f"svr-{replica}-{rnd}-follower"),
        })
    return rounds


@pytest.fixture(scope="module")
def svm_rounds(tmp_path_factory):
    tmpdir = str(tmp_path_factory.mktemp("svm-acceptance"))
    start = time.perf_counter()
    first = _run_svm_rounds(tmpdir, 0)
    elapsed = time.perf_counter() - start
    second = _run_svm_rounds(tmpdir, 1)
    return {"rounds": first, "replica": second, "seconds": elapsed}


@pytest.fixture(scope="module")
def svr_rounds(tmp_path_factory):
    tmpdir = str(tmp_path_factory.mktemp("svr-acceptance"))
    start = time.perf_counter()
    first = _run_svr_rounds(tmpdir, 0)
    elapsed = time.perf_counter() - start
    second = _run_svr_rounds(tmpdir, 1)
    return {"rounds": first, "replica": second, "seconds": elapsed}


def test_criterion_1_svm_oracle_equivalence(svm_rounds):
    with criterion(1, "SVM oracle equivalence over 10 rounds of +6/-2"):
        for rnd, rec in enumerate(svm_rounds["rounds"], start=1):
            assert rec["oracle_gap"] <= ORACLE_TOL, (
                f"round {rnd}: grid gap {rec['oracle_gap']:.2e}"
            )
            for sid, g_on, g_or in rec["tag_disagreements"]:
                assert min(g_on, g_or) <= REGION_TOL, (
                    f"round {rnd}: tag disagreement on id {sid} with "
                    f"margins {g_on:.2e}/{g_or:.2e}"
                )
        assert svm_rounds["seconds"] <= 60.0


def test_criterion_2_svr_oracle_equivalence(svr_rounds):
    with criterion(2, "SVR oracle equivalence over 10 rounds of +6/-2"):
        for rnd, rec in enumerate(svr_rounds["rounds"], start=1):
            assert rec["oracle_gap"] <= ORACLE_TOL, (
                f"round {rnd}: grid gap {rec['oracle_gap']:.2e}"
            )
        assert svr_rounds["seconds"] <= 60.0


def test_criterion_3_engine_agreement(svm_rounds, svr_rounds):
    with criterion(3, "one-shot and path-following engines agree to 1e-6"):
        for rec in svm_rounds["rounds"]:
            assert rec["engine_gap"] <= ENGINE_TOL
        for rec in svr_rounds["rounds"]:
            assert rec["engine_gap"] <= ENGINE_TOL


def test_criterion_4_kkt_suite(svm_rounds, svr_rounds):
    with criterion(4, "model.validate empty at 1e-6 after every update"):
        for key in ("rounds",):
            for rec in svm_rounds[key]:
                assert rec["online_report"] == []
                assert rec["follower_report"] == []
            for rec in svr_rounds[key]:
                assert rec["online_report"] == []
                assert rec["follower_report"] == []


def test_criterion_5_linalg_oracle():
    with criterion(5, "grow/shrink inverses match direct inversion (100 SPD)"):
        rng = np.random.default_rng(99)
        start = time.perf_counter()
        for _ in range(100):
            n = int(rng.integers(4, 57))
            k = int(rng.integers(1, 6))
            r = int(rng.integers(1, 6))
            a = rng.standard_normal((n + k, n + k))
            full = a.T @ a + np.eye(n + k)
            prev_inv = linalg.invert_spd(full[:n, :n])
            removed = sorted(rng.choice(n, size=min(r, n - 1), replace=False).tolist())

            grown = linalg.inverse_grow(prev_inv, full[:n, n:], full[n:, n:])
            target = linalg.invert_spd(full)
            rel = np.linalg.norm(grown - target) / np.linalg.norm(target)
            assert rel <= 1e-8

            keep = [i for i in range(n) if i not in removed]
            shrunk = linalg.inverse_shrink(prev_inv, removed)
            target = linalg.invert_spd(full[np.ix_(keep, keep)])
            rel = np.linalg.norm(shrunk - target) / np.linalg.norm(target)
            assert rel <= 1e-8

            combined = linalg.inverse_grow_shrink(
                prev_inv, full[:n, n:], full[n:, n:], removed
            )
            final_idx = keep + list(range(n, n + k))
            target = linalg.invert_spd(full[np.ix_(final_idx, final_idx)])
            rel = np.linalg.norm(combined - target) / np.linalg.norm(target)
            assert rel <= 1e-8
        assert time.perf_counter() - start <= 10.0


def test_criterion_6_wec_geometry():
    with criterion(6, "weight-error-curve ramp slope and tube crossings"):
        # classification: unbounded-SV points fall on a ramp of slope -1/ridge
        state = batch.train_svm_batch(data.two_gaussians(200, seed=31), RBF1, SVM_HYPER)
        s = state.s_rows
        assert s.size >= 5
        f_test = kernels.decision_values(state.X[s], state, RBF1)
        margins = state.y[s] * f_test
        slope = np.polyfit(margins, state.alpha[s], 1)[0]
        assert abs(slope - (-2.0)) <= 0.05 * 2.0, f"slope {slope:.4f}"

        # regression: the two ramps cross zero at error -/+ epsilon
        svr = batch.train_svr_batch(
            data.noisy_sine(300, seed=32, noise=0.3), RBF1, SVR_HYPER
        )
        s = svr.s_rows
        f_test = kernels.decision_values(svr.X[s], svr, RBF1)
        errors = f_test - svr.targets[s]
        theta = svr.theta[s]
        upper = theta < 0  # pinned to the +epsilon edge
        assert upper.sum() >= 3 and (~upper).sum() >= 3
        for side in (upper, ~upper):
            coeffs = np.polyfit(errors[side], theta[side], 1)
            crossing = -coeffs[1] / coeffs[0]
            expected = SVR_HYPER.epsilon if side is upper else -SVR_HYPER.epsilon
            sign = 1.0 if theta[side].mean() < 0 else -1.0
            assert abs(abs(crossing) - SVR_HYPER.epsilon) <= 1e-3, (
                f"crossing {crossing:.5f}"
            )


def test_criterion_7_speed_properties():
    with criterion(7, "one +40/-10 round: >=10x vs retrain, >=1.5x vs path"):
        start = time.perf_counter()
        spec = KernelSpec(family="rbf", sigma=3.0, ridge=0.5)
        samples = data.two_gaussians(4000, seed=42, center=2.0)
        # arrivals concentrated near the class boundary (the hard case)
        pool = data.two_gaussians(40, seed=43, center=0.5, start_id=10_000)
        rng = np.random.default_rng(7)
        remove_ids = [int(i) for i in rng.choice([s.id for s in samples],
                                                 size=10, replace=False)]
        upd = UpdateBatch(add=pool, remove=remove_ids)
        base = batch.train_svm_batch(samples, spec, SVM_HYPER)
        survivors = [s for s in samples if s.id not in set(remove_ids)] + pool

        prop_t, path_t, retrain_t = [], [], []
        for _ in range(5):
            t0 = time.perf_counter()
            prop_state = update_multi_svm(base, upd, spec, SVM_HYPER)
            prop_t.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            path_state = path_update_svm(base, upd, spec, SVM_HYPER)
            path_t.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            retrain_state = batch.train_svm_batch(survivors, spec, SVM_HYPER)
            retrain_t.append(time.perf_counter() - t0)

        grid = np.column_stack([np.linspace(-4, 4, 25), np.linspace(-4, 4, 25)])
        parity = np.max(np.abs(
            kernels.decision_values(grid, prop_state, spec)
            - kernels.decision_values(grid, retrain_state, spec)
        ))
        assert parity <= ORACLE_TOL

        m_prop = float(np.median(prop_t))
        m_path = float(np.median(path_t))
        m_retrain = float(np.median(retrain_t))
        print(f"\n  proposed {m_prop:.4f}s, path {m_path:.4f}s, "
              f"retrain {m_retrain:.4f}s")
        assert m_prop <= m_retrain / 10.0, (
            f"proposed {m_prop:.4f}s vs retrain {m_retrain:.4f}s"
        )
        assert m_prop <= m_path / 1.5, (
            f"proposed {m_prop:.4f}s vs path {m_path:.4f}s"
        )
        assert time.perf_counter() - start <= 900.0


SKIN_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                         "data", "skin_segmentation.csv")


def test_criterion_8_accuracy_parity_at_scale():
    with criterion(8, "5000-row accuracy parity within 0.5 points"):
        if os.path.exists(SKIN_PATH):
            samples = data.load_csv(data.DatasetSpec(path=SKIN_PATH))[:5000]
        else:
            samples = data.two_gaussians(5000, seed=51)
        train_part, pool, test_part = split(samples, SplitPlan(seed=52))
        stats = fit_standardizer(train_part)
        train_part = apply_standardizer(train_part, stats)
        pool = apply_standardizer(pool, stats)
        test_part = apply_standardizer(test_part, stats)

        spec = KernelSpec(family="rbf", sigma=3.0, ridge=0.5)
        schedule = RoundSchedule(rounds=5, add_per_round=40,
                                 remove_per_round=10, seed=53)
        batches = schedule_rounds(pool, [s.id for s in train_part], schedule)

        online = batch.train_svm_batch(train_part, spec, SVM_HYPER)
        current = list(train_part)
        for upd in batches:
            online = update_multi_svm(online, upd, spec, SVM_HYPER)
            gone = set(upd.remove)
            current = [s for s in current if s.id not in gone] + list(upd.add)
        retrained = batch.train_svm_batch(current, spec, SVM_HYPER)

        x_test = np.array([s.features for s in test_part])
        y_test = np.array([s.target for s in test_part])

        def accuracy(state):
            preds = kernels.decision_values(x_test, state, spec)
            return 100.0 * np.mean(np.where(preds >= 0, 1.0, -1.0) == y_test)

        acc_online = accuracy(online)
        acc_batch = accuracy(retrained)
        print(f"\n  online {acc_online:.2f}% vs retrained {acc_batch:.2f}%")
        assert abs(acc_online - acc_batch) <= 0.5


def test_criterion_9_determinism(svm_rounds, svr_rounds):
    with criterion(9, "byte-identical model outputs across two seeded runs"):
        for bundle in (svm_rounds, svr_rounds):
            for first, second in zip(bundle["rounds"], bundle["replica"]):
                assert first["online_bytes"] == second["online_bytes"]
                assert first["follower_bytes"] == second["follower_bytes"]
