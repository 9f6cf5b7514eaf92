import numpy as np
import pytest

import spinmon.trajectory as traj
from spinmon.kicked_top import KickedTopParams
from spinmon.observables import reference_values
from spinmon.operators import SpinQuantum
from spinmon.trajectory import (
    FIXED_SCS,
    MAXIMALLY_MIXED,
    InitialCondition,
    RunConfig,
    raw_sigma_grid,
    rescaled_grid,
    run_mixed_trajectory,
    run_pure_trajectory,
    run_sweep,
    run_trajectory,
)


def config(N, k, sigma, **kw):
    return RunConfig(SpinQuantum(N), KickedTopParams.from_k(k), sigma, **kw)


def ensemble_mean(cfg):
    return np.mean([run_trajectory(cfg, t).time_avg for t in range(cfg.n_trajectories)])


class TestRunConfig:
    def test_default_steps(self):
        assert config(10, 3, 1.0).steps == 40
        assert config(10, 3, 1.0, initial_condition=InitialCondition(MAXIMALLY_MIXED)).steps == 30

    @pytest.mark.parametrize("kw", [dict(steps=0), dict(steps=5, burn_in=5), dict(burn_in=-1), dict(n_trajectories=0)])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            config(10, 3, 1.0, **kw)

    @pytest.mark.parametrize("sigma", [0.0, -1.0, np.inf])
    def test_rejects_sigma(self, sigma):
        with pytest.raises(ValueError):
            config(10, 3, sigma)

    def test_rejects_unknown_initial_condition(self):
        with pytest.raises(ValueError):
            InitialCondition("thermal")


class TestPureTrajectory:
    def test_record_shapes(self):
        rec = run_pure_trajectory(config(12, 3, 1.0, steps=17), 0)
        assert rec.outcomes.shape == rec.qfi_series.shape == (17,)
        assert rec.time_avg == pytest.approx(rec.qfi_series.mean())

    def test_burn_in(self):
        cfg = config(12, 3, 1.0, steps=20, burn_in=5)
        rec = run_pure_trajectory(cfg, 3)
        assert rec.time_avg == pytest.approx(rec.qfi_series[5:].mean())

    def test_deterministic(self):
        cfg = config(30, 3, 0.7, steps=15)
        a, b = run_pure_trajectory(cfg, 4, 2), run_pure_trajectory(cfg, 4, 2)
        assert a.outcomes.tobytes() == b.outcomes.tobytes()
        assert a.qfi_series.tobytes() == b.qfi_series.tobytes()
        assert run_pure_trajectory(cfg, 5, 2).outcomes.tobytes() != a.outcomes.tobytes()

    def test_bounds(self):
        q = SpinQuantum(40)
        rec = run_pure_trajectory(config(40, 3, 0.8, steps=30), 0)
        assert np.all(rec.qfi_series >= 4 / 3 * q.J - 1e-8)
        assert np.all(rec.qfi_series <= 4 / 3 * q.J * (q.J + 1) + 1e-8)

    def test_rejects_mixed_start(self):
        with pytest.raises(ValueError):
            run_pure_trajectory(config(10, 3, 1.0, initial_condition=InitialCondition(MAXIMALLY_MIXED)), 0)

    def test_frozen_dynamics(self):
        q = SpinQuantum(20)
        cfg = RunConfig(q, KickedTopParams(alpha=(0, 0, 0)), 1e6, steps=10)
        rec = run_pure_trajectory(cfg, 0)
        np.testing.assert_allclose(rec.qfi_series, 4 / 3 * q.J, rtol=1e-6)

    def test_weak_reaches_haar(self):
        cfg = config(100, 3, 1e6, steps=40, n_trajectories=20)
        haar = reference_values(SpinQuantum(100))["Haar"]
        assert abs(ensemble_mean(cfg) / haar - 1) < 0.10

    def test_sigma_sandwich(self):
        q = SpinQuantum(100)
        vals = {x: ensemble_mean(config(100, 3, x * np.sqrt(q.J), n_trajectories=20)) for x in (0.03, 1.0, 30.0)}
        assert vals[1.0] < vals[0.03] and vals[1.0] < vals[30.0]


class TestMixedTrajectory:
    def test_purity_bounds_and_shape(self):
        cfg = config(10, 3, 1.0, initial_condition=InitialCondition(MAXIMALLY_MIXED))
        rec = run_mixed_trajectory(cfg, 0)
        assert rec.purity_series.shape == (30,)
        assert np.all(rec.purity_series >= 1 / 11 - 1e-10) and np.all(rec.purity_series <= 1 + 1e-10)
        assert rec.time_avg == pytest.approx(rec.purity_series.mean())

    @pytest.mark.parametrize("ic", [InitialCondition(), InitialCondition(FIXED_SCS, 1.0, 2.0)])
    def test_matches_pure_path(self, ic):
        cfg = config(24, 3, 0.9, steps=25, initial_condition=ic)
        pure = run_pure_trajectory(cfg, 7)
        mixed = run_mixed_trajectory(cfg, 7)
        np.testing.assert_allclose(mixed.outcomes, pure.outcomes, atol=1e-8)
        np.testing.assert_allclose(mixed.qfi_series, pure.qfi_series, atol=1e-8)
        np.testing.assert_allclose(mixed.purity_series, 1.0, atol=1e-9)

    def test_strong_purifies(self):
        cfg = config(50, 3, 0.5, initial_condition=InitialCondition(MAXIMALLY_MIXED))
        assert run_mixed_trajectory(cfg, 0).purity_series[-1] >= 0.95

    def test_weak_stays_mixed(self):
        cfg = config(50, 3, 1e6, initial_condition=InitialCondition(MAXIMALLY_MIXED))
        assert run_mixed_trajectory(cfg, 0).time_avg < 0.1

    @pytest.mark.parametrize("k", [0.5, 6.0])
    def test_no_op_measurement_keeps_identity(self, k):
        cfg = config(16, k, 1e6, steps=10, initial_condition=InitialCondition(MAXIMALLY_MIXED))
        np.testing.assert_allclose(run_mixed_trajectory(cfg, 0).purity_series, 1 / 17, atol=1e-6)


class TestSweep:
    def test_bitwise_reproducible(self):
        grid = [config(20, 3, 0.8, steps=10, n_trajectories=50, seed=11)]
        assert run_sweep(grid, threads=1) == run_sweep(grid, threads=1)

    def test_independent_of_workers(self):
        grid = rescaled_grid([8, 12], [1.0, 3.0], [0.1, 3.0], steps=6, n_trajectories=4, seed=5)
        serial = run_sweep(grid, threads=1)
        assert serial == run_sweep(grid, threads=2)
        assert serial == run_sweep(grid, threads=3)

    def test_aggregates(self):
        cfg = config(10, 3, 1.0, steps=8, n_trajectories=6, seed=2)
        row = run_sweep([cfg], threads=1).rows[0]
        vals = [run_trajectory(cfg, t, 0).time_avg for t in range(6)]
        assert row.mean == pytest.approx(np.mean(vals), rel=1e-14)
        assert row.sem == pytest.approx(np.std(vals, ddof=1) / np.sqrt(6), rel=1e-12)
        assert row.sigma_over_sqrtJ == pytest.approx(1 / np.sqrt(5))
        assert row.observable == "mean_qfi"

    def test_single_trajectory_sem(self):
        assert run_sweep([config(6, 3, 1.0, steps=3, n_trajectories=1)], threads=1).rows[0].sem == 0.0

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            run_sweep([])

    def test_failed_point_is_kept(self, monkeypatch):
        real = traj.run_trajectory

        def flaky(cfg, t, g=0):
            if cfg.quantum.N == 9:
                raise FloatingPointError("boom")
            return real(cfg, t, g)

        monkeypatch.setattr(traj, "run_trajectory", flaky)
        res = run_sweep([config(8, 3, 1.0, steps=3, n_trajectories=2), config(9, 3, 1.0, steps=3, n_trajectories=2)],
                        threads=1)
        assert [r.error is None for r in res.rows] == [True, False]
        assert "boom" in res.failed[0].error and np.isnan(res.failed[0].mean)

    def test_strong_collapse(self):
        grid = rescaled_grid([60, 100, 150, 200], [3.0], [0.03], n_trajectories=20, seed=1)
        ratios = [r.mean / r.J**2 for r in run_sweep(grid).rows]
        assert all(abs(v - 8 / 9) < 0.08 for v in ratios)

    def test_regular_top_misses_haar(self):
        grid = rescaled_grid([100], [1.0], [30.0], n_trajectories=20, seed=1)
        row = run_sweep(grid).rows[0]
        assert row.mean < reference_values(SpinQuantum(100))["Haar"]


class TestGrids:
    def test_rescaled_alignment(self):
        grid = rescaled_grid([10, 40], [3.0], [0.5, 2.0])
        assert [round(c.sigma / np.sqrt(c.J), 12) for c in grid] == [0.5, 0.5, 2.0, 2.0]

    def test_raw(self):
        grid = raw_sigma_grid([10, 40], [1.0, 3.0], [0.5], steps=7, n_trajectories=3)
        assert len(grid) == 4 and {c.sigma for c in grid} == {0.5} and grid[0].steps == 7
