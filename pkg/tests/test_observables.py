import numpy as np
import pytest
from scipy.linalg import expm

from spinmon.observables import QfiSummary, mean_qfi, mean_qfi_density, purity, qfi_axis, reference_values
from spinmon.operators import DensityState, SpinQuantum, SpinState, dicke_state, haar_random_state, make_ops, spin_coherent


def check_bounds(summary: QfiSummary, J: float):
    assert summary.mean_qfi == pytest.approx(4 / 3 * (J * (J + 1) - summary.mag_len_sq), abs=1e-9)
    assert 4 / 3 * J - 1e-9 <= summary.mean_qfi <= 4 / 3 * J * (J + 1) + 1e-9


class TestQfiAxis:
    def test_coherent_state(self):
        q = SpinQuantum(20)
        ops = make_ops(q)
        top = spin_coherent(q, 0, 0)
        assert qfi_axis(top, ops, "z") == pytest.approx(0, abs=1e-12)
        assert qfi_axis(top, ops, "x") == pytest.approx(20, abs=1e-10)

    def test_dicke_zero(self):
        q = SpinQuantum(20)
        ops = make_ops(q)
        psi = dicke_state(q, 0)
        assert qfi_axis(psi, ops, "z") == 0
        assert qfi_axis(psi, ops, "x") == pytest.approx(220, abs=1e-10)
        jx = ops.matrix("x")
        assert np.vdot(psi.amplitudes, jx @ jx @ psi.amplitudes).real == pytest.approx(55, abs=1e-10)


class TestMeanQfi:
    def test_scs(self, rng):
        q = SpinQuantum(30)
        s = mean_qfi(spin_coherent(q, *rng.uniform(0, 3, 2)), make_ops(q))
        assert s.mean_qfi == pytest.approx(20, abs=1e-9)
        check_bounds(s, q.J)

    @pytest.mark.parametrize("m", [-5, -2, 0, 1, 4, 5])
    def test_dicke(self, m):
        q = SpinQuantum(10)
        assert mean_qfi(dicke_state(q, m), make_ops(q)).mean_qfi == pytest.approx(4 / 3 * (30 - m * m), abs=1e-12)

    def test_equals_axis_average(self, rng):
        for N in (1, 6, 25):
            q = SpinQuantum(N)
            ops = make_ops(q)
            for _ in range(10):
                psi = haar_random_state(q, rng)
                s = mean_qfi(psi, ops, per_axis=True)
                assert s.mean_qfi == pytest.approx(np.mean(s.per_axis), abs=1e-9)
                check_bounds(s, q.J)

    def test_rotation_invariance(self, rng):
        q = SpinQuantum(14)
        ops = make_ops(q)
        jx, jy, jz = (ops.matrix(a) for a in "xyz")
        for _ in range(20):
            psi = haar_random_state(q, rng)
            f0 = mean_qfi(psi, ops).mean_qfi
            for _ in range(20):
                n = rng.standard_normal(3)
                n /= np.linalg.norm(n)
                u = expm(-1j * rng.uniform(0, 2 * np.pi) * (n[0] * jx + n[1] * jy + n[2] * jz))
                assert abs(mean_qfi(SpinState(u @ psi.amplitudes, q), ops).mean_qfi - f0) <= 1e-8

    def test_haar_average(self, rng):
        q = SpinQuantum(10)
        ops = make_ops(q)
        vals = np.array([mean_qfi(haar_random_state(q, rng), ops).mean_qfi for _ in range(100_000)])
        se = vals.std(ddof=1) / np.sqrt(vals.size)
        assert abs(vals.mean() - 4 / 3 * (25 + 2.5)) < 3 * se

    def test_dicke_ensemble_average(self):
        q = SpinQuantum(40)
        ops = make_ops(q)
        avg = np.mean([mean_qfi(dicke_state(q, m), ops).mean_qfi for m in q.m_values])
        assert avg == pytest.approx(8 / 9 * (q.J**2 + q.J), abs=1e-9)


class TestDensityDiagnostic:
    def test_maximally_mixed(self):
        q = SpinQuantum(12)
        s = mean_qfi_density(DensityState.maximally_mixed(q), make_ops(q))
        assert s.mag_len_sq == pytest.approx(0, abs=1e-14)
        assert s.mean_qfi == pytest.approx(4 / 3 * q.J * (q.J + 1))

    def test_pure_matches(self, rng):
        q = SpinQuantum(9)
        ops = make_ops(q)
        psi = haar_random_state(q, rng)
        assert mean_qfi_density(psi.to_density(), ops).mean_qfi == pytest.approx(mean_qfi(psi, ops).mean_qfi, abs=1e-10)

    def test_cat_mixture(self):
        q = SpinQuantum(8)
        rho = 0.5 * (dicke_state(q, 4).to_density().matrix + dicke_state(q, -4).to_density().matrix)
        assert mean_qfi_density(DensityState(rho, q), make_ops(q)).mag_len_sq == pytest.approx(0, abs=1e-14)


class TestPurity:
    def test_values(self):
        q = SpinQuantum(10)
        assert purity(DensityState.maximally_mixed(q)) == pytest.approx(1 / 11, abs=1e-12)
        assert purity(dicke_state(q, 2).to_density()) == pytest.approx(1.0, abs=1e-12)
        half = 0.5 * (dicke_state(q, 2).to_density().matrix + dicke_state(q, -1).to_density().matrix)
        assert purity(DensityState(half, q)) == pytest.approx(0.5, abs=1e-12)


class TestReferenceValues:
    def test_table_at_300(self):
        ref = reference_values(SpinQuantum(300))
        assert ref["SCS"] == pytest.approx(200, abs=1e-9)
        assert ref["Haar"] == pytest.approx(30100, abs=1e-9)
        assert ref["Dicke_avg"] == pytest.approx(20133.333333333333, abs=1e-9)

    def test_squeezed(self):
        q = SpinQuantum(40)
        assert reference_values(q, 0.0)["squeezed"] == reference_values(q)["SCS"]
        assert reference_values(q, 1.0)["squeezed"] == pytest.approx(4 / 3 * 20 * np.cosh(1.0))

    def test_rejects_non_finite_r(self):
        with pytest.raises(ValueError):
            reference_values(SpinQuantum(4), np.inf)
