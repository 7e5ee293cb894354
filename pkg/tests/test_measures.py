import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optofeedback import SystemParams
from optofeedback.dynamics import extract_mechanical, steady_cm
from optofeedback.effective import tms_vacuum_cm
from optofeedback.errors import NonPhysicalError
from optofeedback.measures import (
    TSIRELSON,
    BellConfig,
    bell_chsh,
    bell_seeds,
    chsh_batch,
    compute_measures,
    log_negativity,
    maximize_bell,
    parity,
    purity,
    steering,
    wigner,
)

VAC = np.eye(4) / 2


def thermal(n):
    return (n + 0.5) * np.eye(4)


def local_rotation(t1, t2):
    def rot(t):
        c, s = math.cos(t), math.sin(t)
        return np.array([[c, -s], [s, c]])
    r = np.zeros((4, 4))
    r[:2, :2], r[2:, 2:] = rot(t1), rot(t2)
    return r


class TestLogNegativity:
    def test_vacuum(self):
        assert log_negativity(VAC) == pytest.approx((0.5, 0.0))

    def test_tms(self):
        zeta, en = log_negativity(tms_vacuum_cm(0.5))
        assert en == pytest.approx(1.0, abs=1e-12)
        assert zeta == pytest.approx(math.exp(-1) / 2, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.0, 3.0))
    def test_tms_is_twice_r(self, r):
        assert log_negativity(tms_vacuum_cm(r))[1] == pytest.approx(2 * r, abs=1e-9 * math.exp(4 * r))

    def test_no_feedback_steady_state(self):
        s = extract_mechanical(steady_cm(SystemParams(g_p=0.3, gamma_m=1e-8)))
        assert log_negativity(s)[1] == pytest.approx(-math.log(2 * 0.3125), abs=1e-5)

    def test_rejects_non_physical(self):
        bad = np.diag([0.1, 0.1, 0.1, 0.1])
        bad[0, 2] = bad[2, 0] = 0.3
        with pytest.raises(NonPhysicalError):
            log_negativity(bad)

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            log_negativity(np.eye(3))


class TestSteering:
    def test_vacuum(self):
        s = steering(VAC)
        assert s.chi_st_1to2 == pytest.approx(1.0) and s.St_1to2 == 0.0

    def test_no_feedback_zero(self):
        s = steering(extract_mechanical(steady_cm(SystemParams(g_p=0.3, gamma_m=0.0))))
        assert s.chi_st_1to2 == pytest.approx(1.0, abs=1e-9)
        assert s.St_1to2 == 0.0 and s.St_2to1 == 0.0

    def test_locked_feedback(self):
        # det-ratio scale: chi = (1 + 2 g_p^2 / (kappa (kappa - 2 g_p)))^2 = 1.45^2
        s = steering(extract_mechanical(steady_cm(SystemParams(g_p=0.3, lambda_f=-1.2, gamma_m=1e-8))))
        assert s.chi_st_1to2 == pytest.approx(1.45**2, abs=2e-3)
        assert s.St_1to2 == pytest.approx(math.log(1.45), abs=1e-3)

    def test_tms_value(self):
        r = 0.7
        s = steering(tms_vacuum_cm(r))
        assert s.St_1to2 == pytest.approx(s.St_2to1)
        assert s.chi_st_1to2 == pytest.approx(math.cosh(2 * r) ** 2, rel=1e-12)

    def test_asymmetric_state(self):
        s = tms_vacuum_cm(0.5)
        s[:2, :2] += 0.3 * np.eye(2)   # add noise on mode 1 only
        st_ = steering(s)
        assert st_.St_1to2 != pytest.approx(st_.St_2to1)


class TestPurity:
    def test_vacuum_and_tms(self):
        assert purity(VAC) == pytest.approx(1.0)
        assert purity(tms_vacuum_cm(1.3)) == pytest.approx(1.0, abs=1e-12)

    def test_thermal(self):
        assert purity(thermal(1.0)) == pytest.approx(1 / 9)

    def test_singular(self):
        with pytest.raises(NonPhysicalError):
            purity(np.zeros((4, 4)))


class TestWigner:
    def test_vacuum_origin(self):
        assert wigner(VAC, np.zeros(4)) == pytest.approx(4 / math.pi**2)
        assert parity(VAC, np.zeros(4)) == pytest.approx(1.0)

    def test_vectorized(self):
        pts = np.random.default_rng(1).normal(size=(5, 3, 4))
        w = wigner(thermal(0.4), pts)
        assert w.shape == (5, 3)
        assert w[2, 1] == pytest.approx(wigner(thermal(0.4), pts[2, 1]))

    def test_normalization(self):
        s = tms_vacuum_cm(0.4)
        s[:2, :2] += 0.2 * np.eye(2)
        # integrate in whitened coordinates on a box of +-6 standard deviations
        evals, evecs = np.linalg.eigh(s)
        u = np.linspace(-6, 6, 31)
        grid = np.stack(np.meshgrid(u, u, u, u, indexing="ij"), axis=-1)
        mu = grid @ (evecs * np.sqrt(evals)).T
        jac = np.prod(np.sqrt(evals)) * (u[1] - u[0]) ** 4
        assert wigner(s, mu).sum() * jac == pytest.approx(1.0, abs=1e-3)


class TestBell:
    def test_vacuum_zero_displacement(self):
        assert bell_chsh(VAC, 0, 0, 0, 0) == pytest.approx(2.0)

    @settings(max_examples=25, deadline=None)
    @given(st.complex_numbers(max_magnitude=2), st.complex_numbers(max_magnitude=2), st.floats(0, 1.5))
    def test_equal_pairs_identity(self, b1, b2, r):
        s = tms_vacuum_cm(r)
        val = bell_chsh(s, b1, b2, b1, b2)
        mu = np.array([b1.real, b1.imag, b2.real, b2.imag])
        assert val == pytest.approx(2 * parity(s, mu), abs=1e-12)
        assert val <= 2 + 1e-12

    def test_batch_matches_scalar(self):
        s = tms_vacuum_cm(0.6)
        pts = np.random.default_rng(3).uniform(-1, 1, size=(10, 8))
        vals = chsh_batch(s, pts)
        for x, v in zip(pts, vals):
            b = [complex(x[2 * k], x[2 * k + 1]) for k in range(4)]
            assert v == pytest.approx(bell_chsh(s, *b), abs=1e-12)

    def test_vacuum_max(self):
        res = maximize_bell(VAC)
        assert res.B_max == pytest.approx(2.0, abs=1e-6)
        # the maximum is attained at zero displacement (and along flat directions)
        assert bell_chsh(VAC, 0, 0, 0, 0) == pytest.approx(res.B_max, abs=1e-6)

    def test_thermal_below_two(self):
        assert maximize_bell(thermal(1.0)).B_max < 2.0

    @pytest.mark.parametrize("r, expected", [(0.3, 2.133522480181408), (1.0, 2.307542245602214)])
    def test_tms_violation(self, r, expected):
        # expected values come from 60 independent scipy Nelder-Mead starts
        res = maximize_bell(tms_vacuum_cm(r))
        assert 2.0 < res.B_max < TSIRELSON
        assert res.B_max == pytest.approx(expected, abs=1e-6)
        assert res.n_converged >= 1

    def test_matches_coarse_grid(self):
        s = tms_vacuum_cm(0.3)
        u = np.linspace(-0.6, 0.6, 5)
        grid = np.stack(np.meshgrid(*[u] * 8, indexing="ij"), axis=-1).reshape(-1, 8)
        assert maximize_bell(s).B_max >= np.max(np.abs(chsh_batch(s, grid))) - 1e-12

    def test_locked_steady_state_violates(self):
        s = extract_mechanical(steady_cm(SystemParams(g_p=0.49, lambda_f=-1.96, gamma_m=1e-8)))
        assert maximize_bell(s, BellConfig(n_starts=16)).B_max > 2.0

    def test_seeds_deterministic(self):
        cfg = BellConfig(n_starts=24, seed=7)
        s = tms_vacuum_cm(0.5)
        np.testing.assert_array_equal(bell_seeds(s, cfg), bell_seeds(s, cfg))
        assert bell_seeds(s, cfg).shape == (24, 8)

    def test_parallel_starts_identical(self):
        s = tms_vacuum_cm(0.8)
        a = maximize_bell(s, BellConfig(n_starts=20, workers=1))
        b = maximize_bell(s, BellConfig(n_starts=20, workers=4))
        assert a.B_max == b.B_max
        np.testing.assert_array_equal(a.argmax, b.argmax)

    @pytest.mark.parametrize("kw", [dict(n_starts=0), dict(tol=0.0), dict(max_iter=0), dict(workers=0)])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            BellConfig(**kw)


class TestMeasureSet:
    def test_rotation_invariance(self):
        s = extract_mechanical(steady_cm(SystemParams(g_p=0.3, lambda_f=-0.8, n_th=1.0)))
        r = local_rotation(0.4, -1.1)
        a, b = compute_measures(s), compute_measures(r @ s @ r.T)
        for f in ("En", "St_1to2", "St_2to1", "P_m", "zeta_en"):
            assert getattr(a, f) == pytest.approx(getattr(b, f), abs=1e-10)

    def test_frozen_reference_values(self):
        # frozen from scipy.linalg.solve_continuous_lyapunov on the same model
        cases = [
            (dict(g_p=0.3, lambda_f=-1.2), 0.9150736972161665, 0.37058176536258997, 0.9992704604802611),
            (dict(g_p=0.3, lambda_f=-1.2, n_th=2), 0.9069977663651704, 0.3634447308506119, 0.9899463923112279),
            (dict(g_p=0.49, lambda_f=-1.96), 3.8979166000964387, 3.205175135218642, 0.9862728510972399),
            (dict(g_p=0.1, lambda_f=-0.4, eta_f=0.7), 0.19636172803137475, 0.00857498380913626, 0.9738859905419675),
        ]
        for kw, en, st_, pm in cases:
            m = compute_measures(extract_mechanical(steady_cm(SystemParams(**kw))))
            assert (m.En, m.St, m.P_m) == pytest.approx((en, st_, pm), abs=1e-8)

    def test_csv_row_without_bell(self):
        m = compute_measures(VAC)
        assert math.isnan(m.B_max)
        fields = m.csv_row().split(",")
        assert len(fields) == len(m.CSV_FIELDS)
        assert fields[m.CSV_FIELDS.index("B_max")] == ""
