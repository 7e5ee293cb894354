import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optofeedback import SystemParams
from optofeedback.dynamics import extract_mechanical, steady_cm
from optofeedback.effective import (
    analytic_measures,
    chi_st_sqrt_lossless,
    effective_params,
    locked_limits,
    locked_squeezing,
    tms_vacuum_cm,
    zeta_en_no_feedback,
)
from optofeedback.errors import DomainError
from optofeedback.measures import log_negativity, steering


class TestEffectiveParams:
    def test_locked(self):
        m = effective_params(SystemParams(g_p=0.3, lambda_f=-1.2))
        assert m.G_eff == pytest.approx(0.0, abs=1e-15)
        assert m.r == pytest.approx(math.atanh(0.3 / 0.7), abs=1e-12)
        assert m.r == pytest.approx(0.458145, abs=1e-6)

    def test_no_source(self):
        m = effective_params(SystemParams(g_p=0.0, lambda_f=0.0, g_o=0.05))
        assert m.G_eff == 0.0 and m.r == 0.0
        assert m.gamma_eff == pytest.approx(0.05**2)

    def test_gamma_eff_value(self):
        m = effective_params(SystemParams(g_o=0.05, g_p=0.3))
        assert m.gamma_eff == pytest.approx(0.0025 / (0.4 * 1.6))

    def test_ratios_reported(self):
        m = effective_params(SystemParams(omega_m=20, g_o=0.1))
        assert (m.omega_over_kappa, m.g_o_over_kappa) == (20.0, 0.1)

    @pytest.mark.parametrize("kw", [dict(g_p=0.5), dict(g_p=0.6), dict(g_p=0.3, lambda_f=-1.7), dict(g_o=0.0)])
    def test_domain(self, kw):
        with pytest.raises(DomainError):
            effective_params(SystemParams(**kw))


class TestLimits:
    def test_no_feedback_lossless(self):
        for g_p in (0.0, 0.2, 0.45):
            z, chi = analytic_measures(SystemParams(g_p=g_p, gamma_m=0.0))
            assert z == pytest.approx(zeta_en_no_feedback(1.0, g_p))
            assert z == pytest.approx(1 / (2 * (2 * g_p + 1)))
            assert chi == pytest.approx(1.0)

    def test_locked_lossless(self):
        g_p = 0.3
        z, chi = analytic_measures(SystemParams(g_p=g_p, lambda_f=-4 * g_p, gamma_m=0.0))
        z_lim, sqrt_chi_lim = locked_limits(1.0, g_p)
        assert z == pytest.approx((1 - 2 * g_p) / 2)
        assert z == pytest.approx(z_lim)
        assert math.sqrt(chi) == pytest.approx(1 + 2 * g_p**2 / (1 - 2 * g_p))
        assert math.sqrt(chi) == pytest.approx(sqrt_chi_lim)

    def test_lossless_chi_formula(self):
        for lam in (-1.0, -0.3, 0.0, 0.7):
            _, chi = analytic_measures(SystemParams(g_p=0.25, lambda_f=lam, gamma_m=0.0))
            assert math.sqrt(chi) == pytest.approx(chi_st_sqrt_lossless(1.0, 0.25, lam), rel=1e-12)

    def test_chi_guard(self):
        with pytest.raises(DomainError):
            chi_st_sqrt_lossless(1.0, 0.3, -2.0)

    def test_locked_squeezing(self):
        assert locked_squeezing(1.0, 0.3) == pytest.approx(math.atanh(3 / 7))

    def test_divergence_towards_threshold(self):
        gs = np.linspace(0.3, 0.499, 30)
        zs, chis = zip(*(analytic_measures(SystemParams(g_p=g, lambda_f=-4 * g, gamma_m=0.0)) for g in gs))
        assert np.all(np.diff(zs) < 0) and np.all(np.diff(chis) > 0)
        assert zs[-1] < 2e-3


class TestTms:
    def test_zero(self):
        np.testing.assert_array_equal(tms_vacuum_cm(0.0), np.eye(4) / 2)

    def test_entries(self):
        r = math.atanh(3 / 7)
        s = tms_vacuum_cm(r)
        assert s[0, 0] == pytest.approx(math.cosh(2 * r) / 2)
        assert s[0, 0] == pytest.approx(0.725, abs=1e-3)
        assert s[0, 2] == pytest.approx(math.sinh(2 * r) / 2)
        assert s[1, 3] == pytest.approx(-math.sinh(2 * r) / 2)


@settings(max_examples=25, deadline=None)
@given(g_p=st.floats(0.0, 0.45), lam=st.floats(-1.4, 1.5))
def test_oracle_agrees_with_numerics(g_p, lam):
    p = SystemParams(g_p=g_p, lambda_f=lam, gamma_m=1e-5, g_o=0.05)
    if lam <= -(1 + 2 * g_p) + 0.1:
        return
    s = extract_mechanical(steady_cm(p))
    m = effective_params(p)
    assert log_negativity(s)[0] == pytest.approx(m.zeta_en_pred, abs=5e-3)
    assert math.sqrt(steering(s).chi_st_1to2) == pytest.approx(math.sqrt(m.chi_st_pred), abs=5e-3)
