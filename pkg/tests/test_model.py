import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optofeedback import ParameterError, SystemParams, check_stability
from optofeedback.dynamics import build_drift
from optofeedback.model import PARAM_KEYS, parse_config, resolve_params, load_config, stability_margin


class TestSystemParams:
    def test_defaults_are_valid(self):
        p = SystemParams()
        assert p.kappa == 1.0 and p.rwa is True

    @pytest.mark.parametrize(
        "field, value",
        [("kappa", 0.0), ("omega_m", -1.0), ("gamma_m", -1e-3), ("g_o", -0.1),
         ("g_p", -0.2), ("eta_f", 0.0), ("eta_f", 1.5), ("n_th", -1.0), ("kappa", math.nan)],
    )
    def test_invariants_rejected(self, field, value):
        with pytest.raises(ParameterError):
            SystemParams(**{field: value})

    def test_frozen_and_replace(self):
        p = SystemParams()
        with pytest.raises(Exception):
            p.g_p = 0.1
        q = p.replace(g_p=0.1)
        assert q.g_p == 0.1 and p.g_p == 0.3

    def test_as_dict_roundtrip(self):
        p = SystemParams(lambda_f=-0.5, n_th=3.0, rwa=False)
        assert tuple(p.as_dict()) == PARAM_KEYS
        assert SystemParams(**p.as_dict()) == p


class TestStability:
    def test_reference_case_stable(self):
        assert check_stability(SystemParams(g_p=0.3, gamma_m=0.0)).stable

    def test_above_threshold_unstable(self):
        assert not check_stability(SystemParams(g_p=0.6, gamma_m=0.0)).stable

    def test_margin_matches_eigenvalues(self):
        p = SystemParams(g_p=0.3, lambda_f=-1.3, gamma_m=0.0)
        rep = check_stability(p)
        assert rep.stable
        expected = np.linalg.eigvals(build_drift(p)).real.min()
        assert rep.margin == pytest.approx(expected, abs=1e-10)
        # frozen reference value
        assert rep.margin == pytest.approx(0.006350832689629152, abs=1e-12)

    def test_invalid_params_rejected_before_stability(self):
        with pytest.raises(ParameterError):
            check_stability(SystemParams(g_p=-1.0))

    def test_closed_form_agrees_with_eigenvalues_on_grid(self, rng):
        # lambda is sampled below the closed-form upper bound (see README notes)
        for _ in range(100):
            g_p = rng.uniform(0.0, 0.7)
            lam = rng.uniform(-(1 + 2 * g_p) - 0.3, (1 + 2 * g_p) * 0.98)
            p = SystemParams(g_p=g_p, lambda_f=lam, gamma_m=0.0)
            if abs(1 - 2 * g_p) < 1e-3 or abs(lam + 1 + 2 * g_p) < 1e-3:
                continue
            assert check_stability(p).stable == (stability_margin(p) > 0)

    def test_margin_continuous_in_lambda(self):
        lams = np.linspace(-1.5, 1.5, 301)
        margins = np.array([check_stability(SystemParams(lambda_f=l)).margin for l in lams])
        step = lams[1] - lams[0]
        assert np.max(np.abs(np.diff(margins))) < 2 * step

    def test_eigen_route_with_damping(self):
        rep = check_stability(SystemParams(g_p=0.3, gamma_m=0.01, eta_f=0.8, lambda_f=-0.5))
        assert rep.stable and rep.margin > 0


@settings(max_examples=40, deadline=None)
@given(g_p=st.floats(0, 0.49), lam=st.floats(-1.9, 1.9), eta=st.floats(0.05, 1.0))
def test_margin_is_min_real_eigenvalue(g_p, lam, eta):
    p = SystemParams(g_p=g_p, lambda_f=lam, eta_f=eta)
    assert check_stability(p).margin == pytest.approx(
        np.linalg.eigvals(build_drift(p)).real.min(), abs=1e-10)


class TestConfig:
    def test_parse(self):
        cfg = parse_config("# comment\ng_p = 0.25\nrwa = false  # inline\n\nn_th=2\n")
        assert cfg == {"g_p": 0.25, "rwa": False, "n_th": 2.0}

    @pytest.mark.parametrize("text", ["gp = 0.3", "g_p 0.3", "g_p = abc", "rwa = maybe"])
    def test_parse_errors(self, text):
        with pytest.raises(ParameterError):
            parse_config(text)

    def test_overrides_win(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("g_p = 0.2\nlambda_f = -0.8\n")
        p = resolve_params(load_config(path), {"g_p": "0.4", "lambda_f": None})
        assert p.g_p == 0.4 and p.lambda_f == -0.8

    def test_resolved_params_validated(self):
        with pytest.raises(ParameterError):
            resolve_params({"eta_f": 0.0})
