"""Oracle suite behind ``optofeedback verify``.

Each check draws its random inputs from a generator seeded by the run
seed, so different seeds exercise different points; the tolerances are
set so the verdicts do not depend on the seed.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dynamics, effective, measures
from .errors import OptoFeedbackError
from .model import SystemParams, check_stability

FIG2 = SystemParams(omega_m=10.0, g_p=0.3, g_o=0.05, gamma_m=1e-5, n_th=0.0, lambda_f=0.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _random_stable(rng, g_p_max=0.45, cushion=0.1, **fixed):
    g_p = rng.uniform(0.0, g_p_max)
    lo = -(1 + 2 * g_p) + cushion
    lam = rng.uniform(lo, 1 + 2 * g_p)
    return SystemParams(g_p=g_p, lambda_f=lam, **fixed)


def check_stability_closed_form(rng):
    bad = 0
    for _ in range(100):
        gp = rng.uniform(0.0, 0.7)
        lf = rng.uniform(-2.5, 1 + 2 * gp)
        p = SystemParams(g_p=gp, lambda_f=lf, gamma_m=0.0, eta_f=1.0)
        closed = check_stability(p).stable
        eig = dynamics_margin(p) > 0
        bad += closed != eig
    return bad == 0, f"{bad} disagreements on 100 points"


def dynamics_margin(p):
    return float(np.min(np.linalg.eigvals(dynamics.build_drift(p.replace(rwa=True))).real))


def check_drift_period_average(rng):
    p = FIG2.replace(rwa=False, g_o=rng.uniform(0.01, 0.2))
    period = math.pi / p.omega_m
    ts = np.arange(64) * period / 64
    avg = np.mean([dynamics.build_drift(p, t) for t in ts], axis=0)
    err = float(np.max(np.abs(avg - dynamics.build_drift(p.replace(rwa=True)))))
    return err < 1e-12, f"max deviation {err:.2e}"


def check_lyapunov_ode(rng):
    worst = 0.0
    for _ in range(3):
        p = _random_stable(rng, g_o=rng.uniform(0.05, 0.2), gamma_m=rng.uniform(1e-5, 1e-3),
                           n_th=rng.uniform(0, 2), eta_f=rng.uniform(0.5, 1.0))
        ss = dynamics.steady_cm(p)
        margin = check_stability(p).margin
        t_end = 25.0 / margin
        traj = dynamics.evolve_cm(p, t_end=t_end, sample_every=10**9)
        worst = max(worst, float(np.max(np.abs(traj.sigmas[-1] - ss))))
    return worst < 1e-6, f"max entry deviation {worst:.2e}"


def check_physicality(rng):
    p = _random_stable(rng, g_o=0.1, gamma_m=1e-3, n_th=rng.uniform(0, 2), rwa=False)
    traj = dynamics.evolve_cm(p, t_end=40.0, sample_every=5)
    worst = min(dynamics.uncertainty_min_eig(s) for s in traj.sigmas)
    ss = dynamics.steady_cm(p.replace(rwa=True))
    worst = min(worst, dynamics.uncertainty_min_eig(ss))
    return worst >= -1e-9, f"min eigenvalue of sigma + i Omega/2 = {worst:.2e}"


def check_dt_halving(rng):
    p = _random_stable(rng, g_o=0.1, rwa=False)
    a = dynamics.evolve_cm(p, t_end=5.0, sample_every=10**9).sigmas[-1]
    b = dynamics.evolve_cm(p, t_end=5.0, dt=dynamics.max_dt(p) / 2, sample_every=10**9).sigmas[-1]
    err = float(np.max(np.abs(a - b)))
    return err < 1e-8, f"dt vs dt/2 deviation {err:.2e}"


def check_eta_independence(rng):
    p = _random_stable(rng).replace(lambda_f=0.0)
    a = dynamics.steady_cm(p.replace(eta_f=1.0))
    b = dynamics.steady_cm(p.replace(eta_f=rng.uniform(0.1, 0.9)))
    err = float(np.max(np.abs(a - b)))
    return err < 1e-12, f"deviation {err:.2e}"


def check_tms_negativity(rng):
    worst = 0.0
    for r in (0.1, 0.5, 1.0, rng.uniform(0.0, 2.0)):
        _, en = measures.log_negativity(effective.tms_vacuum_cm(r))
        worst = max(worst, abs(en - 2 * r))
    return worst < 1e-9, f"max |En - 2r| = {worst:.2e}"


def check_purity_and_symmetry(rng):
    worst_sym = 0.0
    worst_inv = 0.0
    for _ in range(5):
        p = _random_stable(rng)
        sm = dynamics.extract_mechanical(dynamics.steady_cm(p))
        st = measures.steering(sm)
        worst_sym = max(worst_sym, abs(st.St_1to2 - st.St_2to1))
        rot = np.kron(np.eye(2), _rotation(rng.uniform(0, 2 * math.pi)))
        rotated = rot @ sm @ rot.T
        a = measures.compute_measures(sm)
        b = measures.compute_measures(rotated)
        worst_inv = max(worst_inv, abs(a.En - b.En), abs(a.St - b.St), abs(a.P_m - b.P_m))
    ok = worst_sym < 1e-9 and worst_inv < 1e-9
    return ok, f"|St12 - St21| = {worst_sym:.1e}, rotation change = {worst_inv:.1e}"


def check_wigner_normalization(rng):
    sm = effective.tms_vacuum_cm(rng.uniform(0.0, 0.6))
    sm = sm + np.diag(rng.uniform(0.0, 0.5, 4))
    # integrate in whitened coordinates mu = L z, with sigma_mu = sigma/2
    chol = np.linalg.cholesky(sm / 2)
    z = np.linspace(-6, 6, 41)
    h = z[1] - z[0]
    grid = np.stack(np.meshgrid(z, z, z, z, indexing="ij"), axis=-1).reshape(-1, 4)
    vals = measures.wigner(sm, grid @ chol.T)
    total = float(vals.sum() * h**4 * np.linalg.det(chol))
    return abs(total - 1) < 1e-3, f"integral = {total:.6f}"


def check_bell_bounds(rng):
    cfg = measures.BellConfig(seed=int(rng.integers(2**31)))
    vac = measures.maximize_bell(np.eye(4) / 2, cfg).B_max
    worst = 0.0
    dominated = True
    for r in (0.3, rng.uniform(0.2, 1.5)):
        sm = effective.tms_vacuum_cm(r)
        res = measures.maximize_bell(sm, cfg)
        worst = max(worst, res.B_max)
        for _ in range(5):
            b = rng.normal(scale=0.2, size=4) + 1j * rng.normal(scale=0.2, size=4)
            dominated &= res.B_max >= abs(measures.bell_chsh(sm, *b)) - 1e-12
    ok = abs(vac - 2) < 1e-6 and worst <= measures.TSIRELSON + 1e-6 and worst > 2 and dominated
    return ok, f"vacuum B_max = {vac:.9f}, max B_max = {worst:.6f}, dominates = {dominated}"


def check_effective_oracle(rng):
    worst_z = 0.0
    worst_c = 0.0
    for _ in range(10):
        p = _random_stable(rng, gamma_m=1e-5, g_o=0.05, n_th=0.0)
        sm = dynamics.extract_mechanical(dynamics.steady_cm(p))
        zeta, _ = measures.log_negativity(sm)
        chi = measures.steering(sm).chi_st_1to2
        model = effective.effective_params(p)
        worst_z = max(worst_z, abs(zeta - model.zeta_en_pred))
        worst_c = max(worst_c, abs(math.sqrt(chi) - math.sqrt(model.chi_st_pred)))
    ok = worst_z < 5e-3 and worst_c < 5e-3
    return ok, f"max |d zeta| = {worst_z:.2e}, max |d sqrt(chi)| = {worst_c:.2e}"


def check_stationarity(rng):
    misses = []
    step = 0.05
    for gp in (0.1, 0.3, 0.45):
        offset = rng.uniform(0, step)
        lams = np.arange(-(1 + 2 * gp) + 0.02 + offset, 0.5, step)
        ens, sts = [], []
        for lf in lams:
            sm = dynamics.extract_mechanical(dynamics.steady_cm(FIG2.replace(g_p=gp, lambda_f=lf)))
            m = measures.compute_measures(sm)
            ens.append(m.En)
            sts.append(m.St)
        for vals in (ens, sts):
            peak = lams[int(np.argmax(vals))]
            if abs(peak + 4 * gp) > step + 1e-9:
                misses.append((gp, round(float(peak), 3)))
    return not misses, f"peaks off -4 g_p: {misses}" if misses else "all peaks within one step"


def check_tms_limit(rng):
    worst = 0.0
    for gp in (0.1, 0.3, 0.45, rng.uniform(0.05, 0.45)):
        p = FIG2.replace(g_p=gp, lambda_f=-4 * gp, gamma_m=1e-8)
        sm = dynamics.extract_mechanical(dynamics.steady_cm(p))
        ref = effective.tms_vacuum_cm(effective.locked_squeezing(1.0, gp))
        worst = max(worst, float(np.linalg.norm(sm - ref)))
    return worst < 1e-2, f"max Frobenius distance {worst:.2e}"


def check_divergence_trend(rng):
    gps = np.linspace(0.3, 0.499, 12)
    z, c = [], []
    for gp in gps:
        m = effective.effective_params(SystemParams(g_p=gp, lambda_f=-4 * gp, gamma_m=0.0))
        z.append(m.zeta_en_pred)
        c.append(m.chi_st_pred)
    ok = bool(np.all(np.diff(z) < 0) and np.all(np.diff(c) > 0) and z[-1] < 0.01)
    return ok, f"zeta -> {z[-1]:.2e}, chi -> {c[-1]:.3g}"


def check_hierarchy(rng):
    cfg = measures.BellConfig(seed=int(rng.integers(2**31)), n_starts=32)
    violations = 0
    n_bell = 0
    for lf in np.linspace(-1.55, 0.5, 10):
        sm = dynamics.extract_mechanical(dynamics.steady_cm(FIG2.replace(lambda_f=lf)))
        m = measures.compute_measures(sm, cfg)
        if m.B_max > 2:
            n_bell += 1
            violations += m.St <= 0
        if m.St > 0:
            violations += m.En <= 0
        violations += not (0 <= m.B_max <= measures.TSIRELSON + 1e-6)
    return violations == 0 and n_bell > 0, f"{violations} violations, {n_bell} Bell-violating points"


def check_non_rwa_deficit(rng):
    rwa = measures.log_negativity(dynamics.extract_mechanical(dynamics.steady_cm(FIG2)))[1]
    state = dynamics.evolve_to_steady(FIG2.replace(rwa=False))
    ens = [measures.log_negativity(dynamics.extract_mechanical(s))[1] for s in state.sigmas]
    deficit = rwa - float(np.mean(ens))
    return 0 < deficit < 0.1, f"RWA En - non-RWA En = {deficit:.4f}"


CHECKS: list[tuple[str, Callable]] = [
    ("stability: closed form vs eigenvalues", check_stability_closed_form),
    ("drift: period average equals RWA", check_drift_period_average),
    ("dynamics: Lyapunov vs long-time ODE", check_lyapunov_ode),
    ("dynamics: uncertainty relation", check_physicality),
    ("dynamics: dt halving", check_dt_halving),
    ("dynamics: eta_f irrelevant at lambda_f=0", check_eta_independence),
    ("dynamics: anti-RWA terms lower En", check_non_rwa_deficit),
    ("measures: En(TMS) = 2r", check_tms_negativity),
    ("measures: mode symmetry and rotation invariance", check_purity_and_symmetry),
    ("measures: Wigner normalization", check_wigner_normalization),
    ("measures: Bell vacuum / Tsirelson / dominance", check_bell_bounds),
    ("effective: analytic vs numeric", check_effective_oracle),
    ("effective: peaks at lambda_f = -4 g_p", check_stationarity),
    ("effective: TMS steady state", check_tms_limit),
    ("effective: threshold divergence", check_divergence_trend),
    ("measures: Bell > steering > entanglement", check_hierarchy),
]


def run_verify(seed: int = 0, checks=None) -> list[CheckResult]:
    """Run every oracle check; exceptions count as failures."""
    results = []
    for i, (name, fn) in enumerate(checks or CHECKS):
        rng = np.random.default_rng([seed, i])
        t0 = time.perf_counter()
        try:
            passed, detail = fn(rng)
        except (OptoFeedbackError, np.linalg.LinAlgError, ArithmeticError) as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail, time.perf_counter() - t0))
    return results


def format_report(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  verdict  time    detail"]
    for r in results:
        verdict = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}  {verdict:<7}  {r.seconds:6.2f}s {r.detail}")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return "\n".join(lines)
