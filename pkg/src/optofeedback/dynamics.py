"""Drift and noise matrices, covariance time evolution and steady states.

Quadrature ordering is ``(X_b1, Y_b1, X_b2, Y_b2, X_c1, Y_c1, X_c2, Y_c2)``
with ``X = (o + o^dag)/sqrt(2)``, so the vacuum variance is 1/2.  The
covariance matrix obeys

    d sigma / dt = -M(t) sigma - sigma M(t)^T + N.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import DivergenceError, ParameterError, SingularSystemError, UnstableSystemError
from .model import SystemParams, check_stability

SIGMA_Z = np.diag([1.0, -1.0])
DEFAULT_BOUND = 1e6
# RK4 step relative to the fastest drift rate; keeps dt-halving changes < 1e-8
RATE_STEP = 0.025


def drift_components(params: SystemParams):
    """Split the drift as ``M(t) = m0 + cos(2 w t) mc + sin(2 w t) ms``.

    The blocks follow from the Langevin equations of the linearized
    Hamiltonian; ``m0`` alone is the RWA drift (the period average of the
    full one).  ``mc`` and ``ms`` are zero when ``params.rwa`` is True.
    """
    g = params.g_o
    a = params.kappa + params.lambda_f / 2
    b = 2 * params.g_p + params.lambda_f / 2
    m0 = np.zeros((8, 8))
    m0[:4, :4] = params.gamma_m / 2 * np.eye(4)
    m0[4:, 4:] = np.block([[a * np.eye(2), -b * SIGMA_Z], [-b * SIGMA_Z, a * np.eye(2)]])
    m0[:4, 4:] = -g * np.eye(4)
    m0[4:, :4] = g * np.eye(4)
    mc = np.zeros((8, 8))
    ms = np.zeros((8, 8))
    if not params.rwa:
        # counter-rotating terms c_j b_j e^{-2iwt} + h.c. in quadrature form
        cos_part = np.kron(np.eye(2), g * SIGMA_Z)
        sin_part = np.kron(np.eye(2), g * np.array([[0.0, 1.0], [1.0, 0.0]]))
        mc[:4, 4:] = cos_part
        mc[4:, :4] = cos_part
        ms[:4, 4:] = sin_part
        ms[4:, :4] = sin_part
    return m0, mc, ms


def build_drift(params: SystemParams, t: float = 0.0) -> np.ndarray:
    """Drift matrix ``M_d(t)``; t-independent when ``params.rwa`` is True."""
    m0, mc, ms = drift_components(params)
    if params.rwa:
        return m0
    phase = 2 * params.omega_m * t
    return m0 + math.cos(phase) * mc + math.sin(phase) * ms


def build_noise(params: SystemParams) -> np.ndarray:
    """Noise correlation matrix including the feedback-induced terms."""
    k, lf = params.kappa, params.lambda_f
    extra = lf / 2 + lf**2 / (8 * k * params.eta_f)
    noise = np.zeros((8, 8))
    noise[:4, :4] = params.gamma_m / 2 * (2 * params.n_th + 1) * np.eye(4)
    noise[4:, 4:] = np.block(
        [[(k + extra) * np.eye(2), -extra * SIGMA_Z], [-extra * SIGMA_Z, (k + extra) * np.eye(2)]]
    )
    return noise


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def uncertainty_min_eig(sigma: np.ndarray) -> float:
    """Smallest eigenvalue of ``sigma + i Omega / 2``; >= 0 for physical states."""
    sigma = np.asarray(sigma, dtype=float)
    omega = symplectic_form(sigma.shape[0] // 2)
    return float(np.linalg.eigvalsh(sigma + 0.5j * omega).min())


def vacuum_thermal_cm(params: SystemParams) -> np.ndarray:
    """Thermal mechanics and vacuum cavities: ``diag((n_th+1/2) I_4, I_4/2)``."""
    return np.diag([params.n_th + 0.5] * 4 + [0.5] * 4)


def extract_mechanical(sigma: np.ndarray) -> np.ndarray:
    """Leading 4x4 block (the two mechanical modes)."""
    sigma = np.asarray(sigma)
    if sigma.shape != (8, 8):
        raise ParameterError(f"expected an 8x8 covariance matrix, got shape {sigma.shape}")
    return sigma[:4, :4].copy()


def extract_cavity(sigma: np.ndarray) -> np.ndarray:
    """Trailing 4x4 block (the two intracavity fields)."""
    sigma = np.asarray(sigma)
    if sigma.shape != (8, 8):
        raise ParameterError(f"expected an 8x8 covariance matrix, got shape {sigma.shape}")
    return sigma[4:, 4:].copy()


def max_dt(params: SystemParams) -> float:
    """Default step: ``RATE_STEP`` over the drift spectral radius, and at most
    ``pi / (40 omega_m)`` without the RWA (user steps may go up to twice that)."""
    m0, mc, ms = drift_components(params)
    radius = float(np.max(np.abs(np.linalg.eigvals(m0)))) + float(np.abs(mc).max() + np.abs(ms).max())
    dt = RATE_STEP / max(radius, 1e-12)
    if not params.rwa:
        dt = min(dt, math.pi / (40 * params.omega_m))
    return dt


@dataclass
class Trajectory:
    """Sampled covariance matrices of one integration run."""

    times: np.ndarray
    sigmas: np.ndarray
    average: np.ndarray
    params: SystemParams
    dt: float


def _validate_sigma0(sigma0):
    sigma0 = np.asarray(sigma0, dtype=float)
    if sigma0.shape != (8, 8):
        raise ParameterError("sigma0 must be 8x8")
    if not np.allclose(sigma0, sigma0.T, atol=1e-12):
        raise ParameterError("sigma0 must be symmetric")
    if uncertainty_min_eig(sigma0) < -1e-9:
        raise ParameterError("sigma0 violates the uncertainty relation")
    return 0.5 * (sigma0 + sigma0.T)


def evolve_cm(
    params: SystemParams,
    sigma0: np.ndarray | None = None,
    t_end: float = 1.0,
    dt: float | None = None,
    sample_every: int | None = None,
    bound: float = DEFAULT_BOUND,
    t0: float = 0.0,
) -> Trajectory:
    """Fixed-step RK4 integration of the covariance equation from ``t0``.

    The step actually used is ``(t_end - t0) / ceil((t_end - t0) / dt)`` so
    the trajectory ends exactly at ``t_end``.  Samples are taken at the
    start, every ``sample_every`` steps, and at the end.

    Raises
    ------
    DivergenceError
        If an entry exceeds ``bound`` (the system is unstable).
    """
    sigma0 = vacuum_thermal_cm(params) if sigma0 is None else _validate_sigma0(sigma0)
    span = t_end - t0
    if span < 0:
        raise ParameterError("t_end must not precede t0")
    limit = max_dt(params)
    if dt is None:
        dt = limit
    elif dt <= 0:
        raise ParameterError("dt must be positive")
    elif not params.rwa and dt > math.pi / (20 * params.omega_m) * (1 + 1e-12):
        raise ParameterError("dt must be <= pi/(20 omega_m) without the RWA")
    n_steps = math.ceil(span / dt - 1e-9) if span > 0 else 0
    step = span / n_steps if n_steps else dt
    if sample_every is None:
        sample_every = max(1, math.ceil(n_steps / 2000)) if n_steps else 1
    m0, mc, ms = drift_components(params)
    omega2 = 0.0 if params.rwa else 2 * params.omega_m
    samples, average, bad = _kernels.rk4_lyapunov(
        m0, mc, ms, build_noise(params), sigma0, omega2, t0, step, n_steps, sample_every, bound
    )
    idx = [0] + [min(i * sample_every, n_steps) for i in range(1, len(samples))]
    times = t0 + step * np.array(idx, dtype=float)
    if bad >= 0:
        t_bad = t0 + bad * step
        raise DivergenceError(f"covariance entry exceeded {bound:g} at t = {t_bad:.6g}", t_bad)
    return Trajectory(times, samples, average, params, step)


@dataclass
class PeriodicSteadyState:
    """Long-time state of the driven dynamics, resolved over one mechanical period."""

    average: np.ndarray
    times: np.ndarray
    sigmas: np.ndarray
    t_reached: float
    converged: bool


def evolve_to_steady(
    params: SystemParams,
    sigma0: np.ndarray | None = None,
    dt: float | None = None,
    tol: float = 1e-8,
    max_time: float | None = None,
    chunk_periods: int = 1,
) -> PeriodicSteadyState:
    """Integrate until the period-averaged covariance matrix settles.

    Steadiness is declared when the average over one mechanical period
    ``2 pi / omega_m`` changes by less than ``tol`` (max-abs) between
    consecutive periods.  Works for both RWA and non-RWA dynamics.
    """
    period = 2 * math.pi / params.omega_m
    limit = max_dt(params) if dt is None else dt
    per_period = max(1, math.ceil(period / limit - 1e-9))
    if max_time is None:
        margin = check_stability(params).margin
        if margin <= 0:
            raise UnstableSystemError("dynamics are unstable; no steady state")
        max_time = max(50.0 * period, 60.0 / margin)
    sigma = vacuum_thermal_cm(params) if sigma0 is None else _validate_sigma0(sigma0)
    t = 0.0
    prev = None
    span = period * chunk_periods
    while True:
        traj = evolve_cm(params, sigma, t + span, dt=span / (per_period * chunk_periods),
                         sample_every=1, t0=t)
        sigma = traj.sigmas[-1]
        t = t + span
        avg = traj.average
        converged = prev is not None and float(np.max(np.abs(avg - prev))) < tol
        if converged or t >= max_time:
            return PeriodicSteadyState(avg, traj.times, traj.sigmas, t, converged)
        prev = avg


def _lyapunov_operator(drift: np.ndarray) -> np.ndarray:
    n = drift.shape[0]
    eye = np.eye(n)
    # row-major vec: vec(M S) = (M kron I) vec(S), vec(S M^T) = (I kron M) vec(S)
    return np.kron(drift, eye) + np.kron(eye, drift)


def solve_lyapunov(drift: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Solve ``M S + S M^T = N`` by vectorization into an n^2 linear system."""
    drift = np.asarray(drift, dtype=float)
    noise = np.asarray(noise, dtype=float)
    n = drift.shape[0]
    op = _lyapunov_operator(drift)
    rhs = noise.reshape(-1)
    try:
        x = np.linalg.solve(op, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"Lyapunov system is singular: {exc}") from None
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("Lyapunov solve produced non-finite values")
    # one step of iterative refinement
    x = x + np.linalg.solve(op, rhs - op @ x)
    sigma = x.reshape(n, n)
    return 0.5 * (sigma + sigma.T)


def lyapunov_residual(drift, sigma, noise) -> float:
    return float(np.max(np.abs(drift @ sigma + sigma @ drift.T - noise)))


def steady_cm(params: SystemParams, residual_tol: float = 1e-10) -> np.ndarray:
    """Steady-state 8x8 covariance matrix of the RWA dynamics.

    Raises
    ------
    UnstableSystemError
        If the stability check fails.
    SingularSystemError
        If the vectorized system is degenerate or the residual exceeds
        ``residual_tol``.
    """
    if not params.rwa:
        raise ParameterError("steady_cm needs rwa=True; use evolve_to_steady for the driven system")
    report = check_stability(params)
    if not report.stable:
        raise UnstableSystemError(f"parameters are unstable (margin {report.margin:.3g})")
    drift = build_drift(params)
    noise = build_noise(params)
    sigma = solve_lyapunov(drift, noise)
    res = lyapunov_residual(drift, sigma, noise)
    if res >= residual_tol * max(1.0, float(np.max(np.abs(sigma)))):
        raise SingularSystemError(f"Lyapunov residual {res:.3g} exceeds tolerance")
    return sigma


def _upper_triangle_labels(n=8):
    return [f"sigma_{i + 1}{j + 1}" for i in range(n) for j in range(i, n)]


def write_trajectory_csv(path, traj: Trajectory) -> Path:
    """Write ``t, sigma_11, sigma_12, ..., sigma_88`` rows and a JSON sidecar.

    The sidecar holds the SystemParams and sits next to the CSV with a
    ``.json`` suffix.
    """
    path = Path(path)
    iu = np.triu_indices(8)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["t", *_upper_triangle_labels()]) + "\n")
        for t, s in zip(traj.times, traj.sigmas):
            fh.write(",".join(f"{v:.17g}" for v in (t, *s[iu])) + "\n")
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps({"params": traj.params.as_dict(), "dt": traj.dt}, indent=2) + "\n")
    return sidecar


def read_trajectory_csv(path):
    """Inverse of :func:`write_trajectory_csv`; returns ``(times, sigmas)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    iu = np.triu_indices(8)
    sigmas = np.zeros((len(data), 8, 8))
    for k, row in enumerate(data):
        sigmas[k][iu] = row[1:]
        sigmas[k] = sigmas[k] + np.triu(sigmas[k], 1).T
    return data[:, 0], sigmas
