"""Closed-form mechanical model after adiabatic elimination of the cavities.

With the cavities eliminated the oscillators see an effective two-mode
squeezing coupling ``G_eff``, extra damping ``gamma_eff`` and a broadband
two-mode squeezed bath of parameter ``r``.  The steady state is diagonal
in the EPR combinations ``X1 +- X2``, ``Y1 -+ Y2``; their variances
``var_plus`` / ``var_minus`` fix every measure in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import SystemParams


@dataclass(frozen=True)
class EffectiveModel:
    """Adiabatic-elimination parameters and the measures they predict.

    ``chi_st_pred`` is on the same scale as :func:`measures.steering`, i.e.
    ``det(sigma_jj) / (4 det(sigma))``.
    """

    G_eff: float
    gamma_eff: float
    r: float
    var_plus: float
    var_minus: float
    zeta_en_pred: float
    chi_st_pred: float
    P_m_pred: float
    omega_over_kappa: float
    g_o_over_kappa: float

    @property
    def En_pred(self) -> float:
        return max(0.0, -math.log(2 * self.zeta_en_pred))

    @property
    def St_pred(self) -> float:
        return max(0.0, 0.5 * math.log(self.chi_st_pred))


def _check_domain(params: SystemParams):
    k, gp, lf = params.kappa, params.g_p, params.lambda_f
    if not k > 2 * gp:
        raise DomainError("adiabatic model needs kappa > 2 g_p")
    if not k + 2 * gp + lf > 0:
        raise DomainError("adiabatic model needs kappa + 2 g_p + lambda_f > 0")
    if params.g_o <= 0:
        raise DomainError("adiabatic model needs g_o > 0")


def squeezing_tanh(params: SystemParams) -> float:
    """Argument of artanh in the bath squeezing parameter."""
    k, gp, lf = params.kappa, params.g_p, params.lambda_f
    num = 4 * k * (2 * gp + lf / 2) - lf * (k - 2 * gp)
    den = 4 * k * (k + lf / 2) + lf * (k - 2 * gp)
    if den == 0:
        raise DomainError("squeezing parameter denominator vanishes")
    return num / den


def effective_params(params: SystemParams) -> EffectiveModel:
    """Evaluate the effective mechanical model for ``params``.

    Raises
    ------
    DomainError
        Outside ``kappa > 2 g_p``, or when the squeezing parameter's
        ``artanh`` argument leaves (-1, 1) (this covers ``lambda_f = -2 kappa``).
    """
    _check_domain(params)
    k, gp, lf, go = params.kappa, params.g_p, params.lambda_f, params.g_o
    denom = (k - 2 * gp) * (k + 2 * gp + lf)
    g_eff = go**2 * (2 * gp + lf / 2) / denom
    gamma_eff = go**2 * (k + lf / 2) / denom
    tanh_r = squeezing_tanh(params)
    if not -1 < tanh_r < 1:
        raise DomainError(f"artanh argument {tanh_r:.6g} outside (-1, 1)")
    r = math.atanh(tanh_r)

    # thermal diffusion from the intrinsic mechanical bath
    thermal = params.gamma_m * (2 * params.n_th + 1) / (4 * go**2)
    # cavity-mediated parts (the squeezed and anti-squeezed collective quadratures)
    var_plus = k / (2 * (k - 2 * gp)) + thermal * (k - 2 * gp)
    var_minus = (2 * k + lf) ** 2 / (8 * k * (k + 2 * gp + lf)) + thermal * (k + 2 * gp + lf)

    zeta = min(var_plus, var_minus)
    chi_sqrt = (1 / var_plus + 1 / var_minus) / 4
    return EffectiveModel(
        G_eff=g_eff,
        gamma_eff=gamma_eff,
        r=r,
        var_plus=var_plus,
        var_minus=var_minus,
        zeta_en_pred=zeta,
        chi_st_pred=chi_sqrt**2,
        P_m_pred=1 / (4 * var_plus * var_minus),
        omega_over_kappa=params.omega_m / k,
        g_o_over_kappa=go / k,
    )


def analytic_measures(params: SystemParams) -> tuple[float, float]:
    """``(zeta_en_pred, chi_st_pred)`` from the effective model."""
    model = effective_params(params)
    return model.zeta_en_pred, model.chi_st_pred


def zeta_en_no_feedback(kappa: float, g_p: float) -> float:
    """Limit ``gamma_m -> 0``, ``lambda_f = 0``: ``kappa / (2 (2 g_p + kappa))``."""
    return kappa / (2 * (2 * g_p + kappa))


def chi_st_sqrt_lossless(kappa: float, g_p: float, lambda_f: float) -> float:
    """Square root of the steering parameter at ``gamma_m = 0``."""
    if lambda_f == -2 * kappa:
        raise DomainError("lambda_f = -2 kappa is singular")
    return 1 - ((kappa + 2 * g_p) * lambda_f**2 + 8 * kappa * g_p * lambda_f) / (
        2 * kappa * (2 * kappa + lambda_f) ** 2
    )


def locked_limits(kappa: float, g_p: float) -> tuple[float, float]:
    """``(zeta_en, sqrt(chi_st))`` at ``lambda_f = -4 g_p`` for ``gamma_m -> 0``."""
    if not kappa > 2 * g_p:
        raise DomainError("needs kappa > 2 g_p")
    return (kappa - 2 * g_p) / (2 * kappa), 1 + 2 * g_p**2 / (kappa * (kappa - 2 * g_p))


def locked_squeezing(kappa: float, g_p: float) -> float:
    """Bath squeezing at ``lambda_f = -4 g_p``: ``artanh(g_p / (kappa - g_p))``."""
    arg = g_p / (kappa - g_p)
    if not -1 < arg < 1:
        raise DomainError("needs kappa > 2 g_p")
    return math.atanh(arg)


def tms_vacuum_cm(r: float) -> np.ndarray:
    """Covariance matrix of the two-mode squeezed vacuum ``S(r)|00>``."""
    if r < 0:
        raise DomainError("r must be >= 0")
    c = math.cosh(2 * r) / 2
    s = math.sinh(2 * r) / 2
    return np.array(
        [
            [c, 0.0, s, 0.0],
            [0.0, c, 0.0, -s],
            [s, 0.0, c, 0.0],
            [0.0, -s, 0.0, c],
        ]
    )


def _self_test():
    # catch transcription slips against the two lossless limits
    k, gp = 1.0, 0.3
    base = SystemParams(gamma_m=0.0, g_p=gp, lambda_f=0.0)
    m = effective_params(base)
    assert abs(m.zeta_en_pred - zeta_en_no_feedback(k, gp)) < 1e-12
    assert abs(m.chi_st_pred - 1.0) < 1e-12
    locked = effective_params(base.replace(lambda_f=-4 * gp))
    z, c = locked_limits(k, gp)
    assert abs(locked.zeta_en_pred - z) < 1e-12
    assert abs(math.sqrt(locked.chi_st_pred) - c) < 1e-12
    assert abs(locked.r - locked_squeezing(k, gp)) < 1e-12


_self_test()
