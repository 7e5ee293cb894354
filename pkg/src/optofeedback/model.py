"""Physical parameter set, config ingestion and the stability gate.

All rates are expressed in units of the cavity decay rate ``kappa``.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, NamedTuple

import numpy as np

from .errors import ParameterError

PARAM_KEYS = ("omega_m", "kappa", "gamma_m", "g_o", "g_p", "lambda_f", "eta_f", "n_th", "rwa")

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class SystemParams:
    """Rates and couplings of the linearized two-oscillator model.

    Both optomechanical subsystems share one ``g_o``, ``omega_m``,
    ``gamma_m`` and feedback gain ``lambda_f``.

    Parameters
    ----------
    omega_m : float
        Mechanical angular frequency.
    kappa : float
        Cavity dissipation rate; sets the unit of rate.
    gamma_m : float
        Mechanical damping rate.
    g_o : float
        Linearized optomechanical coupling.
    g_p : float
        Intracavity parametric down-conversion coupling.
    lambda_f : float
        Feedback gain (negative values are allowed).
    eta_f : float
        Homodyne detection efficiency in (0, 1].
    n_th : float
        Mean thermal phonon number of the mechanical baths.
    rwa : bool
        Drop the terms oscillating at ``2*omega_m`` when True.
    """

    omega_m: float = 10.0
    kappa: float = 1.0
    gamma_m: float = 1e-5
    g_o: float = 0.05
    g_p: float = 0.3
    lambda_f: float = 0.0
    eta_f: float = 1.0
    n_th: float = 0.0
    rwa: bool = True

    def __post_init__(self):
        for key in PARAM_KEYS[:-1]:
            value = getattr(self, key)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise ParameterError(f"{key} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ParameterError(f"{key} must be finite, got {value!r}")
            object.__setattr__(self, key, float(value))
        object.__setattr__(self, "rwa", bool(self.rwa))
        if self.kappa <= 0:
            raise ParameterError("kappa must be > 0")
        if self.omega_m <= 0:
            raise ParameterError("omega_m must be > 0")
        for key in ("gamma_m", "g_o", "g_p", "n_th"):
            if getattr(self, key) < 0:
                raise ParameterError(f"{key} must be >= 0")
        if not 0 < self.eta_f <= 1:
            raise ParameterError("eta_f must lie in (0, 1]; express 'no feedback' as lambda_f = 0")

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


class StabilityReport(NamedTuple):
    stable: bool
    margin: float


def stability_margin(params: SystemParams) -> float:
    """Smallest real part among the eigenvalues of the RWA drift matrix."""
    from .dynamics import build_drift

    drift = build_drift(params.replace(rwa=True))
    return float(np.min(np.linalg.eigvals(drift).real))


def check_stability(params: SystemParams) -> StabilityReport:
    """Classify the RWA dynamics as stable or not.

    With ``eta_f == 1`` and ``gamma_m == 0`` the closed-form conditions
    ``kappa > 2 g_p`` and ``|lambda_f| < 2 g_p + kappa`` decide the verdict.
    Every other case requires all drift eigenvalues to have positive real
    part.  The time-periodic (non-RWA) system is classified by its RWA
    drift matrix.  ``margin`` is always the minimum eigenvalue real part.
    """
    if not isinstance(params, SystemParams):
        raise ParameterError("check_stability expects a SystemParams instance")
    margin = stability_margin(params)
    if params.eta_f == 1.0 and params.gamma_m == 0.0:
        k, gp, lf = params.kappa, params.g_p, params.lambda_f
        stable = k > 2 * gp and -(2 * gp + k) < lf < (2 * gp + k)
    else:
        stable = margin > 0
    return StabilityReport(bool(stable), margin)


def _coerce(key: str, raw: Any) -> Any:
    if key == "rwa":
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in _TRUE:
            return True
        if text in _FALSE:
            return False
        raise ParameterError(f"rwa must be a boolean, got {raw!r}")
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ParameterError(f"{key} must be a number, got {raw!r}") from None


def parse_config(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in PARAM_KEYS:
            raise ParameterError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_config(path: str | Path) -> dict[str, Any]:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def resolve_params(
    config: Mapping[str, Any] | None = None,
    overrides: Mapping[str, Any] | None = None,
    base: SystemParams | None = None,
) -> SystemParams:
    """Merge defaults, config-file values and overrides (later wins)."""
    merged = (base or SystemParams()).as_dict()
    for source in (config or {}, overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key not in PARAM_KEYS:
                raise ParameterError(f"unknown parameter {key!r}")
            merged[key] = _coerce(key, value)
    return SystemParams(**merged)
