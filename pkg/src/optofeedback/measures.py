"""Correlation quantifiers of a two-mode Gaussian state.

Every function takes the 4x4 covariance matrix ``sigma_m`` ordered as
``(X_1, Y_1, X_2, Y_2)`` in the vacuum-variance-1/2 convention.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import NonPhysicalError, ParameterError

PHYS_TOL = 1e-10
TSIRELSON = 2 * math.sqrt(2)
SEED_SCALES = np.array([1.0, 0.3, 0.1, 0.03])
POLISH_RESTARTS = 3
_OMEGA2 = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _as_cm4(sigma_m) -> np.ndarray:
    sigma_m = np.asarray(sigma_m, dtype=float)
    if sigma_m.shape != (4, 4):
        raise ParameterError(f"expected a 4x4 covariance matrix, got shape {sigma_m.shape}")
    return sigma_m


def _blocks(sigma_m):
    return sigma_m[:2, :2], sigma_m[2:, 2:], sigma_m[:2, 2:]


def log_negativity(sigma_m) -> tuple[float, float]:
    """Smallest partially-transposed symplectic eigenvalue and log-negativity.

    Returns ``(zeta_en, En)`` with ``En = max(0, -ln(2 zeta_en))``.  A
    two-mode squeezed vacuum with parameter r gives ``zeta_en = e^{-2r}/2``
    and ``En = 2r``.
    """
    s = _as_cm4(sigma_m)
    a, b, c = _blocks(s)
    det = np.linalg.det(s)
    seralian = np.linalg.det(a) + np.linalg.det(b) - 2 * np.linalg.det(c)
    disc = seralian**2 - 4 * det
    scale = max(1.0, seralian**2)
    if disc < -PHYS_TOL * scale:
        raise NonPhysicalError(f"s^2 - 4 det(sigma) = {disc:.3g} < 0")
    # The smaller root of nu^4 - s nu^2 + det = 0 loses precision when the two
    # symplectic eigenvalues nearly coincide, so take the spectrum from the
    # Hermitian matrix i L^T Omega L with sigma~ = L L^T (similar to i Omega sigma~).
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    try:
        chol = np.linalg.cholesky(flip @ s @ flip)
    except np.linalg.LinAlgError:
        raise NonPhysicalError("covariance matrix is not positive definite") from None
    herm = 1j * (chol.T @ _OMEGA2 @ chol)
    zeta = float(np.min(np.abs(np.linalg.eigvalsh(herm))))
    if zeta <= 0:
        raise NonPhysicalError("partially transposed symplectic eigenvalue is not positive")
    return zeta, max(0.0, -math.log(2 * zeta))


class Steering(NamedTuple):
    chi_st_1to2: float
    St_1to2: float
    chi_st_2to1: float
    St_2to1: float


def steering(sigma_m) -> Steering:
    """Gaussian EPR steerability in both directions.

    ``chi = det(sigma_jj) / (4 det(sigma))`` and ``St = max(0, ln(chi)/2)``.
    """
    s = _as_cm4(sigma_m)
    a, b, _ = _blocks(s)
    det = np.linalg.det(s)
    if det <= 0:
        raise NonPhysicalError(f"det(sigma_m) = {det:.3g} is not positive")
    chi12 = np.linalg.det(a) / (4 * det)
    chi21 = np.linalg.det(b) / (4 * det)
    return Steering(
        float(chi12), max(0.0, 0.5 * math.log(chi12)), float(chi21), max(0.0, 0.5 * math.log(chi21))
    )


def purity(sigma_m) -> float:
    """``Tr(rho^2) = 1 / (4 sqrt(det sigma_m))``."""
    det = np.linalg.det(_as_cm4(sigma_m))
    if det <= 0:
        raise NonPhysicalError(f"det(sigma_m) = {det:.3g} is not positive")
    return float(1.0 / (4.0 * math.sqrt(det)))


def _inverse_and_prefactor(sigma_m):
    s = _as_cm4(sigma_m)
    det = np.linalg.det(s)
    if det <= 0:
        raise NonPhysicalError(f"det(sigma_m) = {det:.3g} is not positive")
    return np.linalg.inv(s), det


def wigner(sigma_m, mu) -> np.ndarray | float:
    """Gaussian Wigner function in displacement coordinates.

    ``mu = (Re b1, Im b1, Re b2, Im b2)``; quadrature means are
    ``sqrt(2) * mu``.  Accepts a single point or an array ``(..., 4)``;
    normalized so that its integral over ``mu`` is one.
    """
    sinv, det = _inverse_and_prefactor(sigma_m)
    mu = np.asarray(mu, dtype=float)
    q = np.einsum("...i,ij,...j->...", mu, sinv, mu)
    out = np.exp(-q) / (math.pi**2 * math.sqrt(det))
    return float(out) if out.ndim == 0 else out


def parity(sigma_m, mu):
    """Displaced joint-parity expectation ``(pi^2/4) W(mu)``; +1 for vacuum at 0."""
    return math.pi**2 / 4 * wigner(sigma_m, mu)


def _coords(*betas) -> np.ndarray:
    return np.array([v for beta in betas for v in (complex(beta).real, complex(beta).imag)])


def bell_chsh(sigma_m, beta1, beta2, beta1p, beta2p) -> float:
    """CHSH combination ``P(b1,b2) + P(b1',b2) + P(b1,b2') - P(b1',b2')``."""
    sinv, det = _inverse_and_prefactor(sigma_m)
    x = _coords(beta1, beta2, beta1p, beta2p)
    return float(_kernels.chsh_value(sinv, 1.0 / (4.0 * math.sqrt(det)), x))


def chsh_batch(sigma_m, points) -> np.ndarray:
    """Vectorized CHSH value for rows ``(b1x, b1y, b2x, b2y, b1'x, b1'y, b2'x, b2'y)``."""
    sinv, det = _inverse_and_prefactor(sigma_m)
    pts = np.asarray(points, dtype=float)
    b1, b2, b1p, b2p = pts[:, 0:2], pts[:, 2:4], pts[:, 4:6], pts[:, 6:8]
    pref = 1.0 / (4.0 * math.sqrt(det))

    def par(u, v):
        m = np.concatenate([u, v], axis=1)
        return pref * np.exp(-np.einsum("ni,ij,nj->n", m, sinv, m))

    return par(b1, b2) + par(b1p, b2) + par(b1, b2p) - par(b1p, b2p)


@dataclass(frozen=True)
class BellConfig:
    """Multi-start simplex search settings for ``maximize_bell``."""

    n_starts: int = 64
    grid_half_width: float = 1.0
    tol: float = 1e-9
    max_iter: int = 2000
    seed: int = 0
    n_grid_seeds: int = 16
    workers: int = 1

    def __post_init__(self):
        if self.n_starts < 1:
            raise ParameterError("n_starts must be >= 1")
        if not self.grid_half_width > 0:
            raise ParameterError("grid_half_width must be > 0")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be >= 1")
        if self.tol <= 0:
            raise ParameterError("tol must be > 0")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")


@dataclass
class BellResult:
    B_max: float
    B_signed: float
    argmax: np.ndarray
    converged: list[bool] = field(default_factory=list)

    @property
    def n_converged(self) -> int:
        return sum(self.converged)


def bell_seeds(sigma_m, cfg: BellConfig) -> np.ndarray:
    """Starting points: best coarse-grid points, then uniform random ones."""
    h = cfg.grid_half_width
    grid = np.array(list(itertools.product((-h, 0.0, h), repeat=8)))
    values = np.abs(chsh_batch(sigma_m, grid))
    order = np.argsort(-values, kind="stable")
    n_grid = min(cfg.n_grid_seeds, cfg.n_starts)
    seeds = [grid[order[:n_grid]]]
    if cfg.n_starts > n_grid:
        n_rand = cfg.n_starts - n_grid
        rng = np.random.default_rng(cfg.seed)
        # optimal displacements shrink like e^{-r}; spread seeds over decades
        scales = SEED_SCALES[np.arange(n_rand) % len(SEED_SCALES)]
        seeds.append(rng.uniform(-h, h, size=(n_rand, 8)) * scales[:, None])
    return np.vstack(seeds)


def maximize_bell(sigma_m, cfg: BellConfig | None = None) -> BellResult:
    """Maximize |B| over the eight displacement coordinates.

    Each seed from :func:`bell_seeds` is refined by Nelder-Mead descent on
    ``-|B|``; the best result wins, ties going to the earliest seed, so the
    outcome is independent of ``cfg.workers``.
    """
    cfg = cfg or BellConfig()
    sinv, det = _inverse_and_prefactor(sigma_m)
    pref = 1.0 / (4.0 * math.sqrt(det))
    seeds = bell_seeds(sigma_m, cfg)

    def refine(x0):
        return _kernels.nelder_mead_bell(sinv, pref, x0, cfg.tol, cfg.tol, cfg.max_iter)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(refine, seeds))
    else:
        results = [refine(x0) for x0 in seeds]
    best = max(range(len(results)), key=lambda j: (abs(results[j][1]), -j))
    x, b, _, _ = results[best]
    # restarting the simplex from its own optimum escapes premature collapse
    for _ in range(POLISH_RESTARTS):
        x2, b2, _, _ = refine(x)
        if abs(b2) <= abs(b):
            break
        x, b = x2, b2
    return BellResult(abs(b), b, np.asarray(x), [r[3] for r in results])


@dataclass
class MeasureSet:
    """All quantifiers of one mechanical state; ``B_max`` is NaN when not computed."""

    zeta_en: float
    En: float
    chi_st_1to2: float
    St_1to2: float
    chi_st_2to1: float
    St_2to1: float
    P_m: float
    B_max: float = float("nan")
    B_argmax: np.ndarray | None = None

    @property
    def chi_st(self) -> float:
        return self.chi_st_1to2

    @property
    def St(self) -> float:
        return max(self.St_1to2, self.St_2to1)

    CSV_FIELDS = ("En", "St_1to2", "St_2to1", "P_m", "B_max", "zeta_en", "chi_st")

    def csv_row(self) -> str:
        """One CSV row in ``CSV_FIELDS`` order at 17 significant digits."""
        return ",".join(_fmt(getattr(self, k)) for k in self.CSV_FIELDS)


def _fmt(v) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.17g}"


def compute_measures(sigma_m, bell: BellConfig | None = None) -> MeasureSet:
    """Evaluate every measure; the Bell search runs only if ``bell`` is given."""
    zeta, en = log_negativity(sigma_m)
    st = steering(sigma_m)
    ms = MeasureSet(zeta, en, st.chi_st_1to2, st.St_1to2, st.chi_st_2to1, st.St_2to1, purity(sigma_m))
    if bell is not None:
        res = maximize_bell(sigma_m, bell)
        ms.B_max = res.B_max
        ms.B_argmax = res.argmax
    return ms
