"""Compare the compiled kernels with the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on identical inputs under both backends; the table
reports the best wall-clock time per backend and the speed-up.
"""
import argparse
import timeit

import numpy as np

from optofeedback import SystemParams
from optofeedback._kernels import get_backend
from optofeedback.dynamics import build_noise, drift_components, max_dt, vacuum_thermal_cm
from optofeedback.effective import tms_vacuum_cm


def rk4_case(rwa, n_steps):
    p = SystemParams(g_p=0.3, lambda_f=-0.8, rwa=rwa)
    m0, mc, ms = drift_components(p)
    args = (m0, mc, ms, build_noise(p), vacuum_thermal_cm(p), 0.0 if rwa else 2 * p.omega_m,
            0.0, max_dt(p), n_steps, 100, 1e6)
    return lambda k: k.rk4_lyapunov(*args)


def simplex_case():
    s = tms_vacuum_cm(0.8)
    sinv, pref = np.linalg.inv(s), 1 / (4 * np.sqrt(np.linalg.det(s)))
    starts = np.random.default_rng(0).uniform(-0.5, 0.5, size=(8, 8))

    def run(k):
        for x0 in starts:
            k.nelder_mead_bell(sinv, pref, x0, 1e-9, 1e-9, 2000)
    return run


def chsh_case(n=20000):
    s = tms_vacuum_cm(0.5)
    sinv, pref = np.linalg.inv(s), 1 / (4 * np.sqrt(np.linalg.det(s)))
    pts = np.random.default_rng(1).uniform(-1, 1, size=(n, 8))

    def run(k):
        for x in pts:
            k.chsh_value(sinv, pref, x)
    return run


CASES = {
    "rk4 RWA, 20k steps": rk4_case(True, 20_000),
    "rk4 full, 20k steps": rk4_case(False, 20_000),
    "Nelder-Mead, 8 starts": simplex_case(),
    "CHSH value x 20k": chsh_case(),
}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    py = get_backend("python")
    try:
        cy = get_backend("cython")
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install --no-build-isolation -e .`")
    print(f"{'kernel':<24}{'python [s]':>12}{'cython [s]':>12}{'speed-up':>10}")
    for name, case in CASES.items():
        t_py = min(timeit.repeat(lambda: case(py), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: case(cy), number=1, repeat=args.repeat))
        print(f"{name:<24}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
