"""Command-line front end.

Subcommands: ``evolve``, ``steady``, ``sweep``, ``bell``, ``verify``.
Parameters come from ``--config FILE`` (``key = value`` lines) and flags
named after the config keys; flags win.  Exit codes: 0 success,
1 verification failure, 2 invalid input, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .dynamics import (
    evolve_cm,
    extract_cavity,
    extract_mechanical,
    max_dt,
    vacuum_thermal_cm,
    write_trajectory_csv,
)
from .effective import effective_params, tms_vacuum_cm
from .errors import DivergenceError, OptoFeedbackError
from .measures import BellConfig, compute_measures, log_negativity, maximize_bell
from .model import PARAM_KEYS, SystemParams, check_stability, load_config, resolve_params
from .sweep import AXES, DEFAULT_MEASURES, MEASURES, PRED_FIELDS, SweepSpec, run_sweep, steady_mechanical_cm
from .verify import format_report, run_verify

log = logging.getLogger("optofeedback")

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_IO = 3


def _add_param_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("system parameters (units of kappa)")
    g.add_argument("--config", type=Path, help="key = value parameter file")
    for key in PARAM_KEYS:
        g.add_argument(f"--{key}", default=None, metavar="X" if key != "rwa" else "BOOL")


def _add_bell_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("Bell optimizer")
    g.add_argument("--n-starts", type=int, default=64)
    g.add_argument("--grid-half-width", type=float, default=1.0)
    g.add_argument("--tol", type=float, default=1e-9)
    g.add_argument("--max-iter", type=int, default=2000)
    g.add_argument("--seed", type=int, default=0)


def _params(args) -> SystemParams:
    config = load_config(args.config) if args.config else {}
    overrides = {k: getattr(args, k) for k in PARAM_KEYS}
    return resolve_params(config, overrides)


def _bell(args, workers=1) -> BellConfig:
    return BellConfig(
        n_starts=args.n_starts,
        grid_half_width=args.grid_half_width,
        tol=args.tol,
        max_iter=args.max_iter,
        seed=args.seed,
        workers=workers,
    )


def _fmt(v) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.17g}"


def _en(sigma4):
    return log_negativity(sigma4)[1]


def run_evolve(params: SystemParams, t_end: float, dt=None, output=None, compare_rwa=False,
               cm_output=None, sample_every=None) -> list[str]:
    """Integrate from the vacuum/thermal state and tabulate the mechanical and cavity En.

    With ``compare_rwa`` the RWA and full dynamics run on the same time grid
    and both column pairs are written.
    """
    variants = [("rwa", params.replace(rwa=True)), ("nonrwa", params.replace(rwa=False))] \
        if compare_rwa else [("", params)]
    if dt is None:
        dt = min(max_dt(p) for _, p in variants)
    trajs = []
    for _, p in variants:
        trajs.append(evolve_cm(p, vacuum_thermal_cm(p), t_end, dt=dt, sample_every=sample_every))
    header = ["t"]
    for tag, _ in variants:
        suffix = f"_{tag}" if tag else ""
        header += [f"En_m{suffix}", f"En_c{suffix}"]
    lines = [",".join(header)]
    for k, t in enumerate(trajs[0].times):
        vals = [t]
        for tr in trajs:
            s = tr.sigmas[k]
            vals += [_en(extract_mechanical(s)), _en(extract_cavity(s))]
        lines.append(",".join(_fmt(v) for v in vals))
    if output:
        Path(output).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if cm_output:
        write_trajectory_csv(cm_output, trajs[0])
    return lines


def _cmd_evolve(args) -> int:
    params = _params(args)
    try:
        lines = run_evolve(params, args.t_end, args.dt, args.output, args.compare_rwa,
                           args.cm_output, args.sample_every)
    except DivergenceError as exc:
        print(f"diverged at t = {exc.t:.6g}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not args.output:
        print("\n".join(lines))
    return EXIT_OK


def _cmd_steady(args) -> int:
    params = _params(args)
    report = check_stability(params)
    out = {"params": params.as_dict(), "stable": report.stable, "margin": report.margin}
    try:
        model = effective_params(params.replace(rwa=True))
        out["pred"] = {"En": model.En_pred, "St": model.St_pred, "P_m": model.P_m_pred,
                       "zeta_en": model.zeta_en_pred, "chi_st": model.chi_st_pred,
                       "G_eff": model.G_eff, "gamma_eff": model.gamma_eff, "r": model.r}
    except OptoFeedbackError as exc:
        out["pred"] = None
        log.info("no analytic prediction: %s", exc)
    if not args.preview:
        if not report.stable:
            print(json.dumps(out, indent=2))
            print("parameters are unstable", file=sys.stderr)
            return EXIT_INPUT
        ms = compute_measures(steady_mechanical_cm(params), _bell(args) if args.bell else None)
        out["measures"] = {k: getattr(ms, k) for k in ms.CSV_FIELDS}
        out["measures"].update(chi_st_2to1=ms.chi_st_2to1)
        if args.output:
            cols = list(ms.CSV_FIELDS)
            row = ms.csv_row()
            if out["pred"] is not None:
                cols += list(PRED_FIELDS)
                pred = out["pred"]
                row += "," + ",".join(_fmt(pred[k[5:]]) for k in PRED_FIELDS)
            Path(args.output).write_text(",".join(cols) + "\n" + row + "\n", encoding="utf-8")
    print(json.dumps(out, indent=2, default=float))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    base = _params(args)
    measures = tuple(args.measures.split(",")) if args.measures else DEFAULT_MEASURES
    if args.bell and "B_max" not in measures:
        measures += ("B_max",)
    if args.pred and "pred" not in measures:
        measures += ("pred",)
    spec = SweepSpec(
        axis=args.axis,
        start=args.start,
        stop=args.stop,
        n_points=args.n_points,
        base=base,
        measures=measures,
        bell=_bell(args),
        output_path=str(args.output),
        lock_lambda=args.lock_lambda,
        workers=args.workers,
    )
    manifest = run_sweep(spec)
    print(f"wrote {args.output} ({args.n_points} rows, manifest {manifest.sha256[:12]})")
    return EXIT_OK


def _cmd_bell(args) -> int:
    if args.tms is not None:
        sigma = tms_vacuum_cm(args.tms)
        source = {"tms_r": args.tms}
    else:
        params = _params(args)
        sigma = steady_mechanical_cm(params)
        source = {"params": params.as_dict()}
    res = maximize_bell(sigma, _bell(args, args.workers))
    print(json.dumps({**source, "B_max": res.B_max, "B_signed": res.B_signed,
                      "argmax": res.argmax.tolist(), "starts_converged": res.n_converged,
                      "n_starts": len(res.converged)}, indent=2))
    return EXIT_OK


def _cmd_verify(args) -> int:
    results = run_verify(args.seed)
    print(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optofeedback", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__} ({_kernels.BACKEND} kernels)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="integrate the covariance matrix in time")
    _add_param_flags(p)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=float)
    p.add_argument("--sample-every", type=int)
    p.add_argument("--compare-rwa", action="store_true", help="run RWA and full dynamics side by side")
    p.add_argument("--output", type=Path, help="En trajectory CSV (stdout if omitted)")
    p.add_argument("--cm-output", type=Path, help="full covariance trajectory CSV (+ JSON sidecar)")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("steady", help="steady-state measures")
    _add_param_flags(p)
    _add_bell_flags(p)
    p.add_argument("--bell", action="store_true", help="also maximize the Bell-CHSH value")
    p.add_argument("--preview", action="store_true", help="analytic adiabatic model only")
    p.add_argument("--output", type=Path, help="write the measure row as CSV")
    p.set_defaults(func=_cmd_steady)

    p = sub.add_parser("sweep", help="one-dimensional parameter sweep to CSV")
    _add_param_flags(p)
    _add_bell_flags(p)
    p.add_argument("--axis", choices=AXES, required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--n-points", type=int, required=True)
    p.add_argument("--measures", help=f"comma-separated subset of {','.join(MEASURES)}")
    p.add_argument("--bell", action="store_true", help="add B_max (slow)")
    p.add_argument("--pred", action="store_true", help="add analytic pred_ columns")
    p.add_argument("--lock-lambda", action="store_true", help="set lambda_f = -4 g_p at every point")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", type=Path, required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bell", help="maximize the Bell-CHSH value of a steady state")
    _add_param_flags(p)
    _add_bell_flags(p)
    p.add_argument("--tms", type=float, metavar="R", help="use a two-mode squeezed vacuum instead")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_bell)

    p = sub.add_parser("verify", help="run the oracle suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OptoFeedbackError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
