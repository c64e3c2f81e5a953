"""Command-line front end: ``rdmlab <command> [options]``.

Every run writes its outputs plus ``<command>.manifest.json`` into the output
directory.  Exit status: 0 success, 1 invalid input, 2 numerical failure,
3 inconclusive result.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import __version__, io, kernels
from .config import load_config, parse_policy
from .errors import (AlternativeIIError, FitRefused, InconclusiveResult, NumericalFailure, RdmError,
                     ValidationError)
from .parallel import THREADS_ENV

log = logging.getLogger("rdmlab")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _signs(text):
    if not text or set(text) - {"+", "-"}:
        raise argparse.ArgumentTypeError(f"expected a string of + and -, got {text!r}")
    return [1 if c == "+" else -1 for c in text]


def _positive_int(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML experiment config (default: built-in defaults)")
    common.add_argument("--out-dir", default=".", help="artifact root directory (default: .)")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help=f"worker threads (default: ${THREADS_ENV} or the CPU count)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    p = _Parser(prog="rdmlab", description="Numerical lab for the 1D random displacement model.",
                epilog=f"exit status: 0 success, 1 invalid input, 2 numerical failure, "
                       f"3 inconclusive result.  ${THREADS_ENV} sets the default thread count; "
                       f"RDMLAB_PURE_PYTHON=1 forces the numpy kernels.")
    p.add_argument("--version", action="version", version=f"rdmlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("cell-scan", parents=[common],
                       help="E0(a), rho, psi(+-1/2) over a displacement grid")
    s.add_argument("--points", type=_positive_int, help="grid points on [-d_max, d_max] (default 101)")
    s.add_argument("--out", default="cell_scan.csv")

    s = sub.add_parser("transfer-check", parents=[common],
                       help="det T, tr T and the Neumann trace at E0 for one configuration")
    s.add_argument("--signs", type=_signs, help="corner pattern such as -+-+ (default -+)")
    s.add_argument("--displacements", type=_floats, help="explicit displacements, comma separated")
    s.add_argument("--energy", help="'E0' (periodic ground energy) or a number (default E0)")
    s.add_argument("--dps", type=_positive_int, help="extended precision digits for the trace")
    s.add_argument("--out", default="transfer_check.json")

    s = sub.add_parser("minimizers", parents=[common],
                       help="classify periodic corner configurations of period L")
    s.add_argument("--L", type=_positive_int, help="period (default 4, at most 20)")
    s.add_argument("--tol", type=float, help="minimizer tolerance (default 1e-7)")
    s.add_argument("--interior-samples", type=int, help="interior perturbation samples (default 0)")
    s.add_argument("--seed", type=int, help="seed for the interior perturbation check")
    s.add_argument("--out", default="minimizers.json")

    s = sub.add_parser("ids", parents=[common], help="Monte Carlo integrated density of states")
    s.add_argument("--samples", type=int, help="samples per energy (default 20000)")
    s.add_argument("--seed", type=int, help="random seed (required here or in the config)")
    s.add_argument("--policy", help="'adaptive' or 'fixed:L' (default adaptive)")
    s.add_argument("--beta", help="beta for the adaptive policy, or 'calibrate' (default 1)")
    s.add_argument("--bc", choices=("D", "N"), help="boundary condition (default D)")
    s.add_argument("--energies", type=_floats, help="absolute energies, comma separated")
    s.add_argument("--gaps", type=_floats, help="gaps E - E0, comma separated (default 1e-3..1e-6)")
    s.add_argument("--out", default="ids.csv")

    s = sub.add_parser("tail", parents=[common], help="fit tail models to an ids CSV")
    s.add_argument("--input", help="ids CSV (default ids.csv in the output directory)")
    s.add_argument("--E0", type=float, help="spectral minimum (default: computed from the potential)")
    s.add_argument("--out", default="tail.json")

    s = sub.add_parser("grid2d", parents=[common], help="2D Neumann spot checks on period cells")
    s.add_argument("--mode", choices=("compare", "landscape"), help="default compare")
    s.add_argument("--h", type=float, help="grid spacing (default 1/32; compare also uses h/2)")
    s.add_argument("--points", type=_positive_int, help="landscape grid points per axis (default 9)")
    s.add_argument("--out", default=None)

    s = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    s.add_argument("--instances", type=_positive_int, help="random instances per check (default 10)")
    s.add_argument("--out", default="verify.json")
    return p


def _merge(cfg, section, args, names):
    """Section values with command-line overrides."""
    vals = cfg.section(section)
    overrides = {}
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            vals[name] = v
            overrides[name] = v
    return vals, overrides


def _path(out_dir, name):
    return name if os.path.isabs(name) else os.path.join(out_dir, name)


# -- commands ------------------------------------------------------------------

def cmd_cell_scan(cfg, args):
    from .cell import e0_landscape

    vals, ov = _merge(cfg, "cell-scan", args, ["points"])
    q = cfg.potential
    grid = vals.get("a_grid") or np.linspace(-q.d_max, q.d_max, int(vals["points"])).tolist()
    land = e0_landscape(q, grid)
    text = io.csv_text(("a", "E0", "rho", "psi_left", "psi_right"), land.rows())
    return {args.out: text}, ov, None


def cmd_transfer_check(cfg, args):
    from .model import DisplacementConfig
    from .transfer import config_transfer, neumann_trace, periodic_ground_energy

    vals, ov = _merge(cfg, "transfer-check", args, ["signs", "displacements", "energy", "dps"])
    q = cfg.potential
    if vals.get("displacements") is not None and "signs" not in ov:
        om = np.asarray(vals["displacements"], dtype=float)
    else:
        om = np.asarray(vals["signs"], dtype=float) * q.d_max
    config = DisplacementConfig(om, q.d_max, periodic=bool(vals["periodic"]))
    e = vals["energy"]
    if isinstance(e, str) and e != "E0":
        try:
            e = float(e)
        except ValueError:
            raise ValidationError(f"energy must be 'E0' or a number, got {e!r}") from None
    E = periodic_ground_energy(q, config) if e == "E0" else float(e)
    T = config_transfer(q, config, E)
    dps = vals.get("dps")
    if dps and e == "E0":
        # refine E0 in extended precision so the trace is meaningful to double
        from . import _mp
        from .model import assemble_potential
        import mpmath

        V = assemble_potential(q, config)
        with mpmath.workdps(int(dps)):
            def disc(x):
                a, b, c, d = _mp.transfer(V.values, V.lengths, x)
                return a + d - 2

            E_mp = mpmath.findroot(disc, mpmath.mpf(E))
        trace = neumann_trace(q, config, E_mp, dps=int(dps))
    else:
        trace = neumann_trace(q, config, E)
    report = {"energy": E, "det_residual": T.det_residual(), "trace": T.trace,
              "log_scale": T.log_scale, "displacements": om.tolist(),
              "half_integer_values": trace.values.tolist()}
    return {args.out: io.json_text(report)}, ov, None


def cmd_minimizers(cfg, args):
    from .minimizers import classify_minimizers, interior_perturbation_check

    vals, ov = _merge(cfg, "minimizers", args, ["L", "tol", "interior_samples", "seed"])
    q = cfg.potential
    rep = classify_minimizers(q, int(vals["L"]), tol=float(vals["tol"]), threads=args.threads)
    out = rep.to_dict()
    seed = vals.get("seed", cfg.seed)
    status = None
    if int(vals["interior_samples"]) > 0:
        if seed is None:
            raise ValidationError("the interior perturbation check needs --seed or seed in the config")
        ir = interior_perturbation_check(q, int(vals["L"]), int(vals["interior_samples"]),
                                         int(seed), threads=args.threads)
        out["interior"] = ir.to_dict()
        if not ir.passed:
            status = InconclusiveResult(f"interior perturbation gap {ir.min_gap} below margin")
    return {args.out: io.json_text(out)}, ov, status


def _energy_grid(vals, E0):
    if vals.get("energies") is not None:
        E = np.asarray(vals["energies"], dtype=float)
    else:
        g = np.asarray(vals["gaps"], dtype=float)
        if np.any(g <= 0):
            raise ValidationError("gaps must be positive")
        E = E0 + g
    if E.size == 0:
        raise ValidationError("empty energy grid")
    return np.sort(E)


def cmd_ids(cfg, args):
    from .ids import AdaptiveL, FixedL, calibrate_beta, corner_ratio, estimate_ids, spectral_minimum

    vals, ov = _merge(cfg, "ids", args, ["samples", "policy", "beta", "bc", "energies", "gaps"])
    seed = args.seed if args.seed is not None else cfg.seed
    if seed is None:
        raise ValidationError("ids is stochastic: give --seed or seed in the config")
    if args.seed is not None:
        ov["seed"] = args.seed
    if int(vals["samples"]) < 1:
        raise ValidationError(f"samples must be >= 1, got {vals['samples']}")
    q = cfg.potential
    dist = cfg.make_distribution()
    E0 = spectral_minimum(q)
    E = _energy_grid(vals, E0)
    kind, L = parse_policy(vals["policy"])
    if kind == "fixed":
        policy = FixedL(L)
    else:
        rho = corner_ratio(q)
        beta = vals["beta"]
        if beta == "calibrate":
            gaps = E - E0
            beta, _ = calibrate_beta(q, dist, gaps[gaps > 0], E0, rho,
                                     int(vals["calibration_samples"]), int(seed),
                                     threads=args.threads)
            log.info("calibrated beta = %g", beta)
        else:
            try:
                beta = float(beta)
            except ValueError:
                raise ValidationError(f"beta must be a number or 'calibrate', got {beta!r}") from None
        policy = AdaptiveL(E0, rho, beta)
    est = estimate_ids(q, dist, E, int(vals["samples"]), policy, int(seed), bc=vals["bc"],
                       threads=args.threads)
    return {args.out: io.csv_text(io.IDS_HEADER, est.rows())}, ov, None


def cmd_tail(cfg, args):
    from .ids import fit_tail, spectral_minimum

    vals, ov = _merge(cfg, "tail", args, ["input", "E0"])
    src = _path(args.out_dir, vals["input"])
    est = io.read_ids_csv(src)
    E0 = float(vals["E0"]) if vals.get("E0") is not None else spectral_minimum(cfg.potential)
    rep = fit_tail(est, E0)
    out = rep.to_dict()
    out["residual_ratio_lifshits_over_log_squared"] = rep.residual_ratio()
    return {args.out: io.json_text(out)}, ov, None


def cmd_grid2d(cfg, args):
    from .grid2d import SingleSitePotential2D, compare_2d_configs, e0_2d_landscape

    vals, ov = _merge(cfg, "grid2d", args, ["mode", "h", "points"])
    q2 = SingleSitePotential2D.square(float(vals["depth"]), float(vals["support_radius"]))
    h = float(vals["h"])
    if vals["mode"] == "landscape":
        d = q2.d_max
        land = e0_2d_landscape(q2, np.linspace(-d, d, int(vals["points"])), h)
        name = args.out or "grid2d_landscape.csv"
        return {name: io.csv_text(("a1", "a2", "E0"), land.rows())}, ov, None
    cmp_ = compare_2d_configs(q2, h)
    rows = [(r["pattern"], r["lambda_h"], r["lambda_h2"], r["extrapolated"], r["margin"])
            for r in cmp_.rows]
    name = args.out or "grid2d.csv"
    status = None
    if not cmp_.conclusive:
        status = InconclusiveResult(
            f"dimer margin {cmp_.margin:.3g} does not exceed 5x the error estimate "
            f"{cmp_.error_estimate:.3g}")
    return {name: io.csv_text(("pattern", "lambda_h", "lambda_h2", "extrapolated", "margin"), rows)}, ov, status


def cmd_verify(cfg, args):
    from .verify import run_suite

    vals, ov = _merge(cfg, "verify", args, ["instances"])
    checks = run_suite(int(vals["instances"]), seed=cfg.seed or 0)
    out = {"checks": [{"name": n, "passed": bool(p), "detail": d} for n, p, d in checks],
           "passed": all(p for _, p, _ in checks)}
    status = None
    if not out["passed"]:
        failed = [n for n, p, _ in checks if not p]
        status = NumericalFailure(f"invariant checks failed: {', '.join(failed)}")
    return {args.out: io.json_text(out)}, ov, status


COMMANDS = {
    "cell-scan": cmd_cell_scan,
    "transfer-check": cmd_transfer_check,
    "minimizers": cmd_minimizers,
    "ids": cmd_ids,
    "tail": cmd_tail,
    "grid2d": cmd_grid2d,
    "verify": cmd_verify,
}


def _execute(args):
    cfg = load_config(args.config)
    t0 = time.perf_counter()
    outputs, overrides, status = COMMANDS[args.command](cfg, args)
    wall = time.perf_counter() - t0
    paths = []
    for name, text in outputs.items():
        path = _path(args.out_dir, name)
        io.atomic_write(path, text)
        paths.append(path)
    seed = overrides.get("seed", cfg.seed)
    manifest = {"command": args.command, "config_hash": cfg.digest(overrides or None),
                "config_path": args.config, "seed": seed, "wall_time_s": wall,
                "version": __version__, "backend": kernels.BACKEND, "outputs": paths}
    io.atomic_write(_path(args.out_dir, f"{args.command}.manifest.json"), io.json_text(manifest))
    for p in paths:
        print(p)
    if status is not None:
        raise status
    return EXIT_OK


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _execute(args)
    except InconclusiveResult as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (ValidationError, FitRefused, AlternativeIIError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFailure, RdmError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None):
    sys.exit(run(argv))
