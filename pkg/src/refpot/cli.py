"""Command-line front end.

``refpot <command> [--config FILE] [--out-dir DIR] ...``

Commands write CSV/JSON files into ``--out-dir`` (12 significant digits,
unit-suffixed column names, a manifest line with the potential fingerprint)
and print a JSON summary on stdout. Exit status: 0 on success, 1 for invalid
input, 2 for numerical failure (and for ``report`` when a check fails); errors
are reported as JSON on stderr.
"""
import argparse
import json
import math
import os
import sys

from . import potential as pt
from . import report as rp

COMMANDS = ("potential", "bound-states", "phase-shift", "jost", "g-function",
            "gl-kernel", "levinson", "report")


class ValidationError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def build_parser():
    p = _Parser(prog="refpot", description="Reference-potential spectral toolkit")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", default=None,
                   help="potential file (TOML) or bundled name: xe2.cfg, free.cfg")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--tol-abs", type=float, default=None,
                   help="absolute tolerance of the phase and eigenvalue solvers")
    p.add_argument("--tol-rel", type=float, default=None)
    p.add_argument("--k-min", type=float, default=1e-4, help="1/angstrom")
    p.add_argument("--k-max", type=float, default=1e9, help="1/angstrom")
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--ka", type=float, default=75000.0,
                   help="k_a (1/angstrom): top of the numerical phase table")
    p.add_argument("--kernel-grid", default="0.5:10:50",
                   help="r grid of the kernel as lo:hi:n (angstrom)")
    p.add_argument("--check-direct", action="store_true",
                   help="also compute F directly and compare (jost)")
    return p


def _settings(args):
    for name in ("tol_abs", "tol_rel"):
        v = getattr(args, name)
        if v is not None and not (v > 0 and math.isfinite(v)):
            raise ValidationError(f"--{name.replace('_', '-')} must be positive")
    if not (0 < args.k_min < args.k_max) or not math.isfinite(args.k_max):
        raise ValidationError("need 0 < --k-min < --k-max")
    if args.points < 2:
        raise ValidationError("--points must be at least 2")
    if not (args.ka > 0 and math.isfinite(args.ka)):
        raise ValidationError("--ka must be positive")
    try:
        grid = rp.parse_grid(args.kernel_grid)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return rp.Settings(k_min=args.k_min, k_max=args.k_max, points=args.points,
                       k_a=args.ka, tol_abs=args.tol_abs, tol_rel=args.tol_rel,
                       kernel_grid=grid, check_direct=args.check_direct)


def _fail(kind, exc, code):
    err = {"error": {"kind": kind, "type": type(exc).__name__, "message": str(exc)}}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def run(argv=None):
    """Execute one command; returns the exit status."""
    try:
        args = build_parser().parse_args(argv)
        settings = _settings(args)
        path = rp.resolve_config(args.config)
        pot = pt.load_config(path)
    except (ValidationError, pt.ConfigError, pt.JoinError, FileNotFoundError,
            OSError) as exc:
        return _fail("validation", exc, 1)
    manifest = {"tool": "refpot", "version": rp.__version__, "command": args.command,
                "config": os.path.basename(path), "fingerprint": pot.fingerprint(),
                "settings": settings.as_dict()}
    try:
        w = rp.Writer(args.out_dir, manifest)
    except OSError as exc:
        return _fail("validation", exc, 1)
    pl = rp.Pipeline(pot, settings)
    try:
        result, code = _dispatch(args.command, pl, w)
    except OSError as exc:
        return _fail("io", exc, 2)
    except Exception as exc:          # numerical failures of any stage
        return _fail("numerical", exc, 2)
    out = {"command": args.command, "fingerprint": pot.fingerprint(),
           "files": w.written, "result": result}
    sys.stdout.write(json.dumps(rp._jsonable(out), sort_keys=True) + "\n")
    return code


def _dispatch(cmd, pl, w):
    if cmd == "potential":
        return rp.write_potential(pl, w), 0
    if cmd == "bound-states":
        res = rp.write_bound_states(pl, w)
        if rp.is_reference_model(pl.pot):
            rp.write_levels_comparison(pl, w)
        return res, 0
    if cmd == "phase-shift":
        return rp.write_phase_shift(pl, w), 0
    if cmd == "levinson":
        return rp.write_levinson(pl, w), 0
    if cmd == "jost":
        return rp.write_jost(pl, w), 0
    if cmd == "g-function":
        return rp.write_g_function(pl, w), 0
    if cmd == "gl-kernel":
        return rp.write_kernel(pl, w), 0
    summary, checks = rp.write_report(pl, w)
    for c in checks:
        sys.stderr.write(f"[{c.status}] {c.number:2d} {c.name}\n")
    res = {"criteria": {c.number: c.status for c in checks},
           "all_passed": summary["all_passed"]}
    return res, 0 if summary["all_passed"] else 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
