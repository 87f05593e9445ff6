"""Command-line entry point: ``oscdamp {simulate,tables,support,calibrate}``.

Run configuration is plain text, one ``key = value`` per line; ``#`` starts a
comment. Keys and defaults:

  omega               comma-separated frequencies (required)
  x0                  2N comma-separated initial values x1,y1,... (simulate only)
  h                   hold step, default 1e-3 * 2*pi / max(omega)
  r1                  stage-1 switch level of rho, default: rho-radius of the ball of radius 2
  attractor_constant  default r1
  tol_state           default 1e-9
  max_time            default 1000
  record_stride       default 1
  seed_dirs           directions sampled for the stage-2 bound, default 4096
  theta, U            optional; skip calibration of the corresponding bound

Exit codes: 0 success, 1 usage or configuration error, 2 origin not reached.
"""
from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction

import numpy as np

from . import exceptions as exc
from .canonical import canonical_data
from .elliptic import ratio_F
from .lyapunov import lyapunov_data
from .matching import StagePlan, calibrate, default_r1, lambda_inscribed
from .simulator import SimConfig, default_hold_step, run, write_csv
from .support import dual_magnitudes, support_gradient
from .system import new_system

KEYS = ("omega", "x0", "h", "r1", "attractor_constant", "tol_state", "max_time",
        "record_stride", "seed_dirs", "theta", "U")
_LISTS = {"omega", "x0"}
_INTS = {"record_stride", "seed_dirs"}
DEFAULTS = {"tol_state": 1e-9, "max_time": 1000.0, "record_stride": 1, "seed_dirs": 4096}


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise exc.ConfigError(f"bad number list {text!r}") from e


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; unknown or repeated keys are errors."""
    cfg: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise exc.ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise exc.ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in cfg:
            raise exc.ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key in _LISTS:
            cfg[key] = np.array(_floats(val))
        else:
            try:
                cfg[key] = int(val) if key in _INTS else float(val)
            except ValueError as e:
                raise exc.ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from e
    if "omega" not in cfg:
        raise exc.ConfigError("missing key 'omega'")
    return cfg


def resolve(cfg: dict, need_x0: bool = True):
    """Fill defaults and calibrate; returns (system, plan, resolved config, extras)."""
    system = new_system(cfg["omega"])
    out = dict(DEFAULTS)
    out.update(cfg)
    if need_x0 and "x0" not in cfg:
        raise exc.ConfigError("missing key 'x0'")
    out.setdefault("h", default_hold_step(system))
    can = canonical_data(system)
    ld = lyapunov_data(system.n)
    if "r1" not in out:
        out["r1"] = default_r1(system)
    out.setdefault("attractor_constant", out["r1"])
    if "theta" in out and "U" in out:
        lam = lambda_inscribed(ld, can, out["theta"])
        plan = StagePlan(out["theta"], out["U"], out["r1"], out["attractor_constant"], lam)
    else:
        plan = calibrate(system, r1=out["r1"], attractor_constant=out["attractor_constant"],
                         n_dirs=out["seed_dirs"], can=can, ld=ld)
        plan = StagePlan(out.get("theta", plan.Theta), out.get("U", plan.U), plan.r1,
                         plan.attractor_constant, plan.Lambda)
    out["theta"], out["U"] = plan.Theta, plan.U
    return system, plan, out, (can, ld)


def _fmt(v) -> str:
    if isinstance(v, np.ndarray):
        return ", ".join(repr(float(x)) for x in v)
    return repr(v)


def echo_lines(cfg: dict) -> list[str]:
    return [f"{k} = {_fmt(cfg[k])}" for k in KEYS if k in cfg]


def _read_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as e:
        raise exc.ConfigError(f"cannot read {path}: {e.strerror}") from e


def cmd_simulate(args) -> int:
    system, plan, cfg, (can, ld) = resolve(_read_config(args.config))
    sim = SimConfig(system, cfg["x0"], plan=plan, h=cfg["h"], tol_state=cfg["tol_state"],
                    max_time=cfg["max_time"], record_stride=cfg["record_stride"])
    comments = echo_lines(cfg) + [f"## Lambda = {plan.Lambda!r}", f"## gauge = {can.gauge_path}"]
    code = 0
    try:
        rec = run(sim, can=can, ld=ld)
    except exc.MaxTimeExceeded as e:
        rec = e.record
        comments.append("## status = max_time exceeded")
        print(f"error: MaxTimeExceeded: {e}", file=sys.stderr)
        code = 2
    _emit(lambda fh: write_csv(rec, fh, comments), args.out)
    return code


def _emit(writer, out):
    if out is None or out == "-":
        writer(sys.stdout)
    else:
        with open(out, "w", newline="") as fh:
            writer(fh)


def format_matrix(name: str, rows) -> str:
    """Right-aligned bracketed matrix; entries rendered with ``str``."""
    cells = [[str(v) for v in r] for r in rows]
    width = max(len(c) for r in cells for c in r)
    pad = " " * (len(name) + 3)
    lines = []
    for i, r in enumerate(cells):
        body = "[" + ", ".join(c.rjust(width) for c in r) + "]"
        lead = f"{name} = [" if i == 0 else pad + " "
        lines.append(lead + body + ("]" if i == len(cells) - 1 else ","))
    return "\n".join(lines)


def parse_matrix(text: str) -> list[list[Fraction]]:
    """Inverse of ``format_matrix`` for integer and rational entries."""
    body = text.split("=", 1)[1]
    rows = body.replace("\n", " ").strip()[1:-1].split("]")
    return [[Fraction(c.strip()) for c in r.strip(" ,[").split(",")] for r in rows if r.strip(" ,[")]


def _float_rows(m) -> list[list[str]]:
    return [[repr(float(v) + 0.0) for v in r] for r in np.atleast_2d(m)]


def cmd_tables(args) -> int:
    n = args.n if args.n is not None else args.N
    if n is None:
        raise exc.ConfigError("tables needs N")
    ld = lyapunov_data(n)
    print(f"# N = {n}")
    print(format_matrix("q", ld.q))
    print(format_matrix("Q", ld.Q))
    print(format_matrix("c", [ld.c_row]))
    print(format_matrix("M", [ld.M_diag]))
    print(f"# Q even: yes")
    print(f"# Q divisible by Q11 = {ld.Q[0][0]}: {'yes' if ld.divisible_by_q11() else 'no'}")
    if args.omega is not None:
        system = new_system(_floats(args.omega))
        if system.n != n:
            raise exc.DimensionMismatch(f"omega has {system.n} entries, N = {n}")
        can = canonical_data(system)
        print(f"# omega = {_fmt(system.omega)}")
        print(f"# gauge = {can.gauge_path}")
        print(format_matrix("C", _float_rows(can.c_row)))
        print(format_matrix("D", _float_rows(can.D)))
        print(format_matrix("A_can", [[int(v) for v in r] for r in can.A_can]))
        print(format_matrix("B_can", [[int(v)] for v in can.B_can.ravel()]))
    return 0


def cmd_support(args) -> int:
    if args.plot_F is not None:
        m = args.plot_F
        if m < 1:
            raise exc.ConfigError("--plot-F needs a positive count")
        print("k,F")
        for i in range(1, m + 1):
            k = i / m
            print(f"{k!r},{ratio_F(k)!r}")
        return 0
    if args.z is None:
        raise exc.ConfigError("support needs --z or --plot-F")
    z = np.array(_floats(args.z))
    if args.omega is not None:
        omega = new_system(_floats(args.omega)).omega
        if z.size == 2 * omega.size:
            z = dual_magnitudes(omega, z)
        elif z.size != omega.size:
            raise exc.DimensionMismatch(f"--z has {z.size} entries for N = {omega.size}")
    ev = support_gradient(z, accuracy=args.accuracy)
    print(f"z = {_fmt(z)}")
    print(f"value = {ev.value!r}")
    print(f"gradient = {_fmt(ev.gradient)}")
    print(f"accuracy = {max(args.accuracy, ev.error_estimate)!r}")
    return 0


def cmd_calibrate(args) -> int:
    system, plan, cfg, (can, _) = resolve(_read_config(args.config), need_x0=False)
    for line in echo_lines(cfg):
        if not line.startswith(("theta", "U ")):
            print(f"# {line}")
    print(f"Theta = {plan.Theta!r}")
    print(f"Lambda = {plan.Lambda!r}")
    print(f"U = {plan.U!r}")
    print(f"r1 = {plan.r1!r}")
    print(f"attractor_constant = {plan.attractor_constant!r}")
    print(f"gauge = {can.gauge_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oscdamp", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the closed loop and write a trajectory CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output path (default stdout)")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("tables", help="print the Lyapunov and canonical-form matrices")
    t.add_argument("N", nargs="?", type=int)
    t.add_argument("--n", type=int)
    t.add_argument("--omega", help="comma-separated frequencies; adds C, D and the chain matrices")
    t.set_defaults(func=cmd_tables)

    u = sub.add_parser("support", help="evaluate the support function or tabulate the ratio F")
    u.add_argument("--z", help="comma-separated z, or a 2N dual vector when --omega is given")
    u.add_argument("--omega")
    u.add_argument("--plot-F", type=int, dest="plot_F", metavar="N")
    u.add_argument("--accuracy", type=float, default=1e-8)
    u.set_defaults(func=cmd_support)

    c = sub.add_parser("calibrate", help="print Theta, Lambda, U and r1 for a config")
    c.add_argument("--config", required=True)
    c.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except exc.OscDampError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
