"""Command-line driver.

    fpu-lindstedt spectrum --n 2
    fpu-lindstedt rho --n 2 --epsilon 0.1 --q0 0.1,1 --p0 0.1,0
    fpu-lindstedt compare --n 2 --epsilon 0.1 --q0 0.1,1 --p0 0.1,0 --out data.csv
    fpu-lindstedt repro-n2 --out results/

Exit codes: 0 ok, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .integrate import BlowUpError, IntegratorConfig, integrate
from .lattice import Lattice, LatticeConfig, ModeState, coupling, spectrum
from .lindstedt import ConvergenceError, build_series, dump_terms, rho_first_order, rho_self_consistent


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def read_ics_file(path: str | Path) -> ModeState:
    """One line per mode with two columns Q_k(0), Qdot_k(0); '#' starts a comment."""
    Q, V = [], []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read ics file: {exc}")
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        cols = line.split()
        if len(cols) != 2:
            raise UsageError(f"{path}:{lineno}: expected two columns, got {len(cols)}")
        try:
            Q.append(float(cols[0]))
            V.append(float(cols[1]))
        except ValueError:
            raise UsageError(f"{path}:{lineno}: not a number")
    if not Q:
        raise UsageError(f"{path}: no modes found")
    return ModeState(Q, V)


def _config(args) -> LatticeConfig:
    if args.n is None:
        raise UsageError("--n is required")
    try:
        return LatticeConfig(args.n, args.epsilon, args.resonance_tol)
    except ValueError as exc:
        raise UsageError(str(exc))


def _ics(args, n: int) -> ModeState:
    if args.ics_file:
        if args.q0 is not None or args.p0 is not None:
            raise UsageError("--ics-file cannot be combined with --q0/--p0")
        ics = read_ics_file(args.ics_file)
    else:
        q0 = args.q0 if args.q0 is not None else [0.0] * n
        p0 = args.p0 if args.p0 is not None else [0.0] * n
        if len(q0) != len(p0):
            raise UsageError("--q0 and --p0 must have the same length")
        ics = ModeState(q0, p0)
    if ics.n != n:
        raise UsageError(f"initial data has {ics.n} modes but --n is {n}")
    return ics


def _icfg(args, **kw) -> IntegratorConfig:
    steps = round(args.t_max / args.dt)
    samples = args.samples or max(1, steps // 10)
    if steps % samples:
        raise UsageError(f"--samples {samples} must divide the step count {steps}")
    try:
        return IntegratorConfig(args.dt, args.t_max, steps // samples, **kw)
    except ValueError as exc:
        raise UsageError(str(exc))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    keys = list(rows[0]) if rows else []
    lines = [",".join(keys)]
    lines += [",".join(_cell(r[k]) for k in keys) for r in rows]
    return "\n".join(lines) + "\n"


def _cell(x) -> str:
    if not isinstance(x, float):
        return str(x)
    s = f"{x:.15g}"
    return s if any(c in s for c in ".eni") else s + ".0"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_spectrum(args) -> int:
    cfg = _config(args)
    rows = [{"k": k, "omega": float(w)} for k, w in enumerate(spectrum(cfg.n), 1)]
    _emit(_table(rows, args.format), args.out)
    return 0


def cmd_coupling(args) -> int:
    cfg = _config(args)
    if args.indices:
        idx = [int(x) for x in args.indices.split(",")]
        if len(idx) != 4:
            raise UsageError("--indices needs exactly four mode numbers")
        try:
            value = coupling(*idx, cfg)
        except IndexError as exc:
            raise UsageError(str(exc))
        rows = [dict(zip("klmn", idx), C=value)]
    else:
        lat = Lattice(cfg)
        rows = [dict(zip("klmn", (int(i) + 1 for i in q)), C=int(c))
                for q, c in zip(lat.support.T, lat.cvalues)]
    _emit(_table(rows, args.format), args.out)
    return 0


def cmd_rho(args) -> int:
    cfg = _config(args)
    ics = _ics(args, cfg.n)
    shift = rho_self_consistent(ics, cfg) if args.self_consistent else rho_first_order(ics, cfg)
    rows = [{"k": k, "rho": float(r), "beta": float(b)}
            for k, (r, b) in enumerate(zip(shift.rho, shift.beta), 1)]
    _emit(_table(rows, args.format), args.out)
    return 0


def cmd_series(args) -> int:
    cfg = _config(args)
    ics = _ics(args, cfg.n)
    sol = build_series(ics, cfg, self_consistent=args.self_consistent)
    if args.terms:
        _emit(dump_terms(sol), args.out)
        return 0
    samples = args.samples or 1000
    t = np.linspace(0.0, args.t_max, samples + 1)
    Q, V = sol.sample(t)
    n = cfg.n
    if args.format == "json":
        text = json.dumps({"t": t.tolist(), "Q": Q.tolist(), "Qdot": V.tolist()}) + "\n"
    else:
        header = ["t"] + [f"Q_{k}" for k in range(1, n + 1)] + [f"Qdot_{k}" for k in range(1, n + 1)]
        lines = [",".join(header)]
        lines += [",".join(f"{x:.15g}" for x in (t[i], *Q[i], *V[i])) for i in range(t.size)]
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0


def cmd_integrate(args) -> int:
    cfg = _config(args)
    ics = _ics(args, cfg.n)
    icfg = _icfg(args, method=args.method, energy_monitor=args.energy)
    traj = integrate(ics, cfg, icfg)
    if args.format == "json":
        payload = {"t": traj.times.tolist(), "Q": traj.Q.tolist(), "Qdot": traj.Qdot.tolist()}
        if traj.energy is not None:
            payload["H"] = traj.energy.tolist()
        text = json.dumps(payload) + "\n"
    else:
        text = traj.to_csv()
    _emit(text, args.out)
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    ics = _ics(args, cfg.n)
    icfg = _icfg(args)
    report, _, _, _ = harness.run_compare(
        cfg, ics, icfg.t_max, args.threshold, dt=icfg.dt, sample_every=icfg.sample_every,
        self_consistent=args.self_consistent, out=args.out)
    if args.format == "json":
        sys.stdout.write(report.to_json() + "\n")
    else:
        for key, value in vars(report).items():
            if isinstance(value, list):
                value = ";".join(_cell(v) for v in value)
            sys.stdout.write(f"{key},{_cell(value)}\n")
    return 0


def cmd_repro_n2(args) -> int:
    summary, text = harness.repro_n2(args.out, compare=not args.no_compare,
                                     horizon=args.t_max, dt=args.dt)
    sys.stdout.write(text)
    if args.format == "json" and args.out:
        Path(args.out, "n2_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="number of moving particles N")
    common.add_argument("--epsilon", type=float, default=0.0, help="quartic coupling")
    common.add_argument("--q0", type=_floats, help="comma list of Q_k(0)")
    common.add_argument("--p0", type=_floats, help="comma list of Qdot_k(0)")
    common.add_argument("--ics-file", help="file with one 'Q_k(0) Qdot_k(0)' line per mode")
    common.add_argument("--t-max", type=float, default=100.0)
    common.add_argument("--dt", type=float, default=1e-3)
    common.add_argument("--samples", type=int, help="number of output sample intervals")
    common.add_argument("--resonance-tol", type=float, default=1e-9)
    common.add_argument("--self-consistent", action="store_true",
                        help="solve the frequency shifts self-consistently")
    common.add_argument("--out", help="output path (directory for repro-n2)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(
        prog="fpu-lindstedt",
        description="First-order Lindstedt series for the fixed-end FPU-beta chain.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="harmonic frequencies")
    p = sub.add_parser("coupling", parents=[common], help="coupling coefficients")
    p.add_argument("--indices", help="k,l,m,n (1-based); default lists all nonzero entries")
    sub.add_parser("rho", parents=[common], help="frequency shifts")
    p = sub.add_parser("series", parents=[common], help="evaluate the series on a grid")
    p.add_argument("--terms", action="store_true", help="dump the retained-term table instead")
    p = sub.add_parser("integrate", parents=[common], help="numerical reference solution")
    p.add_argument("--method", choices=("rk4", "leapfrog"), default="rk4")
    p.add_argument("--energy", action="store_true", help="record H(t)")
    p = sub.add_parser("compare", parents=[common], help="series vs numerical solution")
    p.add_argument("--threshold", type=float, default=harness.DEFAULT_THRESHOLD)
    p = sub.add_parser("repro-n2", parents=[common], help="reproduce the N = 2 example")
    p.add_argument("--no-compare", action="store_true", help="skip the numerical comparison")
    return parser


COMMANDS = {
    "spectrum": cmd_spectrum,
    "coupling": cmd_coupling,
    "rho": cmd_rho,
    "series": cmd_series,
    "integrate": cmd_integrate,
    "compare": cmd_compare,
    "repro-n2": cmd_repro_n2,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (BlowUpError, ConvergenceError, FloatingPointError, ValueError) as exc:
        print(f"{parser.prog}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
