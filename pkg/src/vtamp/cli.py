"""Command line entry point: phase-demo, verify-model, solve, bench-scaling."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .bench import fit_slope, rows_to_csv, rows_to_json, scaling_experiment
from .phase import UniqueEstConfig, grid, single_run_distribution, uniqueest_distribution
from .registers import read_instance
from .solver import solve_hhl, solve_vtaa
from .stategen import SolverConfig, vt_stategen
from .vtmodel import stopping_profile, validate


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_phase_demo(args) -> str:
    cfg = UniqueEstConfig.make(args.bits, args.eps, args.mode, seed=args.seed)
    p = single_run_distribution(args.lam, args.bits)
    q = uniqueest_distribution(args.lam, cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "p", "q"])
    for x, a, b in zip(grid(args.bits), p, q):
        w.writerow([f"{x:.10g}", f"{a:.12g}", f"{b:.12g}"])
    return buf.getvalue()


def _config(args, kappa: float) -> SolverConfig:
    return SolverConfig.make(kappa, args.eps_final, seed=args.seed, mode=args.uniqueest)


def cmd_verify_model(args) -> str:
    inst, b = read_instance(args.instance)
    gen = vt_stategen(inst, b, _config(args, args.kappa or inst.kappa))
    out = {"validation": validate(gen.vta).to_dict(), "profile": stopping_profile(gen.vta).to_dict()}
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def cmd_solve(args) -> str:
    inst, b = read_instance(args.instance)
    kappa = args.kappa or inst.kappa
    cfg = _config(args, kappa)
    if args.method == "vtaa":
        _, rep = solve_vtaa(inst, b, cfg)
    else:
        _, rep = solve_hhl(inst, b, kappa, cfg.eps, args.eps_final, seed=args.seed)
    d = rep.to_dict()
    if args.out == "json":
        return json.dumps(d, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "value"])
    for key in ("method", "fidelity", "cost", "accepted", "attempts", "accept_rate", "accept_prob", "p_succ", "t_av",
                "fourier_accept"):
        w.writerow([key, d[key]])
    for name, count in d["ledger"]["subroutine_counts"].items():
        w.writerow([f"ledger.{name}", count])
    for row in d["bounds"]:
        w.writerow([f"bound.{row['name']}", f"{row['observed']:.6g} / {row['bound']:.6g} / {row['passed']}"])
    return buf.getvalue()


def cmd_bench_scaling(args) -> str:
    rows = scaling_experiment(args.methods.split(","), _floats(args.kappas), args.n, args.trials, seed=args.seed,
                              spectrum=args.spectrum, eps_final=args.eps_final, b_mode=args.b_mode)
    text = rows_to_csv(rows) if args.format == "csv" else rows_to_json(rows)
    if args.fit:
        for meth in args.methods.split(","):
            fit = fit_slope([r for r in rows if r.method == meth])
            print(f"{meth} slope {fit.slope:.3f}", file=sys.stderr)
    return text


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vtamp")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase-demo", help="single-run and UniqueEst distributions as CSV")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--bits", type=int, default=5)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--mode", choices=["faithful", "idealized"], default="idealized")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_phase_demo)

    for name, fn, hlp in (("verify-model", cmd_verify_model, "validate the staged generator on an instance"),
                          ("solve", cmd_solve, "solve A x = b from an instance file")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--instance", required=True)
        p.add_argument("--kappa", type=float, default=None, help="defaults to the instance's kappa")
        p.add_argument("--eps-final", type=float, default=0.2)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--uniqueest", choices=["faithful", "idealized"], default="idealized")
        p.set_defaults(func=fn)
        if name == "solve":
            p.add_argument("--method", choices=["vtaa", "hhl"], default="vtaa")
            p.add_argument("--out", choices=["json", "csv"], default="json")

    p = sub.add_parser("bench-scaling", help="cost against kappa for both solvers")
    p.add_argument("--methods", default="vtaa,hhl")
    p.add_argument("--kappas", default="4,8,16,32,64")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--spectrum", choices=["log-uniform", "bimodal", "clustered"], default="bimodal")
    p.add_argument("--b-mode", choices=["random", "adversarial", "image"], default="image")
    p.add_argument("--eps-final", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", dest="out_path", default="-", help="output file, '-' for stdout")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--fit", action="store_true", help="print fitted slopes to stderr")
    p.set_defaults(func=cmd_bench_scaling)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    path = getattr(args, "out_path", "-")
    if path != "-":
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
