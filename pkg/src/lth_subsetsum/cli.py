"""Command line entry point.

Every command prints its fully resolved configuration as a ``# config`` line
first, so any run can be repeated from its own output. All randomness flows
from ``--seed``; ``--threads`` changes scheduling only, never results.

Exit status: 0 on success, 1 on invalid input, 2 on capacity or convergence
failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import netio
from .distributions import Distribution
from .errors import CapacityError, ConvergenceError
from .evalbench import (
    PER_WEIGHT_HEADER,
    SWEEP_HEADER,
    calibrate_C,
    density_check,
    lueker_sweep,
    per_weight_report,
    random_weight_target,
    sup_error_estimate,
)
from .gadgets import CSV_HEADER
from .pipeline import (
    DEFAULT_C,
    lower_bound_min_params,
    lower_bound_min_width,
    plan_summary,
    prune_to_approximate,
    width_plan,
)
from .subsetsum import SubsetSumInstance, estimate_coverage_probability, solve_subset_sum
from .tensor import normalize_network, random_network

FILE_GRAMMAR = netio.__doc__


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # malformed flags are validation errors: exit 1, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _dist(text: str) -> Distribution:
    try:
        return Distribution.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _shape(text: str) -> tuple[int, int]:
    try:
        r, c = text.lower().split("x")
        return int(r), int(c)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}") from exc


def _num(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def _csv_text(header, rows, footer=()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    for line in footer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _in_unit(name, v):
    if not 0.0 < v < 1.0:
        raise UsageError(f"--{name} must lie in (0, 1), got {v}")


def _require_file(path, flag):
    if path is None:
        raise UsageError(f"{flag} is required")
    if not Path(path).is_file():
        raise UsageError(f"{flag}: no such file {path}")
    return path


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="lth-subsetsum",
        description="Prune random ReLU networks onto targets via exact random subset sum.",
        epilog="Network and mask file grammar:\n" + FILE_GRAMMAR,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", default=None, help="output path (stdout when omitted)")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-target", parents=[common], help="random target network, normalized")
    g.add_argument("--widths", type=_ints, required=True)
    g.add_argument("--dist", type=_dist, default=Distribution.uniform())
    g.add_argument("--no-normalize", action="store_true")

    g = sub.add_parser("gen-random", parents=[common], help="random network with i.i.d. weights")
    g.add_argument("--widths", type=_ints, required=True)
    g.add_argument("--dist", type=_dist, default=Distribution.uniform())

    g = sub.add_parser("prune", parents=[common], help="prune a random net onto a target")
    g.add_argument("--target")
    g.add_argument("--eps", type=float, required=True)
    g.add_argument("--delta", type=float, required=True)
    g.add_argument("--C", type=float, default=None)
    g.add_argument("--calibration", help="JSON file from `calibrate` holding C")
    g.add_argument("--samples", type=int, default=10_000)
    g.add_argument("--out-dir", default="prune_out")

    g = sub.add_parser("eval", parents=[common], help="sphere-sampled sup error of a pruned net")
    g.add_argument("--target")
    g.add_argument("--random")
    g.add_argument("--masks")
    g.add_argument("--samples", type=int, default=10_000)

    g = sub.add_parser("solve", parents=[common], help="exact subset sum for one instance")
    g.add_argument("--values", type=_floats, required=True)
    g.add_argument("--target", type=float, required=True)
    g.add_argument("--tol", type=float, default=float("inf"))

    g = sub.add_parser("coverage", parents=[common], help="coverage probability of an interval")
    g.add_argument("--dist", type=_dist, default=Distribution.uniform())
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--eps", type=float, required=True)
    g.add_argument("--lo", type=float, default=-0.5)
    g.add_argument("--hi", type=float, default=0.5)
    g.add_argument("--trials", type=int, default=200)

    for name, helptext in (("sweep", "minimal n per eps and log fit"),
                           ("calibrate", "empirical constant C")):
        g = sub.add_parser(name, parents=[common], help=helptext)
        g.add_argument("--dist", type=_dist, default=Distribution.uniform())
        g.add_argument("--delta", type=float, required=True)
        g.add_argument("--lo", type=float, default=-0.5)
        g.add_argument("--hi", type=float, default=0.5)
        g.add_argument("--trials", type=int, default=200)
        g.add_argument("--n-max", type=int, default=26)
    sub.choices["sweep"].add_argument("--eps", type=_floats, required=True)
    sub.choices["calibrate"].add_argument("--eps", type=float, required=True)

    g = sub.add_parser("density-check", parents=[common], help="product-of-uniforms law checks")
    g.add_argument("--samples", type=int, default=100_000)

    g = sub.add_parser("bounds", parents=[common], help="lower-bound width and parameter count")
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--eps", type=float, required=True)

    g = sub.add_parser("per-weight", parents=[common], help="per-weight subset-sum experiment")
    g.add_argument("--target", help="network file; a random target is drawn when omitted")
    g.add_argument("--shape", type=_shape, default=(100, 10))
    g.add_argument("--scale", type=float, default=0.5)
    g.add_argument("--n", type=int, default=21)
    g.add_argument("--eps", type=float, default=0.01)
    g.add_argument("--dist", type=_dist, default=Distribution.uniform())
    return p


def _config(args) -> dict:
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if isinstance(v, Distribution):
            v = v.tag
        elif isinstance(v, tuple):
            v = list(v)
        cfg[k] = v
    return cfg


def _echo(cfg):
    print("# config " + json.dumps(cfg, sort_keys=True))


def cmd_gen_target(args):
    net = random_network(args.widths, args.dist, args.seed)
    if not args.no_normalize:
        net, _ = normalize_network(net)
    _emit(netio.dumps_network(net), args.out)


def cmd_gen_random(args):
    _emit(netio.dumps_network(random_network(args.widths, args.dist, args.seed)), args.out)


def _resolve_C(args) -> float:
    if args.C is not None and args.calibration:
        raise UsageError("give either --C or --calibration, not both")
    if args.calibration:
        return float(json.loads(Path(_require_file(args.calibration, "--calibration")).read_text())["C"])
    return DEFAULT_C if args.C is None else args.C


def cmd_prune(args, cfg):
    _in_unit("eps", args.eps)
    _in_unit("delta", args.delta)
    target = netio.load_network(_require_file(args.target, "--target"))
    C = _resolve_C(args)
    cfg["C"] = C
    _echo(cfg)
    normalized, scales = normalize_network(target)
    random_net, masks, report = prune_to_approximate(
        normalized, args.eps, args.delta, C, args.seed, args.samples, args.threads
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    netio.save_network(random_net, out / "random_net.json")
    netio.save_masks(masks, random_net.widths, out / "masks.json")
    (out / "report.csv").write_text(_csv_text(CSV_HEADER, report.csv_rows()))
    plan = width_plan(normalized.widths, args.eps, args.delta, C)
    summary = {
        "plan": plan_summary(plan),
        "target_scales": scales,
        "per_layer_errors": report.per_layer_errors,
        "nominal_bound": report.theoretical_budget,
        "achieved_bound": report.achieved_bound,
        "measured_sup_error": report.measured_sup_error,
        "infeasible_branches": report.infeasible_count,
        "within_eps": report.measured_sup_error <= args.eps,
    }
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    (out / "summary.json").write_text(text)
    sys.stdout.write(text)


def cmd_eval(args):
    f = netio.load_network(_require_file(args.target, "--target"))
    g = netio.load_network(_require_file(args.random, "--random"))
    m = netio.load_masks(_require_file(args.masks, "--masks"))
    f, scales = normalize_network(f)
    err = sup_error_estimate(f, (g, m), args.samples, args.seed)
    _emit(json.dumps({"measured_sup_error": err, "target_scales": scales}) + "\n", args.out)


def cmd_solve(args):
    sel = solve_subset_sum(SubsetSumInstance(args.values, args.target, args.tol))
    _emit(json.dumps({
        "indices": list(sel.indices), "achieved_sum": sel.achieved_sum,
        "abs_error": sel.abs_error, "feasible": sel.feasible,
    }) + "\n", args.out)


def cmd_coverage(args):
    prob, ci = estimate_coverage_probability(
        args.dist, args.n, args.eps, args.lo, args.hi, args.trials, args.seed, args.threads
    )
    _emit(json.dumps({"prob": prob, "ci_lo": ci[0], "ci_hi": ci[1]}) + "\n", args.out)


def cmd_sweep(args):
    _in_unit("delta", args.delta)
    rows, fit = lueker_sweep(args.eps, args.delta, args.dist, args.trials, args.seed,
                             args.lo, args.hi, args.n_max, args.threads)
    footer = [f"dist={args.dist.tag} interval=[{args.lo!r},{args.hi!r}] n_max={args.n_max}"]
    footer += [f"saturated eps={r.eps!r}" for r in rows if r.saturated]
    footer.append(f"fit n = slope*ln(1/eps) + intercept: slope={fit.slope!r} "
                  f"intercept={fit.intercept!r} r2={fit.r2!r}")
    _emit(_csv_text(SWEEP_HEADER, (r.csv_row() for r in rows), footer), args.out)


def cmd_calibrate(args):
    _in_unit("delta", args.delta)
    _in_unit("eps", args.eps)
    C = calibrate_C(args.delta, args.eps, args.dist, args.trials, args.seed,
                    args.lo, args.hi, args.n_max, args.threads)
    doc = {"C": C, "dist": args.dist.tag, "eps": args.eps, "delta": args.delta,
           "interval": [args.lo, args.hi], "trials": args.trials, "seed": args.seed}
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)


def cmd_density_check(args):
    _emit(json.dumps(density_check(args.samples, args.seed), indent=2) + "\n", args.out)


def cmd_bounds(args):
    if args.d < 1:
        raise UsageError("--d must be positive")
    doc = {"d": args.d, "eps": args.eps,
           "min_width": lower_bound_min_width(args.d, args.eps),
           "min_params": lower_bound_min_params(args.d, args.eps)}
    _emit(json.dumps(doc) + "\n", args.out)


def cmd_per_weight(args):
    _in_unit("eps", args.eps)
    if args.target:
        target = netio.load_network(_require_file(args.target, "--target"))
    else:
        target = random_weight_target(*args.shape, seed=args.seed, scale=args.scale)
    rows = per_weight_report(target, args.n, args.eps, args.dist, args.seed)
    within = sum(r[4] <= args.eps for r in rows)
    footer = [f"within_eps={within}/{len(rows)} coefficients={args.n * len(rows)}"]
    _emit(_csv_text(PER_WEIGHT_HEADER, rows, footer), args.out)


HANDLERS = {
    "gen-target": cmd_gen_target, "gen-random": cmd_gen_random, "eval": cmd_eval,
    "solve": cmd_solve, "coverage": cmd_coverage, "sweep": cmd_sweep,
    "calibrate": cmd_calibrate, "density-check": cmd_density_check,
    "bounds": cmd_bounds, "per-weight": cmd_per_weight,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 1
    cfg = _config(args)
    try:
        if args.command == "prune":
            cmd_prune(args, cfg)
        else:
            _echo(cfg)
            HANDLERS[args.command](args)
    except (CapacityError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
