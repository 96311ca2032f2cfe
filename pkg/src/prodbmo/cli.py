"""Command-line surface: norms, transforms, operators, and experiment runs.

All structured results are JSON (sorted keys, no timestamps); experiment
sweeps emit CSV tables whose columns include the tolerance or calibrated
constant they assert, so the tables are self-verifying.  Stochastic
subcommands require an explicit seed.  Files are written atomically
(temp + rename).

Exit codes: 0 success, 2 validation error, 3 numerical non-convergence,
64 unknown subcommand.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import calibration
from .core import (
    DyadicInterval,
    DyadicRect,
    GridFunction2D,
    HaarSpectrum2D,
    ProjectionSelector,
    apply_projection,
    haar_forward_2d,
    haar_inverse_2d,
)
from .errors import NonConvergenceError, ValidationError
from .hilbert import (
    StepFunction1D,
    analytic_hilbert_step,
    mc_hilbert,
)
from .linop import assemble, operator_norm
from .norms import (
    bmo_d_norm_sq,
    bmo_d_norm_sq_bruteforce,
    bmo_rect_norm_sq,
    lmo_beta_char_norm,
    lmo_char_details,
    lmo_d_norm,
    lmo_directional_norm,
)
from .paraproducts import (
    PI,
    paraproduct,
    nine_part_sum,
    sigma1_k,
    sigma_k,
    signature_by_name,
)
from .shifts import iterated_commutator_apply, commutator_part_norm_report, shift_matrix

USAGE = """usage: prodbmo <command> [options]

commands:
  haar         forward/inverse Haar transform of a function file
  bmo          product BMO norm (exact / brute / rect)
  lmo          logarithmic mean oscillation norms (def / char / dir / beta)
  paraproduct  apply a paraproduct to a function file
  opnorm       operator norm of a named operator
  sigma        coefficient rearrangement sigma_k / one-axis variant
  commutator   iterated shift commutator (dyadic) or block norm report
  hilbert      Monte-Carlo averaged-shift transform or analytic oracle
  experiment   deterministic experiment sweeps emitting CSV tables
"""

EXPERIMENTS = (
    "growth",
    "paraproduct-bound",
    "lemma-core",
    "nine-part",
    "commutator-bound",
    "lmo-equivalence",
)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def emit(obj, output: str = None) -> None:
    text = dump_json(obj)
    if output:
        atomic_write(output, text)
    else:
        sys.stdout.write(text)


def save_function_file(path: str, depth, values, kind: str = "grid") -> None:
    payload = {
        "depth": [int(depth[0]), int(depth[1])],
        "kind": kind,
        "values": np.asarray(values, dtype=float).reshape(-1).tolist(),
    }
    atomic_write(path, dump_json(payload))


def load_function_file(path: str):
    with open(path) as fh:
        payload = json.load(fh)
    depth = tuple(int(v) for v in payload["depth"])
    values = np.asarray(payload["values"], dtype=float)
    n1, n2 = 1 << depth[0], 1 << depth[1]
    if values.size != n1 * n2:
        raise ValidationError(
            f"function file holds {values.size} values, expected {n1 * n2}"
        )
    kind = payload.get("kind", "grid")
    return depth, values.reshape(n1, n2), kind


def load_grid(path: str) -> GridFunction2D:
    depth, values, kind = load_function_file(path)
    if kind == "spectrum":
        return haar_inverse_2d(HaarSpectrum2D(depth, values))
    return GridFunction2D(depth, values)


def load_spectrum(path: str) -> HaarSpectrum2D:
    depth, values, kind = load_function_file(path)
    if kind == "spectrum":
        return HaarSpectrum2D(depth, values)
    return haar_forward_2d(GridFunction2D(depth, values))


def parse_pair(text: str):
    parts = [int(p) for p in text.replace(" ", "").split(",")]
    if len(parts) != 2:
        raise ValidationError(f"expected two comma-separated integers, got {text!r}")
    return tuple(parts)


def write_csv(path: str, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    atomic_write(path, "\n".join(lines) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_haar(args) -> int:
    depth, values, kind = load_function_file(args.input)
    if args.forward:
        spec = haar_forward_2d(GridFunction2D(depth, values))
        save_function_file(args.output, depth, spec.coeffs, kind="spectrum")
    else:
        grid = haar_inverse_2d(HaarSpectrum2D(depth, values))
        save_function_file(args.output, depth, grid.values, kind="grid")
    emit({"config": {"input": args.input, "output": args.output,
                     "direction": "forward" if args.forward else "inverse"},
          "depth": list(depth)})
    return 0


def cmd_bmo(args) -> int:
    phi = load_spectrum(args.input)
    restrict = None
    if args.restrict:
        j1, i1, j2, i2 = (int(v) for v in args.restrict.split(","))
        restrict = DyadicRect(DyadicInterval(j1, i1), DyadicInterval(j2, i2))
    if args.method == "exact":
        value, mask = bmo_d_norm_sq(phi, restrict, rel_tol=args.tolerance)
        cells = [[int(r), int(c)] for r, c in zip(*np.nonzero(mask))]
        result = {"norm_sq": value, "omega_cells": cells}
    elif args.method == "brute":
        result = {"norm_sq": bmo_d_norm_sq_bruteforce(phi, restrict)}
    else:
        result = {"norm_sq": bmo_rect_norm_sq(phi)}
    result["config"] = {"input": args.input, "method": args.method,
                        "restrict": args.restrict, "tolerance": args.tolerance}
    emit(result, args.output)
    return 0


def cmd_lmo(args) -> int:
    phi = load_spectrum(args.input)
    if args.method == "def":
        result = {"norm": lmo_d_norm(phi)}
    elif args.method == "char":
        value, rect = lmo_char_details(phi)
        result = {
            "norm_sq_weighted": value,
            "attaining_rect": [rect.s_interval.level, rect.s_interval.index,
                               rect.t_interval.level, rect.t_interval.index],
        }
    elif args.method == "dir":
        result = {"norm": lmo_directional_norm(phi, args.axis)}
    else:
        beta = parse_pair(args.beta)
        result = {"norm_sq_weighted": lmo_beta_char_norm(phi, beta)}
    result["config"] = {"input": args.input, "method": args.method,
                        "axis": args.axis, "beta": args.beta}
    emit(result, args.output)
    return 0


def cmd_paraproduct(args) -> int:
    sig = signature_by_name(args.sig)
    phi = load_spectrum(args.symbol)
    f = load_grid(args.input)
    out = paraproduct(sig, phi, f)
    save_function_file(args.output, out.depth, out.values, kind="grid")
    emit({"config": {"sig": args.sig, "symbol": args.symbol,
                     "input": args.input, "output": args.output},
          "output_l2_sq": out.norm_l2_sq()})
    return 0


def cmd_opnorm(args) -> int:
    if args.kind == "paraproduct":
        sig = signature_by_name(args.sig)
        phi = load_spectrum(args.symbol)
        op = assemble(lambda f: paraproduct(sig, phi, f), phi.depth, space="grid")
        norm = operator_norm(op, tol=args.tolerance)
        config = {"kind": args.kind, "sig": args.sig, "symbol": args.symbol}
    elif args.kind == "shift":
        depth = parse_pair(args.depth)
        norm = operator_norm(shift_matrix(depth, args.axis), tol=args.tolerance)
        config = {"kind": args.kind, "axis": args.axis, "depth": args.depth}
    else:  # projection
        depth = parse_pair(args.depth)
        kind, idx = args.selector.split(":")
        j1, j2 = parse_pair(idx)
        sel = {
            "E": ProjectionSelector.expectation,
            "Q": ProjectionSelector.tail,
            "D": ProjectionSelector.difference,
        }[kind](j1, j2)
        op = assemble(lambda c: apply_projection(c, sel), depth, space="spectrum")
        norm = operator_norm(op, tol=args.tolerance)
        config = {"kind": args.kind, "selector": args.selector, "depth": args.depth}
    emit({"operator_norm": norm, "config": config}, args.output)
    return 0


def cmd_sigma(args) -> int:
    b = load_spectrum(args.input)
    if args.axis is None:
        k = parse_pair(args.k)
        out = sigma_k(b, k)
    else:
        if args.axis != 1:
            raise ValidationError("the one-axis rearrangement aggregates axis 1")
        out = sigma1_k(b, int(args.k))
    save_function_file(args.output, out.depth, out.coeffs, kind="spectrum")
    emit({"config": {"input": args.input, "k": args.k, "axis": args.axis,
                     "output": args.output},
          "hh_energy": out.total_energy()})
    return 0


def cmd_commutator(args) -> int:
    phi = load_grid(args.phi)
    b = load_grid(args.b)
    if args.mode == "dyadic":
        out = iterated_commutator_apply(phi, b)
        save_function_file(args.output, out.depth, out.values, kind="grid")
        emit({"config": {"mode": args.mode, "phi": args.phi, "b": args.b,
                         "output": args.output},
              "ambient_depth": list(out.depth),
              "output_l2_sq": out.norm_l2_sq()})
    else:
        rows = commutator_part_norm_report(phi, b)
        emit({"config": {"mode": args.mode, "phi": args.phi, "b": args.b},
              "rows": rows}, args.output)
    return 0


def load_step_function(path: str) -> StepFunction1D:
    with open(path) as fh:
        payload = json.load(fh)
    return StepFunction1D(payload["breakpoints"], payload["values"])


def cmd_hilbert(args) -> int:
    f = load_step_function(args.function)
    xs = [float(v) for v in args.x.replace(" ", "").split(",")]
    if args.mode == "oracle":
        result = {"points": xs, "values": [analytic_hilbert_step(f, x) for x in xs]}
    else:
        if args.seed is None:
            raise ValidationError("Monte-Carlo mode requires --seed")
        pairs = mc_hilbert(f, xs, args.samples, args.seed,
                           k_coarse=args.k_coarse, k_fine=args.k_fine)
        result = {
            "points": xs,
            "estimates": [p[0] for p in pairs],
            "stderr": [p[1] for p in pairs],
        }
    result["config"] = {
        "mode": args.mode, "function": args.function, "x": args.x,
        "samples": args.samples, "seed": args.seed,
        "k_coarse": args.k_coarse, "k_fine": args.k_fine,
    }
    emit(result, args.output)
    return 0


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _experiment_growth(depth, trials, seed):
    from .core import PrefixTable, dyadic_rect_mean
    from .norms import extremal_bmo_function

    bound = calibration.CALIBRATED["extremal_growth_bound"]
    rows = []
    d = (depth, depth)
    for j1 in range(1, depth + 1):
        for j2 in range(1, depth + 1):
            r = DyadicRect.from_levels(j1, 0, j2, 0)
            b = extremal_bmo_function(r, d)
            bnorm = math.sqrt(bmo_d_norm_sq(haar_forward_2d(b))[0])
            pt = PrefixTable(b)
            for k1 in range(depth + 1):
                for k2 in range(depth + 1):
                    worst = max(
                        abs(dyadic_rect_mean(pt, DyadicRect.from_levels(k1, p1, k2, p2)))
                        for p1 in range(1 << k1)
                        for p2 in range(1 << k2)
                    )
                    ratio = worst / ((k1 + 1) * (k2 + 1) * bnorm)
                    rows.append([j1, j2, k1, k2, ratio, bound, int(ratio <= bound)])
    header = ["rect_j1", "rect_j2", "gen_k1", "gen_k2", "ratio", "bound", "ok"]
    return header, rows


def _experiment_paraproduct_bound(depth, trials, seed):
    bound = calibration.CALIBRATED["pi_bound_constant"]
    rng = np.random.default_rng(seed)
    rows = []
    d = (depth, depth)
    for t in range(trials):
        phi = calibration.random_hh_symbol(d, rng)
        b = haar_inverse_2d(calibration.random_hh_symbol(d, rng))
        denom = lmo_d_norm(phi) * math.sqrt(bmo_d_norm_sq(haar_forward_2d(b))[0])
        num = math.sqrt(bmo_d_norm_sq(haar_forward_2d(paraproduct(PI, phi, b)))[0])
        ratio = num / denom if denom > 0 else 0.0
        rows.append([t, ratio, bound, int(ratio <= bound)])
    return ["trial", "ratio", "bound", "ok"], rows


def _experiment_lemma_core(depth, trials, seed):
    rng = np.random.default_rng(seed)
    tol = 1e-8
    d = (depth, depth)
    hh = ProjectionSelector.tail(0, 0)
    rows = []
    for t in range(trials):
        b = calibration.random_hh_symbol(d, rng)
        for k1 in range(depth + 1):
            for k2 in range(depth + 1):
                ek = ProjectionSelector.expectation(k1, k2)
                lhs_op = assemble(
                    lambda f: paraproduct(
                        PI, b, haar_inverse_2d(apply_projection(haar_forward_2d(f), ek))
                    ),
                    d,
                )
                sb = sigma_k(b, (k1, k2))
                rhs_op = assemble(
                    lambda f: paraproduct(
                        PI, sb, haar_inverse_2d(apply_projection(haar_forward_2d(f), hh))
                    ),
                    d,
                )
                lhs = operator_norm(lhs_op)
                rhs = operator_norm(rhs_op)
                rows.append(
                    [t, k1, k2, lhs, rhs, abs(lhs - rhs), tol,
                     int(abs(lhs - rhs) <= tol)]
                )
    header = ["trial", "k1", "k2", "lhs_norm", "rhs_norm", "abs_diff", "tol", "ok"]
    return header, rows


def _experiment_nine_part(depth, trials, seed):
    rng = np.random.default_rng(seed)
    tol = 1e-10
    d = (depth, depth)
    rows = []
    for t in range(trials):
        phi = calibration.random_hh_symbol(d, rng)
        f = haar_inverse_2d(calibration.random_hh_symbol(d, rng))
        total = nine_part_sum(phi, f)
        product = haar_inverse_2d(phi).multiply(f)
        err = float(np.abs(total.values - product.values).max())
        rows.append([t, err, tol, int(err <= tol)])
    return ["trial", "max_abs_err", "tol", "ok"], rows


def _experiment_commutator_bound(depth, trials, seed):
    bound = calibration.CALIBRATED["shift_commutator_bound"]
    rng = np.random.default_rng(seed)
    d = (depth, depth)
    rows = []
    for t in range(trials):
        phi = haar_inverse_2d(calibration.random_hh_symbol(d, rng))
        b = haar_inverse_2d(calibration.random_hh_symbol(d, rng))
        denom = lmo_d_norm(haar_forward_2d(phi)) * math.sqrt(
            bmo_d_norm_sq(haar_forward_2d(b))[0]
        )
        out = iterated_commutator_apply(phi, b)
        num = math.sqrt(bmo_d_norm_sq(haar_forward_2d(out))[0])
        ratio = num / denom if denom > 0 else 0.0
        rows.append([t, ratio, bound, int(ratio <= bound)])
    return ["trial", "ratio", "bound", "ok"], rows


def _experiment_lmo_equivalence(depth, trials, seed):
    try:
        lo, hi = calibration.lmo_ratio_interval(depth)
    except ValueError as exc:
        raise ValidationError(str(exc))
    rng = np.random.default_rng(seed)
    from .norms import lmo_char_norm

    d = (depth, depth)
    rows = []
    for t in range(trials):
        phi = calibration.random_hh_symbol(d, rng)
        ratio = lmo_char_norm(phi) / lmo_d_norm(phi) ** 2
        rows.append([t, ratio, lo, hi, int(lo <= ratio <= hi)])
    return ["trial", "ratio", "c1", "c2", "ok"], rows


def cmd_experiment(args) -> int:
    runner = {
        "growth": _experiment_growth,
        "paraproduct-bound": _experiment_paraproduct_bound,
        "lemma-core": _experiment_lemma_core,
        "nine-part": _experiment_nine_part,
        "commutator-bound": _experiment_commutator_bound,
        "lmo-equivalence": _experiment_lmo_equivalence,
    }[args.name]
    header, rows = runner(args.depth, args.trials, args.seed)
    write_csv(args.output, header, rows)
    ok = all(row[-1] == 1 for row in rows)
    emit({
        "config": {"experiment": args.name, "depth": args.depth,
                   "trials": args.trials, "seed": args.seed,
                   "output": args.output},
        "rows": len(rows),
        "all_ok": bool(ok),
    })
    return 0 if ok else 3


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prodbmo", usage=USAGE)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("haar")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--forward", action="store_true")
    mode.add_argument("--inverse", action="store_true")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_haar)

    p = sub.add_parser("bmo")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=["exact", "brute", "rect"], default="exact")
    p.add_argument("--restrict", help="j1,i1,j2,i2 of a restriction rectangle")
    p.add_argument("--tolerance", type=float, default=1e-13)
    p.add_argument("--output")
    p.set_defaults(func=cmd_bmo)

    p = sub.add_parser("lmo")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=["def", "char", "dir", "beta"], default="def")
    p.add_argument("--axis", type=int, default=1)
    p.add_argument("--beta", default="0,0")
    p.add_argument("--output")
    p.set_defaults(func=cmd_lmo)

    p = sub.add_parser("paraproduct")
    p.add_argument("--sig", required=True)
    p.add_argument("--symbol", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_paraproduct)

    p = sub.add_parser("opnorm")
    p.add_argument("--kind", choices=["paraproduct", "shift", "projection"],
                   required=True)
    p.add_argument("--sig", default="pi")
    p.add_argument("--symbol")
    p.add_argument("--axis", type=int, default=1)
    p.add_argument("--selector", default="Q:0,0")
    p.add_argument("--depth", default="2,2")
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--output")
    p.set_defaults(func=cmd_opnorm)

    p = sub.add_parser("sigma")
    p.add_argument("--input", required=True)
    p.add_argument("--k", required=True)
    p.add_argument("--axis", type=int)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_sigma)

    p = sub.add_parser("commutator")
    p.add_argument("--mode", choices=["dyadic", "report"], default="dyadic")
    p.add_argument("--phi", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_commutator)

    p = sub.add_parser("hilbert")
    p.add_argument("--mode", choices=["mc", "oracle"], required=True)
    p.add_argument("--function", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int)
    p.add_argument("--k-coarse", type=int, default=12)
    p.add_argument("--k-fine", type=int, default=12)
    p.add_argument("--output")
    p.set_defaults(func=cmd_hilbert)

    p = sub.add_parser("experiment")
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_experiment)

    return parser


def cli_dispatch(argv) -> int:
    argv = list(argv)
    known = {"haar", "bmo", "lmo", "paraproduct", "opnorm", "sigma",
             "commutator", "hilbert", "experiment"}
    if not argv or argv[0] in ("-h", "--help"):
        sys.stdout.write(USAGE)
        return 0
    if argv[0] not in known:
        sys.stderr.write(USAGE)
        return 64
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except NonConvergenceError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
