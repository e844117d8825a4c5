"""Command-line interface.

Exit status: 0 on success, 1 on usage errors, 2 when an estimate cannot be
made (no crossing, failed verification, failed regression row).
"""

from __future__ import annotations

import argparse
import json
import re
import sys

import numpy as np

from . import analytic, reproduce
from .analytic import AnalyticError
from .graphstate import GraphStateError, verify_fusion
from .lattice import NAMES, LatticeError, LayoutError, build_named, validate
from .lattice.build import _BETHE
from .lattice.unitcell import EDGE_KINDS
from .percolate import (
    DEFAULT_GRID,
    DEFAULT_SEED,
    DEFAULT_WRAP_RULE,
    ORDER_PARAMS,
    SweepError,
    nz_bond_sweep,
    nz_site_bond_sweep,
)
from .threshold import METHODS, Boundary, ThresholdError, estimate_threshold, intersect, trace_boundary

USAGE, FAILURE = 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


# -- argument types ---------------------------------------------------------


def extents_arg(text: str) -> tuple[int, ...]:
    if not re.fullmatch(r"\d+(x\d+)*", text):
        raise argparse.ArgumentTypeError(f"extents must look like 64x64, got {text!r}")
    return tuple(int(x) for x in text.split("x"))


def int_range_arg(text: str) -> list[int]:
    """``2..20``, ``3,5,7`` or a single integer."""
    m = re.fullmatch(r"(\d+)\.\.(\d+)", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo > hi:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}") from None


def q_grid_arg(text: str) -> list[float]:
    """``lo:hi:count`` (inclusive linspace) or a comma list."""
    try:
        if ":" in text:
            lo, hi, count = text.split(":")
            return [float(x) for x in np.linspace(float(lo), float(hi), int(count))]
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad q grid {text!r}") from None


def probability_arg(text: str) -> float:
    x = float(text)
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return x


def positive_int(text: str) -> int:
    x = int(text)
    if x < 1:
        raise argparse.ArgumentTypeError(f"{text} must be >= 1")
    return x


# -- helpers ------------------------------------------------------------------


def _lattice(args):
    name = args.lattice
    if name not in NAMES and not _BETHE.match(name) and not name.startswith("b103-"):
        raise UsageError(f"unknown lattice {name!r}; choose from {', '.join(NAMES)}")
    return build_named(name, args.extents)


def _emit(args, text: str, summary: str) -> None:
    out = getattr(args, "out", None)
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"cannot write {out}: {exc.strerror}") from None
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)


def _modified_masks(lat, enabled: bool):
    """Site occupation on colored nodes only, blue bonds always open."""
    if not enabled:
        return None, None
    site_mask = np.asarray(lat.colors) > 0
    fixed = np.asarray(lat.edge_kind) == EDGE_KINDS.index("blue")
    return site_mask, fixed


def _params(text: str) -> tuple[str, ...]:
    names = tuple(x.strip() for x in text.split(",") if x.strip())
    for n in names:
        if n not in ORDER_PARAMS:
            raise UsageError(f"unknown order parameter {n!r}")
    return names


# -- subcommands ------------------------------------------------------------


def cmd_validate(args) -> int:
    lat = _lattice(args)
    rep = validate(lat)
    doc = {
        "lattice": lat.name,
        "extents": lat.label,
        "nodes": rep.n_nodes,
        "edges": rep.n_edges,
        "degree_histogram": {str(k): v for k, v in rep.degree_histogram.items()},
        "color_census": {str(k): v for k, v in rep.color_census.items()},
        "kind_census": rep.kind_census,
        "connected": bool(rep.connected),
        "violations": rep.violations,
    }
    status = "ok" if rep.ok else f"{len(rep.violations)} violations"
    _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n",
          f"{lat.name} {lat.label}: {rep.n_nodes} nodes, {rep.n_edges} edges, {status}")
    return 0 if rep.ok else FAILURE


def cmd_sweep(args) -> int:
    lat = _lattice(args)
    kw = dict(grid=args.grid, workers=args.workers, wrap_rule=args.wrap_rule)
    params = _params(args.params)
    if args.command == "site-bond-sweep":
        site_mask, fixed = _modified_masks(lat, args.modified)
        curve = nz_site_bond_sweep(lat, args.q, params, args.trials, args.seed,
                                   site_mask=site_mask, fixed_bonds=fixed, **kw)
    else:
        curve = nz_bond_sweep(lat, params, args.trials, args.seed, **kw)
    _emit(args, curve.to_csv(),
          f"{args.command}: {lat.name} {lat.label}, {args.trials} trials, {len(curve.p)} grid points")
    return 0


def cmd_threshold(args) -> int:
    lat = _lattice(args)
    site_mask, fixed = _modified_masks(lat, args.modified)
    est = estimate_threshold(lat, args.trials, args.seed, args.method, grid=args.grid,
                             workers=args.workers, wrap_rule=args.wrap_rule, q=args.q,
                             site_mask=site_mask, fixed_bonds=fixed)
    _emit(args, est.to_json(),
          f"p_c = {est.p_c:.5f} [{est.ci_low:.5f}, {est.ci_high:.5f}] ({est.method})")
    return 0


def _boundary(args) -> Boundary:
    lat = _lattice(args)
    site_mask, fixed = _modified_masks(lat, args.modified)
    return trace_boundary(lat, args.q_grid, args.trials, args.seed, grid=args.grid,
                          workers=args.workers, wrap_rule=args.wrap_rule,
                          site_mask=site_mask, fixed_bonds=fixed)


def cmd_boundary(args) -> int:
    b = _boundary(args)
    text = b.to_json() if args.format == "json" else b.to_csv()
    _emit(args, text, f"boundary: {len(b)} points, {len(b.skipped)} q values skipped")
    return 0


def cmd_intersect(args) -> int:
    if args.boundary:
        try:
            with open(args.boundary) as fh:
                b = Boundary.from_csv(fh.read())
        except OSError as exc:
            raise UsageError(f"cannot read {args.boundary}: {exc.strerror}") from None
        except ValueError as exc:
            raise UsageError(f"{args.boundary}: {exc}") from None
    else:
        if args.lattice is None or args.q_grid is None:
            raise UsageError("give --boundary or both --lattice and --q-grid")
        b = _boundary(args)
    res = intersect(b, args.k)
    doc = {"k": args.k, "p": res.p, "q": res.q, "p_low": res.p_low, "p_high": res.p_high,
           "lattice": b.lattice, "extents": b.extents}
    _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n",
          f"p* = {res.p:.5f}, q* = {res.q:.5f} (k={args.k})")
    return 0


def cmd_analytic(args) -> int:
    kind = args.kind
    if kind in ("loss-lambda", "loss-eta"):
        ns = args.n or list(range(2, 21))
        if kind == "loss-lambda":
            if args.eta0 is None:
                raise UsageError("loss-lambda needs --eta0")
            text = analytic.lambda_bound_csv(args.eta0, ns)
            best = analytic.optimal_n(n_range=ns, eta0=args.eta0)
        else:
            if args.lam is None:
                raise UsageError("loss-eta needs --lambda")
            text = analytic.eta_bound_csv(args.lam, ns)
            best = analytic.optimal_n(args.lam, ns)
        _emit(args, text, f"minimum at n={best[0]}: {float(best[1]):.6g}")
        return 0
    if kind == "optimal-n":
        ns = args.n or list(range(2, 21))
        if (args.lam is None) == (args.eta0 is None):
            raise UsageError("optimal-n needs exactly one of --lambda and --eta0")
        n, bound = analytic.optimal_n(args.lam, ns, eta0=args.eta0)
        doc = {"n": n, "bound": float(bound), "impossible": bound.impossible}
    else:
        n = _single(args.n, "--n") if kind in ("bethe", "multinode", "tree", "branching") else None
        if kind == "bethe":
            doc = {"n": n, "value": analytic.bethe_lower_bound(n)}
        elif kind == "multinode":
            if args.m is None:
                raise UsageError("multinode needs --m")
            doc = {"n": n, "m": args.m, "value": analytic.multinode_lower_bound(n, args.m)}
        elif kind == "inf-103b":
            doc = {"precision": args.precision,
                   "value": analytic.inf_mod103b_threshold(args.precision)}
        elif kind == "tree":
            if args.g is None:
                raise UsageError("tree needs --g")
            doc = {"n": n, "g": args.g, "value": analytic.periodic_tree_threshold(n, args.g)}
        else:
            spec = analytic.periodic_tree_spec(n, args.g) if args.g else analytic.bethe_spec(n)
            doc = {"n": n, "g": args.g,
                   "value": analytic.branching_threshold(spec, args.precision)}
    _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n",
          ", ".join(f"{k}={v}" for k, v in sorted(doc.items())))
    return 0


def _single(ns, flag: str) -> int:
    if not ns or len(ns) != 1:
        raise UsageError(f"{flag} takes a single integer here")
    return ns[0]


def cmd_verify(args) -> int:
    rep = verify_fusion(args.layouts, args.seed, args.max_fusions, args.trees)
    doc = {"layouts": rep.layouts, "assignments": rep.assignments,
           "dominance_failures": len(rep.dominance_failures),
           "equality_failures": len(rep.equality_failures), "ok": rep.ok}
    _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n",
          f"verify-fusion: {rep.layouts} layouts, {rep.assignments} outcome assignments, "
          f"{'ok' if rep.ok else 'FAILED'}")
    return 0 if rep.ok else FAILURE


def cmd_reproduce(args) -> int:
    results = reproduce.run(args.seed, args.workers, args.skip_slow, args.only, echo=print)
    bad = [r for r in results if not r.ok]
    print(f"{len(results) - len(bad)}/{len(results)} rows within tolerance")
    return FAILURE if bad else 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fusionperc", description="Percolation thresholds for fusion-based lattices.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, lattice_required=True):
        sp.add_argument("--lattice", required=lattice_required,
                        help=f"one of {', '.join(NAMES)}")
        sp.add_argument("--extents", type=extents_arg, default=None,
                        help="cells per dimension, e.g. 64x64 (default: about 1e6 bonds)")
        sp.add_argument("--out", help="output file (default: stdout)")

    def mc(sp):
        sp.add_argument("--trials", type=positive_int, default=100)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--grid", type=float, default=DEFAULT_GRID, help="p-grid resolution")
        sp.add_argument("--workers", type=positive_int, default=1)
        sp.add_argument("--wrap-rule", default=DEFAULT_WRAP_RULE,
                        help="mean, any, all or axisN")

    lat = sub.add_parser("lattice", help="lattice utilities")
    lsub = lat.add_subparsers(dest="action", required=True, parser_class=_Parser)
    v = lsub.add_parser("validate", help="census and invariant check")
    common(v)
    v.set_defaults(func=cmd_validate)

    for name, what in (("sweep", "bond"), ("site-bond-sweep", "site-bond")):
        sp = sub.add_parser(name, help=f"Newman-Ziff {what} sweep to CSV")
        common(sp)
        mc(sp)
        sp.add_argument("--params", default=",".join(ORDER_PARAMS))
        if name == "site-bond-sweep":
            sp.add_argument("--q", type=probability_arg, required=True)
            sp.add_argument("--modified", action="store_true",
                            help="occupy only colored sites; blue bonds always open")
        sp.set_defaults(func=cmd_sweep)

    t = sub.add_parser("threshold", help="estimate p_c with a bootstrap interval")
    common(t)
    mc(t)
    t.add_argument("--method", choices=METHODS, default="wrap_crossing")
    t.add_argument("--q", type=probability_arg, default=1.0)
    t.add_argument("--modified", action="store_true")
    t.set_defaults(func=cmd_threshold)

    b = sub.add_parser("boundary", help="site-bond critical boundary p_c(q)")
    common(b)
    mc(b)
    b.add_argument("--q-grid", type=q_grid_arg, required=True, help="lo:hi:count or a,b,c")
    b.add_argument("--modified", action="store_true")
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.set_defaults(func=cmd_boundary)

    i = sub.add_parser("intersect", help="crossing of a boundary with q = p^k")
    common(i, lattice_required=False)
    mc(i)
    i.add_argument("--boundary", help="boundary CSV from the boundary command")
    i.add_argument("--q-grid", type=q_grid_arg)
    i.add_argument("--modified", action="store_true")
    i.add_argument("--k", type=int, default=2)
    i.set_defaults(func=cmd_intersect)

    a = sub.add_parser("analytic", help="closed-form thresholds and loss bounds")
    a.add_argument("kind", choices=("bethe", "multinode", "inf-103b", "tree", "branching",
                                    "loss-lambda", "loss-eta", "optimal-n"))
    a.add_argument("--n", type=int_range_arg, help="integer, list or range like 2..20")
    a.add_argument("--m", type=int)
    a.add_argument("--g", type=int)
    a.add_argument("--lambda", dest="lam", type=float)
    a.add_argument("--eta0", type=float)
    a.add_argument("--precision", type=float, default=1e-9)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analytic)

    vf = sub.add_parser("verify-fusion", help="rewrite-vs-relay connectivity checks")
    vf.add_argument("--layouts", type=positive_int, default=100)
    vf.add_argument("--trees", type=int, default=20)
    vf.add_argument("--max-fusions", type=positive_int, default=8)
    vf.add_argument("--seed", type=int, default=DEFAULT_SEED)
    vf.add_argument("--out")
    vf.set_defaults(func=cmd_verify)

    r = sub.add_parser("reproduce", help="regression table of the reference values")
    r.add_argument("--seed", type=int, default=DEFAULT_SEED)
    r.add_argument("--workers", type=positive_int, default=1)
    r.add_argument("--skip-slow", action="store_true")
    r.add_argument("--only", nargs="*", help="substring filter on row names")
    r.set_defaults(func=cmd_reproduce)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, LatticeError, LayoutError, AnalyticError, GraphStateError) as exc:
        print(f"fusionperc: error: {exc}", file=sys.stderr)
        return USAGE
    except (ThresholdError, SweepError) as exc:
        print(f"fusionperc: estimation failed: {exc}", file=sys.stderr)
        return FAILURE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
