"""Command-line entry point: ``interperc <subcommand> [options]``.

Exit codes: 0 success, 1 input error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys

from . import dataio
from .cascade import EnsemblePoint, estimate_pc_from_curve, layer_transitions, run_ensemble
from .dataio import ConfigError, DataError, RunSpec, SweepRecord
from .netgen import (ChainRecipe, FixedLayersRecipe, GenSpec, OverlapRecipe, OverlapSpec, TwoLayerRecipe)
from .theory import (ConvergenceError, DegreeDist, find_pc_first_order, find_theta_c, giant_fraction_theory,
                     pc_second_order, phase_point, poisson_dist, powerlaw_dist, solve_fixed_point)

log = logging.getLogger("interperc")

LAYER_NAMES = "ABCDEFGH"
PAPER_N = 500_000
PAPER_REALIZATIONS = 40
PAPER_EMPIRICAL_REALIZATIONS = 1000
EMPIRICAL_REALIZATIONS = 100
REFINE_HALF_WIDTH = 0.03
REFINE_STEP = 0.001

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2


class PartialFailure(RuntimeError):
    pass


# --- helpers ----------------------------------------------------------------

def load_spec(args, defaults: dict[str, str] | None = None) -> RunSpec:
    """Config file (optional) plus ``--set`` overrides, then seed/scale flags."""
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    overrides = dict(_split_set(s) for s in args.set or [])
    spec = dataio.parse_config_text(text, args.config or "<flags>", overrides, defaults)
    if args.seed is not None:
        spec.seed = args.seed
    if args.paper_scale:
        spec.n = PAPER_N
        spec.realizations = PAPER_REALIZATIONS
    return spec


def _split_set(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
    k, v = item.split("=", 1)
    return k.strip(), v.strip()


def gen_spec(spec: RunSpec) -> GenSpec:
    return GenSpec(spec.kind, spec.n, spec.mean_degree, spec.gamma, spec.k_min, spec.k_max, spec.seed)


def degree_dist(spec: RunSpec) -> DegreeDist:
    if spec.kind == "er":
        return poisson_dist(spec.mean_degree)
    return powerlaw_dist(spec.gamma, spec.k_min, gen_spec(spec).cutoff)


def refine_grid(ps, curves_by_theta, half_width=REFINE_HALF_WIDTH, step=REFINE_STEP):
    """Extra p values at ``step`` within ``half_width`` of each detected transition."""
    extra = {}
    for th, curves in curves_by_theta.items():
        new = set()
        for curve in curves:
            pc, order = estimate_pc_from_curve(curve)
            if math.isnan(pc):
                continue
            lo, hi = max(0.0, pc - half_width), min(1.0, pc + half_width)
            k0, k1 = int(math.ceil(lo / step - 1e-9)), int(math.floor(hi / step + 1e-9))
            new.update(round(k * step, 10) for k in range(k0, k1 + 1))
        extra[th] = sorted(new - set(ps))
    return extra


def _curves(points, th):
    pts = sorted((pt for pt in points if pt.theta == th), key=lambda pt: pt.p)
    nl = len(pts[0].s_mean)
    return [[(pt.p, float(pt.s_mean[li])) for pt in pts] for li in range(nl)]


def sweep(recipe, spec: RunSpec, thetas, workers, refine=True) -> list[EnsemblePoint]:
    ps = [float(p) for p in spec.p_grid()]
    grid = [(p, th) for th in thetas for p in ps]
    points = run_ensemble(recipe, grid, spec.realizations, spec.seed, workers)
    if refine:
        extra = refine_grid(ps, {th: _curves(points, th) for th in thetas})
        grid2 = [(p, th) for th, eps in extra.items() for p in eps]
        if grid2:
            points += run_ensemble(recipe, grid2, spec.realizations, spec.seed, workers)
    return points


def to_records(points, omega=None) -> list[SweepRecord]:
    out = []
    for pt in points:
        for li, (m, s) in enumerate(zip(pt.s_mean, pt.s_std)):
            out.append(SweepRecord(pt.theta, omega, pt.p, LAYER_NAMES[li], float(m), float(s),
                                   pt.noi_mean, pt.realizations))
    return out


def print_transitions(points, thetas, prefix="", out=None):
    out = out or sys.stdout
    for th in thetas:
        for li, (pc, order) in enumerate(layer_transitions(points, th)):
            print(f"{prefix}theta={th:g} layer={LAYER_NAMES[li]} p_c={pc:.4f} order={order}", file=out)


# --- subcommands ------------------------------------------------------------

def cmd_simulate(args) -> int:
    spec = load_spec(args)
    if spec.layers == 3:
        return cmd_chain(args, spec)
    recipe = TwoLayerRecipe(gen_spec(spec), spec.pairing)
    points = sweep(recipe, spec, spec.thetas, args.threads, refine=not args.no_refine)
    dataio.write_sweep_csv(to_records(points), args.out)
    print_transitions(points, spec.thetas)
    return EXIT_OK


def theory_records(spec: RunSpec, dist_a: DegreeDist, dist_b: DegreeDist | None = None):
    dist_b = dist_a if dist_b is None else dist_b
    recs, failed = [], []
    for th in spec.thetas:
        for p in spec.p_grid():
            p = float(p)
            try:
                Ra, Rb = solve_fixed_point(p, th, dist_a, dist_b)
            except ConvergenceError as exc:
                failed.append((th, p, str(exc)))
                continue
            Sa, Sb = giant_fraction_theory(p, th, dist_a, dist_b, Ra, Rb)
            for name, s in (("A", Sa), ("B", Sb)):
                recs.append(SweepRecord(th, None, p, name, s, 0.0, math.nan, 0))
    return recs, failed


def cmd_theory(args) -> int:
    spec = load_spec(args)
    recs, failed = theory_records(spec, degree_dist(spec))
    dataio.write_sweep_csv(recs, args.out)
    for th in spec.thetas:
        pt = find_pc_first_order(th, degree_dist(spec))
        print(f"theta={th:g} p_c={pt.p_c:.5f} order={pt.order} R_c={pt.R_c:.5f} S_c={pt.S_c:.5f}")
    if failed:
        for th, p, msg in failed:
            print(f"failed: theta={th:g} p={p:g}: {msg}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


PHASE_HEADER = ("theta", "p_c", "order", "R_c", "S_c")


def phase_rows(thetas, dist: DegreeDist, mark_theta_c=True, p_tol=1e-5):
    rows = [phase_point(th, dist, p_tol) for th in thetas]
    theta_c = None
    if mark_theta_c:
        try:
            theta_c = find_theta_c(dist, min(thetas), max(thetas))
        except ValueError:
            theta_c = None
    return rows, theta_c


def write_phase_csv(rows, theta_c, dist, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PHASE_HEADER)
        items = [(r.theta, f"{r.p_c:.6g}", r.order, f"{r.R_c:.6g}", f"{float(r.S_c):.6g}") for r in rows]
        if theta_c is not None:
            items.append((theta_c, f"{pc_second_order(theta_c, dist):.6g}", "crossover", "0", "0"))
        for th, *rest in sorted(items, key=lambda x: x[0]):
            w.writerow([f"{th:.6g}", *rest])


def cmd_phase(args) -> int:
    spec = load_spec(args)
    dist = degree_dist(spec)
    rows, theta_c = phase_rows(spec.thetas, dist)
    write_phase_csv(rows, theta_c, dist, args.out)
    for r in rows:
        print(f"theta={r.theta:g} p_c={r.p_c:.5f} order={r.order} S_c={float(r.S_c):.5f}")
    if theta_c is not None:
        print(f"theta_c={theta_c:.4f}")
    return EXIT_OK


def crossover_detectors(dist: DegreeDist, lo, hi, tol=1e-3):
    """``theta_c`` from the sign of ``h''(0)`` and from the order classifier."""
    tc = find_theta_c(dist, lo, hi)
    first_lo = find_pc_first_order(lo, dist).order == "first"
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if (find_pc_first_order(mid, dist).order == "first") == first_lo:
            a = mid
        else:
            b = mid
    return tc, 0.5 * (a + b)


def cmd_crossover(args) -> int:
    spec = load_spec(args)
    dist = degree_dist(spec)
    lo, hi = min(spec.thetas), max(spec.thetas)
    if lo == hi:
        lo, hi = -2.0, 6.0
    tc, tb = crossover_detectors(dist, lo, hi)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("distribution", "theta_c", "theta_c_classifier", "p_c"))
        w.writerow((dist.label, f"{tc:.6g}", f"{tb:.6g}", f"{pc_second_order(tc, dist):.6g}"))
    print(f"theta_c={tc:.4f} classifier={tb:.4f}")
    return EXIT_OK


PC_HEADER = ("omega", "theta", "layer", "p_c", "order")


def _pc_path(out):
    return out[:-4] + "_pc.csv" if out.endswith(".csv") else out + "_pc.csv"


def cmd_overlap(args) -> int:
    spec = load_spec(args)
    if spec.kind != "er":
        raise ConfigError("overlap systems need network.kind = er")
    omegas = spec.omegas if spec.omegas is not None else (0.0, 0.5, 1.0)
    recs, pcs = [], []
    for om in omegas:
        recipe = OverlapRecipe(OverlapSpec(om, gen_spec(spec)))
        points = sweep(recipe, spec, spec.thetas, args.threads, refine=not args.no_refine)
        recs += to_records(points, omega=om)
        for th in spec.thetas:
            for li, (pc, order) in enumerate(layer_transitions(points, th)):
                pcs.append((om, th, LAYER_NAMES[li], pc, order))
                print(f"omega={om:g} theta={th:g} layer={LAYER_NAMES[li]} p_c={pc:.4f} order={order}")
    dataio.write_sweep_csv(recs, args.out)
    with open(_pc_path(args.out), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PC_HEADER)
        for om, th, lay, pc, order in sorted(pcs):
            w.writerow([f"{om:.6g}", f"{th:.6g}", lay, "NA" if math.isnan(pc) else f"{pc:.6g}", order])
    return EXIT_OK


def cmd_chain(args, spec: RunSpec | None = None) -> int:
    spec = spec or load_spec(args)
    g = gen_spec(spec)
    recipe = ChainRecipe((g, g, g))
    points = sweep(recipe, spec, spec.thetas, args.threads, refine=not args.no_refine)
    dataio.write_sweep_csv(to_records(points), args.out)
    print_transitions(points, spec.thetas)
    return EXIT_OK


def cmd_empirical(args) -> int:
    if not args.layer_a or not args.layer_b:
        raise ConfigError("empirical needs two edge-list files")
    spec = load_spec(args, {"network.kind": "er"})
    if "realizations" not in spec.explicit:
        spec.realizations = PAPER_EMPIRICAL_REALIZATIONS if args.paper_scale else EMPIRICAL_REALIZATIONS
    a = dataio.load_edgelist(args.layer_a)
    b = dataio.load_edgelist(args.layer_b)
    print(f"layer A: {a.path} n={a.graph.n} m={a.graph.m}; layer B: {b.path} n={b.graph.n} m={b.graph.m}")
    pairing = spec.pairing if "pairing" in spec.explicit else "random_subset"
    recipe = FixedLayersRecipe((a.graph, b.graph), pairing)
    points = sweep(recipe, spec, spec.thetas, args.threads, refine=not args.no_refine)
    dataio.write_sweep_csv(to_records(points), args.out)
    print_transitions(points, spec.thetas)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "theory": cmd_theory,
    "phase": cmd_phase,
    "crossover": cmd_crossover,
    "overlap": cmd_overlap,
    "chain": cmd_chain,
    "empirical": cmd_empirical,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="interperc", description="Cascades and percolation theory on "
                                 "asymmetrically interdependent networks.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value run configuration file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
        sp.add_argument("--out", required=True, help="output CSV path")
        sp.add_argument("--threads", type=int, default=1, help="worker processes")
        sp.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        sp.add_argument("--paper-scale", action="store_true",
                        help=f"n={PAPER_N}, {PAPER_REALIZATIONS} realizations")
        sp.add_argument("--no-refine", action="store_true", help="skip the fine p grid around transitions")
        if name == "empirical":
            sp.add_argument("layer_a", nargs="?", help="edge list of layer A")
            sp.add_argument("layer_b", nargs="?", help="edge list of layer B")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
