"""Command-line surface.

Subcommands::

    firsyn analyze SYSTEM            existence / stability analysis
    firsyn design SYSTEM --order L   convex or search-based FIR design
    firsyn sweep SYSTEM --max-order  order sweep with CSV/SVG output
    firsyn approximate CONTROLLER    windowed FIR truncation of a stable
                                     dynamic controller
    firsyn bench --out DIR           benchmark reproduction bundle

SYSTEM is a system-document path or one of the registry ids
(system1..system4).  Exit codes: 0 ok/designed, 1 error, 2 not designed,
3 benchmark expectation mismatch.  The FIRSYN_WORKERS environment
variable overrides the multi-start worker count (default: available
cores).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    StrongStabilizability,
    pbh_detectable,
    pbh_stabilizable,
    pip_check,
    siso_transfer_function,
    strong_stabilizability_gate,
)
from .benchmarks import realize, registry
from .errors import FirsynError
from .fileio import (
    load_controller,
    load_system,
    save_gains,
    write_bench_csv,
    write_sweep_csv,
    write_sweep_svg,
)
from .firdesign import (
    OptimizerConfig,
    SearchMethod,
    approximation_tail,
    fir_approximate,
    optimize_order,
    order_sweep,
)
from .lmi import lyapunov_verify, sof_convex_design
from .matlib import spectral_radius
from .sim import decay_check, simulate_fir
from .sysmodel import StateSpaceSystem, TransferFunction, closed_loop

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_DESIGNED = 2
EXIT_BENCH_MISMATCH = 3

DECAY_STEPS = 500
DECAY_THRESHOLD = 1e-6
DECAY_TRIALS = 10


def _resolve_input(token: str):
    """Registry id or system-document path -> (name, model)."""
    entries = registry()
    if token in entries:
        return token, entries[token].model
    return load_system(token)


def _verify_gains(ss: StateSpaceSystem, gains) -> dict:
    """Post-design verification: spectral radius, Lyapunov certificate,
    and a fixed simulation battery (10 random starts, 500 steps)."""
    phi = closed_loop(ss, gains)
    rho = spectral_radius(phi)
    try:
        certificate = lyapunov_verify(phi) is not None
    except FirsynError:
        certificate = False
    rng = np.random.default_rng(0)
    ratios = []
    for _ in range(DECAY_TRIALS):
        x0 = rng.standard_normal(ss.n)
        traj = simulate_fir(ss, gains, x0, DECAY_STEPS)
        if traj.diverged:
            ratios.append(math.inf)
        else:
            ratios.append(
                float(np.linalg.norm(traj.states[-1]) / np.linalg.norm(traj.states[0]))
            )
    decay_ok = all(r <= DECAY_THRESHOLD for r in ratios)
    return {
        "rho": float(rho),
        "lyapunov_certificate": bool(certificate),
        "decay_ratio_max": float(max(ratios)),
        "decay_below_threshold": bool(decay_ok),
    }


def _pip_details(report) -> list[str]:
    lines = [f"parity interlacing property: {'holds' if report.holds else 'fails'}"]
    lines.append(f"  unstable real zeros: {list(report.unstable_real_zeros)}")
    lines.append(f"  unstable real poles: {list(report.unstable_real_poles)}")
    for (lo, hi), count in report.interval_pole_counts:
        lines.append(f"  poles in ({lo}, {hi}): {count} ({'even' if count % 2 == 0 else 'odd'})")
    if report.borderline:
        lines.append(f"  borderline values: {list(report.borderline)}")
    if report.cancellations:
        lines.append(f"  cancelled pole/zero pairs: {list(report.cancellations)}")
    return lines


def cmd_analyze(args) -> int:
    name, model = _resolve_input(args.system)
    ss = realize(model)
    gate = strong_stabilizability_gate(model)
    report = {
        "name": name,
        "n": ss.n,
        "m": ss.m,
        "p": ss.p,
        "stabilizable": pbh_stabilizable(ss),
        "detectable": pbh_detectable(ss),
        "open_loop_spectral_radius": float(spectral_radius(ss.A)),
        "strong_stabilizability": gate.value,
    }
    lines = [
        f"system: {name}",
        f"state dimension: {ss.n} (inputs {ss.m}, outputs {ss.p})",
        f"stabilizable (PBH): {'yes' if report['stabilizable'] else 'no'}",
        f"detectable (PBH): {'yes' if report['detectable'] else 'no'}",
        f"open-loop spectral radius: {report['open_loop_spectral_radius']:.6g}",
    ]
    if gate is StrongStabilizability.NOT_APPLICABLE_MIMO:
        lines.append("parity interlacing property: not applicable (MIMO)")
    else:
        tf = model if isinstance(model, TransferFunction) else siso_transfer_function(ss)
        pip = pip_check(tf)
        lines.extend(_pip_details(pip))
        report["pip"] = {
            "holds": pip.holds,
            "unstable_real_zeros": [
                "inf" if math.isinf(z) else z for z in pip.unstable_real_zeros
            ],
            "unstable_real_poles": list(pip.unstable_real_poles),
            "interval_pole_counts": [
                {"interval": ["inf" if math.isinf(v) else v for v in iv], "count": c}
                for iv, c in pip.interval_pole_counts
            ],
        }
    lines.append(f"strong stabilizability: {gate.value}")
    if gate is StrongStabilizability.FAILS:
        lines.append(
            "=> no stabilizing FIR controller exists for any order "
            "(FIR laws are stable by construction)"
        )
    print("\n".join(lines))
    if args.json:
        Path(args.json).write_text(
            json.dumps(report, indent=2, allow_nan=False) + "\n", encoding="utf-8"
        )
    return EXIT_OK


def cmd_design(args) -> int:
    name, model = _resolve_input(args.system)
    ss = realize(model)
    if args.method == "convex":
        gains = sof_convex_design(ss, args.order)
        per_run = None
    else:
        cfg = OptimizerConfig(
            runs_per_order=args.runs,
            seed=args.seed,
            stability_margin=args.margin,
            method=SearchMethod(args.method),
        )
        outcome = optimize_order(ss, args.order, cfg)
        per_run = outcome.per_run_rhos
        gains = (
            outcome.best_gains
            if outcome.best_rho < 1.0 - args.margin
            else None
        )
        if gains is None:
            print(
                f"not designed: best spectral radius {outcome.best_rho:.6g} over "
                f"{args.runs} runs does not clear 1 - margin = {1.0 - args.margin:.6g}"
            )
            return EXIT_NOT_DESIGNED
    if gains is None:
        print("not designed: convex output-feedback LMI is numerically infeasible")
        return EXIT_NOT_DESIGNED
    checks = _verify_gains(ss, gains)
    if checks["rho"] >= 1.0 - args.margin:
        print(f"not designed: verified spectral radius {checks['rho']:.6g} too large")
        return EXIT_NOT_DESIGNED
    out_path = args.out or f"{name}_gains_order{args.order}.json"
    diagnostics = dict(checks)
    diagnostics["method"] = args.method
    if per_run is not None:
        diagnostics["per_run_rhos"] = [float(r) for r in per_run]
    save_gains(out_path, name, gains, diagnostics)
    print(f"designed: order {args.order}, spectral radius {checks['rho']:.6g}")
    print(f"lyapunov certificate: {'ok' if checks['lyapunov_certificate'] else 'MISSING'}")
    print(
        f"decay over {DECAY_STEPS} steps: max ratio {checks['decay_ratio_max']:.3e} "
        f"(threshold {DECAY_THRESHOLD:g}: "
        f"{'met' if checks['decay_below_threshold'] else 'not met'})"
    )
    print(f"gains written to {out_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    name, model = _resolve_input(args.system)
    ss = realize(model)
    cfg = OptimizerConfig(
        runs_per_order=args.runs,
        seed=args.seed,
        method=SearchMethod(args.method),
    )
    outcomes = order_sweep(ss, args.max_order, cfg)
    print(f"system: {name}")
    print("order  best_rho      median_rho    worst_rho")
    for out in outcomes:
        print(
            f"{out.order:>5}  {out.best_rho:<12.6g}  {out.median_rho:<12.6g}  "
            f"{max(out.per_run_rhos):<12.6g}"
        )
    if args.csv:
        write_sweep_csv(args.csv, outcomes)
        print(f"csv written to {args.csv}")
    if args.svg:
        write_sweep_svg(args.svg, outcomes, title=f"{name}: spectral radius vs FIR order")
        print(f"svg written to {args.svg}")
    return EXIT_OK


def cmd_approximate(args) -> int:
    name, ctl = load_controller(args.controller)
    gains = fir_approximate(ctl, args.order)
    tail = approximation_tail(ctl, args.order)
    print(f"controller: {name}")
    print(f"FIR order: {args.order}")
    for i, g in enumerate(gains.gains):
        print(f"F_{i} = {g.tolist()}")
    print(f"truncation tail bound: {tail:.6e}")
    if args.out:
        save_gains(args.out, name, gains, {"truncation_tail_bound": float(tail)})
        print(f"gains written to {args.out}")
    return EXIT_OK


def _bench_system(entry, seed: int, out_dir: Path):
    rows = []
    ss = realize(entry.model)
    gate = strong_stabilizability_gate(entry.model)
    rows.append((
        entry.id,
        "strong_stabilizability",
        entry.strong_stabilizability.value,
        gate.value,
        gate is entry.strong_stabilizability,
    ))
    feasible = sof_convex_design(ss, 0) is not None
    rows.append((
        entry.id,
        "convex_design_order0",
        "feasible" if entry.convex_order0_feasible else "infeasible",
        "feasible" if feasible else "infeasible",
        feasible == entry.convex_order0_feasible,
    ))
    if not entry.convex_order0_feasible:
        # Infeasibility at order 0 propagates to every higher order;
        # regression-check the first two.
        for order in (1, 2):
            higher = sof_convex_design(ss, order) is not None
            rows.append((
                entry.id,
                f"convex_design_order{order}",
                "infeasible",
                "feasible" if higher else "infeasible",
                not higher,
            ))
    cfg = OptimizerConfig(runs_per_order=10, seed=seed)
    outcomes = order_sweep(ss, 5, cfg)
    write_sweep_csv(out_dir / f"{entry.id}_sweep.csv", outcomes)
    write_sweep_svg(
        out_dir / f"{entry.id}_sweep.svg",
        outcomes,
        title=f"{entry.id}: spectral radius vs FIR order",
    )
    min_order = entry.minimal_stabilizing_order
    for out in outcomes:
        expected = min_order is not None and out.order >= min_order
        observed = out.best_rho < 1.0
        rows.append((
            entry.id,
            f"fir_stabilizing_order{out.order}",
            "stabilizing" if expected else "not-stabilizing",
            "stabilizing" if observed else "not-stabilizing",
            expected == observed,
        ))
    observed_min = next((o.order for o in outcomes if o.best_rho < 1.0), None)
    rows.append((
        entry.id,
        "minimal_stabilizing_order",
        str(min_order),
        str(observed_min),
        observed_min == min_order,
    ))
    return rows


def cmd_bench(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for entry in registry().values():
        rows.extend(_bench_system(entry, args.seed, out_dir))
    write_bench_csv(out_dir / "summary.csv", rows)
    failures = [row for row in rows if not row[4]]
    passed = len(rows) - len(failures)
    print(f"benchmark checks: {passed}/{len(rows)} expectations met")
    print(f"summary written to {out_dir / 'summary.csv'}")
    for system, check, expected, observed, _ in failures:
        print(f"MISMATCH {system} {check}: expected {expected}, observed {observed}")
    return EXIT_OK if not failures else EXIT_BENCH_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="firsyn",
        description="FIR output-feedback controller synthesis and analysis",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="existence and stability analysis")
    p.add_argument("system", help="system document path or registry id")
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("design", help="design an FIR controller at a fixed order")
    p.add_argument("system")
    p.add_argument("--order", type=int, required=True)
    p.add_argument(
        "--method",
        choices=["convex", "direct", "evolutionary"],
        default="direct",
    )
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--out", help="gains document path")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("sweep", help="multi-start design over orders 0..max")
    p.add_argument("system")
    p.add_argument("--max-order", type=int, required=True)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=["direct", "evolutionary"], default="direct")
    p.add_argument("--csv", help="write per-order statistics as CSV")
    p.add_argument("--svg", help="write the sweep plot as SVG")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "approximate", help="windowed FIR truncation of a stable dynamic controller"
    )
    p.add_argument("controller", help="dynamic-controller document path")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--out", help="gains document path")
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("bench", help="benchmark reproduction bundle")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FirsynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
