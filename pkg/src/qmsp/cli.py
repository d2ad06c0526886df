"""Command-line interface.

Subcommands wrap the library operations one-to-one: validate and measure
machine files, compute exact complexities, estimate entropy rate, exponent
spectra, and dimensions for a single measurement, enumerate the predictive
presentation, and run the measurement-angle sweep.

Exit codes: 0 success, 2 file/validation/model errors, 3 when an msp
enumeration was asked for but exceeded its state budget.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .dimension import dimension_report, lce_spectrum
from .errors import MachineError, NotUnifilar
from .hmm import (
    LabeledHMM,
    entropy_rate_unifilar,
    statistical_complexity,
    unifilarity_witness,
)
from .machine_io import load_machine, save_machine
from .mixed_state import (
    EnumerationBudgetExceeded,
    enumerate_msp,
    iterate_trajectory,
    msp_tolerance_sweep,
    write_point_cloud,
)
from .quantum import ProjectiveMeasurement, QubitHMM, measure_machine
from .sweep import (
    DEFAULT_GRID,
    RunConfig,
    SweepRow,
    angle_grid,
    run_sweep,
    write_manifest,
    write_sweep_csv,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3


def _default_seed() -> int:
    return int(os.environ.get("QMSP_SEED", "0"))


def _add_machine_arg(parser):
    parser.add_argument("--machine", required=True, help="machine file (JSON)")


def _add_measure_args(parser, required=False):
    parser.add_argument("--theta", type=float, required=required,
                        help="measurement polar angle (radians)")
    parser.add_argument("--phi", type=float, default=0.0,
                        help="measurement azimuthal angle (radians, default 0)")


def _add_trajectory_args(parser):
    parser.add_argument("--length", type=int, default=1_000_000,
                        help="post-burn-in iterates (default 1e6)")
    parser.add_argument("--burn-in", type=int, default=1_000,
                        help="discarded prefix iterates (default 1000)")
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: QMSP_SEED env var, else 0)")
    parser.add_argument("--decimate", type=int, default=1,
                        help="keep every k-th mixed state in clouds (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmsp",
        description="Randomness and structure of measured qubit processes.",
    )
    parser.add_argument("--version", action="version", version=f"qmsp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a machine file and report its shape")
    _add_machine_arg(p)

    p = sub.add_parser("measure", help="compose a qubit machine with a measurement")
    _add_machine_arg(p)
    _add_measure_args(p, required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("exact", help="exact entropy rate and statistical complexity")
    _add_machine_arg(p)
    _add_measure_args(p)

    p = sub.add_parser("entropy", help="trajectory-averaged entropy rate")
    _add_machine_arg(p)
    _add_measure_args(p)
    _add_trajectory_args(p)
    p.add_argument("--clouds", action="store_true", help="write the mixed-state cloud")
    p.add_argument("--svg", action="store_true", help="also render cloud figure")
    p.add_argument("--out", help="output directory for cloud artifacts")

    p = sub.add_parser("lce", help="Lyapunov exponent spectrum of the belief map")
    _add_machine_arg(p)
    _add_measure_args(p)
    _add_trajectory_args(p)
    p.add_argument("--reorth-every", type=int, default=1,
                   help="QR re-orthonormalization stride (default 1)")

    p = sub.add_parser("dimension", help="entropy rate, spectrum, and dimensions")
    _add_machine_arg(p)
    _add_measure_args(p)
    _add_trajectory_args(p)
    p.add_argument("--reorth-every", type=int, default=1)
    p.add_argument("--bc", action="store_true", help="box-grid dimension estimate")
    p.add_argument("--clouds", action="store_true")
    p.add_argument("--svg", action="store_true")
    p.add_argument("--out", help="output directory for the CSV row and clouds")

    p = sub.add_parser("msp", help="enumerate the predictive-state presentation")
    _add_machine_arg(p)
    _add_measure_args(p)
    p.add_argument("--merge-tol", type=float, default=1e-9,
                   help="L1 merge tolerance (default 1e-9)")
    p.add_argument("--max-states", type=int, default=10_000,
                   help="state budget (default 10000)")
    p.add_argument("--tol-sweep", action="store_true",
                   help="rerun the closure across several tolerances")

    p = sub.add_parser("sweep", help="measurement-angle sweep with CSV/SVG artifacts")
    _add_machine_arg(p)
    p.add_argument("--grid", default=None, metavar="START:STOP:COUNT",
                   help="uniform angle grid (default 0:pi:500)")
    p.add_argument("--theta", default=None,
                   help="explicit comma-separated angle list (overrides --grid)")
    p.add_argument("--phi", type=float, default=0.0)
    _add_trajectory_args(p)
    p.add_argument("--bc", action="store_true", help="add box-grid dimension per angle")
    p.add_argument("--clouds", action="store_true", help="write per-angle clouds")
    p.add_argument("--svg", action="store_true", help="render figures")
    p.add_argument("--workers", type=int, default=1, help="parallel angle jobs")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--merge-tol", type=float, default=1e-9)
    p.add_argument("--max-states", type=int, default=10_000)

    return parser


def _load(path):
    try:
        return load_machine(path)
    except FileNotFoundError:
        raise MachineError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise MachineError(
            f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        )


def _classical_machine(args) -> LabeledHMM:
    """Resolve the classical machine a command should analyze."""
    machine = _load(args.machine)
    theta = getattr(args, "theta", None)
    if isinstance(machine, QubitHMM):
        if theta is None:
            raise MachineError(
                "qubit machine: pass --theta (and optionally --phi) to measure it"
            )
        return measure_machine(machine, ProjectiveMeasurement(theta, args.phi))
    if theta is not None:
        raise MachineError("machine is already classical; --theta does not apply")
    return machine


def _seed_of(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _fmt_vec(vec) -> str:
    return "(" + ", ".join(f"{v:.6g}" for v in vec) + ")"


def cmd_validate(args) -> int:
    machine = _load(args.machine)
    base = machine.machine if isinstance(machine, QubitHMM) else machine
    kind = "qubit source" if isinstance(machine, QubitHMM) else "classical machine"
    witness = unifilarity_witness(base)
    print(f"{kind}: {base.n_states} states, {base.n_symbols} symbols")
    print(f"states: {', '.join(map(str, base.states))}")
    print(f"alphabet: {', '.join(map(str, base.alphabet))}")
    print(f"pi = {_fmt_vec(base.stationary)}")
    if witness is None:
        print("unifilar")
    else:
        state, symbol, successors = witness
        print(f"nonunifilar: state {state!r} emits {symbol!r} "
              f"into {', '.join(map(str, successors))}")
    return EXIT_OK


def cmd_measure(args) -> int:
    machine = _load(args.machine)
    if not isinstance(machine, QubitHMM):
        raise MachineError("measure needs a qubit machine")
    measured = measure_machine(machine, ProjectiveMeasurement(args.theta, args.phi))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "measured.json"
    save_machine(measured, out_path)
    load_machine(out_path)  # round-trip check
    write_manifest(out_dir, "measure",
                   {"machine": args.machine, "theta": args.theta, "phi": args.phi},
                   seed=None)
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_exact(args) -> int:
    machine = _load(args.machine)
    if isinstance(machine, QubitHMM) and args.theta is None:
        target = machine.machine
        print("source machine (unmeasured):")
    else:
        target = _classical_machine(args)
    print(f"entropy rate        = {entropy_rate_unifilar(target):.12g} bits/symbol")
    print(f"statistical complexity = {statistical_complexity(target):.12g} bits")
    return EXIT_OK


def cmd_entropy(args) -> int:
    machine = _classical_machine(args)
    estimate = iterate_trajectory(
        machine, args.length, _seed_of(args), burn_in=args.burn_in,
        decimation=args.decimate, store_cloud=args.clouds,
    )
    print(f"hmu = {estimate.entropy_rate:.6f} +- {estimate.stderr:.6f} bits/symbol "
          f"(length {estimate.length}, burn-in {estimate.burn_in})")
    if args.clouds:
        if not args.out:
            raise MachineError("--clouds needs --out")
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_point_cloud(out_dir / "cloud_0.csv", estimate.point_cloud)
        if args.svg:
            from .plots import cloud_figure, save_figure

            save_figure(cloud_figure(estimate.point_cloud),
                        out_dir / "cloud_0.svg")
        write_manifest(out_dir, "entropy", _public_config(args), _seed_of(args))
        print(f"wrote {out_dir / 'cloud_0.csv'}")
    return EXIT_OK


def cmd_lce(args) -> int:
    machine = _classical_machine(args)
    spectrum = lce_spectrum(machine, args.length, _seed_of(args),
                            reorth_every=args.reorth_every, burn_in=args.burn_in)
    if spectrum.exponents.size == 0:
        print("no exponents: single-state machine")
        return EXIT_OK
    for i, (lam, se, flg) in enumerate(
            zip(spectrum.exponents, spectrum.stderr, spectrum.floor_flags), 1):
        floor = "  [at numerical floor]" if flg else ""
        print(f"lambda_{i} = {lam:.6f} +- {se:.6f} bits/symbol{floor}")
    return EXIT_OK


def cmd_dimension(args) -> int:
    machine = _classical_machine(args)
    report, cloud = dimension_report(
        machine, args.length, _seed_of(args), burn_in=args.burn_in,
        reorth_every=args.reorth_every, compute_bc=args.bc,
        decimation=args.decimate, keep_cloud=args.clouds,
    )
    print(f"hmu   = {report.entropy_rate:.6f} +- {report.entropy_stderr:.6f}")
    lams = ", ".join(f"{l:.6f}" for l in report.lce.exponents)
    print(f"LCEs  = [{lams}] bits/symbol")
    print(f"k     = {report.k}")
    print(f"d_lce = {report.d_lce:.6f}")
    if report.d_bc is not None:
        print(f"d_bc  = {report.d_bc:.6f} (count-slope {report.box.count_slope:.6f})")
    if report.open_set_flag is not None:
        print(f"overlapping branch images (heuristic): {report.open_set_flag}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        row = SweepRow(
            index=0,
            theta=args.theta,
            phi=args.phi,
            hmu_B=report.entropy_rate, hmu_stderr=report.entropy_stderr,
            lambdas=tuple(float(l) for l in report.lce.exponents),
            k=report.k, d_lce=report.d_lce, d_bc=report.d_bc,
        )
        write_sweep_csv(out_dir / "dimension.csv", [row], machine.n_states)
        if args.clouds and cloud is not None:
            write_point_cloud(out_dir / "cloud_0.csv", cloud)
            if args.svg:
                from .plots import cloud_figure, save_figure

                save_figure(cloud_figure(cloud), out_dir / "cloud_0.svg")
        write_manifest(out_dir, "dimension", _public_config(args), _seed_of(args))
        print(f"wrote {out_dir / 'dimension.csv'}")
    return EXIT_OK


def cmd_msp(args) -> int:
    machine = _load(args.machine)
    if isinstance(machine, QubitHMM):
        if args.theta is None:
            machine = machine.machine
        else:
            machine = measure_machine(
                machine, ProjectiveMeasurement(args.theta, args.phi)
            )
    elif args.theta is not None:
        raise MachineError("machine is already classical; --theta does not apply")

    if args.tol_sweep:
        for tol, outcome in msp_tolerance_sweep(machine, max_states=args.max_states):
            if isinstance(outcome, EnumerationBudgetExceeded):
                print(f"tol {tol:g}: budget exceeded at {outcome.states_enumerated} "
                      f"states (frontier {outcome.frontier_size})")
            else:
                print(f"tol {tol:g}: {outcome.n_states} states "
                      f"({outcome.n_recurrent} recurrent), "
                      f"Cmu {outcome.statistical_complexity:.6f}, "
                      f"hmu {outcome.entropy_rate:.6f}")
        return EXIT_OK

    outcome = enumerate_msp(machine, args.merge_tol, args.max_states)
    if isinstance(outcome, EnumerationBudgetExceeded):
        print(f"budget exceeded: {outcome.states_enumerated} states enumerated, "
              f"frontier still {outcome.frontier_size} "
              f"(budget {outcome.max_states}, merge tol {outcome.merge_tol:g})")
        print("the presentation is presumably uncountable at this tolerance")
        return EXIT_BUDGET
    print(f"closed: {outcome.n_states} states, {outcome.n_recurrent} recurrent")
    print(f"hmu (exact, closed presentation) = {outcome.entropy_rate:.6f} bits/symbol")
    print(f"Cmu (recurrent weights)          = "
          f"{outcome.statistical_complexity:.6f} bits")
    return EXIT_OK


def cmd_sweep(args) -> int:
    machine = _load(args.machine)
    if not isinstance(machine, QubitHMM):
        raise MachineError("sweep needs a qubit machine")
    if args.theta is not None:
        thetas = tuple(float(tok) for tok in str(args.theta).split(","))
    elif args.grid is not None:
        parts = args.grid.split(":")
        if len(parts) != 3:
            raise MachineError("--grid must look like start:stop:count")
        thetas = angle_grid(float(parts[0]), float(parts[1]), int(parts[2]))
    else:
        thetas = angle_grid(*DEFAULT_GRID)

    config = RunConfig(
        thetas=thetas,
        phi=args.phi,
        length=args.length,
        burn_in=args.burn_in,
        seed=_seed_of(args),
        decimation=args.decimate,
        compute_bc=args.bc,
        store_clouds=args.clouds,
        render_svg=args.svg,
        workers=args.workers,
        msp_max_states=args.max_states,
        msp_merge_tol=args.merge_tol,
        machine_path=args.machine,
    )
    out_dir = Path(args.out)
    rows = run_sweep(machine, config, out_dir)
    write_manifest(out_dir, "sweep", config.to_dict(), config.seed)
    failures = sum(1 for r in rows if r.error)
    print(f"wrote {out_dir / 'sweep.csv'} ({len(rows)} angles, {failures} failures)")
    return EXIT_OK


_COMMANDS = {
    "validate": cmd_validate,
    "measure": cmd_measure,
    "exact": cmd_exact,
    "entropy": cmd_entropy,
    "lce": cmd_lce,
    "dimension": cmd_dimension,
    "msp": cmd_msp,
    "sweep": cmd_sweep,
}


def _public_config(args) -> dict:
    skip = {"command"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (MachineError, NotUnifilar, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
