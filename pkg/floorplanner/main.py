"""
Command-line entry point.
Subcommands: solve, compare, check, init, render.
"""
import argparse
import logging
import math
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np

from floorplanner.config import MODE_BASIC, MODES, Config, SolverConfig
from floorplanner.errors import FloorplanError
from floorplanner.formats import load_instance, parse_result, write_result
from floorplanner.geometry import check_feasible, hpwl_total
from floorplanner.models import Instance, SolveResult
from floorplanner.services.initialization_service import initialization_service, initialize
from floorplanner.services.render_service import render_svg
from floorplanner.solver import Solver, feasibility_tolerance, overlap_ratio

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2
EXIT_MISMATCH = 3

# Flag dest -> SolverConfig.for_mode override name.
CONFIG_FLAGS = {
    "seed": "seed",
    "lambda_min": "lambda_min",
    "lambda_init": "lambda_init",
    "Lambda": "lambda_decay",
    "gamma_init": "gamma_init",
    "Gamma": "gamma_growth",
    "eps_post": "eps_post",
    "eps_pref": "eps_pref",
    "T": "threshold",
    "num_perturb": "num_perturb",
    "stop_threshold": "stop_threshold",
    "max_iter": "max_iter",
    "post_max_iter": "post_max_iter",
}

CHECK_REL_TOL = 1e-9


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _threshold(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("T must be a positive integer or 'inf'")
    return value


def _preset_help() -> str:
    basic, io = Config.MODE_PRESETS[MODE_BASIC], Config.MODE_PRESETS["io"]
    return (f"defaults per mode (lambda_init in units of the die diagonal): "
            f"basic lambda_init={basic['lambda_init_scale']:g} "
            f"gamma_init={basic['gamma_init']:g} Gamma={basic['gamma_growth']:g}; "
            f"io lambda_init={io['lambda_init_scale']:g} gamma_init={io['gamma_init']:g} "
            f"Gamma={io['gamma_growth']:g}")


def _add_instance_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("instance", help="instance file (.fp canonical or .yal)")
    parser.add_argument("--mode", choices=MODES, default=Config.MODE,
                        help="basic: fixed I/O pins; io: boundary pins are variables "
                             "(default: %(default)s)")
    parser.add_argument("--die", nargs=2, type=float, metavar=("W", "H"),
                        help="die override for YAL imports")


def _add_solver_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver", _preset_help())
    group.add_argument("--seed", type=int, default=Config.SEED,
                       help="random seed (default: %(default)s)")
    group.add_argument("--lambda-min", type=float,
                       help=f"perturbation step floor (default: {Config.LAMBDA_MIN_SCALE:g} "
                            "x die diagonal)")
    group.add_argument("--lambda-init", type=float, help="initial perturbation step")
    group.add_argument("--Lambda", type=float,
                       help=f"perturbation step decay (default: {Config.LAMBDA_DECAY:g})")
    group.add_argument("--gamma-init", type=float, help="initial projection relaxation")
    group.add_argument("--Gamma", type=float, help="projection progress factor")
    group.add_argument("--eps-post", type=float,
                       help=f"post-processing decay reset factor (default: {Config.EPS_POST:g})")
    group.add_argument("--eps-pref", type=float,
                       help=f"preference temperature (default: {Config.EPS_PREF_SCALE:g} "
                            "x die diagonal)")
    group.add_argument("--T", type=_threshold,
                       help=f"reset threshold, or 'inf' (default: {Config.RESET_THRESHOLD})")
    group.add_argument("--num-perturb", type=int,
                       help=f"perturbations per iteration (default: {Config.NUM_PERTURB})")
    group.add_argument("--stop-threshold", type=float,
                       help=f"relative overlap stop threshold (default: {Config.STOP_THRESHOLD:g})")
    group.add_argument("--max-iter", type=int,
                       help=f"global iteration cap (default: {Config.MAX_ITER})")
    group.add_argument("--post-max-iter", type=int,
                       help=f"post-processing iteration cap (default: {Config.POST_MAX_ITER})")


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="result file (default: standard output)")
    parser.add_argument("--svg", help="also render the placement to this SVG file")
    parser.add_argument("--no-timings", action="store_true",
                        help="omit wall-clock fields so equal-seed runs write identical files")


def build_parser() -> CliParser:
    parser = CliParser(prog="floorplan", allow_abbrev=False,
                       description="Fixed-outline floorplanning by resettable alternating "
                                   "projections with wirelength superiorization.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress (INFO)")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    solve = commands.add_parser("solve", help="initialize, floorplan and post-process",
                                allow_abbrev=False)
    _add_instance_args(solve)
    _add_solver_args(solve)
    _add_output_args(solve)

    compare = commands.add_parser("compare", help="MAP versus RMAP global floorplanning",
                                  allow_abbrev=False)
    _add_instance_args(compare)
    _add_solver_args(compare)

    check = commands.add_parser("check", help="recompute a stored result", allow_abbrev=False)
    _add_instance_args(check)
    check.add_argument("result", help="result file to verify")

    init = commands.add_parser("init", help="initial placement only", allow_abbrev=False)
    _add_instance_args(init)
    _add_solver_args(init)
    _add_output_args(init)

    render = commands.add_parser("render", help="draw a stored result", allow_abbrev=False)
    _add_instance_args(render)
    render.add_argument("result", help="result file to draw")
    render.add_argument("--out", required=True, help="SVG file to write")
    return parser


def config_from_args(args: argparse.Namespace) -> SolverConfig:
    """Mode preset plus every flag the user gave."""
    overrides = {name: getattr(args, dest) for dest, name in CONFIG_FLAGS.items()}
    if overrides["eps_pref"] is None:
        del overrides["eps_pref"]
    return SolverConfig.for_mode(args.mode, **overrides)


def _load(args: argparse.Namespace) -> Instance:
    die = tuple(args.die) if args.die else None
    return load_instance(args.instance, die=die, io_assignment=args.mode == "io")


def _emit(args: argparse.Namespace, instance: Instance, result: SolveResult) -> None:
    text = write_result(result, include_timings=not args.no_timings)
    if args.out:
        Path(args.out).write_text(text)
        print(f"✓ Result written to {args.out}")
    else:
        sys.stdout.write(text)
    if args.svg:
        Path(args.svg).write_text(render_svg(instance, result.placement))
        print(f"✓ SVG written to {args.svg}", file=sys.stderr if not args.out else sys.stdout)


def _banner(title: str, stream=None) -> None:
    stream = stream or sys.stdout
    print("=" * 60, file=stream)
    print(title, file=stream)
    print("=" * 60, file=stream)


def cmd_solve(args: argparse.Namespace) -> int:
    """Full solve; exit 0 when the final placement is feasible, else 2."""
    instance = _load(args)
    config = config_from_args(args)
    status = sys.stdout if args.out else sys.stderr
    _banner(f"Solving {instance.name or args.instance} "
            f"({instance.n_modules} modules, {len(instance.nets)} nets, mode {config.mode})", status)

    result = Solver(instance, config).solve()
    _emit(args, instance, result)

    marker = "✓" if result.feasible else "✗"
    print(f"{marker} HPWL {result.hpwl:.6g}, overlap {100 * result.overlap:.4g}%, "
          f"{result.iterations} iterations + {result.post_iterations} post", file=status)
    if result.timings and not args.no_timings:
        phases = ", ".join(f"{phase} {seconds:.2f}s" for phase, seconds in result.timings.items())
        print(f"  Timings: {phases}", file=status)
    return EXIT_OK if result.feasible else EXIT_NOT_CONVERGED


def cmd_compare(args: argparse.Namespace) -> int:
    """
    Global floorplanning with MAP and RMAP sweeps from one initial placement.

    Prints one row per method: runtime, iterations, relative overlap area.
    """
    instance = _load(args)
    config = config_from_args(args)
    init = initialize(instance, config)

    _banner(f"MAP vs RMAP on {instance.name or args.instance}")
    print(f"{'method':<8}{'runtime (s)':>14}{'iterations':>12}{'rel. O.A. (%)':>16}")
    converged = True
    for sweep in ("map", "rmap"):
        started = time.perf_counter()
        result = Solver(instance, config).per_rmap_solve(init, sweep=sweep)
        elapsed = time.perf_counter() - started
        print(f"{sweep.upper():<8}{elapsed:>14.3f}{result.iterations:>12d}"
              f"{100 * result.overlap:>16.4f}")
        if sweep == "rmap":
            converged = result.converged
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


def _close(stored: float, fresh: float) -> bool:
    return math.isclose(stored, fresh, rel_tol=CHECK_REL_TOL, abs_tol=1e-12)


def cmd_check(args: argparse.Namespace) -> int:
    """Exit 0 when the stored HPWL, overlap and feasibility match a recomputation."""
    instance = _load(args)
    result = parse_result(Path(args.result).read_text())
    z = np.asarray(result.placement, dtype=float)
    if z.size != 2 * instance.n:
        print(f"✗ Placement has {z.size} entries, instance needs {2 * instance.n}",
              file=sys.stderr)
        return EXIT_MISMATCH

    io_assignment = result.config.get("mode", args.mode) == "io"
    fresh = {
        "hpwl": hpwl_total(instance, z),
        "overlap": overlap_ratio(instance, z),
        "feasible": check_feasible(instance, z, feasibility_tolerance(instance),
                                   io_assignment).feasible,
    }
    stored = {"hpwl": result.hpwl, "overlap": result.overlap, "feasible": result.feasible}

    mismatches = []
    for key in ("hpwl", "overlap"):
        if not _close(stored[key], fresh[key]):
            mismatches.append(f"{key}: stored {stored[key]!r}, recomputed {fresh[key]!r}")
    if stored["feasible"] != fresh["feasible"]:
        mismatches.append(f"feasible: stored {stored['feasible']}, "
                          f"recomputed {fresh['feasible']}")

    if mismatches:
        print("✗ Result does not match its instance:", file=sys.stderr)
        for line in mismatches:
            print(f"  - {line}", file=sys.stderr)
        return EXIT_MISMATCH
    print(f"✓ {args.result}: HPWL {fresh['hpwl']:.6g}, overlap {100 * fresh['overlap']:.4g}%, "
          f"feasible={fresh['feasible']}")
    return EXIT_OK


def cmd_init(args: argparse.Namespace) -> int:
    """Write the initial placement as a result file."""
    instance = _load(args)
    config = config_from_args(args)
    service = initialization_service(instance, config)
    started = time.perf_counter()
    z = service.initialize()
    elapsed = time.perf_counter() - started
    result = SolveResult(
        placement=z,
        hpwl=hpwl_total(instance, z),
        overlap=overlap_ratio(instance, z),
        iterations=0,
        trace=[],
        config=config.to_dict(),
        seed=config.seed,
        feasible=check_feasible(instance, z, feasibility_tolerance(instance),
                                config.io_assignment).feasible,
        converged=False,
        timings={"initialization": elapsed},
        instance_name=instance.name,
        anchored_components=service.anchored_components,
        pcg_converged=service.pcg_converged,
    )
    _emit(args, instance, result)
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    instance = _load(args)
    result = parse_result(Path(args.result).read_text())
    Path(args.out).write_text(render_svg(instance, result.placement))
    print(f"✓ SVG written to {args.out}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "compare": cmd_compare,
    "check": cmd_check,
    "init": cmd_init,
    "render": cmd_render,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        Exit code: 0 success, 1 usage or input error, 2 not converged,
        3 result mismatch.
    """
    problems = Config.validate()
    if problems:
        print("✗ Invalid environment configuration:", file=sys.stderr)
        for problem in problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_ERROR

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(level=logging.INFO if args.verbose else Config.LOG_LEVEL,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except FloorplanError as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"✗ {e.strerror or e}: {getattr(e, 'filename', '')}", file=sys.stderr)
        return EXIT_ERROR
