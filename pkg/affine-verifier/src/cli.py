"""
Command-line entry point.

    python -m src.cli examples list
    python -m src.cli verify --example titeica --n 2 --report out/titeica.json
    python -m src.cli tension --example hyperboloid
    python -m src.cli invert --example scrambled-titeica
    python -m src.cli boundary --example titeica --csv out/rays
"""
import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Optional

from src.config import settings
from src.services.boundary import BoundaryService
from src.services.example_registry import DIMENSIONS, ExampleRegistry
from src.services.sigma_maps import SigmaMapService
from src.services.symmetric_spaces import SymmetricSpaceService
from src.services.verification_suite import VerificationSuite, report_to_json

logger = logging.getLogger("affine_verifier")


def _params(text: Optional[str]) -> Dict[str, float]:
    """Parse 'a=2,b=1' into a dict."""
    if not text:
        return {}
    params = {}
    for item in text.split(","):
        key, _, value = item.partition("=")
        if not value:
            raise argparse.ArgumentTypeError(f"Parameter '{item}' is not of the form key=value")
        params[key.strip()] = float(value)
    return params


def _checks(text: Optional[str]) -> Optional[List[str]]:
    if not text:
        return None
    return [item.strip() for item in text.split(",") if item.strip()]


def _write(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text + "\n")


def _add_example_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--example", required=True, help="Registered example name")
    parser.add_argument("--n", type=int, default=None, help="Dimension of the immersed manifold")
    parser.add_argument("--params", default=None, help="Example parameters as key=value pairs")
    parser.add_argument("--grid", type=int, default=None, help="Grid points per axis")
    parser.add_argument("--step", type=float, default=None, help="Finite-difference step")
    parser.add_argument("--tol-profile", choices=["analytic", "fd"], default=None)
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affine-verifier",
        description="Numerical verification of equiaffine immersions and their sigma maps",
    )
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    commands = parser.add_subparsers(dest="command", required=True)

    examples = commands.add_parser("examples", help="Inspect the example registry")
    examples_commands = examples.add_subparsers(dest="action", required=True)
    examples_commands.add_parser("list", help="List examples")
    show = examples_commands.add_parser("show", help="Show an example manifest")
    show.add_argument("name")
    show.add_argument("--n", type=int, default=None)

    verify = commands.add_parser("verify", help="Run the verification suite")
    _add_example_arguments(verify)
    verify.add_argument("--checks", default=None, help="Comma-separated check names or prefixes")
    verify.add_argument("--report", default=None, help="Write the JSON report here")
    verify.add_argument("--timings", action="store_true", help="Record wall time per check")
    verify.add_argument("--s-max", type=float, default=None)
    verify.add_argument("--rays", type=int, default=8)

    tension = commands.add_parser("tension", help="Tension of the Blaschke lift")
    _add_example_arguments(tension)

    invert = commands.add_parser("invert", help="Recover the horizontal lift of a scrambled lift")
    _add_example_arguments(invert)
    invert.add_argument("--report", default=None)

    boundary = commands.add_parser("boundary", help="Projective limits of sigma along rays")
    _add_example_arguments(boundary)
    boundary.add_argument("--csv", default=None, help="Directory for one CSV table per ray")
    boundary.add_argument("--s-max", type=float, default=None)
    boundary.add_argument("--rays", type=int, default=8)
    return parser


def _spec(args):
    return ExampleRegistry.example(args.example, args.n, _params(args.params), step=args.step)


def _verify(args) -> int:
    report = VerificationSuite.run_suite(
        _spec(args),
        checks_filter=_checks(args.checks),
        grid=args.grid,
        tol_profile=args.tol_profile,
        seed=args.seed,
        s_max=args.s_max,
        rays=args.rays,
        timings=args.timings,
    )
    text = report_to_json(report)
    if args.report:
        _write(args.report, text)
    for check in report.checks:
        residual = "-" if check.residual is None else f"{check.residual:.3e}"
        print(f"{check.verdict:<14} {check.name:<40} {residual:>11} {check.comparison} {check.tol:.1e}")
    tally = report.counts()
    print(f"{tally['pass']} pass, {tally['expected-fail']} expected-fail, {tally['fail']} fail, {tally['error']} error")
    return 0 if report.passed else 1


def _tension(args) -> int:
    spec = _spec(args)
    ctx = VerificationSuite.context(spec, args.grid, args.tol_profile, args.seed)
    report = SymmetricSpaceService.harmonicity_report(spec.imm, ctx.few, ctx.tol("harm_tol", fd_jet=True))
    print(json.dumps(report, sort_keys=True, indent=2))
    return 0 if report["harmonic"] == bool(spec.manifest.get("harmonic")) else 1


def _invert(args) -> int:
    args.checks = "lift."
    args.s_max = None
    args.rays = 8
    args.timings = False
    return _verify(args)


def _boundary(args) -> int:
    spec = _spec(args)
    sd = SigmaMapService.build_sigma(spec.imm, -1)
    s_max = args.s_max or settings.S_MAX
    worst = 0.0
    for index, direction in enumerate(spec.ray_directions(args.rays, args.seed)):
        limit = BoundaryService.sigma_limit(sd, spec.ray(direction), s_max, spec.cone)
        membership = limit.membership["max"] if limit.membership else float("nan")
        worst = max(worst, limit.ein)
        print(f"ray {index}: direction={direction.round(6).tolist()} ein={limit.ein:.3e} "
              f"membership={membership:.3e} ratio={limit.ratio:.3e}")
        if args.csv:
            BoundaryService.write_ray_csv(os.path.join(args.csv, f"{spec.name}_ray{index}.csv"), limit.table)
    return 0 if worst <= settings.tolerance_profile("analytic").boundary_tol else 1


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    if args.command == "examples":
        if args.action == "list":
            for name in ExampleRegistry.names():
                default, lowest, highest = DIMENSIONS[name]
                print(f"{name:<20} n={default} (supports {lowest}..{highest})")
            return 0
        print(json.dumps(ExampleRegistry.example(args.name, args.n).manifest_dict(), sort_keys=True, indent=2))
        return 0

    handlers = {"verify": _verify, "tension": _tension, "invert": _invert, "boundary": _boundary}
    try:
        return handlers[args.command](args)
    except ValueError as error:
        logger.error(f"{type(error).__name__}: {error}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
