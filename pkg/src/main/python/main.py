"""
Command line entry point for the similarity boundary analysis toolkit
"""
import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

from .core.config import settings
from .core.exceptions import BudgetExceededError, IfsError, SpecParseError, UnknownFixtureError
from .core.logging import setup_logging
from .models.results import BatteryReport
from .models.spec_file import SpecFile
from .services.analysis_service import analysis_service
from .services.attractor_service import attractor_service
from .services.boundary_service import boundary_service
from .services.measure_service import measure_service
from .services.spaces_service import spaces_service
from .utils.gallery import GALLERY_NAMES, gallery
from .utils.report_writer import Report
from .utils.spec_parser import spec_parser
from .utils.svg_renderer import render_svg

logger = logging.getLogger(__name__)

COMMANDS = (
    "dim",
    "attractor",
    "boundary",
    "invariance",
    "measure",
    "battery",
    "tilecheck",
    "render",
)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_BUDGET = 2
EXIT_FAILURE = 3


@dataclass
class RunOptions:
    """Command line overrides of the spec file parameters"""

    depth: Optional[int] = None
    tol: Optional[float] = None
    budget: Optional[int] = None
    seed: Optional[int] = None
    out: Optional[Path] = None
    svg: bool = False
    sample: int = 0


@dataclass
class RunResult:
    status: int
    report: Optional[Report] = None
    artifacts: List[Path] = field(default_factory=list)
    message: str = ""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ifs-analysis",
        description="Similarity boundaries, inverse invariance and measure checks for IFS attractors",
    )
    parser.add_argument("command", choices=COMMANDS)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", type=Path, help="IFS spec file")
    source.add_argument("--gallery", choices=GALLERY_NAMES, help="built-in fixture")
    parser.add_argument("--depth", type=int, help="address length n")
    parser.add_argument("--tol", type=float, help="overlap tolerance tau")
    parser.add_argument("--out", type=Path, help="directory for the report and SVG")
    parser.add_argument("--svg", action="store_true", help="also render an SVG")
    parser.add_argument("--budget", type=int, help="largest admissible N ** depth")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument(
        "--sample", type=int, default=0, help="render: overlay N chaos game points"
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def load_spec(path: Optional[Path], name: Optional[str]) -> SpecFile:
    """
    Read a spec file or a gallery fixture

    Raises:
        SpecParseError: unreadable or malformed file
        UnknownFixtureError: unknown fixture name
    """
    if name is not None:
        return gallery(name)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SpecParseError(f"cannot read {path}: {e}") from e
    return spec_parser.parse(text)


def run(command: str, spec: SpecFile, options: Optional[RunOptions] = None) -> RunResult:
    """
    Execute one command; operational failures become exit statuses

    Returns:
        RunResult with 0 on a completed analysis (whatever its verdicts), 2 when
        the budget is exceeded and 3 on any other failure
    """
    options = options or RunOptions()
    if command not in COMMANDS:
        return RunResult(EXIT_FAILURE, message=f"unknown command {command!r}")
    depth = spec.depth if options.depth is None else options.depth
    budget = spec.budget if options.budget is None else options.budget
    tau = spec.tol if options.tol is None else options.tol
    seed = spec.seed if options.seed is None else options.seed
    report = Report()
    report.section(
        "run",
        command=command,
        name=spec.name,
        backend=spec.ifs.backend,
        maps=spec.ifs.size,
        depth=depth,
        tau=tau,
        budget=budget,
        seed=seed,
    )
    artifacts: List[Path] = []
    try:
        handler = _HANDLERS[command]
        handler(spec, depth, tau, budget, report, artifacts, options)
    except BudgetExceededError as e:
        logger.error(f"{command} failed: {e}")
        return RunResult(EXIT_BUDGET, message=str(e))
    except (IfsError, ValueError) as e:
        logger.error(f"{command} failed: {e}")
        return RunResult(EXIT_FAILURE, message=str(e))

    if options.out is not None:
        artifacts.insert(0, report.write(Path(options.out) / f"{spec.name}-{command}.txt"))
    return RunResult(EXIT_OK, report=report, artifacts=artifacts)


# ----------------------------------------------------------------------
# Command handlers
# ----------------------------------------------------------------------


def _dim(spec, depth, tau, budget, report, artifacts, options):
    ratios = spec.ifs.ratios
    alpha = analysis_service.similarity_dimension(ratios)
    residual = abs(math.fsum(r**alpha for r in ratios) - 1.0)
    section = report.section("dimension", alpha=alpha, residual=residual)
    if len(set(ratios)) == 1:
        section["closed_form"] = math.log(len(ratios)) / math.log(1.0 / ratios[0])


def _attractor(spec, depth, tau, budget, report, artifacts, options):
    approx = attractor_service.approximate(spec.ifs, depth, budget)
    report.section(
        "attractor",
        depth=approx.depth,
        points=approx.count,
        center=spaces_service.point_as_list(approx.center),
        radius=approx.radius,
        max_cell_radius=approx.max_radius,
        diameter_bound=2.0 * approx.radius,
    )
    if options.svg:
        artifacts.append(_render(spec, approx, None, options))


def _boundary(spec, depth, tau, budget, report, artifacts, options):
    approx = attractor_service.approximate(spec.ifs, depth, budget)
    boundary = boundary_service.similarity_boundary(spec.ifs, depth, tau, approx=approx)
    _boundary_sections(report, boundary)
    estimate = analysis_service.boundary_dimension_estimate(boundary, approx)
    if estimate is not None:
        report.section(
            "boundary.dimension",
            slope=estimate.slope,
            residual=estimate.residual,
            alpha=analysis_service.similarity_dimension(spec.ifs.ratios),
        )
    if options.svg:
        artifacts.append(_render(spec, approx, boundary, options))


def _boundary_sections(report, boundary):
    report.section(
        "boundary",
        depth=boundary.depth,
        tau=boundary.tau,
        certified=boundary.certified,
        witnesses=boundary.count,
        touching=int(boundary.touching.sum()),
        max_witness_radius=boundary.max_radius,
    )
    report.section(
        "boundary.pairs",
        **{f"{j}-{k}": count for (j, k), count in sorted(boundary.pair_counts.items())},
    )
    clusters = boundary_service.cluster_witnesses(boundary)
    report.section("boundary.clusters", count=len(clusters))
    for n, cluster in enumerate(clusters, start=1):
        report.section(
            f"boundary.cluster.{n}", size=cluster.size, lower=cluster.lower, upper=cluster.upper
        )


def _invariance(spec, depth, tau, budget, report, artifacts, options):
    approx = attractor_service.approximate(spec.ifs, depth, budget)
    boundary = boundary_service.similarity_boundary(spec.ifs, depth, tau, approx=approx)
    verdict = boundary_service.check_inverse_invariance(spec.ifs, boundary, approx)
    report.section("invariance", **verdict.model_dump())


def _measure(spec, depth, tau, budget, report, artifacts, options):
    ifs = spec.ifs
    approx = attractor_service.approximate(ifs, depth, budget)
    straddlers = measure_service.straddler_table(approx)
    alpha = analysis_service.similarity_dimension(ifs.ratios)
    for i in range(1, ifs.size + 1):
        estimate = measure_service.mu_branch(
            ifs, i, depth, approx=approx, straddlers=straddlers
        )
        report.section(
            f"measure.branch.{i}", target=ifs.ratios[i - 1] ** alpha, **estimate.model_dump()
        )
    for i in range(1, ifs.size + 1):
        for j in range(i + 1, ifs.size + 1):
            estimate = measure_service.mu_overlap(
                ifs, i, j, depth, approx=approx, straddlers=straddlers
            )
            report.section(f"measure.overlap.{i}-{j}", **estimate.model_dump())
    boundary = boundary_service.similarity_boundary(ifs, depth, tau, approx=approx)
    estimate = measure_service.mu_boundary(ifs, boundary, approx=approx)
    report.section("measure.boundary", **estimate.model_dump())


def _battery(spec, depth, tau, budget, report, artifacts, options):
    result = analysis_service.equivalence_battery(spec.ifs, depth, tau, budget)
    battery_sections(report, result)


def battery_sections(report: Report, result: BatteryReport):
    report.section(
        "battery",
        name=result.name,
        alpha=result.alpha,
        applicable=result.applicable,
        consistent=result.consistent,
        disagreements=[f"{a}-{b}" for a, b in result.disagreements],
        banner=result.banner,
    )
    report.section("precondition", **result.precondition.model_dump())
    for entry in result.conditions:
        section = report.section(
            f"condition.{entry.id}",
            name=entry.name,
            status=entry.status,
            depth=entry.depth,
            tau=entry.tau,
        )
        for key, value in entry.evidence.items():
            section[f"evidence.{key}"] = value
        if entry.note:
            section["note"] = entry.note


def _tilecheck(spec, depth, tau, budget, report, artifacts, options):
    ifs = spec.ifs
    approx = attractor_service.approximate(ifs, depth, budget)
    h = spec.grid[0] if spec.grid else None
    topological = boundary_service.tile_topological_boundary(ifs, depth, h, approx=approx)
    h = h if h is not None else 2.0 * approx.max_radius
    boundary = boundary_service.similarity_boundary(ifs, depth, tau, approx=approx)
    comparison = boundary_service.compare_boundaries(boundary, topological, h=h)
    report.section("tilecheck", grid=h, raster_cells=len(topological), **comparison.model_dump())


def _render_command(spec, depth, tau, budget, report, artifacts, options):
    approx = attractor_service.approximate(spec.ifs, depth, budget)
    boundary = boundary_service.similarity_boundary(spec.ifs, depth, tau, approx=approx)
    samples = None
    if options.sample:
        seed = spec.seed if options.seed is None else options.seed
        samples = attractor_service.chaos_game(spec.ifs, options.sample, seed)
    path = _render(spec, approx, boundary, options, samples)
    artifacts.append(path)
    report.section(
        "render",
        points=approx.count,
        witnesses=boundary.count,
        samples=options.sample,
        path=str(path),
    )


def _render(spec, approx, boundary, options, samples=None) -> Path:
    directory = Path(options.out) if options.out is not None else Path(".")
    return render_svg(approx, boundary, directory / f"{spec.name}.svg", samples)


_HANDLERS = {
    "dim": _dim,
    "attractor": _attractor,
    "boundary": _boundary,
    "invariance": _invariance,
    "measure": _measure,
    "battery": _battery,
    "tilecheck": _tilecheck,
    "render": _render_command,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the command and print the report"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(level="DEBUG" if args.verbose else None)
    logger.info(f"Starting {settings.app_name} v{settings.app_version}: {args.command}")

    try:
        spec = load_spec(args.spec, args.gallery)
    except (SpecParseError, UnknownFixtureError) as e:
        logger.error(f"Spec loading failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE

    options = RunOptions(
        depth=args.depth,
        tol=args.tol,
        budget=args.budget,
        seed=args.seed,
        out=args.out,
        svg=args.svg,
        sample=args.sample,
    )
    result = run(args.command, spec, options)
    if result.status != EXIT_OK:
        print(f"error: {result.message}", file=sys.stderr)
        return result.status
    sys.stdout.write(result.report.render())
    return EXIT_OK


def cli():
    """Console script entry point"""
    sys.exit(main())


if __name__ == "__main__":
    cli()
