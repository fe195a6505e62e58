"""Command dispatch: each command runs one task and writes its artifacts."""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

import config
from cli import reports
from cli.config_document import ConfigDocument, parse_config
from darboux.chart import darboux_chart
from flows.action import commutation_report
from flows.lattice import detect_period_lattice
from flows.system import IntegrableSystemSpec
from foliation.canonical import canonical_coordinates, lagrangian_report
from geometry.calculus import ResidualReport, check_closed, check_nondegenerate
from utils.errors import SymplecticToolkitError
from utils.logger import get_logger

log = get_logger("CLI")

COMMANDS = ("verify", "orbit", "linearize", "darboux", "report")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_RESIDUAL = 2


@dataclass(eq=False)
class CommandResult:
    command: str
    system: str
    frame: pd.DataFrame
    reports: List[ResidualReport] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


@dataclass(eq=False)
class Task:
    document: ConfigDocument
    spec: IntegrableSystemSpec
    point: np.ndarray
    rng: np.random.Generator


def verify(task: Task) -> CommandResult:
    spec, tol = task.spec, task.spec.tolerances
    grid = spec.chart.grid(task.document.task.grid, shrink=0.9)
    closed = check_closed(spec.omega, grid, tol)
    nondegenerate = check_nondegenerate(spec.omega, grid, tol)
    commuting = commutation_report(spec, grid)
    checks = [closed, nondegenerate, commuting.residual_report]
    notes = ["brackets:", commuting.summary()]
    if np.any(commuting.cocycle):
        notes.append(f"cocycle:\n{np.array2string(commuting.cocycle, precision=10)}")
    return CommandResult("verify", spec.name, reports.check_frame(checks, spec.dim), checks, notes)


def orbit(task: Task) -> CommandResult:
    spec, params = task.spec, task.document.flow_params()
    topology = detect_period_lattice(spec, task.point, params, task.document.task.horizon)
    returns = ResidualReport("return", np.tile(task.point, (topology.m, 1)),
                             topology.return_residuals, spec.tolerances.tol_return)
    notes = [topology.summary(), *topology.notes]
    oracle = task.document.oracle()
    if oracle is not None and oracle.lattice is not None:
        notes.append(_lattice_agreement(topology.basis, oracle.lattice(task.point)))
    return CommandResult("orbit", spec.name, reports.lattice_frame(topology.rows(), spec.n), [returns], notes)


def _lattice_agreement(basis: np.ndarray, reference: np.ndarray) -> str:
    if basis.shape != reference.shape:
        return f"oracle lattice has rank {len(reference)}, detected {len(basis)}"
    if len(reference) == 0:
        return "oracle lattice: trivial, agrees"
    gap = max(min(min(np.linalg.norm(g - b), np.linalg.norm(g + b)) for g in basis) for b in reference)
    return f"oracle lattice: largest generator deviation {gap:.3e}"


def linearize(task: Task) -> CommandResult:
    spec, settings, params = task.spec, task.document.task, task.document.flow_params()
    chart = canonical_coordinates(spec, task.point, params, time_half_width=settings.time_half_width,
                                  lattice_horizon=settings.horizon)
    coords = chart.sample_coordinates(task.rng, settings.samples, shrink=0.5)
    points = np.array([chart.point(w) for w in coords])
    half = 0.25 * settings.time_half_width
    times = task.rng.uniform(-half, half, size=(len(points), spec.n))
    checks = [chart.delta_residual(points), chart.darboux_residual(coords), chart.linear_residual(points, times)]
    if spec.n > 1:
        base = chart.adapted.section.base.sample(task.rng, min(settings.samples, 20), shrink=0.5)
        checks.append(lagrangian_report(chart.shift, base, params))
    blocks = [(r.check, points, r.values) for r in checks if r.check != "lagrangian"]
    notes = [f"validity sub-box: {chart.sub_box}"]
    if chart.lattice is not None:
        notes.append(chart.lattice.summary())
    return CommandResult("linearize", spec.name, reports.residual_frame(blocks, spec.dim), checks, notes)


def darboux(task: Task) -> CommandResult:
    spec, settings = task.spec, task.document.task
    chart = darboux_chart(spec.omega, task.point, spec.chart, task.document.flow_params(),
                          cloud_size=settings.cloud, rng=task.rng, tolerances=spec.tolerances)
    coords = chart.sample_coordinates(task.rng, settings.samples, shrink=0.5)
    points = np.array([chart.point(w) for w in coords])
    checks = [chart.residual(coords, spec.tolerances)]
    blocks = [("darboux", points, checks[0].values)]
    oracle = task.document.oracle()
    if oracle is not None and oracle.chart is not None:
        transition = chart.transition_residual(oracle.chart, coords, spec.tolerances)
        checks.append(transition)
        blocks.append(("transition", points, transition.values))
    for name, report in sorted(chart.reports.items()):
        if name.startswith("family_"):
            checks.append(report)
            blocks.append(("family_brackets", report.points, report.values))
    notes = [f"flow-box levels: {chart.depth}", f"validity sub-box: {chart.canonical.sub_box}"]
    return CommandResult("darboux", spec.name, reports.residual_frame(blocks, spec.dim), checks, notes)


HANDLERS: Dict[str, Callable[[Task], CommandResult]] = {
    "verify": verify,
    "orbit": orbit,
    "linearize": linearize,
    "darboux": darboux,
}


def output_dir(document: Optional[ConfigDocument], out: Optional[Path]) -> Path:
    if out is not None:
        target = Path(out)
    elif document is not None and document.output.dir is not None:
        target = Path(document.output.dir)
    else:
        target = Path(config.OUTPUT_DIR)
    target.mkdir(parents=True, exist_ok=True)
    return target


def run(command: str, document: Optional[ConfigDocument], out: Optional[Path] = None,
        seed: Optional[int] = None) -> int:
    """
    Run `command` on a parsed document and write its artifacts.

    Returns:
        int: 0 when every residual is within tolerance, 2 on residual
        violations (artifacts are still written), 1 on errors.
    """
    target = output_dir(document, out)
    if command == "report":
        reports.bundle_reports(target)
        return EXIT_OK
    if command not in HANDLERS:
        log.error(f"❌ Unknown command '{command}'; expected one of {', '.join(COMMANDS)}")
        return EXIT_ERROR
    seed = document.task.seed if seed is None else seed
    log.info(f"🚀 {command} (seed {seed}) -> {target}")
    try:
        spec = document.build_system()
        task = Task(document, spec, document.base_point(spec), np.random.default_rng(seed))
        result = HANDLERS[command](task)
    except SymplecticToolkitError as e:
        stage = e.stage or command
        log.error(f"❌ {command} failed at stage '{stage}': {e.message}")
        return _failed(command, target, [f"stage: {stage}", f"error: {e.message}"])
    except (ArithmeticError, np.linalg.LinAlgError, ValueError) as e:
        log.error(f"❌ {command} failed: {e}")
        return _failed(command, target, [f"error: {e}"])

    reports.write_csv(result.frame, target / f"{command}.csv")
    reports.write_text(reports.report_lines(command, result.system, result.reports, result.notes),
                       target / f"{command}_report.txt")
    if not result.passed:
        log.warning(f"⚠️ {command}: residuals above tolerance, see {target / f'{command}_report.txt'}")
        return EXIT_RESIDUAL
    log.info(f"✅ {command} passed")
    return EXIT_OK


def _failed(command: str, target: Path, lines: List[str]) -> int:
    """Write the ERROR report; a CSV left by an earlier run of the command is removed."""
    (target / f"{command}.csv").unlink(missing_ok=True)
    reports.write_text([f"command: {command}", "status: ERROR", *lines], target / f"{command}_report.txt")
    return EXIT_ERROR


def execute(command: str, config_path: Optional[Path], out: Optional[Path] = None,
            seed: Optional[int] = None) -> int:
    """Load the config file and run the command; config problems exit with 1."""
    if config_path is None:
        if command == "report":
            return run(command, None, out, seed)
        log.error(f"❌ {command} needs --config")
        return EXIT_ERROR
    try:
        document = parse_config(Path(config_path).read_text(encoding="utf-8"))
    except OSError as e:
        log.error(f"❌ Cannot read config {config_path}: {e}")
        return EXIT_ERROR
    except SymplecticToolkitError as e:
        log.error(f"❌ Invalid config {config_path}: {e}")
        return EXIT_ERROR
    return run(command, document, out, seed)
