"""
Command-line surface: `dirichletlab audit | flow | slopes --config PATH`.

Exit codes: 0 success or expectation met, 1 usage or config error,
2 solver failure, 3 verdict does not match the config's `expect`.
"""
import argparse
import csv
import io
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

from .calculus import DEFAULT_SLOPE_TOL, quadraticity_test, regularity_probe, slope_enclosure
from .checker import full_audit
from .experiment import ExperimentConfig, format_validation_error
from .experiment_loader import ConfigError, ExperimentLoader
from .prox_engine import ProxFailure, SubgradientFailure
from .report import jsonable
from .sampling import FieldSampler, section_rng
from .semigroup import FlowFailure, Trajectory, exact_quadratic_flow, flow
from .solver_settings import SolverSettings
from .space import m_norm
from .storage_providers import FileSystemProvider, StorageProviderBase

ENV_SEED = "DIRICHLETLAB_SEED"
ENV_OUTPUT_DIR = "DIRICHLETLAB_OUTPUT_DIR"
ENV_LOG_LEVEL = "DIRICHLETLAB_LOG_LEVEL"
DEFAULT_OUTPUT_DIR = "dirichletlab-out"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_EXPECTATION = 3


def _dumps(value: Any) -> str:
    return json.dumps(jsonable(value), sort_keys=True, indent=2) + "\n"


def _parse_placeholder(assignment: str) -> Dict[str, Any]:
    if "=" not in assignment:
        raise ConfigError("--set", [f"expected NAME=VALUE, got '{assignment}'"])
    name, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return {name.strip(): value}


def load_experiment(path: str, assignments: Sequence[str] = ()) -> ExperimentConfig:
    """Read a config file through a FileSystemProvider, filling `${name}` placeholders from NAME=VALUE pairs."""
    placeholders: Dict[str, Any] = {}
    for assignment in assignments:
        placeholders.update(_parse_placeholder(assignment))
    directory, name = os.path.split(os.path.abspath(path))
    try:
        provider = FileSystemProvider(directory)
    except ValueError as e:
        raise ConfigError(path, [str(e)])
    return ExperimentLoader(provider, name, placeholders).get_config()


def resolve_config(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """Flags win; the environment fills only what the config leaves unset."""
    values = config.model_dump(mode="json", exclude_none=True)
    if args.seed is not None:
        values["seed"] = args.seed
    elif config.seed is None:
        values["seed"] = int(os.getenv(ENV_SEED, "0"))
    if args.out is not None:
        values["output_dir"] = args.out
    elif config.output_dir is None:
        values["output_dir"] = os.getenv(ENV_OUTPUT_DIR, DEFAULT_OUTPUT_DIR)
    tolerances = values.setdefault("tolerances", {})
    if args.tol is not None:
        tolerances["tol"] = args.tol
    if args.max_iters is not None:
        tolerances["max_iters"] = args.max_iters
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigError("command line", format_validation_error(e))


def cmd_audit(config: ExperimentConfig, cfg: SolverSettings, out: StorageProviderBase) -> int:
    form, space = config.build_form(), config.build_space()
    spec = config.command.audit
    report = full_audit(form, spec.budget, space, cfg, seed=config.seed, t_grid=spec.t_grid, max_step=spec.max_step)
    out.upload_file("report.json", report.to_json())
    out.upload_file("report.txt", report.to_text())
    print(report.to_text(), end="")

    labels = report.verdict.labels()
    missing = [label for label in config.expected_labels() if label not in labels]
    if missing:
        print(f"expectation not met: expected {missing}, verdict is {labels}", file=sys.stderr)
        return EXIT_EXPECTATION
    return EXIT_OK


def _write_trajectory(trajectory: Trajectory, out: StorageProviderBase, extra: Optional[Dict[str, Any]] = None) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["time", "point", "value"])
    for time, point, value in trajectory.csv_rows():
        writer.writerow([repr(float(time)), point, repr(value)])
    out.upload_file("trajectory.csv", buffer.getvalue())
    document = trajectory.to_dict()
    document.update(extra or {})
    out.upload_file("trajectory.json", _dumps(document))


def cmd_flow(config: ExperimentConfig, cfg: SolverSettings, out: StorageProviderBase) -> int:
    spec = config.command.flow
    if spec is None:
        raise ConfigError("command.flow", ["the flow command needs command.flow with u0, t_final and steps"])
    form, space = config.build_form(), config.build_space()
    try:
        trajectory = flow(form, spec.u0, spec.t_final, spec.steps, space, cfg)
    except FlowFailure as e:
        _write_trajectory(e.trajectory, out, {"failed": str(e)})
        print(f"flow failed: {e}; partial trajectory written", file=sys.stderr)
        return EXIT_SOLVER

    extra: Dict[str, Any] = {"form": config.form}
    matrix = form.quadratic_matrix(space.size)
    if spec.reference and matrix is not None:
        exact = exact_quadratic_flow(matrix, spec.u0, spec.t_final, space)
        error = m_norm(np.asarray(trajectory.final) - exact, space)
        extra["reference"] = {"state": exact, "error": error}
        logging.info(f"Distance to the exact flow at t={spec.t_final}: {error:.3e}")
    _write_trajectory(trajectory, out, extra)
    for time, energy in zip(trajectory.times, trajectory.energies):
        print(f"t={time:.6g} energy={energy:.12g}")
    return EXIT_OK


def cmd_slopes(config: ExperimentConfig, cfg: SolverSettings, out: StorageProviderBase) -> int:
    spec = config.command.slopes
    if spec is None:
        raise ConfigError("command.slopes", ["the slopes command needs command.slopes with u and v or samples"])
    form, space = config.build_form(), config.build_space()
    tol = config.tolerances.slope_tol or DEFAULT_SLOPE_TOL
    pairs: List[Any] = []
    if spec.u is not None:
        pairs.append((space.field(spec.u), space.field(spec.v)))
    if spec.samples:
        sampler = FieldSampler(space.size, section_rng(config.seed, 0))
        pairs.extend(sampler.pair() for _ in range(spec.samples))

    entries = []
    for u, v in pairs:
        enclosure = slope_enclosure(form, u, v, tol, space)
        probe = regularity_probe(form, u, space.coordinate_fields(), tol, space)
        entries.append({
            "u": u,
            "v": v,
            "energy_u": form.evaluate(u),
            "enclosure": enclosure.to_dict(),
            "regular_at_u": probe.regular,
            "worst_gap_at_u": probe.worst_gap,
        })
        print(f"left={enclosure.left:.10g} right={enclosure.right:.10g} status={enclosure.status}")

    document: Dict[str, Any] = {"form": config.form, "space": {"weights": list(space.weights)}, "pairs": entries}
    if spec.quadraticity:
        verdict = quadraticity_test(form, pairs, tol, space)
        document["quadraticity"] = {
            "quadratic": verdict.quadratic,
            "regular": verdict.regular,
            "symmetric": verdict.symmetric,
            "parallelogram": verdict.parallelogram,
            "symmetry_defect": verdict.symmetry_defect,
            "parallelogram_defect": verdict.parallelogram_defect,
            "consistent": verdict.consistent,
        }
        print(f"quadratic={verdict.quadratic} symmetry_defect={verdict.symmetry_defect:.3e}")
    out.upload_file("enclosures.json", _dumps(document))
    return EXIT_OK


COMMANDS = {
    "audit": cmd_audit,
    "flow": cmd_flow,
    "slopes": cmd_slopes,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirichletlab", description="Nonlinear Dirichlet form laboratory (audit | flow | slopes)")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "audit": "Run the sampled Dirichlet audit and write report.json / report.txt",
        "flow": "Run the implicit Euler flow and write trajectory.csv / trajectory.json",
        "slopes": "Enclose one-sided slopes and write enclosures.json",
    }
    for name, text in helps.items():
        command = sub.add_parser(name, help=text)
        command.add_argument("--config", required=True, help="Path to the JSON experiment config")
        command.add_argument("--seed", type=int, default=None, help=f"Sampling seed (env {ENV_SEED})")
        command.add_argument("--tol", type=float, default=None, help="Prox residual tolerance")
        command.add_argument("--max-iters", type=int, default=None, help="Prox iteration limit")
        command.add_argument("--out", type=str, default=None, help=f"Output directory (env {ENV_OUTPUT_DIR})")
        command.add_argument("--dump-config", action="store_true", help="Print the resolved config and exit")
        command.add_argument("--log-level", type=str, default=None, help=f"Logging level (env {ENV_LOG_LEVEL})")
        command.add_argument("--set", action="append", default=[], metavar="NAME=VALUE",
                             help="Fill a ${NAME} placeholder in the config; repeatable")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (args.log_level or os.getenv(ENV_LOG_LEVEL, "WARNING")).upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")

    try:
        config = resolve_config(load_experiment(args.config, args.set), args)
    except ConfigError as e:
        for line in e.lines:
            print(f"{e.source}: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"{args.config}: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.dump_config:
        print(json.dumps(config.model_dump(mode="json", exclude_none=True), sort_keys=True, indent=2))
        return EXIT_OK

    try:
        cfg = config.solver_settings()
        out = FileSystemProvider(config.output_dir, create=True)
        return COMMANDS[args.command](config, cfg, out)
    except ConfigError as e:
        for line in e.lines:
            print(f"{e.source}: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except (ProxFailure, SubgradientFailure) as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as e:
        print(f"invalid experiment: {e}", file=sys.stderr)
        return EXIT_CONFIG
