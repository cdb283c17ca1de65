"""End-to-end runs: sample, build, train, evaluate and write artifacts."""

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

from . import networks as nw
from . import problems as pb
from .domains import sample_collocation
from .evaluation import append_results, error_report, export_grid
from .losses import LossObjective, LossSpec, prepare_targets
from .method1 import Method1Specs, train_method1
from .optimizers import (AdamOptions, AlternationOptions, OptimizerOptions, Termination,
                         alternating_minimize, high_dim_schedule)

log = logging.getLogger(__name__)

EXIT_CODES = {Termination.CONVERGED: 0, Termination.MAX_ITERATIONS: 3,
              Termination.PRECISION_LOSS: 4}


@dataclass
class RunArtifacts:
    directory: Path
    checkpoint: Path
    trace: Path
    error_report: Path
    grid: Path
    config: Path
    collocation: Path


@dataclass
class RunResult:
    config: object
    problem: object
    collocation: object
    field: object
    report: object
    errors: object
    checkpoint_errors: list

    @property
    def exit_code(self):
        return EXIT_CODES[self.report.termination]


def optimizer_options(cfg):
    o = cfg.optimizer
    return OptimizerOptions(
        max_iterations=o.max_iterations, gradient_tolerance=o.gradient_tolerance,
        wolfe_c1=o.wolfe_c1, wolfe_c2=o.wolfe_c2,
        adam=AdamOptions(o.adam.lr, o.adam.beta1, o.adam.beta2, o.adam.epsilon),
        alternation=AlternationOptions(o.alternation.adam_epochs, o.alternation.adam_lr,
                                       o.alternation.max_rounds))


def loss_spec(cfg):
    w = cfg.weights
    if cfg.method == "method1":
        return LossSpec.method1(w.convexity, w.positive_det)
    if cfg.method == "method2_singular":
        return LossSpec.method2_singular(w.boundary, w.singular, cfg.points.boundary_in_equation)
    spec = LossSpec.method2(w.boundary, cfg.points.boundary_in_equation)
    return replace(spec, equation_uses_positive_det=w.positive_det)


def collocation_for(cfg, problem):
    segs = problem.singular_segments if cfg.method == "method2_singular" else ()
    return sample_collocation(problem.domain, cfg.points.interior, cfg.points.boundary,
                              cfg.seeds.sampling, segs)


def noisy_interior(cfg, problem, collocation):
    if cfg.noise_stdev == 0:
        return None
    return pb.NoisySource(problem.source, cfg.noise_stdev, cfg.seeds.noise,
                          collocation.interior).values()


def train(cfg, callback=None):
    """Train per ``cfg``; returns ``(problem, collocation, field, report)``."""
    problem = pb.catalog(cfg.problem)
    collocation = collocation_for(cfg, problem)
    opts = optimizer_options(cfg)
    spec = loss_spec(cfg)
    interior_source = noisy_interior(cfg, problem, collocation)
    net_spec = cfg.network_spec(problem.dim)

    if cfg.method == "method1":
        field, report = train_method1(problem, collocation, Method1Specs(N=net_spec), spec,
                                      cfg.seeds.init, opts, callback=callback,
                                      distance_points=cfg.points.distance_points)
        return problem, collocation, field, report

    targets = prepare_targets(collocation, problem, spec, interior_source)

    def build(raw):
        return nw.NetworkField(net_spec, raw)

    objective = LossObjective(build, targets, spec)
    x0 = nw.init_params(net_spec, cfg.seeds.init, cfg.network.init_std).raw
    if cfg.method == "high_dim_schedule":
        boundary_only = objective.with_spec(LossSpec(use_equation=False, boundary_weight=1.0))
        report = high_dim_schedule(objective, boundary_only, x0, opts,
                                   cfg.schedule.boundary_epochs, cfg.schedule.full_epochs)
    else:
        report = alternating_minimize(objective, x0, opts, callback=callback)
    return problem, collocation, build(report.x), report


def _checkpoint_callback(cfg, problem, rebuild, sink):
    marks = set(cfg.evaluation.checkpoints)
    if not marks:
        return None

    def cb(k, x, f):
        if k in marks:
            rep = error_report(rebuild(x), problem, cfg.evaluation.count, cfg.seeds.evaluation)
            sink.append({"iteration": k, "loss": f, **rep.as_dict()})
    return cb


def execute(cfg):
    """Train and evaluate without touching the file system."""
    problem = pb.catalog(cfg.problem)
    net_spec = cfg.network_spec(problem.dim)
    marks = []
    cb = None
    if cfg.method != "method1":
        # the method-1 field also needs G and D, so it has no mid-run checkpoints
        cb = _checkpoint_callback(cfg, problem, lambda x: nw.NetworkField(net_spec, x), marks)
    problem, collocation, field, report = train(cfg, callback=cb)
    errors = error_report(field, problem, cfg.evaluation.count, cfg.seeds.evaluation)
    return RunResult(cfg, problem, collocation, field, report, errors, marks)


def write_artifacts(result, directory=None):
    cfg = result.config
    out = Path(directory or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    art = RunArtifacts(out, out / "checkpoint", out / "trace.tsv", out / "errors.json",
                       out / "grid.tsv", out / "config.yaml", out / "collocation.tsv")
    art.config.write_text(cfg.to_yaml())
    art.collocation.write_text(result.collocation.to_text())
    field = result.field
    if hasattr(field, "save"):
        field.save(art.checkpoint)
    else:
        art.checkpoint.mkdir(exist_ok=True)
        nw.save_checkpoint(art.checkpoint / "net.json", field.spec, field.params)
    result.report.write_trace(art.trace)
    summary = {
        "problem": cfg.problem, "method": cfg.method,
        "termination": result.report.termination.value,
        "iterations": result.report.iterations,
        "bfgs_iterations": result.report.bfgs_iterations,
        "adam_escapes": result.report.rounds,
        "final_loss": result.report.final_loss,
        "wall_time": result.report.wall_time,
        **result.errors.as_dict(),
        "checkpoints": result.checkpoint_errors,
        "events": result.report.events,
    }
    art.error_report.write_text(json.dumps(summary, indent=1))
    if result.problem.dim == 2:
        export_grid(field, result.problem, tuple(cfg.evaluation.grid)).write(art.grid)
    else:
        art.grid = None
    return art


def run(cfg, directory=None):
    result = execute(cfg)
    return result, write_artifacts(result, directory)


def sweep_noise(base, stdevs, table=None):
    """One run per stdev; rows ``(stdev, max_error, average_error)`` in input order."""
    rows = []
    for s in stdevs:
        cfg = replace(base, noise_stdev=float(s))
        res = execute(cfg)
        row = {"stdev": float(s), "max_error": res.errors.max_error,
               "average_error": res.errors.average_error,
               "iterations": res.report.iterations,
               "termination": res.report.termination.value}
        rows.append(row)
        if table is not None:
            append_results(table, row)
    return rows


def report_dir(directory):
    """Summaries of every run below ``directory`` (one ``errors.json`` per run)."""
    rows = []
    for path in sorted(Path(directory).rglob("errors.json")):
        doc = json.loads(path.read_text())
        rows.append({"run": str(path.parent), "problem": doc["problem"], "method": doc["method"],
                     "iterations": doc["iterations"], "termination": doc["termination"],
                     "max_error": doc["max_error"], "average_error": doc["average_error"],
                     "l2_error": doc["l2_error"]})
    return rows


def summary_line(row):
    return "\t".join(f"{v:.4g}" if isinstance(v, float) else str(v) for v in row.values())

