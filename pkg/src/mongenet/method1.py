"""Boundary-exact ansatz ``u = G + D * N``.

``G`` extends the boundary data into the domain and ``D`` approximates the
distance to the boundary; both are fitted once and then frozen while the deep
network ``N`` is trained on the equation loss plus a convexity penalty.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import networks as nw
from .autodiff import Tape
from .domains import HyperRectangle, distance_to_boundary, sample_interior
from .errors import UsageError
from .seeding import spawn
from .losses import LossObjective, LossSpec, prepare_targets
from .optimizers import OptimizerOptions, TrainReport, alternating_minimize, bfgs_minimize

FIT_ITERATIONS = 5000
# the fits are small least-squares problems whose gradient vanishes long
# before the residual does, so they stop on a much tighter tolerance
FIT_GRADIENT_TOLERANCE = 1e-12


def extension_spec(n=2):
    return nw.NetworkSpec.standard(n, (20,), activation="tanh")


def distance_spec(n=2):
    return nw.NetworkSpec.standard(n, (40,), activation="tanh")


def deep_spec(n=2):
    return nw.NetworkSpec.standard(n, (10,) * 5, activation="sigmoid")


class FitResult(NamedTuple):
    field: nw.NetworkField
    report: TrainReport


@dataclass
class AnsatzField:
    G: nw.NetworkField
    D: nw.NetworkField
    N: nw.NetworkField
    fit_reports: dict = field(default_factory=dict)

    @property
    def input_dim(self):
        return self.N.input_dim

    def __call__(self, x):
        return self.G(x) + self.D(x) * self.N(x)

    def with_deep(self, raw):
        return AnsatzField(self.G, self.D, nw.NetworkField(self.N.spec, raw), self.fit_reports)

    def save(self, directory):
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for name, net in (("G", self.G), ("D", self.D), ("N", self.N)):
            nw.save_checkpoint(d / f"{name}.json", net.spec, net.params)

    @classmethod
    def load(cls, directory):
        d = Path(directory)
        return cls(*(nw.load_checkpoint(d / f"{name}.json") for name in "GDN"))


def _check_fit_spec(spec):
    if spec.family != nw.STANDARD or spec.output_activation != "identity":
        raise UsageError("G and D must be standard networks with identity output")


def _least_squares(spec, points, targets, seed, opts, iterations):
    points = np.asarray(points, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)

    def objective(raw):
        tape = Tape()
        v = tape.variable(raw)
        d = nw.forward(spec, v, points) - targets
        loss = (d * d).mean()
        grad = tape.gradient(loss, v)
        tape.release()
        return float(loss.value), grad

    x0 = nw.init_params(spec, seed).raw
    opts = replace(opts or OptimizerOptions(), gradient_tolerance=FIT_GRADIENT_TOLERANCE)
    report = bfgs_minimize(objective, x0, opts, max_iterations=iterations)
    return FitResult(nw.NetworkField(spec, report.x), report)


def fit_boundary_extension(problem, points, spec=None, seed=0, opts=None,
                           iterations=FIT_ITERATIONS):
    """Least-squares fit of ``g`` at the boundary samples ``points``."""
    spec = spec or extension_spec(problem.dim)
    _check_fit_spec(spec)
    points = np.asarray(points, dtype=np.float64)
    return _least_squares(spec, points, problem.boundary(points), seed, opts, iterations)


def fit_distance(domain, boundary_points, interior_count=300, spec=None, seed=0, opts=None,
                 iterations=FIT_ITERATIONS):
    """Fit exact distances at ``interior_count`` random interior points and 0 on the boundary."""
    if not isinstance(domain, HyperRectangle):
        raise UsageError("fit_distance needs the exact distance, available for rectangles only")
    spec = spec or distance_spec(domain.dim)
    _check_fit_spec(spec)
    s_pts, s_init = spawn(seed, 2)
    inner = sample_interior(domain, interior_count, s_pts)
    boundary_points = np.asarray(boundary_points, dtype=np.float64)
    points = np.concatenate([inner, boundary_points])
    targets = np.concatenate([distance_to_boundary(domain, inner), np.zeros(len(boundary_points))])
    return _least_squares(spec, points, targets, s_init, opts, iterations)


@dataclass(frozen=True)
class Method1Specs:
    G: nw.NetworkSpec = field(default_factory=extension_spec)
    D: nw.NetworkSpec = field(default_factory=distance_spec)
    N: nw.NetworkSpec = field(default_factory=deep_spec)


def _require_rectangle_2d(problem):
    if problem.dim != 2:
        raise UsageError(f"method1 needs a two-dimensional problem, {problem.name} has dimension "
                         f"{problem.dim}")
    if not isinstance(problem.domain, HyperRectangle):
        raise UsageError("method1 needs a rectangular domain (exact distance)")


def train_method1(problem, collocation, specs=None, loss_spec=None, seed=0, opts=None,
                  callback=None, distance_points=300):
    """Fit ``G`` and ``D``, then train ``N`` with BFGS and the Adam escape protocol.

    Returns ``(AnsatzField, TrainReport)`` where the report covers the training of ``N``.
    """
    _require_rectangle_2d(problem)
    specs = specs or Method1Specs()
    loss_spec = loss_spec or LossSpec.method1()
    opts = opts or OptimizerOptions()
    s_g, s_d, s_n = spawn(seed, 3)
    g_fit = fit_boundary_extension(problem, collocation.boundary, specs.G, s_g, opts)
    d_fit = fit_distance(problem.domain, collocation.boundary, distance_points, specs.D, s_d, opts)
    n0 = nw.init_params(specs.N, s_n).raw
    ansatz = AnsatzField(g_fit.field, d_fit.field, nw.NetworkField(specs.N, n0),
                         {"G": g_fit.report, "D": d_fit.report})
    targets = prepare_targets(collocation, problem, loss_spec)
    objective = LossObjective(ansatz.with_deep, targets, loss_spec)
    report = alternating_minimize(objective, n0, opts, callback=callback)
    return ansatz.with_deep(report.x), report
