"""Loss terms for both solution methods and their weighted assembly.

Every term is a mean over its point set:

* equation  ``E_e = mean (det D^2 u - f)^2``  (optionally with ``det H+``)
* convexity ``E_c = mean min(0, u_xx)^2 + min(0, u_yy)^2``  (2D only)
* boundary  ``E_b = mean (u - g)^2`` on boundary samples
* singular  ``E_B = mean (u - g)^2`` on refinement points near a singularity

The functions accept fields whose parameters are plain arrays or tape
variables; in the latter case the returned terms are tape variables.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .autodiff import HyperDual, Tape
from .autodiff import tape as T
from .errors import UsageError


@dataclass(frozen=True)
class LossSpec:
    use_equation: bool = True
    equation_uses_positive_det: bool = False
    include_boundary_points_in_equation: bool = False
    convexity_weight: float = 0.0
    boundary_weight: float = 0.0
    singular_weight: float = 0.0

    def __post_init__(self):
        for name in ("convexity_weight", "boundary_weight", "singular_weight"):
            if getattr(self, name) < 0:
                raise UsageError(f"{name} must be >= 0")

    @classmethod
    def method1(cls, convexity_weight=1e4, positive_det=False):
        return cls(convexity_weight=convexity_weight, equation_uses_positive_det=positive_det)

    @classmethod
    def method2(cls, boundary_weight=100.0, include_boundary_points=True):
        return cls(boundary_weight=boundary_weight,
                   include_boundary_points_in_equation=include_boundary_points)

    @classmethod
    def method2_singular(cls, boundary_weight=1000.0, singular_weight=4000.0,
                         include_boundary_points=True):
        return cls(boundary_weight=boundary_weight, singular_weight=singular_weight,
                   include_boundary_points_in_equation=include_boundary_points)

    def scaled(self, factor):
        return replace(self, convexity_weight=self.convexity_weight * factor,
                       boundary_weight=self.boundary_weight * factor,
                       singular_weight=self.singular_weight * factor)


@dataclass
class LossBreakdown:
    equation: object = 0.0
    convexity: object = 0.0
    boundary: object = 0.0
    singular: object = 0.0
    total: object = 0.0

    def as_floats(self):
        return LossBreakdown(*(float(ad.value_of(v)) for v in
                               (self.equation, self.convexity, self.boundary,
                                self.singular, self.total)))

    def row(self):
        b = self.as_floats()
        return [b.equation, b.convexity, b.boundary, b.singular, b.total]


# per-point Hessian pieces ----------------------------------------------------

def hessian_terms(field, points):
    """Values and upper-triangle Hessians ``(npairs, P)`` of ``field`` at ``points``."""
    points = np.asarray(points, dtype=np.float64)
    n = field.input_dim
    if points.ndim != 2 or points.shape[1] != n:
        raise UsageError(f"field has input dimension {n}, got points of shape {points.shape}")
    out = field(HyperDual.variable(points))
    if not isinstance(out, HyperDual):
        npairs = n * (n + 1) // 2
        return out, np.zeros((npairs, len(points)))
    return out.value, out.cross


def _determinant(upper, n, positive):
    if not positive:
        return T.symmetric_det(upper, n)
    if n != 2:
        raise UsageError("det H+ is only defined in two dimensions")
    hxx, hxy, hyy = upper[0], upper[1], upper[2]
    return T.maximum(hxx, 0.0) * T.maximum(hyy, 0.0) - hxy * hxy


def _convexity_from_upper(upper):
    hxx, hyy = upper[0], upper[2]
    return (T.square(T.minimum(hxx, 0.0)) + T.square(T.minimum(hyy, 0.0))).mean()


def _mse(a, b):
    d = a - b
    return (d * d).mean()


# public loss terms -------------------------------------------------------------

def equation_loss(field, points, f_values, positive_det=False):
    f_values = np.asarray(f_values, dtype=np.float64)
    if len(points) != len(f_values) or len(points) == 0:
        raise UsageError("need as many source values as points, at least one")
    if positive_det and field.input_dim != 2:
        raise UsageError("det H+ is only defined in two dimensions")
    _, upper = hessian_terms(field, points)
    return _mse(_determinant(upper, field.input_dim, positive_det), f_values)


def convexity_penalty(field, points):
    if field.input_dim != 2:
        raise UsageError("the convexity penalty is only available in two dimensions")
    if len(points) == 0:
        raise UsageError("need at least one point")
    _, upper = hessian_terms(field, points)
    return _convexity_from_upper(upper)


def boundary_loss(field, points, g_values):
    points = np.asarray(points, dtype=np.float64)
    g_values = np.asarray(g_values, dtype=np.float64)
    if len(points) != len(g_values) or len(points) == 0:
        raise UsageError("need as many boundary values as points, at least one")
    return _mse(field(points), g_values)


def eigenvalues_2x2(h11, h12, h22):
    """Eigenvalues ``(l1 <= l2)`` of the symmetric matrix ``[[h11, h12], [h12, h22]]``."""
    tr = h11 + h22
    disc = math.sqrt(max((h11 - h22) ** 2 + 4.0 * h12 * h12, 0.0))
    return 0.5 * (tr - disc), 0.5 * (tr + disc)


# assembly ------------------------------------------------------------------------

@dataclass
class LossTargets:
    """Points and target values for every active term, prepared once per run."""

    dim: int
    equation_points: np.ndarray
    equation_values: np.ndarray
    interior_count: int
    boundary_points: np.ndarray
    boundary_values: np.ndarray
    singular_points: np.ndarray
    singular_values: np.ndarray


def prepare_targets(collocation, problem, spec, interior_source=None):
    """Evaluate ``f`` and ``g`` at the collocation points.

    ``interior_source`` overrides ``f`` at the interior points (e.g. noisy
    values); boundary points added to the equation term keep the plain ``f``.
    """
    interior = np.asarray(collocation.interior, dtype=np.float64)
    f_int = (np.asarray(problem.source(interior), dtype=np.float64)
             if interior_source is None else np.asarray(interior_source, dtype=np.float64))
    boundary = np.asarray(collocation.boundary, dtype=np.float64)
    eq_points, eq_values = interior, f_int
    if spec.include_boundary_points_in_equation and len(boundary):
        eq_points = np.concatenate([interior, boundary])
        eq_values = np.concatenate([f_int, problem.source(boundary)])
    singular = np.asarray(collocation.singular, dtype=np.float64).reshape(-1, problem.dim)
    return LossTargets(
        dim=problem.dim,
        equation_points=eq_points,
        equation_values=eq_values,
        interior_count=len(interior),
        boundary_points=boundary,
        boundary_values=np.asarray(problem.boundary(boundary), dtype=np.float64),
        singular_points=singular,
        singular_values=(np.asarray(problem.boundary(singular), dtype=np.float64)
                         if len(singular) else np.zeros(0)),
    )


def assemble_targets(field, targets, spec):
    """``total = E_e + C_c E_c + C E_b + K E_B`` with inactive terms left at zero."""
    n = targets.dim
    if field.input_dim != n:
        raise UsageError(f"field dimension {field.input_dim} does not match problem dimension {n}")
    if spec.convexity_weight > 0 and n != 2:
        raise UsageError("the convexity penalty is only available in two dimensions")
    out = LossBreakdown()
    total = 0.0
    if spec.use_equation or spec.convexity_weight > 0:
        _, upper = hessian_terms(field, targets.equation_points)
        if spec.use_equation:
            det = _determinant(upper, n, spec.equation_uses_positive_det)
            out.equation = _mse(det, targets.equation_values)
            total = out.equation
        if spec.convexity_weight > 0:
            # penalize nonconvexity at the interior points only
            upper_int = upper if len(targets.equation_points) == targets.interior_count \
                else upper[:, :targets.interior_count]
            out.convexity = _convexity_from_upper(upper_int)
            total = total + spec.convexity_weight * out.convexity
    if spec.boundary_weight > 0 and len(targets.boundary_points):
        out.boundary = _mse(field(targets.boundary_points), targets.boundary_values)
        total = total + spec.boundary_weight * out.boundary
    if spec.singular_weight > 0 and len(targets.singular_points):
        out.singular = _mse(field(targets.singular_points), targets.singular_values)
        total = total + spec.singular_weight * out.singular
    out.total = total
    return out


def assemble(field, collocation, problem, spec, interior_source=None):
    return assemble_targets(field, prepare_targets(collocation, problem, spec, interior_source),
                            spec)


class LossObjective:
    """``raw -> (loss, gradient)`` for a field rebuilt from raw parameters.

    ``build_field(raw)`` must return a scalar field whose trainable parameters
    are ``raw`` (an array or a tape variable).
    """

    def __init__(self, build_field, targets, spec):
        self.build_field = build_field
        self.targets = targets
        self.spec = spec
        self.evaluations = 0

    def __call__(self, raw):
        self.evaluations += 1
        tape = Tape()
        v = tape.variable(raw)
        total = assemble_targets(self.build_field(v), self.targets, self.spec).total
        if not isinstance(total, ad.Var):
            return float(total), np.zeros_like(v.value)
        grad = tape.gradient(total, v)
        tape.release()
        return float(total.value), grad

    def breakdown(self, raw):
        return assemble_targets(self.build_field(np.asarray(raw)), self.targets,
                                self.spec).as_floats()

    def with_spec(self, spec):
        return LossObjective(self.build_field, self.targets, spec)
