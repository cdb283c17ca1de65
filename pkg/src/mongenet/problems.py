"""Benchmark problems ``det D^2 u = f`` in ``Omega``, ``u = g`` on the boundary.

Each exact solution is written with the dispatching functions of
:mod:`mongenet.autodiff` so it can be evaluated on plain points and on
hyperdual points (for its exact Hessian).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import HyperDual, eval_jets
from .autodiff.linalg import det_upper
from .domains import AsymmetricConvex2D, HyperRectangle
from .errors import UsageError


@dataclass(frozen=True)
class Problem:
    name: str
    domain: object
    source: ad.Field
    boundary: ad.Field
    exact: ad.Field = None
    singular_segments: tuple = field(default_factory=tuple)

    @property
    def dim(self):
        return self.domain.dim


def _r2(x):
    return ad.sum(x * x, axis=-1)


def derived_sources(exact, points):
    """``det D^2 u`` of ``exact`` at every point of ``points`` (shape ``(P, n)``)."""
    points = np.asarray(points, dtype=np.float64)
    _, _, upper = eval_jets(exact, points)
    return det_upper(upper, exact.input_dim)


def derived_source(exact, x):
    """``det D^2 u(x)`` from the exact Hessian of ``exact`` at one point."""
    x = np.asarray(x, dtype=np.float64)
    return float(derived_sources(exact, x[None, :])[0])


# exact solutions -----------------------------------------------------------

def radial_u(x):
    return ad.exp(0.5 * _r2(x))


def blowup_u(x):
    r2 = _r2(x)
    c = 2.0 * math.sqrt(2.0) / 3.0
    return c * r2 ** 0.75


def sphere_u(x):
    return -ad.sqrt(2.0 - _r2(x))


def discont_u(x):
    r2 = _r2(x)
    mask = ad.value_of(r2.value if isinstance(r2, HyperDual) else r2) > 1.0
    # evaluate the outer branch on a safe argument, then select
    safe = ad.where(mask, r2, 4.0)
    r = ad.sqrt(safe)
    s = ad.sqrt(safe - 1.0)
    outer = r * s - ad.log(r + s)
    return ad.where(mask, outer, 0.0)


def asym_u(x):
    px, py = x[:, 0], x[:, 1]
    dx = px - 0.5
    return 0.7 * ad.exp(0.5 * (dx * dx) + py * py) + px * px - 0.5


def radial_check_discont(r):
    """``(u(r), u'(r))`` of the radial profile with the discontinuous source."""
    r = float(r)
    if r < 0:
        raise UsageError("r must be >= 0")
    if r <= 1.0:
        return 0.0, 0.0
    s = math.sqrt(r * r - 1.0)
    return r * s - math.log(r + s), 2.0 * s


# closed-form sources -------------------------------------------------------

def radial_f(x):
    r2 = np.sum(x * x, axis=-1)
    n = x.shape[-1]
    return (1.0 + r2) * np.exp(0.5 * n * r2)


def blowup_f(x):
    return 1.0 / np.sqrt(np.sum(x * x, axis=-1))


def sphere_f(x):
    return 2.0 / (2.0 - np.sum(x * x, axis=-1)) ** 2


def discont_f(x):
    r2 = np.sum(x * x, axis=-1)
    return np.where(r2 > 1.0, 4.0, 0.0)


CLOSED_FORM_SOURCES = {
    "radial2d": radial_f,
    "blowup": blowup_f,
    "sphere": sphere_f,
    "discont": discont_f,
}

NAMES = ("radial2d", "blowup", "sphere", "discont", "asym",
         "radial3d", "radial4d", "radial5d")


def _derived_field(exact):
    return ad.Field(lambda x: derived_sources(exact, x), exact.input_dim)


def catalog(name):
    """The benchmark problem called ``name`` (see ``NAMES``)."""
    square = HyperRectangle.cube(2)
    if name == "radial2d":
        exact = ad.Field(radial_u, 2)
        return Problem(name, square, ad.Field(radial_f, 2), exact, exact)
    if name == "blowup":
        exact = ad.Field(blowup_u, 2)
        segs = (((0.0, 0.0), (0.04, 0.0), 20), ((0.0, 0.0), (0.0, 0.04), 20))
        return Problem(name, square, ad.Field(blowup_f, 2), exact, exact, segs)
    if name == "sphere":
        exact = ad.Field(sphere_u, 2)
        segs = (((0.95, 1.0), (1.0, 1.0), 20), ((1.0, 0.95), (1.0, 1.0), 20))
        return Problem(name, square, ad.Field(sphere_f, 2), exact, exact, segs)
    if name == "discont":
        exact = ad.Field(discont_u, 2)
        return Problem(name, HyperRectangle.cube(2, 1.5), ad.Field(discont_f, 2), exact, exact)
    if name == "asym":
        exact = ad.Field(asym_u, 2)
        return Problem(name, AsymmetricConvex2D(), _derived_field(exact), exact, exact)
    if name in ("radial3d", "radial4d", "radial5d"):
        n = int(name[6])
        exact = ad.Field(radial_u, n)
        return Problem(name, HyperRectangle.cube(n), _derived_field(exact), exact, exact)
    raise UsageError(f"unknown problem {name!r}; known: {', '.join(NAMES)}")


class NoisySource:
    """Source values at a frozen set of collocation points plus fixed Gaussian noise.

    Perturbations are drawn once at construction, one per point index, so the
    same index always sees the same perturbed value.
    """

    def __init__(self, base, stdev, seed, points):
        if stdev < 0:
            raise UsageError("stdev must be >= 0")
        self.base = base
        self.stdev = float(stdev)
        self.seed = seed
        self.points = np.asarray(points, dtype=np.float64)
        self.base_values = np.asarray(base(self.points), dtype=np.float64)
        if self.stdev == 0.0:
            self.noise = np.zeros(len(self.points))
        else:
            self.noise = np.random.default_rng(seed).normal(0.0, self.stdev, len(self.points))

    def __len__(self):
        return len(self.points)

    def values(self):
        return self.base_values + self.noise


def apply_noise(src, collocation_index):
    if not 0 <= collocation_index < len(src):
        raise IndexError(f"collocation index {collocation_index} out of range")
    return float(src.base_values[collocation_index] + src.noise[collocation_index])
