"""Domains of the experiments and collocation-point samplers.

All samplers are deterministic per seed. Interior sampling draws candidates in
fixed-size chunks from one generator and keeps them in order, so the first
``m`` points for a seed do not depend on how many points were requested.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .seeding import spawn

_CHUNK = 4096
MAX_REJECTION_ATTEMPTS = 10**6


@dataclass(frozen=True)
class HyperRectangle:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise UsageError("lo and hi must be non-empty and of equal length")
        if any(a >= b for a, b in zip(lo, hi)):
            raise UsageError("need lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, n, side=1.0):
        return cls((0.0,) * n, (float(side),) * n)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def bounding_box(self):
        return np.array(self.lo), np.array(self.hi)

    @property
    def volume(self):
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def contains(self, x, closed=False):
        x = np.atleast_2d(x)
        if closed:
            return np.all((x >= np.array(self.lo)) & (x <= np.array(self.hi)), axis=1)
        return np.all((x > np.array(self.lo)) & (x < np.array(self.hi)), axis=1)

    def boundary_residual(self, x):
        """Distance of each point to the nearest face hyperplane it should lie on."""
        x = np.atleast_2d(x)
        lo, hi = np.array(self.lo), np.array(self.hi)
        outside = np.maximum(lo - x, 0.0) + np.maximum(x - hi, 0.0)
        face = np.minimum(np.abs(x - lo), np.abs(x - hi)).min(axis=1)
        return face + outside.sum(axis=1)

    def describe(self):
        lo = ",".join(repr(v) for v in self.lo)
        hi = ",".join(repr(v) for v in self.hi)
        return f"box[{lo}]x[{hi}]"


# the region {x > 0, y > 0, x^2 + y^2 < 1, y > x - 1/2}
_CORNER_X = (1.0 + math.sqrt(7.0)) / 4.0      # circle meets y = x - 1/2
_CORNER = (_CORNER_X, _CORNER_X - 0.5)
_CORNER_ANGLE = math.atan2(_CORNER[1], _CORNER[0])


@dataclass(frozen=True)
class AsymmetricConvex2D:
    @property
    def dim(self):
        return 2

    @property
    def bounding_box(self):
        return np.array([0.0, -0.5]), np.array([1.0, 1.0])

    def contains(self, x, closed=False):
        x = np.atleast_2d(x)
        px, py = x[:, 0], x[:, 1]
        if closed:
            tol = 1e-12
            return ((px >= -tol) & (py >= -tol) & (px * px + py * py <= 1.0 + tol)
                    & (py >= px - 0.5 - tol))
        return (px > 0) & (py > 0) & (px * px + py * py < 1.0) & (py > px - 0.5)

    def segments(self):
        """Boundary pieces as ``(name, length)`` in traversal order."""
        return [
            ("left", 1.0),                                   # x = 0, (0,0) -> (0,1)
            ("arc", math.pi / 2.0 - _CORNER_ANGLE),          # (0,1) -> corner
            ("oblique", math.sqrt(2.0) * (_CORNER_X - 0.5)),  # corner -> (1/2, 0)
            ("bottom", 0.5),                                 # (1/2,0) -> (0,0)
        ]

    @property
    def perimeter(self):
        return sum(length for _, length in self.segments())

    @property
    def area(self):
        # quarter disc minus the piece below y = x - 1/2: that piece is the
        # sector up to the corner angle minus triangle (0,0), (1/2,0), corner
        sector = 0.5 * _CORNER_ANGLE
        tri = 0.5 * 0.5 * _CORNER[1]
        return math.pi / 4.0 - (sector - tri)

    def segment_point(self, name, s):
        """Point at fraction ``s`` in [0, 1] along segment ``name``."""
        s = np.asarray(s, dtype=np.float64)
        if name == "left":
            return np.stack([np.zeros_like(s), s], axis=1)
        if name == "arc":
            theta = math.pi / 2.0 - s * (math.pi / 2.0 - _CORNER_ANGLE)
            return np.stack([np.cos(theta), np.sin(theta)], axis=1)
        if name == "oblique":
            px = _CORNER_X - s * (_CORNER_X - 0.5)
            return np.stack([px, px - 0.5], axis=1)
        if name == "bottom":
            return np.stack([0.5 - 0.5 * s, np.zeros_like(s)], axis=1)
        raise KeyError(name)

    def boundary_residual(self, x):
        x = np.atleast_2d(x)
        px, py = x[:, 0], x[:, 1]
        on = np.stack([
            np.abs(px), np.abs(py),
            np.abs(np.hypot(px, py) - 1.0),
            np.abs(py - px + 0.5) / math.sqrt(2.0),
        ])
        return on.min(axis=0)

    def describe(self):
        return "asymmetric_convex_2d"


def _chunked_uniform(rng, lo, hi, m, accept):
    out = []
    have = 0
    stalled = 0
    while have < m:
        cand = rng.uniform(lo, hi, size=(_CHUNK, len(lo)))
        cand = cand[accept(cand)]
        out.append(cand)
        have += len(cand)
        # the cap guards against empty domains, so it only counts fruitless draws
        stalled = 0 if len(cand) else stalled + _CHUNK
        if stalled >= MAX_REJECTION_ATTEMPTS:
            raise RuntimeError(
                f"rejection sampling produced no point in {stalled} attempts "
                f"({have} of {m} so far)")
    return np.concatenate(out)[:m]


def sample_interior(domain, m, seed):
    """``m`` i.i.d. uniform points strictly inside the domain."""
    if m < 1:
        raise UsageError("m must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = domain.bounding_box
    return _chunked_uniform(rng, lo, hi, m, domain.contains)


def _allocate(total, weights):
    """Integer counts proportional to ``weights`` summing to ``total`` (largest remainder)."""
    w = np.asarray(weights, dtype=np.float64)
    exact = total * w / w.sum()
    counts = np.floor(exact).astype(int)
    short = total - counts.sum()
    order = np.argsort(-(exact - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def _box_faces(domain):
    lo, hi = np.array(domain.lo), np.array(domain.hi)
    n = domain.dim
    faces = []
    for axis in range(n):
        measure = float(np.prod(np.delete(hi - lo, axis))) if n > 1 else 1.0
        faces.append((axis, lo[axis], measure))
        faces.append((axis, hi[axis], measure))
    return faces


def sample_boundary(domain, k, seed):
    """``k`` points on the boundary, allocated to pieces by measure."""
    if k < 1:
        raise UsageError("k must be >= 1")
    rng = np.random.default_rng(seed)
    if isinstance(domain, HyperRectangle):
        faces = _box_faces(domain)
        counts = _allocate(k, [m for _, _, m in faces])
        lo, hi = np.array(domain.lo), np.array(domain.hi)
        parts = []
        for (axis, level, _), c in zip(faces, counts):
            pts = rng.uniform(lo, hi, size=(c, domain.dim))
            pts[:, axis] = level
            parts.append(pts)
        return np.concatenate(parts)
    segs = domain.segments()
    counts = _allocate(k, [length for _, length in segs])
    parts = [domain.segment_point(name, rng.uniform(0.0, 1.0, size=c))
             for (name, _), c in zip(segs, counts)]
    return np.concatenate(parts)


def sample_segment(p0, p1, count):
    """``count`` equidistant points on ``[p0, p1]``, endpoints included."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    if count < 2:
        raise UsageError("count must be >= 2")
    if np.array_equal(p0, p1):
        raise UsageError("segment endpoints coincide")
    s = np.linspace(0.0, 1.0, count)
    return p0[None, :] + s[:, None] * (p1 - p0)[None, :]


def distance_to_boundary(domain, x):
    """Exact distance to the boundary of a hyperrectangle (for points inside)."""
    if not isinstance(domain, HyperRectangle):
        raise UsageError("exact distance is only available for hyperrectangles")
    x = np.asarray(x, dtype=np.float64)
    lo, hi = np.array(domain.lo), np.array(domain.hi)
    d = np.minimum(x - lo, hi - x)
    return d.min(axis=-1)


@dataclass
class CollocationSet:
    interior: np.ndarray
    boundary: np.ndarray
    singular: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    seed: int = 0

    @property
    def counts(self):
        return len(self.interior), len(self.boundary), len(self.singular)

    def to_text(self):
        n = self.interior.shape[1]
        header = "role\t" + "\t".join(f"x{k}" for k in range(n))
        rows = [header]
        for role, pts in (("interior", self.interior), ("boundary", self.boundary),
                          ("singular", self.singular)):
            for p in pts:
                rows.append(role + "\t" + "\t".join(repr(float(v)) for v in p))
        return "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text, seed=0):
        lines = text.strip().splitlines()
        n = len(lines[0].split("\t")) - 1
        groups = {"interior": [], "boundary": [], "singular": []}
        for line in lines[1:]:
            role, *vals = line.split("\t")
            groups[role].append([float(v) for v in vals])
        arr = {k: np.array(v, dtype=np.float64).reshape(-1, n) for k, v in groups.items()}
        return cls(arr["interior"], arr["boundary"], arr["singular"], seed)


def sample_collocation(domain, m, k, seed, singular_segments=()):
    """Interior, boundary and singular-refinement points.

    Interior and boundary points come from two independent child streams of
    ``seed``; singular points are deterministic.
    """
    s_int, s_bdy = spawn(seed, 2)
    interior = sample_interior(domain, m, s_int)
    boundary = sample_boundary(domain, k, s_bdy)
    if singular_segments:
        singular = np.concatenate([sample_segment(p0, p1, c) for p0, p1, c in singular_segments])
    else:
        singular = np.zeros((0, domain.dim))
    return CollocationSet(interior, boundary, singular, seed)
