"""Error metrics against exact solutions and gridded error exports."""

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .domains import sample_interior
from .errors import UsageError

SENTINEL = -1.0
_BATCH = 65536


@dataclass(frozen=True)
class ErrorReport:
    max_error: float
    average_error: float
    l2_error: float
    eval_points_count: int
    seed: int

    def as_dict(self):
        return asdict(self)


def _values(field, pts):
    out = ad.value_of(field(pts))
    return np.asarray(out, dtype=np.float64)


def pointwise_error(field, problem, pts):
    if problem.exact is None:
        raise UsageError(f"problem {problem.name} has no exact solution")
    pts = np.asarray(pts, dtype=np.float64)
    out = np.empty(len(pts))
    for s in range(0, len(pts), _BATCH):
        chunk = pts[s:s + _BATCH]
        out[s:s + _BATCH] = np.abs(_values(field, chunk) - _values(problem.exact, chunk))
    return out


def error_report(field, problem, count=10**6, seed=12345):
    """Max, mean and root-mean-square of ``|u - u_exact|`` at ``count`` uniform interior points.

    Points for a given seed are nested: a larger ``count`` extends the smaller set.
    """
    if problem.exact is None:
        raise UsageError(f"problem {problem.name} has no exact solution")
    e = pointwise_error(field, problem, sample_interior(problem.domain, count, seed))
    return ErrorReport(float(e.max()), float(e.mean()), float(np.sqrt(np.mean(e * e))),
                       int(count), seed)


def append_results(path, row):
    """Append ``row`` (a mapping) to a tab-separated table, writing a header first if new."""
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a") as fh:
        if new:
            fh.write("\t".join(row) + "\n")
        fh.write("\t".join(_fmt(v) for v in row.values()) + "\n")


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def read_results(path):
    lines = Path(path).read_text().splitlines()
    if not lines:
        return []
    head = lines[0].split("\t")
    return [dict(zip(head, line.split("\t"))) for line in lines[1:]]


@dataclass
class FieldGrid:
    """``|u - u_exact|`` on a uniform grid; ``values[j * nx + i]`` is at ``(x_i, y_j)``."""

    resolution: tuple
    lo: tuple
    hi: tuple
    values: np.ndarray
    domain: str = ""
    sentinel: float = SENTINEL

    def axes(self):
        nx, ny = self.resolution
        return (np.linspace(self.lo[0], self.hi[0], nx), np.linspace(self.lo[1], self.hi[1], ny))

    def points(self):
        xs, ys = self.axes()
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx.ravel(), gy.ravel()], axis=1)

    def matrix(self):
        nx, ny = self.resolution
        return self.values.reshape(ny, nx)

    def to_text(self):
        nx, ny = self.resolution
        head = (f"# resolution {nx} {ny} lo {self.lo[0]!r} {self.lo[1]!r} "
                f"hi {self.hi[0]!r} {self.hi[1]!r} domain {self.domain} sentinel {self.sentinel!r}")
        rows = ["\t".join(repr(float(v)) for v in row) for row in self.matrix()]
        return head + "\n" + "\n".join(rows) + "\n"

    def write(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text):
        head, *rows = text.strip().splitlines()
        tok = head.lstrip("# ").split()
        nx, ny = int(tok[1]), int(tok[2])
        lo = (float(tok[4]), float(tok[5]))
        hi = (float(tok[7]), float(tok[8]))
        values = np.array([[float(v) for v in r.split("\t")] for r in rows]).ravel()
        return cls((nx, ny), lo, hi, values, tok[10], float(tok[12]))


def export_grid(field, problem, resolution=(100, 100)):
    """Absolute error on a uniform grid over the bounding box, sentinel outside the domain."""
    if problem.dim != 2:
        raise UsageError("grid export is only available for two-dimensional problems")
    if problem.exact is None:
        raise UsageError(f"problem {problem.name} has no exact solution")
    nx, ny = (int(r) for r in resolution)
    if nx < 2 or ny < 2:
        raise UsageError("need at least 2 grid points per axis")
    lo, hi = problem.domain.bounding_box
    grid = FieldGrid((nx, ny), tuple(float(v) for v in lo), tuple(float(v) for v in hi),
                     np.zeros(nx * ny), problem.domain.describe())
    pts = grid.points()
    inside = problem.domain.contains(pts, closed=True)
    values = np.full(len(pts), SENTINEL)
    if inside.any():
        values[inside] = pointwise_error(field, problem, pts[inside])
    grid.values = values
    return grid
