"""Full-batch minimizers: BFGS, Adam, their alternation and the staged schedule.

An objective is any callable ``x -> (value, gradient)`` on flat float arrays.
"""

import logging
import time
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.optimize._linesearch import LineSearchWarning, line_search_wolfe1, line_search_wolfe2

from .errors import UsageError

log = logging.getLogger(__name__)


class Termination(str, Enum):
    CONVERGED = "Converged"
    PRECISION_LOSS = "PrecisionLoss"
    MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True)
class AdamOptions:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass(frozen=True)
class AlternationOptions:
    adam_epochs: int = 300
    adam_lr: float = 1e-7
    max_rounds: int = 10


@dataclass(frozen=True)
class OptimizerOptions:
    max_iterations: int = 60000
    gradient_tolerance: float = 1e-8
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    line_search_steps: int = 50
    min_step: float = 1e-16
    adam: AdamOptions = field(default_factory=AdamOptions)
    alternation: AlternationOptions = field(default_factory=AlternationOptions)

    def __post_init__(self):
        if not 0.0 < self.wolfe_c1 < self.wolfe_c2 < 1.0:
            raise UsageError("need 0 < wolfe_c1 < wolfe_c2 < 1")
        if self.adam.lr < 0 or self.alternation.adam_lr < 0:
            raise UsageError("learning rates must be nonnegative")


@dataclass
class TrainReport:
    x: np.ndarray
    iterations: int
    final_loss: float
    termination: Termination
    loss_trace: list
    grad_trace: list
    stage_trace: list
    wall_time: float
    events: list = field(default_factory=list)
    rounds: int = 0
    stages: list = field(default_factory=list)

    @property
    def bfgs_iterations(self):
        return sum(1 for s in self.stage_trace[1:] if s.startswith("bfgs"))

    def trace_rows(self):
        """``(iteration, loss, grad_inf_norm, stage)`` rows."""
        return [(k, f, g, s) for k, (f, g, s) in
                enumerate(zip(self.loss_trace, self.grad_trace, self.stage_trace))]

    def write_trace(self, path):
        with open(path, "w") as fh:
            fh.write("iteration\tloss\tgrad_norm\tstage\n")
            for k, f, g, s in self.trace_rows():
                fh.write(f"{k}\t{f!r}\t{g!r}\t{s}\n")


class _Cached:
    """Split a ``(value, grad)`` objective into ``f`` and ``g`` without recomputation."""

    def __init__(self, objective):
        self.objective = objective
        self._x = None
        self._fg = None

    def __call__(self, x):
        if self._x is None or not np.array_equal(x, self._x):
            f, g = self.objective(x)
            self._x = np.array(x, copy=True)
            self._fg = (float(f), np.asarray(g, dtype=np.float64))
        return self._fg

    def f(self, x):
        return self(x)[0]

    def g(self, x):
        return self(x)[1]


def _start(objective, x0):
    cached = _Cached(objective)
    x = np.array(x0, dtype=np.float64, copy=True)
    f, g = cached(x)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise UsageError("objective is not finite at the starting point")
    return cached, x, f, g


def _ginf(g):
    return float(np.max(np.abs(g))) if len(g) else 0.0


def _wolfe_step(cached, x, p, g, f, old_old_f, opts):
    """Strong-Wolfe step length: MINPACK search first, bracketing/zoom as fallback."""
    kw = dict(gfk=g, old_fval=f, old_old_fval=old_old_f, c1=opts.wolfe_c1, c2=opts.wolfe_c2,
              amax=1e100)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LineSearchWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        out = line_search_wolfe1(cached.f, cached.g, x, p, amin=1e-100, **kw)
        if out[0] is None:
            out = line_search_wolfe2(cached.f, cached.g, x, p, maxiter=opts.line_search_steps,
                                     **kw)
    return out[0], out[3]


def bfgs_minimize(objective, x0, opts=None, callback=None, max_iterations=None,
                  stage="bfgs"):
    """Dense BFGS with a strong-Wolfe line search.

    Stops with ``Converged`` once ``max|grad| <= gradient_tolerance`` and with
    ``PrecisionLoss`` when no Wolfe step is found, the search direction is not a
    descent direction or the step length underflows.
    ``callback(iteration, x, loss)`` runs after every accepted step.
    """
    opts = opts or OptimizerOptions()
    limit = opts.max_iterations if max_iterations is None else max_iterations
    t0 = time.perf_counter()
    cached, x, f, g = _start(objective, x0)
    n = len(x)
    H = np.eye(n)
    old_old_f = f + np.linalg.norm(g) / 2.0
    losses, grads, stages, events = [f], [_ginf(g)], [stage], []
    termination = Termination.MAX_ITERATIONS
    k = 0
    while True:
        if _ginf(g) <= opts.gradient_tolerance:
            termination = Termination.CONVERGED
            break
        if k >= limit:
            break
        p = -(H @ g)
        slope = float(g @ p)
        if not slope < 0.0:
            events.append(f"iteration {k}: non-descent direction (slope {slope:.3e})")
            termination = Termination.PRECISION_LOSS
            break
        alpha, f_new = _wolfe_step(cached, x, p, g, f, old_old_f, opts)
        if alpha is None or not np.isfinite(f_new):
            events.append(f"iteration {k}: line search found no Wolfe point")
            termination = Termination.PRECISION_LOSS
            break
        if alpha <= opts.min_step:
            events.append(f"iteration {k}: step length {alpha:.3e} underflowed")
            termination = Termination.PRECISION_LOSS
            break
        s = alpha * p
        x_new = x + s
        f_new, g_new = cached(x_new)
        y = g_new - g
        old_old_f = f
        x, f, g = x_new, f_new, g_new
        k += 1
        losses.append(f)
        grads.append(_ginf(g))
        stages.append(stage)
        sy = float(s @ y)
        if sy > 1e-14 * np.linalg.norm(s) * np.linalg.norm(y):
            rho = 1.0 / sy
            Hy = H @ y
            H += (rho * rho * float(y @ Hy) + rho) * np.outer(s, s)
            H -= rho * (np.outer(Hy, s) + np.outer(s, Hy))
        else:
            msg = f"iteration {k}: curvature s.y = {sy:.3e} too small, update skipped"
            events.append(msg)
            log.debug(msg)
        if callback is not None:
            callback(k, x, f)
    return TrainReport(x, k, f, termination, losses, grads, stages,
                       time.perf_counter() - t0, events)


def adam_minimize(objective, x0, epochs, opts=None, lr=None, callback=None, stage="adam"):
    """Full-batch Adam with bias-corrected moments for a fixed number of epochs."""
    opts = opts or OptimizerOptions()
    a = opts.adam
    lr = a.lr if lr is None else lr
    if lr < 0:
        raise UsageError("learning rate must be nonnegative")
    t0 = time.perf_counter()
    _, x, f, g = _start(objective, x0)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    losses, grads, stages = [f], [_ginf(g)], [stage]
    for t in range(1, epochs + 1):
        m = a.beta1 * m + (1.0 - a.beta1) * g
        v = a.beta2 * v + (1.0 - a.beta2) * (g * g)
        m_hat = m / (1.0 - a.beta1 ** t)
        v_hat = v / (1.0 - a.beta2 ** t)
        x = x - lr * m_hat / (np.sqrt(v_hat) + a.epsilon)
        f, g = objective(x)
        f = float(f)
        losses.append(f)
        grads.append(_ginf(g))
        stages.append(stage)
        if callback is not None:
            callback(t, x, f)
    return TrainReport(x, epochs, f, Termination.MAX_ITERATIONS, losses, grads, stages,
                       time.perf_counter() - t0)


def concat_reports(reports, termination=None):
    """Chain reports of consecutive runs; each later run starts where the previous ended."""
    first = reports[0]
    losses, grads, stages = list(first.loss_trace), list(first.grad_trace), list(first.stage_trace)
    events = list(first.events)
    for r in reports[1:]:
        losses += r.loss_trace[1:]
        grads += r.grad_trace[1:]
        stages += r.stage_trace[1:]
        events += r.events
    last = reports[-1]
    return TrainReport(
        x=last.x,
        iterations=sum(r.iterations for r in reports),
        final_loss=losses[-1],
        termination=termination or last.termination,
        loss_trace=losses, grad_trace=grads, stage_trace=stages,
        wall_time=sum(r.wall_time for r in reports),
        events=events,
        rounds=sum(r.rounds for r in reports),
        stages=list(reports),
    )


def alternating_minimize(objective, x0, opts=None, callback=None, max_iterations=None):
    """BFGS, escaping each precision loss with a short low-rate Adam run.

    At most ``alternation.max_rounds`` escapes. The BFGS iteration budget
    ``max_iterations`` is shared by all BFGS rounds; Adam epochs are extra.
    """
    opts = opts or OptimizerOptions()
    alt = opts.alternation
    budget = opts.max_iterations if max_iterations is None else max_iterations
    done = 0
    reports = []
    x = x0
    rounds = 0
    last_bfgs = None

    def shifted(cb, offset):
        if cb is None:
            return None
        return lambda k, xx, ff: cb(offset + k, xx, ff)

    while True:
        rep = bfgs_minimize(objective, x, opts, callback=shifted(callback, done),
                            max_iterations=budget - done)
        reports.append(rep)
        last_bfgs = rep
        done += rep.iterations
        x = rep.x
        if (rep.termination != Termination.PRECISION_LOSS or rounds >= alt.max_rounds
                or done >= budget):
            break
        rounds += 1
        log.info("precision loss after %d BFGS iterations; Adam escape %d", done, rounds)
        esc = adam_minimize(objective, x, alt.adam_epochs, opts, lr=alt.adam_lr,
                            stage="adam-escape")
        esc.events.append(f"adam escape {rounds} after {done} BFGS iterations")
        reports.append(esc)
        x = esc.x
    out = concat_reports(reports, termination=last_bfgs.termination)
    out.rounds = rounds
    return out


def high_dim_schedule(full, boundary_only, x0, opts=None, boundary_epochs=1000,
                      full_epochs=3000, lr=None, max_iterations=None):
    """Four stages: Adam on the boundary term, Adam on the full loss, BFGS, alternation."""
    opts = opts or OptimizerOptions()
    s1 = adam_minimize(boundary_only, x0, boundary_epochs, opts, lr=lr, stage="adam-boundary")
    s2 = adam_minimize(full, s1.x, full_epochs, opts, lr=lr, stage="adam-full")
    s3 = bfgs_minimize(full, s2.x, opts, max_iterations=max_iterations)
    reports = [s1, s2, s3]
    if s3.termination == Termination.PRECISION_LOSS:
        budget = (opts.max_iterations if max_iterations is None else max_iterations)
        s4 = alternating_minimize(full, s3.x, replace(opts),
                                  max_iterations=max(budget - s3.iterations, 0))
        reports.append(s4)
    out = concat_reports(reports)
    out.rounds = sum(r.rounds for r in reports)
    return out
