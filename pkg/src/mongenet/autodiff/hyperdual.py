"""Batched hyperdual numbers for exact input Hessians.

A hyperdual number ``a + b e1 + c e2 + d e1e2`` (with ``e1**2 = e2**2 = 0``)
propagated through ``f`` yields ``f(a)``, ``f'(a) b``, ``f'(a) c`` and
``f'(a) d + f''(a) b c``. Seeding ``e1`` along coordinate ``i`` and ``e2``
along ``j`` makes the last component equal to ``d2f/dxi dxj``.

:class:`HyperDual` runs all ``n(n+1)/2`` pairs ``(i, j)``, ``i <= j``, at
once. The first-order parts only depend on a single direction, so they are
kept once per coordinate in ``tangent`` (shape ``(n, *value.shape)``) and
gathered per pair; ``cross`` holds the ``e1e2`` part of every pair (shape
``(npairs, *value.shape)``). Components may be plain arrays or tape ``Var``
objects, which is how parameter gradients flow through Hessians.
"""

from dataclasses import dataclass

import numpy as np

from . import activations as _act
from . import tape as T
from .linalg import det, pair_indices, symmetric_from_upper
from ..errors import UsageError


def _act_tangent_vjp(g, out, needs, v, t, name):
    gv = (g * t).sum(axis=0) * _act.activation(name, v, 2) if needs[0] else None
    gt = g * _act.activation(name, v, 1) if needs[1] else None
    return gv, gt


def _act_cross_forward(v, t, c, name, i, j):
    return _act.activation(name, v, 1) * c + _act.activation(name, v, 2) * (t[i] * t[j])


def _act_cross_vjp(g, out, needs, v, t, c, name, i, j):
    a2 = _act.activation(name, v, 2)
    gv = gt = gc = None
    if needs[0]:
        tt = t[i] * t[j]
        gv = ((g * c).sum(axis=0) * a2
              + (g * tt).sum(axis=0) * _act.activation(name, v, 3))
    if needs[1]:
        h = g * a2
        gt = np.zeros((t.shape[0],) + h.shape[1:])
        for pos in range(len(i)):
            gt[i[pos]] += h[pos] * t[j[pos]]
            gt[j[pos]] += h[pos] * t[i[pos]]
    if needs[2]:
        gc = g * _act.activation(name, v, 1)
    return gv, gt, gc


# sigma'(v) * t and sigma'(v) * c + sigma''(v) * t_i * t_j as single tape nodes
act_tangent = T.Primitive(
    "act_tangent", lambda v, t, name: _act.activation(name, v, 1) * t, _act_tangent_vjp)
act_cross = T.Primitive("act_cross", _act_cross_forward, _act_cross_vjp)


def _is_const(x):
    return not isinstance(x, HyperDual)


class HyperDual:
    __slots__ = ("value", "tangent", "cross", "n")
    # make numpy arrays defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, value, tangent, cross, n):
        self.value = value
        self.tangent = tangent
        self.cross = cross
        self.n = n

    @classmethod
    def variable(cls, x):
        """Seed points ``x`` of shape ``(P, n)`` with unit input directions."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"expected points of shape (P, n), got {x.shape}")
        n = x.shape[1]
        tangent = np.eye(n)[:, None, :]          # (n, 1, n), broadcasts over P
        npairs = n * (n + 1) // 2
        cross = np.zeros((npairs, 1, n))
        return cls(x, tangent, cross, n)

    @property
    def pairs(self):
        return pair_indices(self.n)

    @property
    def shape(self):
        return np.shape(T.value_of(self.value))

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        if _is_const(other):
            return HyperDual(self.value + other, self.tangent, self.cross, self.n)
        return HyperDual(self.value + other.value, self.tangent + other.tangent,
                         self.cross + other.cross, self.n)

    __radd__ = __add__

    def __neg__(self):
        return HyperDual(-self.value, -self.tangent, -self.cross, self.n)

    def __sub__(self, other):
        if _is_const(other):
            return HyperDual(self.value - other, self.tangent, self.cross, self.n)
        return HyperDual(self.value - other.value, self.tangent - other.tangent,
                         self.cross - other.cross, self.n)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if _is_const(other):
            return HyperDual(self.value * other, self.tangent * other,
                             self.cross * other, self.n)
        i, j = self.pairs
        a, b = self.value, other.value
        ta, tb = self.tangent, other.tangent
        cross = (a * other.cross + self.cross * b
                 + T.take_rows(ta, i) * T.take_rows(tb, j)
                 + T.take_rows(ta, j) * T.take_rows(tb, i))
        return HyperDual(a * b, a * tb + ta * b, cross, self.n)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if _is_const(other):
            return self * (1.0 / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if p == 2:
            return self * self
        v = self.value
        return self.apply(v ** p, p * v ** (p - 1.0), p * (p - 1.0) * v ** (p - 2.0))

    def __matmul__(self, m):
        """Right-multiply by a constant matrix (e.g. ``z @ W.T``)."""
        if not _is_const(m):
            raise TypeError("hyperdual @ hyperdual is not supported")
        return HyperDual(self.value @ m, self.tangent @ m, self.cross @ m, self.n)

    def __getitem__(self, key):
        key = key if isinstance(key, tuple) else (key,)
        lead = (slice(None),) + key
        return HyperDual(self.value[key], self.tangent[lead], self.cross[lead], self.n)

    def sum(self, axis=-1):
        if axis >= 0:
            raise ValueError("use a negative axis so it addresses the value axes")
        return HyperDual(T.sum(self.value, axis=axis), T.sum(self.tangent, axis=axis),
                         T.sum(self.cross, axis=axis), self.n)

    # elementwise functions ------------------------------------------------

    def apply(self, f0, f1, f2):
        """Chain rule given the function's value and first two derivatives at ``value``."""
        i, j = self.pairs
        t = self.tangent
        return HyperDual(f0, f1 * t,
                         f1 * self.cross + f2 * (T.take_rows(t, i) * T.take_rows(t, j)),
                         self.n)

    def activation(self, name):
        v = self.value
        i, j = self.pairs
        return HyperDual(T.activation(v, name, 0),
                         act_tangent(v, self.tangent, name=name),
                         act_cross(v, self.tangent, self.cross, name=name, i=i, j=j),
                         self.n)

    def exp(self):
        e = T.exp(self.value)
        return self.apply(e, e, e)

    def log(self):
        v = self.value
        inv = 1.0 / v
        return self.apply(T.log(v), inv, -(inv * inv))

    def sqrt(self):
        s = T.sqrt(self.value)
        inv = 1.0 / s
        return self.apply(s, 0.5 * inv, -0.25 * inv * inv * inv)

    def reciprocal(self):
        inv = 1.0 / self.value
        inv2 = inv * inv
        return self.apply(inv, -inv2, 2.0 * inv2 * inv)

    # second-order readout -------------------------------------------------

    def hessian_upper(self):
        return self.cross

    def hessian(self):
        """Full Hessians ``(P, n, n)`` of a scalar-per-point result."""
        return symmetric_from_upper(T.value_of(self.cross), self.n)


def where(mask, a, b):
    """Select between hyperdual branches; both branches must be finite everywhere."""
    a_hd, b_hd = isinstance(a, HyperDual), isinstance(b, HyperDual)
    if not (a_hd or b_hd):
        return T.where(mask, a, b)
    ref = a if a_hd else b
    n = ref.n

    def parts(x):
        if isinstance(x, HyperDual):
            return x.value, x.tangent, x.cross
        return x, 0.0, 0.0

    av, at, ac = parts(a)
    bv, bt, bc = parts(b)
    return HyperDual(T.where(mask, av, bv), T.where(mask, at, bt),
                     T.where(mask, ac, bc), n)


T.DEFER_TO = (HyperDual,)


# --- the public jet interface ---------------------------------------------


@dataclass(frozen=True)
class SecondOrderJet:
    """Value, gradient and Hessian of a scalar field at one point.

    The Hessian is stored as its upper triangle (``np.triu_indices`` order) and
    materialized on demand, so it is symmetric by construction.
    """

    value: float
    gradient: np.ndarray
    upper: np.ndarray

    @property
    def dim(self):
        return len(self.gradient)

    @property
    def hessian(self):
        return symmetric_from_upper(self.upper[:, None], self.dim)[0]


def _check_points(field, x):
    x = np.asarray(x, dtype=np.float64)
    n = field.input_dim
    if x.ndim != 2 or x.shape[1] != n:
        raise UsageError(f"field has input dimension {n}, got points of shape {x.shape}")
    return x


def eval_jets(field, x):
    """Batched jets at points ``x`` (shape ``(P, n)``).

    Returns ``(values (P,), gradients (P, n), upper (npairs, P))``.
    """
    x = _check_points(field, x)
    p = x.shape[0]
    out = field(HyperDual.variable(x))
    if not isinstance(out, HyperDual):
        # field ignores its input
        val = np.broadcast_to(np.asarray(out, dtype=float), (p,))
        n = x.shape[1]
        return val.copy(), np.zeros((p, n)), np.zeros((n * (n + 1) // 2, p))
    values = np.broadcast_to(out.value, (p,)).copy()
    grads = np.broadcast_to(out.tangent, (x.shape[1], p)).T.copy()
    upper = np.broadcast_to(out.cross, (len(out.cross), p)).copy()
    return values, grads, upper


def eval_jet(field, x):
    """Exact value, gradient and Hessian of ``field`` at a single point."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != field.input_dim:
        raise UsageError(
            f"field has input dimension {field.input_dim}, got a point of shape {x.shape}")
    values, grads, upper = eval_jets(field, x[None, :])
    return SecondOrderJet(float(values[0]), grads[0], upper[:, 0])


def hessian_determinant(jet):
    """``det`` of the jet's Hessian (closed form for n <= 3, pivoted LU above)."""
    return float(det(jet.hessian[None, :, :])[0])
