"""Reverse-mode automatic differentiation over numpy arrays.

A :class:`Tape` records every primitive applied to its :class:`Var` objects in
execution order. Reverse accumulation walks that list backwards once, so the
backward pass has as many steps as the forward pass.

Primitives work transparently on plain arrays: when no argument is a ``Var``
the forward function is applied and nothing is recorded. This lets the same
model code run untraced (evaluation) or traced (training).
"""

import numbers

import numpy as np

from . import activations as _act
from . import linalg as _linalg


class UnsupportedPrimitiveError(TypeError):
    """Raised when a traced value meets an operation the tape cannot differentiate."""


# types whose reflected operators take precedence over Var's (set by hyperdual)
DEFER_TO = ()


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


class Primitive:
    """A differentiable operation: ``forward(*values, **params)`` and its VJP.

    ``vjp(g, out, *values, **params)`` returns one cotangent per positional
    argument (``None`` for arguments that are not differentiable).
    """

    __slots__ = ("name", "forward", "vjp")

    def __init__(self, name, forward, vjp):
        self.name = name
        self.forward = forward
        self.vjp = vjp

    def __call__(self, *args, **params):
        tape = None
        values = []
        for a in args:
            if isinstance(a, Var):
                if tape is None:
                    tape = a.tape
                elif a.tape is not tape:
                    raise ValueError("operands belong to different tapes")
                values.append(a.value)
            else:
                values.append(a)
        out = self.forward(*values, **params)
        if tape is None:
            return out
        return tape._record(self, args, params, out)

    def __repr__(self):
        return f"Primitive({self.name})"


class Var:
    """A traced array value."""

    __slots__ = ("tape", "value", "prim", "parents", "params", "index")

    def __init__(self, tape, value, prim=None, parents=(), params=None, index=-1):
        self.tape = tape
        self.value = value
        self.prim = prim
        self.parents = parents
        self.params = params or {}
        self.index = index

    @property
    def shape(self):
        return np.shape(self.value)

    @property
    def ndim(self):
        return np.ndim(self.value)

    @property
    def T(self):
        return swapaxes(self, -1, -2)

    def __len__(self):
        return len(self.value)

    def __repr__(self):
        prim = self.prim.name if self.prim is not None else "leaf"
        return f"Var({prim}, shape={self.shape})"

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape=shape)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None):
        return mean(self, axis=axis)

    def __getitem__(self, key):
        return getitem(self, key=key)

    def __add__(self, other):
        if isinstance(other, DEFER_TO):
            return NotImplemented
        return add(self, other)

    def __radd__(self, other):
        if isinstance(other, DEFER_TO):
            return NotImplemented
        return add(other, self)

    def __sub__(self, other):
        if isinstance(other, DEFER_TO):
            return NotImplemented
        return subtract(self, other)

    def __rsub__(self, other):
        if isinstance(other, DEFER_TO):
            return NotImplemented
        return subtract(other, self)

    def __mul__(self, other):
        if isinstance(other, DEFER_TO):
            return NotImplemented
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, DEFER_TO):
            return NotImplemented
        return multiply(other, self)

    def __truediv__(self, other):
        if isinstance(other, DEFER_TO):
            return NotImplemented
        return divide(self, other)

    def __rtruediv__(self, other):
        if isinstance(other, DEFER_TO):
            return NotImplemented
        return divide(other, self)

    def __neg__(self):
        return negative(self)

    def __pow__(self, p):
        if not isinstance(p, numbers.Real):
            raise UnsupportedPrimitiveError("only constant real exponents are supported")
        if p == 2:
            return square(self)
        return power(self, p=float(p))

    def __matmul__(self, other):
        if isinstance(other, DEFER_TO):
            return NotImplemented
        return matmul(self, other)

    def __rmatmul__(self, other):
        if isinstance(other, DEFER_TO):
            return NotImplemented
        return matmul(other, self)

    # comparison and truthiness would silently cut the tape
    def __bool__(self):
        raise UnsupportedPrimitiveError("truth value of a traced Var is undefined")

    def __array__(self, dtype=None, copy=None):
        raise UnsupportedPrimitiveError(
            "a traced Var cannot be converted to a plain array; use .value")

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method == "__call__" and not kwargs:
            prim = _UFUNCS.get(ufunc.__name__)
            if prim is not None:
                return prim(*inputs)
        raise UnsupportedPrimitiveError(
            f"numpy operation {ufunc.__name__}.{method} is not a tape primitive")

    def __array_function__(self, func, types, args, kwargs):
        raise UnsupportedPrimitiveError(
            f"numpy function {func.__name__} is not a tape primitive")


class Tape:
    """Ordered record of one traced computation."""

    def __init__(self):
        self.nodes = []

    def __len__(self):
        return len(self.nodes)

    def release(self):
        """Drop the recorded nodes (they reference the tape, so only the cycle collector frees them)."""
        self.nodes = []

    def variable(self, value):
        """Register a differentiable input."""
        var = Var(self, np.array(value, dtype=np.float64), index=len(self.nodes))
        self.nodes.append(var)
        return var

    def _record(self, prim, args, params, out):
        var = Var(self, out, prim, args, params, index=len(self.nodes))
        self.nodes.append(var)
        return var

    def gradient(self, output, wrt):
        """Cotangent of scalar ``output`` with respect to ``wrt`` (a Var or a list)."""
        if output.tape is not self:
            raise ValueError("output was not recorded on this tape")
        if np.size(output.value) != 1:
            raise ValueError("gradient requires a scalar output")
        single = isinstance(wrt, Var)
        targets = [wrt] if single else list(wrt)
        keep = {v.index for v in targets}
        grads = [None] * (output.index + 1)
        grads[output.index] = np.ones_like(output.value)
        for k in range(output.index, -1, -1):
            g = grads[k]
            node = self.nodes[k]
            if g is None or node.prim is None:
                continue
            if k not in keep:
                grads[k] = None
            values = [p.value if isinstance(p, Var) else p for p in node.parents]
            needs = [isinstance(p, Var) for p in node.parents]
            cots = node.prim.vjp(g, node.value, needs, *values, **node.params)
            for parent, cot in zip(node.parents, cots):
                if cot is None or not isinstance(parent, Var):
                    continue
                cot = _unbroadcast(np.asarray(cot), np.shape(parent.value))
                j = parent.index
                grads[j] = cot if grads[j] is None else grads[j] + cot
        out = []
        for v in targets:
            g = grads[v.index] if v.index <= output.index else None
            out.append(np.zeros_like(v.value) if g is None else g)
        return out[0] if single else out

    def replay(self):
        """Recompute every node from the leaves; returns the list of values."""
        values = []
        for node in self.nodes:
            if node.prim is None:
                values.append(node.value)
                continue
            args = [values[p.index] if isinstance(p, Var) else p for p in node.parents]
            values.append(node.prim.forward(*args, **node.params))
        return values


def value_and_grad(fn, x):
    """Evaluate scalar ``fn`` at array ``x`` and return ``(value, gradient)``."""
    tape = Tape()
    v = tape.variable(x)
    out = fn(v)
    if not isinstance(out, Var):
        # constant in x
        return float(out), np.zeros_like(v.value)
    grad = tape.gradient(out, v)
    tape.release()
    return float(out.value), grad


def value_of(x):
    return x.value if isinstance(x, Var) else x


# --- primitive definitions -------------------------------------------------
# vjp signature: vjp(g, out, needs, *values, **params); ``needs[k]`` tells
# whether argument k is traced, so work for constants can be skipped.

def _binary(name, fwd, da, db):
    def vjp(g, out, needs, a, b):
        return (da(g, out, a, b) if needs[0] else None,
                db(g, out, a, b) if needs[1] else None)
    return Primitive(name, fwd, vjp)


add = _binary("add", np.add, lambda g, o, a, b: g, lambda g, o, a, b: g)
subtract = _binary("subtract", np.subtract, lambda g, o, a, b: g, lambda g, o, a, b: -g)
multiply = _binary("multiply", np.multiply,
                   lambda g, o, a, b: g * b, lambda g, o, a, b: g * a)
divide = _binary("divide", np.divide,
                 lambda g, o, a, b: g / b, lambda g, o, a, b: -g * o / b)
negative = Primitive("negative", np.negative, lambda g, out, needs, a: (-g,))
square = Primitive("square", np.square, lambda g, out, needs, a: (2.0 * a * g,))
exp = Primitive("exp", np.exp, lambda g, out, needs, a: (g * out,))
log = Primitive("log", np.log, lambda g, out, needs, a: (g / a,))
sqrt = Primitive("sqrt", np.sqrt, lambda g, out, needs, a: (0.5 * g / out,))
power = Primitive("power", lambda a, p: np.power(a, p),
                  lambda g, out, needs, a, p: (g * p * np.power(a, p - 1.0),))


def _act_forward(a, name, order):
    return _act.activation(name, a, order)


def _act_vjp(g, out, needs, a, name, order):
    if order >= _act.MAX_ORDER:
        raise UnsupportedPrimitiveError(
            f"{name} derivative beyond order {_act.MAX_ORDER} is not available")
    return (g * _act.activation(name, a, order + 1),)


act = Primitive("act", _act_forward, _act_vjp)


def activation(x, name, order=0):
    """``order``-th derivative of activation ``name`` applied elementwise."""
    return act(x, name=name, order=order)


# derivative of min(0, t) at t == 0 is taken as 0
minimum_const = Primitive(
    "minimum_const", lambda a, c: np.minimum(a, c),
    lambda g, out, needs, a, c: (g * (a < c),))
maximum_const = Primitive(
    "maximum_const", lambda a, c: np.maximum(a, c),
    lambda g, out, needs, a, c: (g * (a > c),))


def minimum(x, c):
    if isinstance(c, Var):
        raise UnsupportedPrimitiveError("minimum is only supported against a constant")
    return minimum_const(x, c=c)


def maximum(x, c):
    if isinstance(c, Var):
        raise UnsupportedPrimitiveError("maximum is only supported against a constant")
    return maximum_const(x, c=c)


def _where_vjp(g, out, needs, mask, a, b):
    return (None,
            np.where(mask, g, 0.0) if needs[1] else None,
            np.where(mask, 0.0, g) if needs[2] else None)


where = Primitive("where", np.where, _where_vjp)


def _matmul_vjp(g, out, needs, a, b):
    ga = gb = None
    if needs[0]:
        ga = g @ np.swapaxes(b, -1, -2) if np.ndim(b) > 1 else np.multiply.outer(g, b)
    if needs[1]:
        if np.ndim(a) > 1 and np.ndim(b) == 2:
            # fold batch axes before the product: one GEMM instead of many
            a2 = np.reshape(a, (-1, np.shape(a)[-1])) if np.ndim(a) > 2 else a
            g2 = np.reshape(g, (-1, np.shape(g)[-1])) if np.ndim(g) > 2 else g
            gb = a2.T @ g2
        elif np.ndim(a) > 1:
            gb = np.swapaxes(a, -1, -2) @ g
        else:
            gb = np.multiply.outer(a, g)
    return ga, gb


matmul = Primitive("matmul", np.matmul, _matmul_vjp)

swapaxes = Primitive(
    "swapaxes", lambda a, a1, a2: np.swapaxes(a, a1, a2),
    lambda g, out, needs, a, a1, a2: (np.swapaxes(g, a1, a2),))

reshape = Primitive(
    "reshape", lambda a, shape: np.reshape(a, shape),
    lambda g, out, needs, a, shape: (np.reshape(g, np.shape(a)),))


def _is_basic_index(key):
    parts = key if isinstance(key, tuple) else (key,)
    return all(isinstance(k, (slice, int, type(None), type(Ellipsis))) for k in parts)


def _getitem_vjp(g, out, needs, a, key):
    z = np.zeros(np.shape(a))
    if _is_basic_index(key):
        z[key] = g
    else:
        np.add.at(z, key, g)
    return (z,)


getitem = Primitive("getitem", lambda a, key: a[key], _getitem_vjp)


def _take_vjp(g, out, needs, a, idx):
    shape = np.shape(a)
    z = np.zeros((shape[0],) + np.shape(g)[1:])
    for pos, k in enumerate(idx):
        z[k] += g[pos]
    return (z,)


take = Primitive("take", lambda a, idx: a[idx], _take_vjp)


def take_rows(x, idx):
    """``x[idx]`` along the leading axis for a small integer index array."""
    return take(x, idx=idx)


def _sum_vjp(g, out, needs, a, axis, keepdims):
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, np.shape(a)),)


sum_ = Primitive("sum", lambda a, axis, keepdims: np.sum(a, axis=axis, keepdims=keepdims),
                 _sum_vjp)


def _mean_vjp(g, out, needs, a, axis=None):
    shape = np.shape(a)
    count = np.size(a) if axis is None else np.prod([shape[k] for k in np.atleast_1d(axis)])
    if axis is not None:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g / count, shape),)


mean = Primitive("mean", lambda a, axis=None: np.mean(a, axis=axis), _mean_vjp)


def _sym_det_vjp(g, out, needs, upper, n):
    return (g[None, :] * _linalg.det_upper_grad(upper, n),)


sym_det = Primitive("sym_det", lambda upper, n: _linalg.det_upper(upper, n), _sym_det_vjp)


def symmetric_det(upper, n):
    """Determinant of symmetric matrices in upper-triangle storage ``(npairs, P)``."""
    return sym_det(upper, n=n)


def _concat_forward(*parts, axis):
    return np.concatenate(parts, axis=axis)


def _concat_vjp(g, out, needs, *parts, axis):
    sizes = np.cumsum([np.shape(p)[axis] for p in parts])[:-1]
    return tuple(np.split(g, sizes, axis=axis))


concat = Primitive("concatenate", _concat_forward, _concat_vjp)


def concatenate(parts, axis=0):
    return concat(*parts, axis=axis)


def sum(x, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy
    return sum_(x, axis=axis, keepdims=keepdims)


_UFUNCS = {
    "add": add,
    "subtract": subtract,
    "multiply": multiply,
    "true_divide": divide,
    "divide": divide,
    "negative": negative,
    "square": square,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "matmul": matmul,
}
